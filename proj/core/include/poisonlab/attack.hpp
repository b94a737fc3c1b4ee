#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "poisonlab/extractor.hpp"

namespace poisonlab {

struct AttackConfig {
    double gamma = 0.3;        // watermark opacity
    double beta = 0.1;         // input-space penalty weight (feature collision)
    double step_size = 1.0;    // initial step; backtracking adapts from here
    int max_iters = 2000;
    double epsilon_inf = 0.1;  // crafting radius (convex polytope)
    int n_poisons = 5;
    std::uint64_t seed = 0;
};

struct CraftDivergence : std::runtime_error {
    explicit CraftDivergence(const std::string& msg, std::vector<double> trace_so_far)
        : std::runtime_error(msg), trace(std::move(trace_so_far)) {}
    std::vector<double> trace;
};

struct PoisonCraftResult {
    std::vector<std::vector<double>> poisons;          // input space
    std::vector<std::vector<double>> poison_features;  // phi(poison)
    std::vector<double> objective_trace;               // non-increasing once accepted
    bool converged = false;
    double final_residual = 0.0;
    AttackConfig config;
    std::vector<std::uint64_t> base_ids;
    std::uint64_t target_id = 0;

    std::string to_json() const;
};

// gamma * x_t + (1 - gamma) * x_b, computed exactly.
std::vector<double> watermark(std::span<const double> x_t, std::span<const double> x_b,
                              double gamma);

// Euclidean projection onto the probability simplex (sort-based).
std::vector<double> project_to_simplex(std::span<const double> v);

// Forward-backward splitting per base image: gradient step on the feature
// collision term |phi(x) - phi(x_t)|^2, then the exact proximal map of
// beta |x - x_w|^2, i.e. x <- (x + step*beta*x_w) / (1 + step*beta), with
// x_w the watermarked base. Stops at max_iters or when the relative
// objective decrease falls below 1e-6.
PoisonCraftResult craft_feature_collision(const ExtractorModel& model,
                                          std::span<const double> target_input,
                                          const std::vector<std::vector<double>>& bases,
                                          const AttackConfig& cfg);

// Alternating minimization of |phi(x_t) - sum_j c_j phi(x_p_j)|^2 over
// simplex weights c and poison inputs confined to the l-infinity ball of
// radius epsilon_inf around their bases. The objective is non-increasing
// at every accepted round; the final residual is recorded.
PoisonCraftResult craft_convex_polytope(const ExtractorModel& model,
                                        std::span<const double> target_input,
                                        const std::vector<std::vector<double>>& bases,
                                        const AttackConfig& cfg);

}  // namespace poisonlab
