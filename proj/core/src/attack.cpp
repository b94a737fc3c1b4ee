#include "poisonlab/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <json.hpp>

namespace poisonlab {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kBacktrackFactor = 0.5;
constexpr double kRelTol = 1e-6;
constexpr double kMinStep = 1e-18;

double sq_norm(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return acc;
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void check_finite(double value, const char* what, const std::vector<double>& trace) {
    if (!std::isfinite(value))
        throw CraftDivergence(std::string("non-finite ") + what +
                                  " during crafting (diverged)",
                              trace);
}

}  // namespace

std::vector<double> watermark(std::span<const double> x_t, std::span<const double> x_b,
                              double gamma) {
    if (x_t.size() != x_b.size())
        throw ExtractorError("watermark: dimension mismatch (" +
                             std::to_string(x_t.size()) + " vs " +
                             std::to_string(x_b.size()) + ")");
    std::vector<double> out(x_t.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = gamma * x_t[i] + (1.0 - gamma) * x_b[i];
    return out;
}

std::vector<double> project_to_simplex(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<double> u(v.begin(), v.end());
    std::sort(u.begin(), u.end(), std::greater<>());
    double running = 0.0;
    double tau = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        running += u[j];
        const double candidate = (running - 1.0) / static_cast<double>(j + 1);
        if (u[j] - candidate > 0.0) tau = candidate;
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::max(v[i] - tau, 0.0);
    return out;
}

PoisonCraftResult craft_feature_collision(const ExtractorModel& model,
                                          std::span<const double> target_input,
                                          const std::vector<std::vector<double>>& bases,
                                          const AttackConfig& cfg) {
    if (!(cfg.beta > 0.0))
        throw ExtractorError("feature collision requires beta > 0");
    if (bases.empty()) throw ExtractorError("no base points given");
    const std::vector<double> target_feat = model.forward(target_input);

    std::vector<std::vector<double>> traces;
    PoisonCraftResult result;
    result.config = cfg;
    result.converged = true;

    for (const auto& base : bases) {
        const std::vector<double> x_w =
            watermark(target_input, base, cfg.gamma);
        std::vector<double> x = x_w;

        auto smooth = [&](const std::vector<double>& p) {
            return 0.5 * sq_dist(model.forward(p), target_feat);
        };
        auto penalty = [&](const std::vector<double>& p) {
            return 0.5 * cfg.beta * sq_dist(p, x_w);
        };

        const double initial_feat_dist = std::sqrt(2.0 * smooth(x));
        double internal = smooth(x) + penalty(x);
        std::vector<double> trace{2.0 * internal};
        check_finite(internal, "objective", trace);

        double step = cfg.step_size;
        bool tol_hit = false;
        for (int iter = 0; iter < cfg.max_iters; ++iter) {
            const std::vector<double> feat = model.forward(x);
            std::vector<double> residual(feat.size());
            for (std::size_t i = 0; i < feat.size(); ++i)
                residual[i] = feat[i] - target_feat[i];
            const std::vector<double> grad = model.vjp(x, residual);

            step *= 2.0;  // adaptive restart; backtracking pulls it back down
            std::vector<double> candidate(x.size());
            double cand_internal = 0.0;
            bool accepted = false;
            while (step >= kMinStep) {
                const double shrink = 1.0 + step * cfg.beta;
                double move_sq = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    const double fwd = x[i] - step * grad[i];
                    candidate[i] = (fwd + step * cfg.beta * x_w[i]) / shrink;
                    const double d = candidate[i] - x[i];
                    move_sq += d * d;
                }
                cand_internal = smooth(candidate) + penalty(candidate);
                check_finite(cand_internal, "objective", trace);
                if (cand_internal <= internal - kArmijo * move_sq / step) {
                    accepted = true;
                    break;
                }
                step *= kBacktrackFactor;
            }
            if (!accepted) break;  // stalled; cannot certify the tolerance

            const double prev = internal;
            x = candidate;
            internal = cand_internal;
            trace.push_back(2.0 * internal);
            if (prev - internal < kRelTol * std::max(std::abs(prev), 1e-300)) {
                tol_hit = true;
                break;
            }
        }

        const std::vector<double> final_feat = model.forward(x);
        const double final_feat_dist = std::sqrt(sq_dist(final_feat, target_feat));
        const bool improved = final_feat_dist < initial_feat_dist;
        result.converged = result.converged && tol_hit && improved;
        result.poisons.push_back(std::move(x));
        result.poison_features.push_back(final_feat);
        traces.push_back(std::move(trace));
    }

    // Lockstep sum: converged runs hold their final value, so the combined
    // trace inherits per-run monotonicity.
    std::size_t longest = 0;
    for (const auto& t : traces) longest = std::max(longest, t.size());
    result.objective_trace.assign(longest, 0.0);
    for (const auto& t : traces)
        for (std::size_t i = 0; i < longest; ++i)
            result.objective_trace[i] += t[std::min(i, t.size() - 1)];
    result.final_residual = result.objective_trace.empty()
                                ? 0.0
                                : result.objective_trace.back();
    return result;
}

PoisonCraftResult craft_convex_polytope(const ExtractorModel& model,
                                        std::span<const double> target_input,
                                        const std::vector<std::vector<double>>& bases,
                                        const AttackConfig& cfg) {
    if (bases.empty()) throw ExtractorError("no base points given");
    if (!(cfg.epsilon_inf > 0.0))
        throw ExtractorError("convex polytope requires epsilon_inf > 0");
    const std::size_t n_p = bases.size();
    const std::vector<double> target_feat = model.forward(target_input);
    const std::size_t d_feat = target_feat.size();

    std::vector<std::vector<double>> poisons = bases;
    std::vector<std::vector<double>> feats(n_p);
    for (std::size_t j = 0; j < n_p; ++j) feats[j] = model.forward(poisons[j]);
    std::vector<double> weights(n_p, 1.0 / static_cast<double>(n_p));

    auto residual_of = [&](const std::vector<double>& c,
                           const std::vector<std::vector<double>>& f) {
        std::vector<double> r(target_feat.begin(), target_feat.end());
        for (std::size_t j = 0; j < n_p; ++j)
            for (std::size_t i = 0; i < d_feat; ++i) r[i] -= c[j] * f[j][i];
        return r;
    };
    auto objective_of = [&](const std::vector<double>& c,
                            const std::vector<std::vector<double>>& f) {
        return sq_norm(residual_of(c, f));
    };

    double objective = objective_of(weights, feats);
    std::vector<double> trace{objective};
    check_finite(objective, "residual", trace);

    double step_c = cfg.step_size;
    double step_x = cfg.step_size;
    bool tol_hit = false;
    for (int round = 0; round < cfg.max_iters; ++round) {
        const double round_start = objective;

        // (a) simplex-projected gradient step on the weights.
        {
            const std::vector<double> r = residual_of(weights, feats);
            std::vector<double> grad(n_p, 0.0);
            for (std::size_t j = 0; j < n_p; ++j)
                for (std::size_t i = 0; i < d_feat; ++i) grad[j] -= 2.0 * feats[j][i] * r[i];

            step_c *= 2.0;
            while (step_c >= kMinStep) {
                std::vector<double> shifted(n_p);
                for (std::size_t j = 0; j < n_p; ++j)
                    shifted[j] = weights[j] - step_c * grad[j];
                const std::vector<double> candidate = project_to_simplex(shifted);
                double move_sq = 0.0;
                for (std::size_t j = 0; j < n_p; ++j) {
                    const double d = candidate[j] - weights[j];
                    move_sq += d * d;
                }
                const double cand_obj = objective_of(candidate, feats);
                check_finite(cand_obj, "residual", trace);
                if (cand_obj <= objective - kArmijo * move_sq / step_c) {
                    weights = candidate;
                    objective = cand_obj;
                    break;
                }
                step_c *= kBacktrackFactor;
            }
        }

        // (b) gradient step on every poison, then exact l-infinity clipping.
        {
            const std::vector<double> r = residual_of(weights, feats);
            std::vector<std::vector<double>> grads(n_p);
            for (std::size_t j = 0; j < n_p; ++j) {
                std::vector<double> cotangent(d_feat);
                for (std::size_t i = 0; i < d_feat; ++i)
                    cotangent[i] = -2.0 * weights[j] * r[i];
                grads[j] = model.vjp(poisons[j], cotangent);
            }

            step_x *= 2.0;
            while (step_x >= kMinStep) {
                std::vector<std::vector<double>> cand = poisons;
                double move_sq = 0.0;
                for (std::size_t j = 0; j < n_p; ++j) {
                    for (std::size_t i = 0; i < cand[j].size(); ++i) {
                        double v = poisons[j][i] - step_x * grads[j][i];
                        v = std::clamp(v, bases[j][i] - cfg.epsilon_inf,
                                       bases[j][i] + cfg.epsilon_inf);
                        const double d = v - poisons[j][i];
                        move_sq += d * d;
                        cand[j][i] = v;
                    }
                }
                std::vector<std::vector<double>> cand_feats(n_p);
                for (std::size_t j = 0; j < n_p; ++j)
                    cand_feats[j] = model.forward(cand[j]);
                const double cand_obj = objective_of(weights, cand_feats);
                check_finite(cand_obj, "residual", trace);
                if (cand_obj <= objective - kArmijo * move_sq / step_x) {
                    poisons = std::move(cand);
                    feats = std::move(cand_feats);
                    objective = cand_obj;
                    break;
                }
                step_x *= kBacktrackFactor;
            }
        }

        trace.push_back(objective);
        if (round_start - objective <
            kRelTol * std::max(std::abs(round_start), 1e-300)) {
            tol_hit = true;
            break;
        }
    }

    PoisonCraftResult result;
    result.config = cfg;
    result.poisons = std::move(poisons);
    result.poison_features = std::move(feats);
    result.objective_trace = std::move(trace);
    result.converged = tol_hit;
    result.final_residual = objective;
    return result;
}

std::string PoisonCraftResult::to_json() const {
    nlohmann::json j;
    j["poisons"] = poisons;
    j["poison_features"] = poison_features;
    j["objective_trace"] = objective_trace;
    j["converged"] = converged;
    j["final_residual"] = final_residual;
    j["base_ids"] = base_ids;
    j["target_id"] = target_id;
    j["config"] = {{"gamma", config.gamma},
                   {"beta", config.beta},
                   {"step_size", config.step_size},
                   {"max_iters", config.max_iters},
                   {"epsilon_inf", config.epsilon_inf},
                   {"n_poisons", config.n_poisons},
                   {"seed", config.seed}};
    return j.dump();
}

}  // namespace poisonlab
