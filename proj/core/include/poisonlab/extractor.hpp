#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "poisonlab/dataset.hpp"

namespace poisonlab {

enum class Nonlinearity { tanh, leaky_relu };

Nonlinearity nonlinearity_from_string(const std::string& name);
const char* to_string(Nonlinearity n);

struct ExtractorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Frozen two-layer map standing in for a network's penultimate layer:
// phi(x) = W2 * nonlin(W1 x + b1) + b2. Weights are drawn once from the seed
// and never change, so identical inputs give bit-identical features.
class ExtractorModel {
public:
    ExtractorModel(int d_in, int hidden, int d_feat, Nonlinearity nonlin,
                   std::uint64_t seed);

    // Explicit weights (row-major w1: hidden x d_in, w2: d_feat x hidden).
    static ExtractorModel from_weights(int d_in, int hidden, int d_feat,
                                       Nonlinearity nonlin, std::vector<double> w1,
                                       std::vector<double> b1, std::vector<double> w2,
                                       std::vector<double> b2);

    int d_in() const { return d_in_; }
    int hidden() const { return hidden_; }
    int d_feat() const { return d_feat_; }
    Nonlinearity nonlinearity() const { return nonlin_; }
    std::uint64_t seed() const { return seed_; }

    std::vector<double> forward(std::span<const double> x) const;

    // Vector-Jacobian product J(x)^T u; the workhorse of both attack losses.
    std::vector<double> vjp(std::span<const double> x,
                            std::span<const double> cotangent) const;

    // Dense d_feat x d_in Jacobian, row-major. Test and oracle use only.
    std::vector<double> jacobian(std::span<const double> x) const;

private:
    void check_input(std::size_t n) const;

    int d_in_, hidden_, d_feat_;
    Nonlinearity nonlin_;
    std::uint64_t seed_;
    std::vector<double> w1_;  // hidden x d_in
    std::vector<double> b1_;
    std::vector<double> w2_;  // d_feat x hidden
    std::vector<double> b2_;

    friend ExtractorModel make_zero_extractor(int, int, int, Nonlinearity);
};

// All-zero weights; degenerate fixture for tests.
ExtractorModel make_zero_extractor(int d_in, int hidden, int d_feat, Nonlinearity nonlin);

// Maps every point of an input-space dataset through the extractor,
// preserving ids and labels.
FeatureDataset extract_features(const ExtractorModel& model, const FeatureDataset& ds);

std::vector<double> to_double(std::span<const float> x);
std::vector<float> to_float(std::span<const double> x);

}  // namespace poisonlab
