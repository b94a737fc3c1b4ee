#include "poisonlab/extractor.hpp"

#include <cmath>
#include <string>

#include "poisonlab/rng.hpp"

namespace poisonlab {

namespace {

constexpr double kLeakySlope = 0.01;

double activate(Nonlinearity n, double z) {
    if (n == Nonlinearity::tanh) return std::tanh(z);
    return z > 0.0 ? z : kLeakySlope * z;
}

double activate_grad(Nonlinearity n, double z) {
    if (n == Nonlinearity::tanh) {
        const double t = std::tanh(z);
        return 1.0 - t * t;
    }
    return z > 0.0 ? 1.0 : kLeakySlope;
}

}  // namespace

Nonlinearity nonlinearity_from_string(const std::string& name) {
    if (name == "tanh") return Nonlinearity::tanh;
    if (name == "leaky_relu") return Nonlinearity::leaky_relu;
    throw ExtractorError("unknown nonlinearity '" + name + "'");
}

const char* to_string(Nonlinearity n) {
    return n == Nonlinearity::tanh ? "tanh" : "leaky_relu";
}

ExtractorModel::ExtractorModel(int d_in, int hidden, int d_feat, Nonlinearity nonlin,
                               std::uint64_t seed)
    : d_in_(d_in), hidden_(hidden), d_feat_(d_feat), nonlin_(nonlin), seed_(seed) {
    if (d_in < 1 || hidden < 1 || d_feat < 1)
        throw ExtractorError("extractor dimensions must be >= 1");
    Rng rng(mix_seed(seed, 0x657874ULL));
    const double scale1 = 1.0 / std::sqrt(static_cast<double>(d_in));
    const double scale2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    w1_.resize(static_cast<std::size_t>(hidden) * d_in);
    b1_.resize(static_cast<std::size_t>(hidden));
    w2_.resize(static_cast<std::size_t>(d_feat) * hidden);
    b2_.resize(static_cast<std::size_t>(d_feat));
    for (double& w : w1_) w = rng.normal() * scale1;
    for (double& b : b1_) b = rng.normal() * 0.1;
    for (double& w : w2_) w = rng.normal() * scale2;
    for (double& b : b2_) b = 0.0;
}

void ExtractorModel::check_input(std::size_t n) const {
    if (n != static_cast<std::size_t>(d_in_))
        throw ExtractorError("input dimension " + std::to_string(n) +
                             " does not match extractor d_in " + std::to_string(d_in_));
}

std::vector<double> ExtractorModel::forward(std::span<const double> x) const {
    check_input(x.size());
    std::vector<double> hidden(static_cast<std::size_t>(hidden_));
    for (int h = 0; h < hidden_; ++h) {
        double z = b1_[static_cast<std::size_t>(h)];
        const double* row = w1_.data() + static_cast<std::size_t>(h) * d_in_;
        for (int i = 0; i < d_in_; ++i) z += row[i] * x[static_cast<std::size_t>(i)];
        hidden[static_cast<std::size_t>(h)] = activate(nonlin_, z);
    }
    std::vector<double> out(static_cast<std::size_t>(d_feat_));
    for (int f = 0; f < d_feat_; ++f) {
        double y = b2_[static_cast<std::size_t>(f)];
        const double* row = w2_.data() + static_cast<std::size_t>(f) * hidden_;
        for (int h = 0; h < hidden_; ++h) y += row[h] * hidden[static_cast<std::size_t>(h)];
        out[static_cast<std::size_t>(f)] = y;
    }
    return out;
}

std::vector<double> ExtractorModel::vjp(std::span<const double> x,
                                        std::span<const double> cotangent) const {
    check_input(x.size());
    if (cotangent.size() != static_cast<std::size_t>(d_feat_))
        throw ExtractorError("cotangent dimension does not match d_feat");

    // u2 = W2^T u, scaled by the activation gradient at z = W1 x + b1.
    std::vector<double> u2(static_cast<std::size_t>(hidden_), 0.0);
    for (int f = 0; f < d_feat_; ++f) {
        const double uf = cotangent[static_cast<std::size_t>(f)];
        const double* row = w2_.data() + static_cast<std::size_t>(f) * hidden_;
        for (int h = 0; h < hidden_; ++h) u2[static_cast<std::size_t>(h)] += row[h] * uf;
    }
    for (int h = 0; h < hidden_; ++h) {
        double z = b1_[static_cast<std::size_t>(h)];
        const double* row = w1_.data() + static_cast<std::size_t>(h) * d_in_;
        for (int i = 0; i < d_in_; ++i) z += row[i] * x[static_cast<std::size_t>(i)];
        u2[static_cast<std::size_t>(h)] *= activate_grad(nonlin_, z);
    }
    std::vector<double> out(static_cast<std::size_t>(d_in_), 0.0);
    for (int h = 0; h < hidden_; ++h) {
        const double uh = u2[static_cast<std::size_t>(h)];
        const double* row = w1_.data() + static_cast<std::size_t>(h) * d_in_;
        for (int i = 0; i < d_in_; ++i) out[static_cast<std::size_t>(i)] += row[i] * uh;
    }
    return out;
}

std::vector<double> ExtractorModel::jacobian(std::span<const double> x) const {
    check_input(x.size());
    std::vector<double> jac(static_cast<std::size_t>(d_feat_) * d_in_, 0.0);
    std::vector<double> unit(static_cast<std::size_t>(d_feat_), 0.0);
    for (int f = 0; f < d_feat_; ++f) {
        unit[static_cast<std::size_t>(f)] = 1.0;
        const std::vector<double> row = vjp(x, unit);
        unit[static_cast<std::size_t>(f)] = 0.0;
        for (int i = 0; i < d_in_; ++i)
            jac[static_cast<std::size_t>(f) * d_in_ + i] = row[static_cast<std::size_t>(i)];
    }
    return jac;
}

ExtractorModel ExtractorModel::from_weights(int d_in, int hidden, int d_feat,
                                            Nonlinearity nonlin, std::vector<double> w1,
                                            std::vector<double> b1, std::vector<double> w2,
                                            std::vector<double> b2) {
    ExtractorModel model(d_in, hidden, d_feat, nonlin, 0);
    if (w1.size() != model.w1_.size() || b1.size() != model.b1_.size() ||
        w2.size() != model.w2_.size() || b2.size() != model.b2_.size())
        throw ExtractorError("explicit weight shapes do not match extractor dimensions");
    for (double v : w1)
        if (!std::isfinite(v)) throw ExtractorError("non-finite extractor weight");
    model.w1_ = std::move(w1);
    model.b1_ = std::move(b1);
    model.w2_ = std::move(w2);
    model.b2_ = std::move(b2);
    return model;
}

ExtractorModel make_zero_extractor(int d_in, int hidden, int d_feat, Nonlinearity nonlin) {
    ExtractorModel model(d_in, hidden, d_feat, nonlin, 0);
    std::fill(model.w1_.begin(), model.w1_.end(), 0.0);
    std::fill(model.b1_.begin(), model.b1_.end(), 0.0);
    std::fill(model.w2_.begin(), model.w2_.end(), 0.0);
    std::fill(model.b2_.begin(), model.b2_.end(), 0.0);
    return model;
}

FeatureDataset extract_features(const ExtractorModel& model, const FeatureDataset& ds) {
    if (ds.dim() != model.d_in())
        throw ExtractorError("dataset dimension " + std::to_string(ds.dim()) +
                             " does not match extractor d_in " +
                             std::to_string(model.d_in()));
    FeatureDataset out(SpaceTag::feature_space, ds.num_classes(), model.d_feat());
    for (std::size_t r = 0; r < ds.size(); ++r) {
        const std::vector<double> x = to_double(ds.point(r));
        out.append(ds.id(r), ds.label(r), to_float(model.forward(x)));
    }
    return out;
}

std::vector<double> to_double(std::span<const float> x) {
    return {x.begin(), x.end()};
}

std::vector<float> to_float(std::span<const double> x) {
    std::vector<float> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<float>(x[i]);
    return out;
}

}  // namespace poisonlab
