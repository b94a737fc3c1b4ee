#include "poisonlab/ocsvm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

namespace poisonlab {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

constexpr double kAlphaEps = 1e-12;

}  // namespace

double OcsvmModel::decision(std::span<const double> x) const {
    double acc = 0.0;
    for (std::size_t i : support_indices)
        acc += alpha[i] * std::exp(-gamma_rbf * sq_dist(points[i], x));
    return acc - rho;
}

OcsvmModel ocsvm_fit(const std::vector<std::vector<double>>& class_points, double nu,
                     double gamma_rbf, const OcsvmOptions& options) {
    const std::size_t n = class_points.size();
    if (n < 2) throw OcsvmError("one-class SVM needs at least 2 points");
    if (!(nu > 0.0 && nu <= 1.0))
        throw OcsvmError("nu must be in (0, 1], got " + std::to_string(nu));
    if (!(gamma_rbf > 0.0))
        throw OcsvmError("gamma_rbf must be positive, got " + std::to_string(gamma_rbf));

    const double box = 1.0 / (nu * static_cast<double>(n));

    // Dense kernel matrix; class sizes stay desk-scale here.
    std::vector<double> kernel(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        kernel[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double k = std::exp(-gamma_rbf * sq_dist(class_points[i], class_points[j]));
            kernel[i * n + j] = k;
            kernel[j * n + i] = k;
        }
    }

    // Feasible start: first floor(nu*n) coordinates at the box bound, one
    // fractional remainder, rest zero. Sum(alpha) = 1 and stays 1 exactly.
    std::vector<double> alpha(n, 0.0);
    {
        double remaining = 1.0;
        for (std::size_t i = 0; i < n && remaining > 0.0; ++i) {
            alpha[i] = std::min(box, remaining);
            remaining -= alpha[i];
        }
    }

    // Gradient of the minimization objective: g = K alpha.
    std::vector<double> grad(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += kernel[i * n + j] * alpha[j];
        grad[i] = acc;
    }
    auto objective = [&]() {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += alpha[i] * grad[i];
        return -0.5 * acc;  // maximization form
    };

    OcsvmModel model;
    model.dual_objective_trace.push_back(objective());

    std::size_t updates = 0;
    double gap = std::numeric_limits<double>::infinity();
    while (true) {
        // Maximal violating pair: take mass from the largest gradient among
        // coordinates that can decrease, give it to the smallest among those
        // that can increase.
        std::size_t hi = n, lo = n;
        double hi_g = -std::numeric_limits<double>::infinity();
        double lo_g = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (alpha[i] > kAlphaEps && grad[i] > hi_g) {
                hi_g = grad[i];
                hi = i;
            }
            if (alpha[i] < box - kAlphaEps && grad[i] < lo_g) {
                lo_g = grad[i];
                lo = i;
            }
        }
        gap = (hi == n || lo == n) ? 0.0 : hi_g - lo_g;
        if (gap <= options.kkt_tol) break;
        if (updates >= options.max_sweeps)
            throw OcsvmError("SMO did not reach KKT tolerance " +
                             std::to_string(options.kkt_tol) + " within " +
                             std::to_string(options.max_sweeps) + " updates (gap " +
                             std::to_string(gap) + ")");

        const double eta =
            kernel[hi * n + hi] + kernel[lo * n + lo] - 2.0 * kernel[hi * n + lo];
        double delta = eta > 0.0 ? (hi_g - lo_g) / eta
                                 : std::numeric_limits<double>::infinity();
        delta = std::min(delta, alpha[hi]);
        delta = std::min(delta, box - alpha[lo]);
        alpha[hi] -= delta;
        alpha[lo] += delta;
        for (std::size_t t = 0; t < n; ++t)
            grad[t] += delta * (kernel[t * n + lo] - kernel[t * n + hi]);
        model.dual_objective_trace.push_back(objective());
        ++updates;
    }

    // rho: average gradient over free support vectors; midpoint of the active
    // bounds when none are free.
    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (alpha[i] > kAlphaEps && alpha[i] < box - kAlphaEps) {
            free_sum += grad[i];
            ++free_count;
        }
    if (free_count > 0) {
        model.rho = free_sum / static_cast<double>(free_count);
    } else {
        double upper = std::numeric_limits<double>::infinity();
        double lower = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (alpha[i] < box - kAlphaEps) upper = std::min(upper, grad[i]);
            if (alpha[i] > kAlphaEps) lower = std::max(lower, grad[i]);
        }
        if (!std::isfinite(upper)) upper = lower;
        if (!std::isfinite(lower)) lower = upper;
        model.rho = 0.5 * (upper + lower);
    }

    model.points = class_points;
    model.alpha = std::move(alpha);
    for (std::size_t i = 0; i < n; ++i)
        if (model.alpha[i] > kAlphaEps) model.support_indices.push_back(i);
    model.gamma_rbf = gamma_rbf;
    model.nu = nu;
    model.kkt_residual = gap;
    return model;
}

double ocsvm_default_gamma(const std::vector<std::vector<double>>& class_points) {
    if (class_points.empty()) return 1.0;
    const std::size_t dim = class_points[0].size();
    const auto n = static_cast<double>(class_points.size());
    std::vector<double> variances(dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) {
        double mean = 0.0;
        for (const auto& p : class_points) mean += p[j];
        mean /= n;
        double acc = 0.0;
        for (const auto& p : class_points) {
            const double d = p[j] - mean;
            acc += d * d;
        }
        variances[j] = acc / n;
    }
    std::sort(variances.begin(), variances.end());
    const double median = dim % 2 == 1
                              ? variances[dim / 2]
                              : 0.5 * (variances[dim / 2 - 1] + variances[dim / 2]);
    const double scale = static_cast<double>(dim) * median;
    if (!(scale > 1e-12) || !std::isfinite(scale)) return 1.0;
    return 1.0 / scale;
}

FilterReport ocsvm_filter(const FeatureDataset& ds, double nu, double gamma_rbf,
                          const OcsvmOptions& options) {
    if (ds.space() != SpaceTag::feature_space)
        throw OcsvmError("one-class SVM filter operates in feature space only");

    const auto classes = static_cast<std::size_t>(ds.num_classes());
    std::vector<std::vector<std::size_t>> rows_by_class(classes);
    for (std::size_t r = 0; r < ds.size(); ++r)
        rows_by_class[static_cast<std::size_t>(ds.label(r))].push_back(r);

    std::unordered_set<std::uint64_t> removed;
    double gamma_used = gamma_rbf;
    for (std::size_t label = 0; label < classes; ++label) {
        const auto& rows = rows_by_class[label];
        if (rows.empty()) continue;
        if (rows.size() < 2)
            throw OcsvmError("class " + std::to_string(label) +
                             " has fewer than 2 points; cannot fit one-class SVM");
        std::vector<std::vector<double>> pts;
        pts.reserve(rows.size());
        for (std::size_t r : rows) {
            const auto p = ds.point(r);
            pts.emplace_back(p.begin(), p.end());
        }
        const double gamma = gamma_rbf > 0.0 ? gamma_rbf : ocsvm_default_gamma(pts);
        gamma_used = gamma;
        OcsvmModel model;
        try {
            model = ocsvm_fit(pts, nu, gamma, options);
        } catch (const OcsvmError& e) {
            throw OcsvmError("class " + std::to_string(label) + ": " + e.what());
        }
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (model.decision(pts[i]) < 0.0) removed.insert(ds.id(rows[i]));
    }

    char nu_buf[64], gamma_buf[64];
    std::snprintf(nu_buf, sizeof(nu_buf), "%.9g", nu);
    std::snprintf(gamma_buf, sizeof(gamma_buf), "%.9g",
                  gamma_rbf > 0.0 ? gamma_rbf : gamma_used);
    return make_report(ds, "ocsvm",
                       {{"nu", nu_buf},
                        {"gamma_rbf", gamma_rbf > 0.0 ? gamma_buf : "per-class median heuristic"}},
                       removed);
}

}  // namespace poisonlab
