#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "poisonlab/dataset.hpp"
#include "poisonlab/filter_report.hpp"

namespace poisonlab {

struct OcsvmError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OcsvmOptions {
    double kkt_tol = 1e-4;
    std::size_t max_sweeps = 100000;  // working-pair updates before giving up
};

// One-class SVM in the Scholkopf normalization: minimize (1/2) a'Ka subject
// to 0 <= a_i <= 1/(nu*n) and sum(a) = 1, with K the RBF kernel
// exp(-gamma |x_i - x_j|^2). Decision value dec(x) = sum_i a_i K(x_i, x) - rho.
struct OcsvmModel {
    std::vector<std::vector<double>> points;  // training points, input order
    std::vector<double> alpha;                // one per training point
    std::vector<std::size_t> support_indices;  // alpha_i > 1e-12
    double rho = 0.0;
    double gamma_rbf = 1.0;
    double nu = 0.01;
    // Maximization-form dual (-1/2 a'Ka); non-decreasing across SMO updates.
    std::vector<double> dual_objective_trace;
    double kkt_residual = 0.0;

    double decision(std::span<const double> x) const;
};

// Solves the dual by sequential minimal optimization with maximal-violation
// pair selection. Throws OcsvmError if the KKT gap is still above tolerance
// after options.max_sweeps updates.
OcsvmModel ocsvm_fit(const std::vector<std::vector<double>>& class_points, double nu,
                     double gamma_rbf, const OcsvmOptions& options = {});

// 1 / (d * median per-class feature variance); 1.0 when degenerate.
double ocsvm_default_gamma(const std::vector<std::vector<double>>& class_points);

// Fits one model per class and removes points with a negative decision value
// under their own class's model. gamma_rbf <= 0 selects the default heuristic
// per class.
FilterReport ocsvm_filter(const FeatureDataset& ds, double nu, double gamma_rbf = 0.0,
                          const OcsvmOptions& options = {});

}  // namespace poisonlab
