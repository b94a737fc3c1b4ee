#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "poisonlab/dataset.hpp"
#include "poisonlab/filter_report.hpp"

namespace poisonlab {

enum class DefenseKind { none, deep_knn, l2_outlier, ocsvm, random_eviction };

DefenseKind defense_kind_from_string(const std::string& name);
const char* to_string(DefenseKind kind);

struct DefenseSpec {
    DefenseKind kind = DefenseKind::none;
    double normalized_k = 2.0;     // deep_knn; k = round(normalized_k * N)
    std::optional<int> k;          // deep_knn; explicit override
    double epsilon = 0.01;         // l2_outlier
    double nu = 0.01;              // ocsvm
    double gamma_rbf = 0.0;        // ocsvm; <= 0 means median heuristic
    double fraction = 0.01;        // random_eviction
    std::uint64_t seed = 0;        // random_eviction
};

// Dispatches to the configured filter. `none` keeps every point.
FilterReport apply_defense(const FeatureDataset& ds, const DefenseSpec& spec);

}  // namespace poisonlab
