#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "poisonlab/dataset.hpp"

namespace poisonlab {

// Outcome of one defense run. kept_ids and removed_ids partition the ids of
// the dataset the filter ran on.
struct FilterReport {
    std::string defense_name;
    std::vector<std::pair<std::string, std::string>> parameters;
    std::vector<std::uint64_t> kept_ids;     // ascending
    std::vector<std::uint64_t> removed_ids;  // ascending

    bool kept(std::uint64_t id) const;
    std::unordered_set<std::uint64_t> kept_set() const;

    // Throws DatasetError unless kept/removed partition the dataset's ids.
    void check_partition(const FeatureDataset& ds) const;

    std::string to_json() const;
    static FilterReport from_json(const std::string& text);
};

// Helper used by every defense: sorts, fills both id lists, and verifies the
// partition invariant against the filtered dataset.
FilterReport make_report(const FeatureDataset& ds, std::string defense_name,
                         std::vector<std::pair<std::string, std::string>> parameters,
                         const std::unordered_set<std::uint64_t>& removed);

}  // namespace poisonlab
