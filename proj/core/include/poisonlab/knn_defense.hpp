#pragma once

#include <cstdint>
#include <vector>

#include "poisonlab/dataset.hpp"
#include "poisonlab/filter_report.hpp"

namespace poisonlab {

struct NeighborSet {
    std::uint64_t query_id = 0;
    std::vector<std::uint64_t> neighbor_ids;  // ascending distance
    std::vector<double> distances;            // matching Euclidean distances
};

// The min(k, n-1) nearest points to query_id, query point excluded.
// Distance ties break by ascending id, so results are order-independent.
NeighborSet knn_query(const FeatureDataset& ds, std::uint64_t query_id, int k);

// Keeps a point iff its own label is among the modal labels of its k nearest
// neighbors. All verdicts are computed against the unfiltered dataset in a
// single pass; a label tied for the mode keeps the point.
FilterReport deep_knn_filter(const FeatureDataset& ds, int k);

}  // namespace poisonlab
