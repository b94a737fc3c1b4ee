#pragma once

#include <cstdint>
#include <vector>

#include "poisonlab/dataset.hpp"
#include "poisonlab/filter_report.hpp"

namespace poisonlab {

struct CentroidTable {
    std::vector<std::vector<double>> centroids;  // per class, empty class -> zeros
    std::vector<std::size_t> sizes;
};

// Per-class arithmetic means, accumulated with compensated summation so the
// result is permutation-invariant to ~1e-9.
CentroidTable compute_centroids(const FeatureDataset& ds);

// Removes, for each class of size s_l, the floor(epsilon * s_l) points
// farthest from that class's centroid; distance ties break by ascending id.
FilterReport l2_outlier_filter(const FeatureDataset& ds, double epsilon);

// Removes round(fraction * n) points, sampled uniformly without replacement
// from a generator seeded with `seed`.
FilterReport random_eviction_filter(const FeatureDataset& ds, double fraction,
                                    std::uint64_t seed);

}  // namespace poisonlab
