#pragma once

#include <cstdint>
#include <vector>

#include "poisonlab/dataset.hpp"
#include "poisonlab/rng.hpp"

namespace poisonlab {

// Cluster centers for a synthetic scenario. Random directions, rescaled so
// the minimum pairwise distance is at least `separation`.
std::vector<std::vector<double>> make_cluster_means(int num_classes, int d_in,
                                                    double separation, Rng& rng);

// Unit-variance isotropic Gaussian draws around the given means;
// `per_class` points per class, ids assigned from id_base upward in
// (class, point) order.
FeatureDataset sample_clusters(const std::vector<std::vector<double>>& means,
                               int per_class, Rng& rng, std::uint64_t id_base = 0);

// One draw from a single cluster.
std::vector<double> sample_cluster_point(const std::vector<double>& mean, Rng& rng);

// C isotropic Gaussian clusters with mean pairwise distance >= separation;
// deterministic per seed.
FeatureDataset make_synthetic_clusters(int num_classes, int per_class, int d_in,
                                       double separation, std::uint64_t seed);

}  // namespace poisonlab
