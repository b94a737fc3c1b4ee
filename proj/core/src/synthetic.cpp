#include "poisonlab/synthetic.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "poisonlab/extractor.hpp"

namespace poisonlab {

std::vector<std::vector<double>> make_cluster_means(int num_classes, int d_in,
                                                    double separation, Rng& rng) {
    if (num_classes < 2) throw DatasetError("need at least 2 classes");
    if (!(separation > 0.0))
        throw DatasetError("separation must be positive, got " + std::to_string(separation));

    std::vector<std::vector<double>> means(static_cast<std::size_t>(num_classes),
                                           std::vector<double>(static_cast<std::size_t>(d_in)));
    for (auto& m : means)
        for (double& v : m) v = rng.normal() * separation;

    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < means.size(); ++a)
        for (std::size_t b = a + 1; b < means.size(); ++b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < means[a].size(); ++i) {
                const double d = means[a][i] - means[b][i];
                acc += d * d;
            }
            min_dist = std::min(min_dist, std::sqrt(acc));
        }
    if (!(min_dist > 0.0)) throw DatasetError("degenerate cluster means (coincident draw)");
    if (min_dist < separation) {
        const double scale = separation / min_dist;
        for (auto& m : means)
            for (double& v : m) v *= scale;
    }
    return means;
}

std::vector<double> sample_cluster_point(const std::vector<double>& mean, Rng& rng) {
    std::vector<double> p(mean.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = mean[i] + rng.normal();
    return p;
}

FeatureDataset sample_clusters(const std::vector<std::vector<double>>& means,
                               int per_class, Rng& rng, std::uint64_t id_base) {
    if (means.empty()) throw DatasetError("no cluster means given");
    const int num_classes = static_cast<int>(means.size());
    const int d_in = static_cast<int>(means[0].size());
    FeatureDataset ds(SpaceTag::input_space, num_classes, d_in);
    std::uint64_t id = id_base;
    for (int c = 0; c < num_classes; ++c)
        for (int p = 0; p < per_class; ++p)
            ds.append(id++, c, to_float(sample_cluster_point(means[static_cast<std::size_t>(c)], rng)));
    return ds;
}

FeatureDataset make_synthetic_clusters(int num_classes, int per_class, int d_in,
                                       double separation, std::uint64_t seed) {
    Rng rng(seed);
    const auto means = make_cluster_means(num_classes, d_in, separation, rng);
    return sample_clusters(means, per_class, rng, 0);
}

}  // namespace poisonlab
