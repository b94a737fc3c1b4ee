#include "poisonlab/baseline_defenses.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "poisonlab/rng.hpp"

namespace poisonlab {

namespace {

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

CentroidTable compute_centroids(const FeatureDataset& ds) {
    const auto classes = static_cast<std::size_t>(ds.num_classes());
    const auto dim = static_cast<std::size_t>(ds.dim());
    CentroidTable table;
    table.centroids.assign(classes, std::vector<double>(dim, 0.0));
    table.sizes.assign(classes, 0);

    // Kahan accumulators per class and dimension.
    std::vector<std::vector<double>> comp(classes, std::vector<double>(dim, 0.0));
    for (std::size_t r = 0; r < ds.size(); ++r) {
        const auto l = static_cast<std::size_t>(ds.label(r));
        ++table.sizes[l];
        const auto p = ds.point(r);
        auto& sum = table.centroids[l];
        auto& c = comp[l];
        for (std::size_t i = 0; i < dim; ++i) {
            const double y = static_cast<double>(p[i]) - c[i];
            const double t = sum[i] + y;
            c[i] = (t - sum[i]) - y;
            sum[i] = t;
        }
    }
    for (std::size_t l = 0; l < classes; ++l)
        if (table.sizes[l] > 0)
            for (double& v : table.centroids[l]) v /= static_cast<double>(table.sizes[l]);
    return table;
}

FilterReport l2_outlier_filter(const FeatureDataset& ds, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon < 1.0))
        throw DatasetError("epsilon must be in [0, 1), got " + std::to_string(epsilon));
    if (ds.space() != SpaceTag::feature_space)
        throw DatasetError("l2 outlier filter operates in feature space only");

    const CentroidTable table = compute_centroids(ds);

    struct Entry {
        double dist_sq;
        std::uint64_t id;
    };
    std::vector<std::vector<Entry>> per_class(static_cast<std::size_t>(ds.num_classes()));
    for (std::size_t r = 0; r < ds.size(); ++r) {
        const auto l = static_cast<std::size_t>(ds.label(r));
        const auto p = ds.point(r);
        const auto& c = table.centroids[l];
        double acc = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double diff = static_cast<double>(p[i]) - c[i];
            acc += diff * diff;
        }
        per_class[l].push_back({acc, ds.id(r)});
    }

    std::unordered_set<std::uint64_t> removed;
    for (auto& entries : per_class) {
        const auto quota = static_cast<std::size_t>(
            std::floor(epsilon * static_cast<double>(entries.size())));
        if (quota == 0) continue;
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
            if (a.dist_sq != b.dist_sq) return a.dist_sq > b.dist_sq;
            return a.id < b.id;
        });
        for (std::size_t i = 0; i < quota; ++i) removed.insert(entries[i].id);
    }
    return make_report(ds, "l2_outlier", {{"epsilon", format_real(epsilon)}}, removed);
}

FilterReport random_eviction_filter(const FeatureDataset& ds, double fraction,
                                    std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0))
        throw DatasetError("fraction must be in [0, 1], got " + std::to_string(fraction));

    const auto quota = static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(ds.size()) + 0.5));

    // Partial Fisher-Yates over ascending ids; id order (not file order) feeds
    // the shuffle so the draw is permutation-invariant.
    std::vector<std::uint64_t> pool(ds.ids());
    std::sort(pool.begin(), pool.end());
    Rng rng(seed);
    std::unordered_set<std::uint64_t> removed;
    for (std::size_t i = 0; i < quota; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
        removed.insert(pool[i]);
    }
    return make_report(ds, "random_eviction",
                       {{"fraction", format_real(fraction)},
                        {"seed", std::to_string(seed)}},
                       removed);
}

}  // namespace poisonlab
