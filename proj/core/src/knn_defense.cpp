#include "poisonlab/knn_defense.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace poisonlab {

namespace {

struct Candidate {
    double dist_sq;
    std::uint64_t id;
    std::size_t row;
};

bool closer(const Candidate& a, const Candidate& b) {
    if (a.dist_sq != b.dist_sq) return a.dist_sq < b.dist_sq;
    return a.id < b.id;  // deterministic tie-break
}

double dist_sq(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += diff * diff;
    }
    return acc;
}

void check_preconditions(const FeatureDataset& ds, int k) {
    if (k <= 0) throw DatasetError("k must be positive, got " + std::to_string(k));
    if (ds.space() != SpaceTag::feature_space)
        throw DatasetError("k-NN defense operates in feature space only");
    if (ds.size() < 2) throw DatasetError("k-NN requires at least 2 points");
}

// Exact brute force over one block of query rows. For each query the k
// nearest other rows land in neighbors[q], sorted by (distance, id).
void knn_block(const FeatureDataset& ds, std::size_t block_start, std::size_t block_end,
               std::size_t k, std::vector<std::vector<Candidate>>& scratch,
               std::vector<std::vector<Candidate>>& neighbors) {
    const std::size_t n = ds.size();
    const std::size_t block = block_end - block_start;
    for (std::size_t q = 0; q < block; ++q) {
        scratch[q].clear();
        scratch[q].reserve(n - 1);
    }
    for (std::size_t j = 0; j < n; ++j) {
        const auto pj = ds.point(j);
        for (std::size_t q = 0; q < block; ++q) {
            const std::size_t i = block_start + q;
            if (i == j) continue;
            scratch[q].push_back({dist_sq(ds.point(i), pj), ds.id(j), j});
        }
    }
    for (std::size_t q = 0; q < block; ++q) {
        auto& cand = scratch[q];
        const std::size_t take = std::min(k, cand.size());
        std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take - 1),
                         cand.end(), closer);
        cand.resize(take);
        std::sort(cand.begin(), cand.end(), closer);
        neighbors[q] = cand;
    }
}

constexpr std::size_t kQueryBlock = 64;

}  // namespace

NeighborSet knn_query(const FeatureDataset& ds, std::uint64_t query_id, int k) {
    check_preconditions(ds, k);
    const std::size_t row = ds.row_of(query_id);

    std::vector<std::vector<Candidate>> scratch(1), neighbors(1);
    knn_block(ds, row, row + 1, static_cast<std::size_t>(k), scratch, neighbors);

    NeighborSet out;
    out.query_id = query_id;
    for (const Candidate& c : neighbors[0]) {
        out.neighbor_ids.push_back(c.id);
        out.distances.push_back(std::sqrt(c.dist_sq));
    }
    return out;
}

FilterReport deep_knn_filter(const FeatureDataset& ds, int k) {
    check_preconditions(ds, k);
    const std::size_t n = ds.size();
    const auto classes = static_cast<std::size_t>(ds.num_classes());

    std::unordered_set<std::uint64_t> removed;
    std::vector<std::vector<Candidate>> scratch(kQueryBlock), neighbors(kQueryBlock);
    std::vector<std::size_t> votes(classes);
    for (std::size_t block_start = 0; block_start < n; block_start += kQueryBlock) {
        const std::size_t block_end = std::min(n, block_start + kQueryBlock);
        knn_block(ds, block_start, block_end, static_cast<std::size_t>(k), scratch,
                  neighbors);
        for (std::size_t q = 0; q < block_end - block_start; ++q) {
            const std::size_t i = block_start + q;
            std::fill(votes.begin(), votes.end(), 0);
            for (const Candidate& c : neighbors[q])
                ++votes[static_cast<std::size_t>(ds.label(c.row))];
            const std::size_t top = *std::max_element(votes.begin(), votes.end());
            if (votes[static_cast<std::size_t>(ds.label(i))] != top)
                removed.insert(ds.id(i));
        }
    }
    return make_report(ds, "deep_knn", {{"k", std::to_string(k)}}, removed);
}

}  // namespace poisonlab
