#include "poisonlab/dataset.hpp"

#include <algorithm>
#include <cmath>

namespace poisonlab {

const char* to_string(SpaceTag tag) {
    return tag == SpaceTag::input_space ? "input" : "feature";
}

FeatureDataset::FeatureDataset(SpaceTag space, int num_classes, int dim)
    : space_(space), num_classes_(num_classes), dim_(dim) {
    if (dim_ < 1) throw DatasetError("dataset dimension must be >= 1");
    if (num_classes_ < 1) throw DatasetError("class count must be >= 1");
}

void FeatureDataset::append(std::uint64_t id, std::int32_t label,
                            std::span<const float> values) {
    if (static_cast<int>(values.size()) != dim_)
        throw DatasetError("point dimension " + std::to_string(values.size()) +
                           " does not match dataset dimension " + std::to_string(dim_));
    if (label < 0 || label >= num_classes_)
        throw DatasetError("label " + std::to_string(label) + " outside [0, " +
                           std::to_string(num_classes_) + ") for id " + std::to_string(id));
    for (float v : values)
        if (!std::isfinite(v))
            throw DatasetError("non-finite value in point id " + std::to_string(id));
    if (!id_index_.emplace(id, ids_.size()).second)
        throw DatasetError("duplicate point id " + std::to_string(id));
    ids_.push_back(id);
    labels_.push_back(label);
    values_.insert(values_.end(), values.begin(), values.end());
}

std::size_t FeatureDataset::row_of(std::uint64_t id) const {
    auto it = id_index_.find(id);
    if (it == id_index_.end())
        throw DatasetError("point id " + std::to_string(id) + " not in dataset");
    return it->second;
}

std::uint64_t FeatureDataset::max_id() const {
    std::uint64_t m = 0;
    for (std::uint64_t id : ids_) m = std::max(m, id);
    return m;
}

FeatureDataset FeatureDataset::subset_rows(const std::vector<std::size_t>& rows) const {
    FeatureDataset out(space_, num_classes_, dim_);
    for (std::size_t r : rows) out.append(ids_[r], labels_[r], point(r));
    return out;
}

FeatureDataset FeatureDataset::subset_ids(
    const std::unordered_set<std::uint64_t>& keep) const {
    FeatureDataset out(space_, num_classes_, dim_);
    for (std::size_t r = 0; r < size(); ++r)
        if (keep.count(ids_[r])) out.append(ids_[r], labels_[r], point(r));
    return out;
}

FeatureDataset FeatureDataset::with_space(SpaceTag tag) const {
    FeatureDataset out(tag, num_classes_, dim_);
    for (std::size_t r = 0; r < size(); ++r) out.append(ids_[r], labels_[r], point(r));
    return out;
}

bool FeatureDataset::operator==(const FeatureDataset& other) const {
    return space_ == other.space_ && num_classes_ == other.num_classes_ &&
           dim_ == other.dim_ && ids_ == other.ids_ && labels_ == other.labels_ &&
           values_ == other.values_;
}

ClassStats class_stats(const FeatureDataset& ds) {
    ClassStats stats;
    stats.counts.assign(static_cast<std::size_t>(ds.num_classes()), 0);
    for (std::size_t r = 0; r < ds.size(); ++r)
        ++stats.counts[static_cast<std::size_t>(ds.label(r))];
    stats.max_count = 0;
    stats.min_count = ds.size() == 0 ? 0 : stats.counts[0];
    for (std::size_t c : stats.counts) {
        stats.max_count = std::max(stats.max_count, c);
        stats.min_count = std::min(stats.min_count, c);
    }
    if (ds.size() == 0) stats.min_count = 0;
    return stats;
}

int resolve_k(double normalized_k, const ClassStats& stats) {
    if (!(normalized_k > 0.0))
        throw DatasetError("normalized_k must be > 0, got " + std::to_string(normalized_k));
    if (stats.max_count < 1)
        throw DatasetError("resolve_k requires a non-empty dataset");
    const double raw = normalized_k * static_cast<double>(stats.max_count);
    const auto k = static_cast<long long>(std::floor(raw + 0.5));  // round half-up
    return static_cast<int>(std::max(1LL, k));
}

void PoisonLedger::validate() const {
    if (poison_ids.count(target_id))
        throw DatasetError("poison ledger: target id is listed as a poison");
    if (base_label == target_label)
        throw DatasetError("poison ledger: base label equals target label");
}

ReplicationResult replicate_minorities(const FeatureDataset& ds) {
    const ClassStats stats = class_stats(ds);
    if (stats.max_count == 0)
        throw DatasetError("replicate_minorities requires at least one non-empty class");
    const std::size_t target = stats.max_count;

    ReplicationResult out{FeatureDataset(ds.space(), ds.num_classes(), ds.dim()), {}};
    for (std::size_t r = 0; r < ds.size(); ++r) {
        out.dataset.append(ds.id(r), ds.label(r), ds.point(r));
        out.provenance.emplace(ds.id(r), ds.id(r));
    }

    // Rows of each class in ascending id order.
    std::vector<std::vector<std::size_t>> by_class(
        static_cast<std::size_t>(ds.num_classes()));
    for (std::size_t r = 0; r < ds.size(); ++r)
        by_class[static_cast<std::size_t>(ds.label(r))].push_back(r);
    for (auto& rows : by_class)
        std::sort(rows.begin(), rows.end(),
                  [&](std::size_t a, std::size_t b) { return ds.id(a) < ds.id(b); });

    std::uint64_t next_id = ds.max_id() + 1;
    for (std::size_t label = 0; label < by_class.size(); ++label) {
        const auto& rows = by_class[label];
        const std::size_t n = rows.size();
        if (n == 0 || n == target) continue;
        const std::size_t whole = target / n;
        const std::size_t extra = target - n * whole;
        for (std::size_t round = 1; round < whole; ++round) {
            for (std::size_t r : rows) {
                out.dataset.append(next_id, ds.label(r), ds.point(r));
                out.provenance.emplace(next_id, ds.id(r));
                ++next_id;
            }
        }
        for (std::size_t i = 0; i < extra; ++i) {
            const std::size_t r = rows[i];
            out.dataset.append(next_id, ds.label(r), ds.point(r));
            out.provenance.emplace(next_id, ds.id(r));
            ++next_id;
        }
    }
    return out;
}

}  // namespace poisonlab
