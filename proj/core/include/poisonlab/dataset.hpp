#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace poisonlab {

enum class SpaceTag : std::uint8_t { input_space = 0, feature_space = 1 };

const char* to_string(SpaceTag tag);

struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Immutable-after-construction collection of vectors with class labels and
// stable point ids. Filtering always works on ids, never on row positions,
// so surviving points keep their identity across defenses.
class FeatureDataset {
public:
    FeatureDataset(SpaceTag space, int num_classes, int dim);

    void append(std::uint64_t id, std::int32_t label, std::span<const float> values);

    std::size_t size() const { return ids_.size(); }
    bool empty() const { return ids_.empty(); }
    int dim() const { return dim_; }
    int num_classes() const { return num_classes_; }
    SpaceTag space() const { return space_; }

    std::span<const float> point(std::size_t row) const {
        return {values_.data() + row * static_cast<std::size_t>(dim_),
                static_cast<std::size_t>(dim_)};
    }
    std::int32_t label(std::size_t row) const { return labels_[row]; }
    std::uint64_t id(std::size_t row) const { return ids_[row]; }

    const std::vector<std::uint64_t>& ids() const { return ids_; }
    const std::vector<std::int32_t>& labels() const { return labels_; }
    const std::vector<float>& values() const { return values_; }

    bool contains_id(std::uint64_t id) const { return id_index_.count(id) != 0; }
    std::size_t row_of(std::uint64_t id) const;
    std::uint64_t max_id() const;

    // New dataset holding the given rows, original order and ids preserved.
    FeatureDataset subset_rows(const std::vector<std::size_t>& rows) const;
    FeatureDataset subset_ids(const std::unordered_set<std::uint64_t>& keep) const;

    FeatureDataset with_space(SpaceTag tag) const;

    bool operator==(const FeatureDataset& other) const;

private:
    SpaceTag space_;
    int num_classes_;
    int dim_;
    std::vector<float> values_;  // row-major n x dim
    std::vector<std::int32_t> labels_;
    std::vector<std::uint64_t> ids_;
    std::unordered_map<std::uint64_t, std::size_t> id_index_;
};

struct ClassStats {
    std::vector<std::size_t> counts;  // indexed by label
    std::size_t max_count = 0;
    std::size_t min_count = 0;
};

ClassStats class_stats(const FeatureDataset& ds);

// k = round(normalized_k * N), half-up, clamped to at least 1.
int resolve_k(double normalized_k, const ClassStats& stats);

// Ground-truth bookkeeping for the evaluation harness. Defense filters never
// see this type; they take a FeatureDataset only.
struct PoisonLedger {
    std::unordered_set<std::uint64_t> poison_ids;
    std::uint64_t target_id = 0;
    std::int32_t base_label = 0;
    std::int32_t target_label = 0;

    void validate() const;
};

struct ReplicationResult {
    FeatureDataset dataset;
    // Every output id -> the original id it copies; originals map to themselves.
    std::unordered_map<std::uint64_t, std::uint64_t> provenance;
};

// Brings every class up to N = max class count by exact duplication.
// Each point of a class with n points is copied floor(N/n) - 1 extra times,
// then the N - n*floor(N/n) lowest-id points of the class once more.
// Replicas get fresh ids above max_id(), originals are retained unchanged.
ReplicationResult replicate_minorities(const FeatureDataset& ds);

}  // namespace poisonlab
