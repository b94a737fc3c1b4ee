#include "poisonlab/defense_spec.hpp"

#include <cstdio>

#include "poisonlab/baseline_defenses.hpp"
#include "poisonlab/knn_defense.hpp"
#include "poisonlab/ocsvm.hpp"

namespace poisonlab {

DefenseKind defense_kind_from_string(const std::string& name) {
    if (name == "none") return DefenseKind::none;
    if (name == "deep_knn") return DefenseKind::deep_knn;
    if (name == "l2_outlier") return DefenseKind::l2_outlier;
    if (name == "ocsvm") return DefenseKind::ocsvm;
    if (name == "random" || name == "random_eviction") return DefenseKind::random_eviction;
    throw DatasetError("unknown defense kind '" + name + "'");
}

const char* to_string(DefenseKind kind) {
    switch (kind) {
        case DefenseKind::none: return "none";
        case DefenseKind::deep_knn: return "deep_knn";
        case DefenseKind::l2_outlier: return "l2_outlier";
        case DefenseKind::ocsvm: return "ocsvm";
        case DefenseKind::random_eviction: return "random_eviction";
    }
    return "?";
}

FilterReport apply_defense(const FeatureDataset& ds, const DefenseSpec& spec) {
    switch (spec.kind) {
        case DefenseKind::none:
            return make_report(ds, "none", {}, {});
        case DefenseKind::deep_knn: {
            const int k = spec.k ? *spec.k : resolve_k(spec.normalized_k, class_stats(ds));
            return deep_knn_filter(ds, k);
        }
        case DefenseKind::l2_outlier:
            return l2_outlier_filter(ds, spec.epsilon);
        case DefenseKind::ocsvm:
            return ocsvm_filter(ds, spec.nu, spec.gamma_rbf);
        case DefenseKind::random_eviction:
            return random_eviction_filter(ds, spec.fraction, spec.seed);
    }
    throw DatasetError("unhandled defense kind");
}

}  // namespace poisonlab
