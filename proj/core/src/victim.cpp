#include "poisonlab/victim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "poisonlab/rng.hpp"

namespace poisonlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename Span>
int argmax_score(const LinearHead& head, Span x) {
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < head.num_classes; ++c) {
        double z = head.biases[static_cast<std::size_t>(c)];
        const double* row = head.weights.data() + static_cast<std::size_t>(c) * head.dim;
        for (int i = 0; i < head.dim; ++i) z += row[i] * static_cast<double>(x[i]);
        if (z > best_score) {  // ties keep the lowest class index
            best_score = z;
            best = c;
        }
    }
    return best;
}

// Stable softmax over logits, in place.
void softmax(std::vector<double>& z) {
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - m);
        sum += v;
    }
    for (double& v : z) v /= sum;
}

void forward_logits(const LinearHead& head, std::span<const float> x,
                    std::vector<double>& z) {
    for (int c = 0; c < head.num_classes; ++c) {
        double acc = head.biases[static_cast<std::size_t>(c)];
        const double* row = head.weights.data() + static_cast<std::size_t>(c) * head.dim;
        for (int i = 0; i < head.dim; ++i) acc += row[i] * static_cast<double>(x[i]);
        z[static_cast<std::size_t>(c)] = acc;
    }
}

}  // namespace

int LinearHead::predict(std::span<const float> x) const { return argmax_score(*this, x); }
int LinearHead::predict(std::span<const double> x) const { return argmax_score(*this, x); }

double cross_entropy_loss(const LinearHead& head, const FeatureDataset& ds) {
    std::vector<double> z(static_cast<std::size_t>(head.num_classes));
    double loss = 0.0;
    for (std::size_t r = 0; r < ds.size(); ++r) {
        forward_logits(head, ds.point(r), z);
        softmax(z);
        loss -= std::log(std::max(z[static_cast<std::size_t>(ds.label(r))], 1e-300));
    }
    return loss / static_cast<double>(ds.size());
}

void cross_entropy_gradient(const LinearHead& head, const FeatureDataset& ds,
                            std::vector<double>& grad_w, std::vector<double>& grad_b) {
    grad_w.assign(head.weights.size(), 0.0);
    grad_b.assign(head.biases.size(), 0.0);
    std::vector<double> z(static_cast<std::size_t>(head.num_classes));
    const double inv_n = 1.0 / static_cast<double>(ds.size());
    for (std::size_t r = 0; r < ds.size(); ++r) {
        const auto x = ds.point(r);
        forward_logits(head, x, z);
        softmax(z);
        z[static_cast<std::size_t>(ds.label(r))] -= 1.0;
        for (int c = 0; c < head.num_classes; ++c) {
            const double g = z[static_cast<std::size_t>(c)] * inv_n;
            grad_b[static_cast<std::size_t>(c)] += g;
            double* row = grad_w.data() + static_cast<std::size_t>(c) * head.dim;
            for (int i = 0; i < head.dim; ++i) row[i] += g * static_cast<double>(x[i]);
        }
    }
}

LinearHead train_head(const FeatureDataset& train, const VictimConfig& cfg) {
    if (train.space() != SpaceTag::feature_space)
        throw DatasetError("victim head trains on feature-space data");
    const ClassStats stats = class_stats(train);
    for (std::size_t c = 0; c < stats.counts.size(); ++c)
        if (stats.counts[c] == 0)
            throw EmptyClassError("class " + std::to_string(c) +
                                  " has no training points");
    if (train.size() < static_cast<std::size_t>(train.num_classes()))
        throw EmptyClassError("fewer training points than classes");

    LinearHead head;
    head.num_classes = train.num_classes();
    head.dim = train.dim();
    head.weights.assign(static_cast<std::size_t>(head.num_classes) * head.dim, 0.0);
    head.biases.assign(static_cast<std::size_t>(head.num_classes), 0.0);

    std::vector<double> best_w = head.weights;
    std::vector<double> best_b = head.biases;
    double best_loss = std::numeric_limits<double>::infinity();

    std::vector<double> grad_w, grad_b;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double loss = cross_entropy_loss(head, train);
        if (!std::isfinite(loss))
            throw TrainingDivergence("non-finite training loss at epoch " +
                                     std::to_string(epoch));
        head.loss_trace.push_back(loss);
        if (loss < best_loss) {
            best_loss = loss;
            best_w = head.weights;
            best_b = head.biases;
        }
        cross_entropy_gradient(head, train, grad_w, grad_b);
        for (std::size_t i = 0; i < head.weights.size(); ++i)
            head.weights[i] -= cfg.learning_rate * grad_w[i];
        for (std::size_t i = 0; i < head.biases.size(); ++i)
            head.biases[i] -= cfg.learning_rate * grad_b[i];
    }
    const double final_loss = cross_entropy_loss(head, train);
    if (!std::isfinite(final_loss)) throw TrainingDivergence("non-finite final loss");
    head.loss_trace.push_back(final_loss);
    if (final_loss < best_loss) {
        best_loss = final_loss;
        best_w = head.weights;
        best_b = head.biases;
    }
    // Return the best iterate: the model's loss equals the trace minimum.
    head.weights = std::move(best_w);
    head.biases = std::move(best_b);
    return head;
}

double accuracy(const LinearHead& head, const FeatureDataset& ds) {
    if (ds.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < ds.size(); ++r)
        if (head.predict(ds.point(r)) == ds.label(r)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

Outcome attack_outcome(const LinearHead& head, std::span<const double> target_feature,
                       std::int32_t target_label, std::int32_t base_label) {
    if (target_label == base_label)
        throw DatasetError("attack outcome requires distinct target and base labels");
    return head.predict(target_feature) == base_label ? Outcome::attack_succeeded
                                                      : Outcome::defense_succeeded;
}

Confusion detection_confusion(const FilterReport& report, const PoisonLedger& ledger) {
    std::unordered_set<std::uint64_t> universe;
    universe.reserve(report.kept_ids.size() + report.removed_ids.size());
    universe.insert(report.kept_ids.begin(), report.kept_ids.end());
    universe.insert(report.removed_ids.begin(), report.removed_ids.end());
    for (std::uint64_t id : ledger.poison_ids)
        if (!universe.count(id))
            throw DatasetError("ledger poison id " + std::to_string(id) +
                               " missing from filter report");

    Confusion c;
    for (std::uint64_t id : report.removed_ids)
        ledger.poison_ids.count(id) ? ++c.tp : ++c.fp;
    for (std::uint64_t id : report.kept_ids)
        ledger.poison_ids.count(id) ? ++c.fn : ++c.tn;
    return c;
}

double mcc(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
    const double a = static_cast<double>(tp + fp);
    const double b = static_cast<double>(tp + fn);
    const double c = static_cast<double>(tn + fp);
    const double d = static_cast<double>(tn + fn);
    if (a == 0.0 || b == 0.0 || c == 0.0 || d == 0.0) return 0.0;
    const double num = static_cast<double>(tp) * static_cast<double>(tn) -
                       static_cast<double>(fp) * static_cast<double>(fn);
    return num / std::sqrt(a * b * c * d);
}

TrialRow run_trial(const TrialInputs& inputs, const PoisonCraftResult& craft,
                   const DefenseSpec& defense, const VictimConfig& victim_cfg) {
    const ExtractorModel& extractor = *inputs.extractor;
    TrialRow row;
    row.seed = inputs.trial_seed;
    row.defense = to_string(defense.kind);
    row.normalized_k = defense.normalized_k;
    row.class_balance_ratio = inputs.imbalance_ratio;
    row.rebalance = inputs.rebalance;

    // Poison injection: crafted poisons replace their own base points.
    FeatureDataset train(SpaceTag::input_space, inputs.train_inputs.num_classes(),
                         inputs.train_inputs.dim());
    std::unordered_set<std::uint64_t> replaced(craft.base_ids.begin(),
                                               craft.base_ids.end());
    for (std::size_t r = 0; r < inputs.train_inputs.size(); ++r)
        if (!replaced.count(inputs.train_inputs.id(r)))
            train.append(inputs.train_inputs.id(r), inputs.train_inputs.label(r),
                         inputs.train_inputs.point(r));

    PoisonLedger ledger;
    ledger.base_label = inputs.base_label;
    ledger.target_label = inputs.target_label;
    std::uint64_t next_id = std::max(inputs.train_inputs.max_id(),
                                     inputs.test_inputs.max_id()) + 1;
    for (const auto& poison : craft.poisons) {
        train.append(next_id, inputs.base_label, to_float(poison));
        ledger.poison_ids.insert(next_id);
        ++next_id;
    }
    ledger.target_id = next_id;  // never present in any dataset
    ledger.validate();

    // Optional class imbalance: subsample the target class, seeded per trial
    // so sweeps stay paired.
    if (inputs.imbalance_ratio < 1.0) {
        if (!(inputs.imbalance_ratio > 0.0))
            throw DatasetError("imbalance ratio must be in (0, 1]");
        std::vector<std::size_t> target_rows;
        for (std::size_t r = 0; r < train.size(); ++r)
            if (train.label(r) == inputs.target_label &&
                !ledger.poison_ids.count(train.id(r)))
                target_rows.push_back(r);
        const auto keep_n = static_cast<std::size_t>(std::max(
            1.0, std::floor(inputs.imbalance_ratio *
                                static_cast<double>(target_rows.size()) + 0.5)));
        Rng rng(mix_seed(inputs.trial_seed, 0x1357ULL));
        std::vector<std::size_t> pool = target_rows;
        std::unordered_set<std::size_t> picked;
        for (std::size_t i = 0; i < std::min(keep_n, pool.size()); ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
            std::swap(pool[i], pool[j]);
            picked.insert(pool[i]);
        }
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < train.size(); ++r) {
            const bool is_target_clean =
                train.label(r) == inputs.target_label && !ledger.poison_ids.count(train.id(r));
            if (!is_target_clean || picked.count(r)) rows.push_back(r);
        }
        train = train.subset_rows(rows);
    }

    if (inputs.rebalance) {
        ReplicationResult rep = replicate_minorities(train);
        for (const auto& [replica, original] : rep.provenance)
            if (ledger.poison_ids.count(original)) ledger.poison_ids.insert(replica);
        train = std::move(rep.dataset);
    }

    // Held-out ids must stay disjoint from everything trained on.
    for (std::size_t r = 0; r < inputs.test_inputs.size(); ++r)
        if (train.contains_id(inputs.test_inputs.id(r)))
            throw DatasetError("test id " + std::to_string(inputs.test_inputs.id(r)) +
                               " appears in the training set");

    const FeatureDataset train_feat = extract_features(extractor, train);
    const FeatureDataset test_feat = extract_features(extractor, inputs.test_inputs);
    const std::vector<double> target_feature = extractor.forward(inputs.target_input);

    row.n_train = train_feat.size();
    row.poisons_total = ledger.poison_ids.size();
    row.clean_total = train_feat.size() - ledger.poison_ids.size();
    row.mcc_value = kNaN;
    row.test_accuracy = kNaN;

    // Qualification: the undefended victim must actually be fooled.
    LinearHead undefended;
    try {
        undefended = train_head(train_feat, victim_cfg);
    } catch (const std::exception& e) {
        row.status = TrialStatus::error;
        row.error_message = std::string("undefended training: ") + e.what();
        return row;
    }
    row.qualified = attack_outcome(undefended, target_feature, inputs.target_label,
                                   inputs.base_label) == Outcome::attack_succeeded;
    if (!row.qualified) row.status = TrialStatus::excluded;

    FilterReport report;
    try {
        report = apply_defense(train_feat, defense);
    } catch (const std::exception& e) {
        row.status = TrialStatus::error;
        row.error_message = std::string("defense: ") + e.what();
        return row;
    }
    row.filter_ran = true;
    const Confusion confusion = detection_confusion(report, ledger);
    row.tp = confusion.tp;
    row.fp = confusion.fp;
    row.tn = confusion.tn;
    row.fn = confusion.fn;
    row.poisons_removed = confusion.tp;
    row.clean_removed = confusion.fp;
    row.clean_removed_fraction =
        row.clean_total == 0 ? 0.0
                             : static_cast<double>(confusion.fp) /
                                   static_cast<double>(row.clean_total);
    row.mcc_value = mcc(confusion.tp, confusion.fp, confusion.tn, confusion.fn);
    row.n_kept = report.kept_ids.size();

    LinearHead defended;
    try {
        const FeatureDataset kept = train_feat.subset_ids(report.kept_set());
        defended = train_head(kept, victim_cfg);
    } catch (const std::exception& e) {
        row.status = TrialStatus::error;
        row.error_message = std::string("defended training: ") + e.what();
        row.defense_success = false;
        return row;
    }
    row.predicted_label = defended.predict(target_feature);
    row.defense_success = row.predicted_label != inputs.base_label;
    row.off_class = row.defense_success && row.predicted_label != inputs.target_label;
    row.test_accuracy = accuracy(defended, test_feat);
    return row;
}

}  // namespace poisonlab
