#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "poisonlab/attack.hpp"
#include "poisonlab/dataset.hpp"
#include "poisonlab/defense_spec.hpp"
#include "poisonlab/extractor.hpp"
#include "poisonlab/filter_report.hpp"

namespace poisonlab {

struct EmptyClassError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainingDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct VictimConfig {
    double learning_rate = 0.1;
    int epochs = 500;
    std::uint64_t seed = 0;
};

// Multinomial-logistic head over frozen features; the desk-scale stand-in
// for a fine-tuned victim classifier.
struct LinearHead {
    int num_classes = 0;
    int dim = 0;
    std::vector<double> weights;  // num_classes x dim
    std::vector<double> biases;
    std::vector<double> loss_trace;  // mean cross-entropy per epoch

    int predict(std::span<const float> x) const;
    int predict(std::span<const double> x) const;
};

// Full-batch gradient descent on mean cross-entropy; the returned weights are
// the best (lowest-loss) iterate, so the final loss equals the running
// minimum. Throws EmptyClassError / TrainingDivergence.
LinearHead train_head(const FeatureDataset& train, const VictimConfig& cfg);

// Mean cross-entropy and its weight gradient at the given parameters;
// exposed for gradient checking.
double cross_entropy_loss(const LinearHead& head, const FeatureDataset& ds);
void cross_entropy_gradient(const LinearHead& head, const FeatureDataset& ds,
                            std::vector<double>& grad_w, std::vector<double>& grad_b);

double accuracy(const LinearHead& head, const FeatureDataset& ds);

enum class Outcome { attack_succeeded, defense_succeeded };

// The attack's goal is base-class misclassification, so the defense wins
// whenever the target is NOT classified as the base label.
Outcome attack_outcome(const LinearHead& head, std::span<const double> target_feature,
                       std::int32_t target_label, std::int32_t base_label);

struct Confusion {
    std::size_t tp = 0;  // poisons removed
    std::size_t fp = 0;  // clean removed
    std::size_t tn = 0;  // clean kept
    std::size_t fn = 0;  // poisons kept
};

Confusion detection_confusion(const FilterReport& report, const PoisonLedger& ledger);

// Matthews correlation coefficient; 0 by convention when any marginal is 0.
double mcc(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);

enum class TrialStatus { ok, excluded, error };

struct TrialRow {
    int trial = 0;
    std::uint64_t seed = 0;
    std::string scenario;
    std::string defense;
    double normalized_k = 0.0;
    double class_balance_ratio = 1.0;
    bool rebalance = false;
    TrialStatus status = TrialStatus::ok;
    std::string error_message;
    bool filter_ran = false;         // confusion fields are meaningful
    bool qualified = false;          // undefended attack succeeded
    bool defense_success = false;
    bool off_class = false;          // target sent to neither l_t nor l_b
    int predicted_label = -1;
    std::size_t poisons_total = 0;
    std::size_t poisons_removed = 0;
    std::size_t clean_total = 0;
    std::size_t clean_removed = 0;
    double clean_removed_fraction = 0.0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double mcc_value = 0.0;
    double test_accuracy = 0.0;
    std::size_t n_train = 0;
    std::size_t n_kept = 0;
};

struct TrialInputs {
    const ExtractorModel* extractor = nullptr;
    FeatureDataset train_inputs;       // clean, input space, target excluded
    FeatureDataset test_inputs;        // held out; ids disjoint from training
    std::vector<double> target_input;
    std::int32_t target_label = 0;
    std::int32_t base_label = 1;
    double imbalance_ratio = 1.0;      // subsample target class to ratio * per-class
    bool rebalance = false;            // replicate minorities before filtering
    std::uint64_t trial_seed = 0;
};

// End-to-end single trial: replace the lowest-id base-class points with the
// crafted poisons, optionally imbalance/rebalance, filter, train, score.
// A trial qualifies only if the undefended head misclassifies the target as
// the base label. Defended-phase failures surface as status == error.
TrialRow run_trial(const TrialInputs& inputs, const PoisonCraftResult& craft,
                   const DefenseSpec& defense, const VictimConfig& victim_cfg);

}  // namespace poisonlab
