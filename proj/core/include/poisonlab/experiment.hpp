#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poisonlab/attack.hpp"
#include "poisonlab/defense_spec.hpp"
#include "poisonlab/victim.hpp"

namespace poisonlab {

enum class Scenario { feature_collision, convex_polytope };

Scenario scenario_from_string(const std::string& name);
const char* to_string(Scenario s);

struct DataConfig {
    int classes = 10;
    int per_class = 50;
    int test_per_class = 20;
    int d_in = 32;
    int hidden = 64;
    int d_feat = 16;
    double separation = 8.0;
    std::int32_t target_label = 0;
    std::int32_t base_label = 1;
    Nonlinearity nonlinearity = Nonlinearity::tanh;
};

struct ExperimentConfig {
    Scenario scenario = Scenario::feature_collision;
    DataConfig data;
    AttackConfig attack;
    DefenseSpec defense;
    VictimConfig victim;
    int trials = 1;
    std::uint64_t master_seed = 1;
    int jobs = 1;
    double imbalance_ratio = 1.0;
    bool rebalance = false;

    void validate() const;  // throws ConfigError
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Aggregates {
    std::size_t trials_total = 0;
    std::size_t qualifying = 0;
    std::size_t successes = 0;
    std::size_t excluded = 0;
    std::size_t errors = 0;
    double defense_success_rate = 0.0;
    std::size_t poisons_total = 0;
    std::size_t poisons_removed = 0;
    double mean_mcc = 0.0;
    double mean_clean_removed_fraction = 0.0;
    double mean_test_accuracy = 0.0;
};

struct ExperimentReport {
    std::string version;
    ExperimentConfig config;
    std::vector<TrialRow> rows;
    Aggregates aggregates;
    std::vector<std::string> failures;  // "trial N: what failed"
};

// Aggregates over qualifying trials. Trials whose defended phase errored stay
// in the success-rate denominator as failures; the defense did not win them.
Aggregates compute_aggregates(const std::vector<TrialRow>& rows);

// Runs all trials end to end: sample clusters, craft poisons, optionally
// imbalance/rebalance, filter, train, score. Deterministic per master_seed
// and independent of the jobs count.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// One report per grid value, sharing the master seed so trials are paired
// across grid points.
std::vector<ExperimentReport> sweep_normalized_k(const ExperimentConfig& cfg,
                                                 const std::vector<double>& grid);

// ratio x {rebalance off, on}, sharing the master seed; normalized-k pinned
// at 2 for every run.
std::vector<ExperimentReport> sweep_imbalance(const ExperimentConfig& cfg,
                                              const std::vector<double>& ratios);

std::string report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const std::string& text);  // recomputes aggregates

std::string rows_csv_header();
std::string rows_to_csv(const std::vector<TrialRow>& rows);
std::string sweep_summary_csv(const std::vector<ExperimentReport>& reports);

}  // namespace poisonlab
