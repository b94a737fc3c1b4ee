#include "poisonlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "poisonlab/rng.hpp"
#include "poisonlab/synthetic.hpp"
#include "poisonlab/version.hpp"

namespace poisonlab {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

constexpr std::uint64_t kExtractorStream = 0xE1;
constexpr std::uint64_t kDataStream = 0xDA;
constexpr std::uint64_t kTestIdBase = 1'000'000'000ULL;

TrialRow execute_trial(const ExperimentConfig& cfg, int trial) {
    const std::uint64_t trial_seed = mix_seed(cfg.master_seed, static_cast<std::uint64_t>(trial));

    const ExtractorModel extractor(cfg.data.d_in, cfg.data.hidden, cfg.data.d_feat,
                                   cfg.data.nonlinearity,
                                   mix_seed(trial_seed, kExtractorStream));

    Rng rng(mix_seed(trial_seed, kDataStream));
    const auto means =
        make_cluster_means(cfg.data.classes, cfg.data.d_in, cfg.data.separation, rng);
    FeatureDataset train = sample_clusters(means, cfg.data.per_class, rng, 0);
    FeatureDataset test = sample_clusters(means, cfg.data.test_per_class, rng, kTestIdBase);
    const std::vector<double> target =
        sample_cluster_point(means[static_cast<std::size_t>(cfg.data.target_label)], rng);

    // Bases: the lowest-id points of the base class; the crafted poisons will
    // replace exactly these.
    std::vector<std::uint64_t> base_ids;
    std::vector<std::vector<double>> base_points;
    for (std::size_t r = 0; r < train.size() &&
                            base_ids.size() < static_cast<std::size_t>(cfg.attack.n_poisons);
         ++r) {
        if (train.label(r) != cfg.data.base_label) continue;
        base_ids.push_back(train.id(r));
        base_points.push_back(to_double(train.point(r)));
    }
    std::sort(base_ids.begin(), base_ids.end());

    AttackConfig attack = cfg.attack;
    attack.seed = trial_seed;
    PoisonCraftResult craft =
        cfg.scenario == Scenario::feature_collision
            ? craft_feature_collision(extractor, target, base_points, attack)
            : craft_convex_polytope(extractor, target, base_points, attack);
    craft.base_ids = base_ids;
    craft.target_id = std::max(train.max_id(), test.max_id()) + base_ids.size() + 1;

    TrialInputs inputs;
    inputs.extractor = &extractor;
    inputs.train_inputs = std::move(train);
    inputs.test_inputs = std::move(test);
    inputs.target_input = target;
    inputs.target_label = cfg.data.target_label;
    inputs.base_label = cfg.data.base_label;
    inputs.imbalance_ratio = cfg.imbalance_ratio;
    inputs.rebalance = cfg.rebalance;
    inputs.trial_seed = trial_seed;

    TrialRow row = run_trial(inputs, craft, cfg.defense, cfg.victim);
    row.trial = trial;
    row.scenario = to_string(cfg.scenario);
    return row;
}

}  // namespace

Scenario scenario_from_string(const std::string& name) {
    if (name == "feature_collision") return Scenario::feature_collision;
    if (name == "convex_polytope") return Scenario::convex_polytope;
    throw ConfigError("unknown scenario '" + name + "'");
}

const char* to_string(Scenario s) {
    return s == Scenario::feature_collision ? "feature_collision" : "convex_polytope";
}

void ExperimentConfig::validate() const {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (data.classes < 2) throw ConfigError("data.classes must be >= 2");
    if (data.per_class < 1) throw ConfigError("data.per_class must be >= 1");
    if (data.test_per_class < 1) throw ConfigError("data.test_per_class must be >= 1");
    if (data.d_in < 1 || data.hidden < 1 || data.d_feat < 1)
        throw ConfigError("extractor dimensions must be >= 1");
    if (!(data.separation > 0.0)) throw ConfigError("data.separation must be > 0");
    if (data.target_label == data.base_label)
        throw ConfigError("target and base labels must differ");
    if (data.target_label < 0 || data.target_label >= data.classes ||
        data.base_label < 0 || data.base_label >= data.classes)
        throw ConfigError("target/base labels must lie in [0, classes)");
    if (attack.n_poisons < 1) throw ConfigError("attack.n_poisons must be >= 1");
    if (attack.n_poisons > data.per_class)
        throw ConfigError("attack.n_poisons cannot exceed data.per_class (poisons replace bases)");
    if (attack.max_iters < 1) throw ConfigError("attack.max_iters must be >= 1");
    if (!(attack.gamma >= 0.0 && attack.gamma <= 1.0))
        throw ConfigError("attack.gamma must be in [0, 1]");
    if (scenario == Scenario::feature_collision && !(attack.beta > 0.0))
        throw ConfigError("attack.beta must be > 0 for feature collision");
    if (scenario == Scenario::convex_polytope && !(attack.epsilon_inf > 0.0))
        throw ConfigError("attack.epsilon_inf must be > 0 for convex polytope");
    if (!(imbalance_ratio > 0.0 && imbalance_ratio <= 1.0))
        throw ConfigError("imbalance_ratio must be in (0, 1]");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (victim.epochs < 1) throw ConfigError("victim.epochs must be >= 1");
    if (!(victim.learning_rate > 0.0)) throw ConfigError("victim.learning_rate must be > 0");
}

Aggregates compute_aggregates(const std::vector<TrialRow>& rows) {
    Aggregates agg;
    agg.trials_total = rows.size();
    double mcc_sum = 0.0, clean_sum = 0.0, acc_sum = 0.0;
    std::size_t detection_rows = 0, accuracy_rows = 0;
    for (const TrialRow& row : rows) {
        if (row.status == TrialStatus::error) ++agg.errors;
        if (row.status == TrialStatus::excluded) ++agg.excluded;
        if (!row.qualified) continue;
        ++agg.qualifying;
        if (row.status != TrialStatus::error && row.defense_success) ++agg.successes;
        if (row.filter_ran) {
            ++detection_rows;
            agg.poisons_total += row.poisons_total;
            agg.poisons_removed += row.poisons_removed;
            mcc_sum += row.mcc_value;
            clean_sum += row.clean_removed_fraction;
        }
        if (row.status == TrialStatus::ok) {
            ++accuracy_rows;
            acc_sum += row.test_accuracy;
        }
    }
    if (agg.qualifying > 0)
        agg.defense_success_rate =
            static_cast<double>(agg.successes) / static_cast<double>(agg.qualifying);
    if (detection_rows > 0) {
        agg.mean_mcc = mcc_sum / static_cast<double>(detection_rows);
        agg.mean_clean_removed_fraction = clean_sum / static_cast<double>(detection_rows);
    }
    if (accuracy_rows > 0)
        agg.mean_test_accuracy = acc_sum / static_cast<double>(accuracy_rows);
    return agg;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();

    std::vector<TrialRow> rows(static_cast<std::size_t>(cfg.trials));
    const int jobs = std::max(1, std::min(cfg.jobs, cfg.trials));
    auto worker = [&](int first) {
        for (int t = first; t < cfg.trials; t += jobs) {
            try {
                rows[static_cast<std::size_t>(t)] = execute_trial(cfg, t);
            } catch (const std::exception& e) {
                TrialRow row;
                row.trial = t;
                row.seed = mix_seed(cfg.master_seed, static_cast<std::uint64_t>(t));
                row.scenario = to_string(cfg.scenario);
                row.defense = to_string(cfg.defense.kind);
                row.normalized_k = cfg.defense.normalized_k;
                row.class_balance_ratio = cfg.imbalance_ratio;
                row.rebalance = cfg.rebalance;
                row.status = TrialStatus::error;
                row.error_message = e.what();
                rows[static_cast<std::size_t>(t)] = std::move(row);
            }
        }
    };
    if (jobs == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker, j);
        for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].trial = static_cast<int>(i);

    ExperimentReport report;
    report.version = kVersion;
    report.config = cfg;
    report.rows = std::move(rows);
    report.aggregates = compute_aggregates(report.rows);
    for (const TrialRow& row : report.rows)
        if (row.status == TrialStatus::error)
            report.failures.push_back("trial " + std::to_string(row.trial) + ": " +
                                      row.error_message);
    return report;
}

std::vector<ExperimentReport> sweep_normalized_k(const ExperimentConfig& cfg,
                                                 const std::vector<double>& grid) {
    if (grid.empty()) throw ConfigError("normalized-k grid is empty");
    for (double g : grid)
        if (!(g > 0.0)) throw ConfigError("normalized-k grid values must be > 0");
    std::vector<ExperimentReport> reports;
    reports.reserve(grid.size());
    for (double g : grid) {
        ExperimentConfig point = cfg;
        point.defense.kind = DefenseKind::deep_knn;
        point.defense.normalized_k = g;
        point.defense.k.reset();
        reports.push_back(run_experiment(point));
    }
    return reports;
}

std::vector<ExperimentReport> sweep_imbalance(const ExperimentConfig& cfg,
                                              const std::vector<double>& ratios) {
    if (ratios.empty()) throw ConfigError("imbalance ratio grid is empty");
    for (double r : ratios)
        if (!(r > 0.0 && r <= 1.0))
            throw ConfigError("imbalance ratios must be in (0, 1]");
    std::vector<ExperimentReport> reports;
    reports.reserve(ratios.size() * 2);
    for (double ratio : ratios) {
        for (bool rebalance : {false, true}) {
            ExperimentConfig point = cfg;
            point.imbalance_ratio = ratio;
            point.rebalance = rebalance;
            point.defense.kind = DefenseKind::deep_knn;
            point.defense.normalized_k = 2.0;
            point.defense.k.reset();
            reports.push_back(run_experiment(point));
        }
    }
    return reports;
}

namespace {

const char* to_string(TrialStatus s) {
    switch (s) {
        case TrialStatus::ok: return "ok";
        case TrialStatus::excluded: return "excluded";
        case TrialStatus::error: return "error";
    }
    return "?";
}

TrialStatus status_from_string(const std::string& s) {
    if (s == "ok") return TrialStatus::ok;
    if (s == "excluded") return TrialStatus::excluded;
    if (s == "error") return TrialStatus::error;
    throw ConfigError("unknown trial status '" + s + "'");
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["scenario"] = to_string(cfg.scenario);
    j["trials"] = cfg.trials;
    j["master_seed"] = cfg.master_seed;
    j["jobs"] = cfg.jobs;
    j["imbalance_ratio"] = cfg.imbalance_ratio;
    j["rebalance"] = cfg.rebalance;
    j["data"] = {{"classes", cfg.data.classes},
                 {"per_class", cfg.data.per_class},
                 {"test_per_class", cfg.data.test_per_class},
                 {"d_in", cfg.data.d_in},
                 {"hidden", cfg.data.hidden},
                 {"d_feat", cfg.data.d_feat},
                 {"separation", cfg.data.separation},
                 {"target_label", cfg.data.target_label},
                 {"base_label", cfg.data.base_label},
                 {"nonlinearity", to_string(cfg.data.nonlinearity)}};
    j["attack"] = {{"gamma", cfg.attack.gamma},
                   {"beta", cfg.attack.beta},
                   {"step_size", cfg.attack.step_size},
                   {"max_iters", cfg.attack.max_iters},
                   {"epsilon_inf", cfg.attack.epsilon_inf},
                   {"n_poisons", cfg.attack.n_poisons},
                   {"seed", cfg.attack.seed}};
    nlohmann::json defense = {{"kind", to_string(cfg.defense.kind)},
                              {"normalized_k", cfg.defense.normalized_k},
                              {"epsilon", cfg.defense.epsilon},
                              {"nu", cfg.defense.nu},
                              {"gamma_rbf", cfg.defense.gamma_rbf},
                              {"fraction", cfg.defense.fraction},
                              {"seed", cfg.defense.seed}};
    if (cfg.defense.k) defense["k"] = *cfg.defense.k;
    j["defense"] = defense;
    j["victim"] = {{"learning_rate", cfg.victim.learning_rate},
                   {"epochs", cfg.victim.epochs},
                   {"seed", cfg.victim.seed}};
    return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.scenario = scenario_from_string(j.at("scenario").get<std::string>());
    cfg.trials = j.at("trials").get<int>();
    cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    cfg.jobs = j.at("jobs").get<int>();
    cfg.imbalance_ratio = j.at("imbalance_ratio").get<double>();
    cfg.rebalance = j.at("rebalance").get<bool>();
    const auto& d = j.at("data");
    cfg.data.classes = d.at("classes").get<int>();
    cfg.data.per_class = d.at("per_class").get<int>();
    cfg.data.test_per_class = d.at("test_per_class").get<int>();
    cfg.data.d_in = d.at("d_in").get<int>();
    cfg.data.hidden = d.at("hidden").get<int>();
    cfg.data.d_feat = d.at("d_feat").get<int>();
    cfg.data.separation = d.at("separation").get<double>();
    cfg.data.target_label = d.at("target_label").get<std::int32_t>();
    cfg.data.base_label = d.at("base_label").get<std::int32_t>();
    cfg.data.nonlinearity = nonlinearity_from_string(d.at("nonlinearity").get<std::string>());
    const auto& a = j.at("attack");
    cfg.attack.gamma = a.at("gamma").get<double>();
    cfg.attack.beta = a.at("beta").get<double>();
    cfg.attack.step_size = a.at("step_size").get<double>();
    cfg.attack.max_iters = a.at("max_iters").get<int>();
    cfg.attack.epsilon_inf = a.at("epsilon_inf").get<double>();
    cfg.attack.n_poisons = a.at("n_poisons").get<int>();
    cfg.attack.seed = a.at("seed").get<std::uint64_t>();
    const auto& f = j.at("defense");
    cfg.defense.kind = defense_kind_from_string(f.at("kind").get<std::string>());
    cfg.defense.normalized_k = f.at("normalized_k").get<double>();
    if (f.contains("k")) cfg.defense.k = f.at("k").get<int>();
    cfg.defense.epsilon = f.at("epsilon").get<double>();
    cfg.defense.nu = f.at("nu").get<double>();
    cfg.defense.gamma_rbf = f.at("gamma_rbf").get<double>();
    cfg.defense.fraction = f.at("fraction").get<double>();
    cfg.defense.seed = f.at("seed").get<std::uint64_t>();
    const auto& v = j.at("victim");
    cfg.victim.learning_rate = v.at("learning_rate").get<double>();
    cfg.victim.epochs = v.at("epochs").get<int>();
    cfg.victim.seed = v.at("seed").get<std::uint64_t>();
    return cfg;
}

nlohmann::json row_to_json(const TrialRow& row) {
    nlohmann::json j;
    j["trial"] = row.trial;
    j["seed"] = row.seed;
    j["scenario"] = row.scenario;
    j["defense"] = row.defense;
    j["normalized_k"] = row.normalized_k;
    j["class_balance_ratio"] = row.class_balance_ratio;
    j["rebalance"] = row.rebalance;
    j["status"] = to_string(row.status);
    j["error_message"] = row.error_message;
    j["filter_ran"] = row.filter_ran;
    j["qualified"] = row.qualified;
    j["defense_success"] = row.defense_success;
    j["off_class"] = row.off_class;
    j["predicted_label"] = row.predicted_label;
    j["poisons_total"] = row.poisons_total;
    j["poisons_removed"] = row.poisons_removed;
    j["clean_total"] = row.clean_total;
    j["clean_removed"] = row.clean_removed;
    j["clean_removed_fraction"] = row.clean_removed_fraction;
    j["tp"] = row.tp;
    j["fp"] = row.fp;
    j["tn"] = row.tn;
    j["fn"] = row.fn;
    j["mcc"] = std::isfinite(row.mcc_value) ? nlohmann::json(row.mcc_value)
                                            : nlohmann::json(nullptr);
    j["test_accuracy"] = std::isfinite(row.test_accuracy)
                             ? nlohmann::json(row.test_accuracy)
                             : nlohmann::json(nullptr);
    j["n_train"] = row.n_train;
    j["n_kept"] = row.n_kept;
    return j;
}

TrialRow row_from_json(const nlohmann::json& j) {
    TrialRow row;
    row.trial = j.at("trial").get<int>();
    row.seed = j.at("seed").get<std::uint64_t>();
    row.scenario = j.at("scenario").get<std::string>();
    row.defense = j.at("defense").get<std::string>();
    row.normalized_k = j.at("normalized_k").get<double>();
    row.class_balance_ratio = j.at("class_balance_ratio").get<double>();
    row.rebalance = j.at("rebalance").get<bool>();
    row.status = status_from_string(j.at("status").get<std::string>());
    row.error_message = j.at("error_message").get<std::string>();
    row.filter_ran = j.at("filter_ran").get<bool>();
    row.qualified = j.at("qualified").get<bool>();
    row.defense_success = j.at("defense_success").get<bool>();
    row.off_class = j.at("off_class").get<bool>();
    row.predicted_label = j.at("predicted_label").get<int>();
    row.poisons_total = j.at("poisons_total").get<std::size_t>();
    row.poisons_removed = j.at("poisons_removed").get<std::size_t>();
    row.clean_total = j.at("clean_total").get<std::size_t>();
    row.clean_removed = j.at("clean_removed").get<std::size_t>();
    row.clean_removed_fraction = j.at("clean_removed_fraction").get<double>();
    row.tp = j.at("tp").get<std::size_t>();
    row.fp = j.at("fp").get<std::size_t>();
    row.tn = j.at("tn").get<std::size_t>();
    row.fn = j.at("fn").get<std::size_t>();
    row.mcc_value = j.at("mcc").is_null() ? std::nan("") : j.at("mcc").get<double>();
    row.test_accuracy = j.at("test_accuracy").is_null()
                            ? std::nan("")
                            : j.at("test_accuracy").get<double>();
    row.n_train = j.at("n_train").get<std::size_t>();
    row.n_kept = j.at("n_kept").get<std::size_t>();
    return row;
}

nlohmann::json aggregates_to_json(const Aggregates& a) {
    return {{"trials_total", a.trials_total},
            {"qualifying", a.qualifying},
            {"successes", a.successes},
            {"excluded", a.excluded},
            {"errors", a.errors},
            {"defense_success_rate", a.defense_success_rate},
            {"poisons_total", a.poisons_total},
            {"poisons_removed", a.poisons_removed},
            {"mean_mcc", a.mean_mcc},
            {"mean_clean_removed_fraction", a.mean_clean_removed_fraction},
            {"mean_test_accuracy", a.mean_test_accuracy}};
}

Aggregates aggregates_from_json(const nlohmann::json& j) {
    Aggregates a;
    a.trials_total = j.at("trials_total").get<std::size_t>();
    a.qualifying = j.at("qualifying").get<std::size_t>();
    a.successes = j.at("successes").get<std::size_t>();
    a.excluded = j.at("excluded").get<std::size_t>();
    a.errors = j.at("errors").get<std::size_t>();
    a.defense_success_rate = j.at("defense_success_rate").get<double>();
    a.poisons_total = j.at("poisons_total").get<std::size_t>();
    a.poisons_removed = j.at("poisons_removed").get<std::size_t>();
    a.mean_mcc = j.at("mean_mcc").get<double>();
    a.mean_clean_removed_fraction = j.at("mean_clean_removed_fraction").get<double>();
    a.mean_test_accuracy = j.at("mean_test_accuracy").get<double>();
    return a;
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
    nlohmann::json j;
    j["version"] = report.version;
    j["config"] = config_to_json(report.config);
    nlohmann::json rows = nlohmann::json::array();
    for (const TrialRow& row : report.rows) rows.push_back(row_to_json(row));
    j["rows"] = rows;
    j["aggregates"] = aggregates_to_json(report.aggregates);
    j["failures"] = report.failures;
    return j.dump(2);
}

ExperimentReport report_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    ExperimentReport report;
    report.version = j.at("version").get<std::string>();
    report.config = config_from_json(j.at("config"));
    for (const auto& row : j.at("rows")) report.rows.push_back(row_from_json(row));
    report.aggregates = aggregates_from_json(j.at("aggregates"));
    report.failures = j.at("failures").get<std::vector<std::string>>();

    const Aggregates check = compute_aggregates(report.rows);
    const nlohmann::json stored = aggregates_to_json(report.aggregates);
    const nlohmann::json recomputed = aggregates_to_json(check);
    if (stored != recomputed)
        throw ConfigError("report aggregates do not match their rows");
    return report;
}

std::string rows_csv_header() {
    return "trial,seed,scenario,defense,normalized_k,class_balance_ratio,rebalance,"
           "status,qualified,defense_success,off_class,predicted_label,"
           "poisons_total,poisons_removed,clean_total,clean_removed,"
           "clean_removed_fraction,tp,fp,tn,fn,mcc,test_accuracy,n_train,n_kept";
}

std::string rows_to_csv(const std::vector<TrialRow>& rows) {
    std::ostringstream out;
    out << rows_csv_header() << '\n';
    for (const TrialRow& row : rows) {
        out << row.trial << ',' << row.seed << ',' << row.scenario << ','
            << row.defense << ',' << fmt(row.normalized_k) << ','
            << fmt(row.class_balance_ratio) << ',' << (row.rebalance ? 1 : 0) << ','
            << to_string(row.status) << ',' << (row.qualified ? 1 : 0) << ','
            << (row.defense_success ? 1 : 0) << ',' << (row.off_class ? 1 : 0) << ','
            << row.predicted_label << ',' << row.poisons_total << ','
            << row.poisons_removed << ',' << row.clean_total << ','
            << row.clean_removed << ',' << fmt(row.clean_removed_fraction) << ','
            << row.tp << ',' << row.fp << ',' << row.tn << ',' << row.fn << ','
            << fmt(row.mcc_value) << ',' << fmt(row.test_accuracy) << ','
            << row.n_train << ',' << row.n_kept << '\n';
    }
    return std::move(out).str();
}

std::string sweep_summary_csv(const std::vector<ExperimentReport>& reports) {
    std::ostringstream out;
    out << "scenario,defense,normalized_k,imbalance_ratio,rebalance,trials,qualifying,"
           "successes,errors,defense_success_rate,poisons_total,poisons_removed,"
           "mean_mcc,mean_clean_removed_fraction,mean_test_accuracy\n";
    for (const ExperimentReport& report : reports) {
        const Aggregates& a = report.aggregates;
        out << to_string(report.config.scenario) << ','
            << to_string(report.config.defense.kind) << ','
            << fmt(report.config.defense.normalized_k) << ','
            << fmt(report.config.imbalance_ratio) << ','
            << (report.config.rebalance ? 1 : 0) << ',' << a.trials_total << ','
            << a.qualifying << ',' << a.successes << ',' << a.errors << ','
            << fmt(a.defense_success_rate) << ',' << a.poisons_total << ','
            << a.poisons_removed << ',' << fmt(a.mean_mcc) << ','
            << fmt(a.mean_clean_removed_fraction) << ',' << fmt(a.mean_test_accuracy)
            << '\n';
    }
    return std::move(out).str();
}

}  // namespace poisonlab
