#pragma once

// Experiment harness: JSON configs (versioned, unknown keys rejected), the
// experiment runner with paired-seed variants, cross-variant comparison, and
// the paper-analog presets.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcpo/calibration.hpp"
#include "dcpo/certificates.hpp"
#include "dcpo/policy.hpp"
#include "dcpo/task.hpp"
#include "dcpo/trainer.hpp"
#include "dcpo/util.hpp"

namespace dcpo {

inline constexpr int kSchemaVersion = 1;

struct SuiteSpec {
    std::uint64_t seed = 1;
    int num_tasks = 24;
    int n_trajectories = 20;
    std::vector<DifficultyEntry> difficulty = {{0.1, 0.5}, {0.3, 0.25}, {0.6, 0.25}};
    PhiMode phi_mode = PhiMode::correlated;
    bool allow_degenerate = false;
    std::optional<std::string> file;  // load instead of generating

    TaskSuite build() const {
        if (file) return load_suite(*file);
        SuiteOptions options;
        options.phi_mode = phi_mode;
        options.allow_degenerate = allow_degenerate;
        return generate_suite(seed, num_tasks, n_trajectories, difficulty, options);
    }
};

struct InitSpec {
    int vocab_size = 21;
    ConfidenceInit conf;

    PolicyParams build(const TaskSuite& suite) const {
        return make_initial_params(suite, ConfidenceVocab::even_grid(vocab_size), conf);
    }
};

struct EvalSpec {
    int samples_per_task = 512;
    std::uint64_t seed = 99;
};

struct VariantSpec {
    std::string name;
    Algorithm algorithm = Algorithm::grpo;
    double lambda = 0.5;
};

struct ExperimentSpec {
    std::string name;
    SuiteSpec suite;
    InitSpec init;
    TrainerConfig trainer_base;
    std::vector<VariantSpec> variants;
    int repeats = 1;
    std::uint64_t base_seed = 100;
    EvalSpec eval;
};

// --- JSON config parsing (strict: unknown keys are configuration errors) ---

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) throw ConfigError("unknown key \"" + key + "\" in " + where);
}

}  // namespace detail

inline SuiteSpec suite_spec_from_json(const nlohmann::json& obj) {
    detail::reject_unknown_keys(obj,
                                {"seed", "num_tasks", "n_trajectories", "difficulty", "phi_mode",
                                 "allow_degenerate", "file"},
                                "suite");
    SuiteSpec spec;
    if (obj.contains("file")) {
        spec.file = obj.at("file").get<std::string>();
        return spec;
    }
    if (obj.contains("seed")) spec.seed = obj.at("seed").get<std::uint64_t>();
    if (obj.contains("num_tasks")) spec.num_tasks = obj.at("num_tasks").get<int>();
    if (obj.contains("n_trajectories")) spec.n_trajectories = obj.at("n_trajectories").get<int>();
    if (obj.contains("difficulty")) {
        spec.difficulty.clear();
        for (const auto& entry : obj.at("difficulty")) {
            detail::reject_unknown_keys(entry, {"fraction", "weight"}, "difficulty entry");
            spec.difficulty.push_back(
                {entry.at("fraction").get<double>(), entry.at("weight").get<double>()});
        }
    }
    if (obj.contains("phi_mode")) {
        const auto mode = obj.at("phi_mode").get<std::string>();
        if (mode == "correlated") spec.phi_mode = PhiMode::correlated;
        else if (mode == "independent") spec.phi_mode = PhiMode::independent;
        else throw ConfigError("unknown phi_mode: " + mode);
    }
    if (obj.contains("allow_degenerate"))
        spec.allow_degenerate = obj.at("allow_degenerate").get<bool>();
    return spec;
}

inline InitSpec init_spec_from_json(const nlohmann::json& obj) {
    detail::reject_unknown_keys(obj, {"vocab_size", "anchor_bias", "anchor_gain", "concentration"},
                                "init");
    InitSpec spec;
    if (obj.contains("vocab_size")) spec.vocab_size = obj.at("vocab_size").get<int>();
    if (obj.contains("anchor_bias")) spec.conf.anchor_bias = obj.at("anchor_bias").get<double>();
    if (obj.contains("anchor_gain")) spec.conf.anchor_gain = obj.at("anchor_gain").get<double>();
    if (obj.contains("concentration"))
        spec.conf.concentration = obj.at("concentration").get<double>();
    return spec;
}

inline TrainerConfig trainer_config_from_json(const nlohmann::json& obj) {
    detail::reject_unknown_keys(obj,
                                {"algorithm", "lambda", "group_size", "learning_rate", "steps",
                                 "clip_low", "clip_high", "corrupt_prob", "seed", "log_every",
                                 "inner_epochs", "freeze_reasoning"},
                                "trainer");
    TrainerConfig config;
    if (obj.contains("algorithm"))
        config.algorithm = algorithm_from_string(obj.at("algorithm").get<std::string>());
    if (obj.contains("lambda")) config.lambda = obj.at("lambda").get<double>();
    if (obj.contains("group_size")) config.group_size = obj.at("group_size").get<int>();
    if (obj.contains("learning_rate")) config.learning_rate = obj.at("learning_rate").get<double>();
    if (obj.contains("steps")) config.steps = obj.at("steps").get<int>();
    if (obj.contains("clip_low")) config.clip_low = obj.at("clip_low").get<double>();
    if (obj.contains("clip_high")) config.clip_high = obj.at("clip_high").get<double>();
    if (obj.contains("corrupt_prob")) config.corrupt_prob = obj.at("corrupt_prob").get<double>();
    if (obj.contains("seed")) config.seed = obj.at("seed").get<std::uint64_t>();
    if (obj.contains("log_every")) config.log_every = obj.at("log_every").get<int>();
    if (obj.contains("inner_epochs")) config.inner_epochs = obj.at("inner_epochs").get<int>();
    if (obj.contains("freeze_reasoning"))
        config.freeze_reasoning = obj.at("freeze_reasoning").get<bool>();
    config.validate();
    return config;
}

struct TrainFileConfig {
    SuiteSpec suite;
    InitSpec init;
    TrainerConfig trainer;
    EvalSpec eval;
};

inline TrainFileConfig train_config_from_json(const nlohmann::json& doc) {
    detail::reject_unknown_keys(doc, {"schema_version", "suite", "init", "trainer", "eval"},
                                "config");
    if (!doc.contains("schema_version")) throw ConfigError("config is missing schema_version");
    if (doc.at("schema_version").get<int>() != kSchemaVersion)
        throw ConfigError("unsupported schema_version (expected " +
                          std::to_string(kSchemaVersion) + ")");
    TrainFileConfig config;
    if (doc.contains("suite")) config.suite = suite_spec_from_json(doc.at("suite"));
    if (doc.contains("init")) config.init = init_spec_from_json(doc.at("init"));
    if (doc.contains("trainer")) config.trainer = trainer_config_from_json(doc.at("trainer"));
    if (doc.contains("eval")) {
        detail::reject_unknown_keys(doc.at("eval"), {"samples_per_task", "seed"}, "eval");
        if (doc.at("eval").contains("samples_per_task"))
            config.eval.samples_per_task = doc.at("eval").at("samples_per_task").get<int>();
        if (doc.at("eval").contains("seed"))
            config.eval.seed = doc.at("eval").at("seed").get<std::uint64_t>();
    }
    return config;
}

// --- Evaluation documents ---

inline nlohmann::json metrics_to_json(const MetricsSummary& metrics) {
    nlohmann::json doc = {{"n", metrics.n},
                          {"ece", metrics.ece},
                          {"pce", metrics.pce},
                          {"brier", metrics.brier}};
    if (metrics.auroc) doc["auroc"] = *metrics.auroc;
    else doc["auroc"] = nullptr;
    return doc;
}

// Both confidence channels plus exact expectations for one policy snapshot.
inline nlohmann::json eval_to_json(const EvalReport& report) {
    return {{"verbal", metrics_to_json(compute_metrics(report.verbal_records))},
            {"logits", metrics_to_json(compute_metrics(report.logits_records))},
            {"exact",
             {{"accuracy", report.exact_accuracy_mean},
              {"verbal_conf", report.exact_verbal_conf_mean},
              {"logits_conf", report.exact_logits_conf_mean},
              {"entropy", report.mean_entropy}}}};
}

// --- Single training run (backs the `train` subcommand and experiment cells) ---

struct RunArtifacts {
    PolicyParams final_params;
    TrainLog log;
    nlohmann::json init_metrics;
    nlohmann::json final_metrics;
};

inline RunArtifacts run_training_cell(const TaskSuite& suite, const PolicyParams& initial,
                                      const TrainerConfig& trainer, const EvalSpec& eval) {
    RunArtifacts artifacts;
    const auto init_eval = evaluate_policy(initial, suite, eval.samples_per_task, eval.seed);
    artifacts.init_metrics = eval_to_json(init_eval);
    auto [final_params, log] = train(trainer, suite, initial);
    const auto final_eval = evaluate_policy(final_params, suite, eval.samples_per_task, eval.seed);
    artifacts.final_metrics = eval_to_json(final_eval);
    artifacts.final_params = std::move(final_params);
    artifacts.log = std::move(log);
    return artifacts;
}

inline void write_run_artifacts(const std::filesystem::path& dir, const TaskSuite& suite,
                                const RunArtifacts& artifacts, int eval_samples,
                                std::uint64_t eval_seed) {
    ensure_dir(dir);
    write_text_file(dir / "train_log.csv", artifacts.log.to_csv());
    save_params(artifacts.final_params, dir / "checkpoint.json");
    write_text_file(dir / "init_metrics.json", artifacts.init_metrics.dump(2) + "\n");
    write_text_file(dir / "final_metrics.json", artifacts.final_metrics.dump(2) + "\n");
    const auto final_eval =
        evaluate_policy(artifacts.final_params, suite, eval_samples, eval_seed);
    write_text_file(dir / "reliability_verbal.csv",
                    reliability_to_csv(bin_records(final_eval.verbal_records, 10)));
    write_text_file(dir / "reliability_logits.csv",
                    reliability_to_csv(bin_records(final_eval.logits_records, 10)));
}

// --- Experiment runner ---

namespace detail {

inline double json_number(const nlohmann::json& doc, const std::string& pointer) {
    const auto& value = doc.at(nlohmann::json::json_pointer(pointer));
    if (value.is_null()) throw UsageError("metric at " + pointer + " is missing");
    return value.get<double>();
}

inline nlohmann::json mean_std(const std::vector<double>& xs) {
    const double m = mean_of(xs);
    return {{"mean", m}, {"std", std::sqrt(population_variance(xs))}};
}

}  // namespace detail

// Per-variant deltas versus the grpo baseline with paired-seed differences.
// Expects every variant to carry the same seed list, index by index.
inline nlohmann::json compare_variants(const nlohmann::json& summary) {
    const auto& variants = summary.at("variants");
    const nlohmann::json* baseline = nullptr;
    for (const auto& variant : variants)
        if (variant.at("name") == "grpo") baseline = &variant;
    if (baseline == nullptr) throw UsageError("compare_variants needs a grpo baseline variant");

    auto seeds_of = [](const nlohmann::json& variant) {
        std::vector<std::uint64_t> seeds;
        for (const auto& run : variant.at("runs")) seeds.push_back(run.at("seed").get<std::uint64_t>());
        return seeds;
    };
    const auto base_seeds = seeds_of(*baseline);

    nlohmann::json rows = nlohmann::json::array();
    for (const auto& variant : variants) {
        if (variant.at("name") == "grpo") continue;
        if (seeds_of(variant) != base_seeds)
            throw UsageError("variant " + variant.at("name").get<std::string>() +
                             " is not seed-paired with the grpo baseline");
        std::vector<double> acc_delta, verbal_pce_delta, verbal_ece_delta;
        const auto& runs = variant.at("runs");
        for (std::size_t k = 0; k < runs.size(); ++k) {
            const auto& mine = runs[k].at("final");
            const auto& theirs = baseline->at("runs")[k].at("final");
            acc_delta.push_back(detail::json_number(mine, "/exact/accuracy") -
                                detail::json_number(theirs, "/exact/accuracy"));
            verbal_pce_delta.push_back(detail::json_number(mine, "/verbal/pce") -
                                       detail::json_number(theirs, "/verbal/pce"));
            verbal_ece_delta.push_back(detail::json_number(mine, "/verbal/ece") -
                                       detail::json_number(theirs, "/verbal/ece"));
        }
        rows.push_back({{"variant", variant.at("name")},
                        {"accuracy_delta", detail::mean_std(acc_delta)},
                        {"verbal_pce_delta", detail::mean_std(verbal_pce_delta)},
                        {"verbal_ece_delta", detail::mean_std(verbal_ece_delta)},
                        {"accuracy_delta_per_seed", acc_delta},
                        {"verbal_pce_delta_per_seed", verbal_pce_delta}});
    }
    return {{"baseline", "grpo"}, {"rows", rows}};
}

// Runs all variant x seed cells on paired suites/seeds, writes per-run logs,
// metric JSONs and reliability CSVs, and a cross-variant summary document.
inline nlohmann::json run_experiment(const ExperimentSpec& spec,
                                     const std::filesystem::path& out_dir) {
    if (spec.variants.empty()) throw ConfigError("experiment needs at least one variant");
    if (spec.repeats < 1) throw ConfigError("repeats must be >= 1");
    ensure_dir(out_dir);

    nlohmann::json variants_doc = nlohmann::json::array();
    nlohmann::json series_doc = nlohmann::json::object();

    for (const auto& variant : spec.variants) {
        nlohmann::json runs = nlohmann::json::array();
        std::vector<double> final_acc, final_verbal_pce, final_logits_pce, final_verbal_ece;
        std::vector<std::vector<double>> series_acc, series_conf, series_pce, series_grad;
        std::vector<int> series_steps;

        for (int k = 0; k < spec.repeats; ++k) {
            SuiteSpec suite_spec = spec.suite;
            suite_spec.seed = spec.suite.seed + 1000ULL * static_cast<std::uint64_t>(k);
            const auto suite = suite_spec.build();
            const auto initial = spec.init.build(suite);

            TrainerConfig trainer = spec.trainer_base;
            trainer.algorithm = variant.algorithm;
            trainer.lambda = variant.lambda;
            trainer.seed = spec.base_seed + static_cast<std::uint64_t>(k);

            const auto artifacts = run_training_cell(suite, initial, trainer, spec.eval);
            const auto run_dir = out_dir / variant.name / ("seed_" + std::to_string(k));
            write_run_artifacts(run_dir, suite, artifacts, spec.eval.samples_per_task,
                                spec.eval.seed);

            runs.push_back({{"seed", trainer.seed},
                            {"suite_seed", suite_spec.seed},
                            {"init", artifacts.init_metrics},
                            {"final", artifacts.final_metrics}});
            final_acc.push_back(artifacts.final_metrics.at("exact").at("accuracy").get<double>());
            final_verbal_pce.push_back(artifacts.final_metrics.at("verbal").at("pce").get<double>());
            final_verbal_ece.push_back(artifacts.final_metrics.at("verbal").at("ece").get<double>());
            final_logits_pce.push_back(artifacts.final_metrics.at("logits").at("pce").get<double>());

            if (series_steps.empty())
                for (const auto& row : artifacts.log.rows) series_steps.push_back(row.step);
            auto column = [&artifacts](auto getter) {
                std::vector<double> xs;
                for (const auto& row : artifacts.log.rows) xs.push_back(getter(row));
                return xs;
            };
            series_acc.push_back(column([](const TrainLogRow& r) { return r.acc; }));
            series_conf.push_back(column([](const TrainLogRow& r) { return r.conf_mean; }));
            series_pce.push_back(column([](const TrainLogRow& r) { return r.pce; }));
            series_grad.push_back(column([](const TrainLogRow& r) { return r.grad_norm; }));
        }

        auto seed_mean = [](const std::vector<std::vector<double>>& series) {
            std::vector<double> out;
            if (series.empty() || series[0].empty()) return out;
            out.assign(series[0].size(), 0.0);
            for (const auto& run : series)
                for (std::size_t i = 0; i < run.size(); ++i) out[i] += run[i];
            for (double& x : out) x /= static_cast<double>(series.size());
            return out;
        };
        series_doc[variant.name] = {{"step", series_steps},
                                    {"acc", seed_mean(series_acc)},
                                    {"conf_mean", seed_mean(series_conf)},
                                    {"pce", seed_mean(series_pce)},
                                    {"grad_norm", seed_mean(series_grad)}};

        variants_doc.push_back({{"name", variant.name},
                                {"algorithm", to_string(variant.algorithm)},
                                {"lambda", variant.lambda},
                                {"runs", runs},
                                {"aggregate",
                                 {{"final_exact_accuracy", detail::mean_std(final_acc)},
                                  {"final_verbal_pce", detail::mean_std(final_verbal_pce)},
                                  {"final_verbal_ece", detail::mean_std(final_verbal_ece)},
                                  {"final_logits_pce", detail::mean_std(final_logits_pce)}}}});
    }

    nlohmann::json summary = {{"schema_version", kSchemaVersion},
                              {"experiment", spec.name},
                              {"repeats", spec.repeats},
                              {"variants", variants_doc},
                              {"series", series_doc}};
    bool has_grpo = false;
    for (const auto& variant : spec.variants) has_grpo = has_grpo || variant.name == "grpo";
    if (has_grpo && spec.variants.size() > 1) summary["comparisons"] = compare_variants(summary);
    write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");
    return summary;
}

// --- Presets (one command per paper-analog experiment) ---

inline ExperimentSpec make_preset(const std::string& name) {
    ExperimentSpec spec;
    spec.name = name;
    spec.suite = SuiteSpec{};  // 24 tasks, N=20, mixed difficulty
    spec.init = InitSpec{};
    spec.trainer_base.group_size = 8;
    spec.trainer_base.learning_rate = 0.08;
    spec.trainer_base.steps = 160;
    spec.trainer_base.log_every = 5;
    spec.repeats = 10;
    spec.base_seed = 100;

    if (name == "fig3-analog") {
        // Reliability diagram of the initial (untrained, over-confident) policy.
        spec.trainer_base.steps = 0;
        spec.repeats = 1;
        spec.variants = {{"grpo", Algorithm::grpo, 0.5}};
    } else if (name == "fig4-analog") {
        // Confidence / PCE drift under GRPO versus DCPO.
        spec.variants = {{"grpo", Algorithm::grpo, 0.5}, {"dcpo", Algorithm::dcpo, 0.5}};
    } else if (name == "fig5-analog") {
        // Accuracy-calibration tradeoff across grpo / coupled / dcpo.
        spec.variants = {{"grpo", Algorithm::grpo, 0.5},
                         {"coupled", Algorithm::coupled, 0.5},
                         {"dcpo", Algorithm::dcpo, 0.5}};
    } else if (name == "fig6-analog") {
        // Gradient-norm traces; instance-level supervision is the noisy one.
        spec.variants = {{"grpo", Algorithm::grpo, 0.5},
                         {"coupled", Algorithm::coupled, 0.5},
                         {"dcpo", Algorithm::dcpo, 0.5},
                         {"dcpo-i", Algorithm::dcpo, 0.0}};
    } else {
        throw ConfigError("unknown preset: " + name);
    }
    return spec;
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"fig3-analog", "fig4-analog", "fig5-analog",
                                                   "fig6-analog", "theory-cert"};
    return names;
}

}  // namespace dcpo
