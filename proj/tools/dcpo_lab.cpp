// dcpo-lab: train tabular RLVR policies (GRPO / DCPO / coupled baseline),
// run the theory certificate suite, compute calibration metrics, and drive
// the paper-analog experiment presets.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dcpo/calibration.hpp"
#include "dcpo/certificates.hpp"
#include "dcpo/harness.hpp"
#include "dcpo/task.hpp"
#include "dcpo/trainer.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;

std::optional<std::uint64_t> env_seed_override() {
    const char* raw = std::getenv("DCPO_LAB_SEED");
    if (raw == nullptr || *raw == '\0') return std::nullopt;
    try {
        return std::stoull(raw);
    } catch (const std::exception&) {
        throw dcpo::ConfigError("DCPO_LAB_SEED is not an unsigned integer");
    }
}

int cmd_train(const std::string& config_path, const std::string& out_dir) {
    auto config = dcpo::train_config_from_json(
        nlohmann::json::parse(dcpo::read_text_file(config_path)));
    if (const auto seed = env_seed_override()) config.trainer.seed = *seed;
    const auto suite = config.suite.build();
    const auto initial = config.init.build(suite);
    const auto artifacts =
        dcpo::run_training_cell(suite, initial, config.trainer, config.eval);
    dcpo::ensure_dir(out_dir);
    dcpo::save_suite(suite, std::filesystem::path(out_dir) / "suite.json");
    dcpo::write_run_artifacts(out_dir, suite, artifacts, config.eval.samples_per_task,
                              config.eval.seed);
    std::cout << "wrote " << out_dir << "/train_log.csv, checkpoint.json, final_metrics.json\n";
    return kExitOk;
}

int cmd_theory(const std::string& out_dir, std::uint64_t seed) {
    if (const auto env = env_seed_override()) seed = *env;
    const auto checks = dcpo::run_all_certificates(seed);
    bool all_pass = true;
    for (const auto& check : checks) {
        all_pass = all_pass && check.pass;
        std::cout << (check.pass ? "[PASS] " : "[FAIL] ") << check.name
                  << " observed=" << dcpo::format_double(check.observed)
                  << " expected=" << dcpo::format_double(check.expected)
                  << " tolerance=" << dcpo::format_double(check.tolerance) << "\n";
    }
    if (!out_dir.empty()) {
        dcpo::ensure_dir(out_dir);
        dcpo::write_text_file(std::filesystem::path(out_dir) / "theory_report.json",
                              dcpo::certificates_to_json(checks).dump(2) + "\n");
    }
    return all_pass ? kExitOk : kExitCheckFailure;
}

int cmd_metrics(const std::string& in_path, const std::string& out_path) {
    const auto records = dcpo::records_from_csv(dcpo::read_text_file(in_path));
    if (records.empty()) throw dcpo::UsageError("no records in " + in_path);
    const auto doc = dcpo::metrics_to_json(dcpo::compute_metrics(records));
    if (out_path.empty()) std::cout << doc.dump(2) << "\n";
    else dcpo::write_text_file(out_path, doc.dump(2) + "\n");
    return kExitOk;
}

int cmd_reliability(const std::string& in_path, int bins, const std::string& out_path) {
    const auto records = dcpo::records_from_csv(dcpo::read_text_file(in_path));
    if (records.empty()) throw dcpo::UsageError("no records in " + in_path);
    const auto csv = dcpo::reliability_to_csv(dcpo::bin_records(records, bins));
    if (out_path.empty()) std::cout << csv;
    else dcpo::write_text_file(out_path, csv);
    return kExitOk;
}

int cmd_experiment(const std::string& preset, const std::string& out_dir) {
    if (preset == "theory-cert") return cmd_theory(out_dir, 20260810ULL);
    auto spec = dcpo::make_preset(preset);
    if (const auto seed = env_seed_override()) spec.base_seed = *seed;
    const auto summary = dcpo::run_experiment(spec, out_dir);
    std::cout << "wrote " << out_dir << "/summary.json (" << summary.at("variants").size()
              << " variants x " << spec.repeats << " seeds)\n";
    return kExitOk;
}

int cmd_suite(const std::string& in_path, const std::string& out_path, std::uint64_t seed,
              int num_tasks, int n_trajectories, const std::string& difficulty) {
    dcpo::TaskSuite suite;
    if (!in_path.empty()) {
        suite = dcpo::load_suite(in_path);
    } else {
        if (const auto env = env_seed_override()) seed = *env;
        std::vector<dcpo::DifficultyEntry> entries;
        std::stringstream ss(difficulty);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto colon = item.find(':');
            if (colon == std::string::npos)
                throw dcpo::ConfigError("difficulty entries must look like fraction:weight");
            const auto fraction = dcpo::parse_double(std::string_view(item).substr(0, colon));
            const auto weight = dcpo::parse_double(std::string_view(item).substr(colon + 1));
            if (!fraction || !weight) throw dcpo::ConfigError("bad difficulty entry: " + item);
            entries.push_back({*fraction, *weight});
        }
        suite = dcpo::generate_suite(seed, num_tasks, n_trajectories, entries);
    }
    const auto doc = dcpo::suite_to_json(suite).dump(2) + "\n";
    if (out_path.empty()) std::cout << doc;
    else dcpo::write_text_file(out_path, doc);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dcpo-lab: a desk-scale RLVR calibration laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir, in_path, out_path, preset, difficulty = "0.3:1.0";
    std::uint64_t seed = 1;
    int bins = 10, num_tasks = 8, n_trajectories = 10;

    auto* train = app.add_subcommand("train", "train a policy from a JSON config");
    train->add_option("--config", config_path, "JSON config file")->required();
    train->add_option("--out", out_dir, "output directory")->required();

    auto* theory = app.add_subcommand("theory", "run the full theory certificate suite");
    theory->add_option("--out", out_dir, "output directory for theory_report.json");
    theory->add_option("--seed", seed, "base seed for the certificates");

    auto* metrics = app.add_subcommand("metrics", "calibration metrics from a records CSV");
    metrics->add_option("--in", in_path, "CSV with confidence,correct rows")->required();
    metrics->add_option("--out", out_path, "write JSON here instead of stdout");

    auto* reliability = app.add_subcommand("reliability", "reliability bins from a records CSV");
    reliability->add_option("--in", in_path, "CSV with confidence,correct rows")->required();
    reliability->add_option("--bins", bins, "number of equal-width bins");
    reliability->add_option("--out", out_path, "write CSV here instead of stdout");

    auto* experiment = app.add_subcommand("experiment", "run a paper-analog preset");
    experiment->add_option("--preset", preset, "one of: fig3-analog, fig4-analog, fig5-analog, fig6-analog, theory-cert")
        ->required();
    experiment->add_option("--out", out_dir, "output directory")->required();

    auto* suite = app.add_subcommand("suite", "generate or round-trip a task suite JSON");
    suite->add_option("--in", in_path, "reload an existing suite JSON");
    suite->add_option("--out", out_path, "write the suite here instead of stdout");
    suite->add_option("--seed", seed, "generation seed");
    suite->add_option("--num-tasks", num_tasks, "number of tasks");
    suite->add_option("--n", n_trajectories, "trajectories per task");
    suite->add_option("--difficulty", difficulty, "comma list of fraction:weight entries");

    try {
        app.parse(argc, argv);
        if (train->parsed()) return cmd_train(config_path, out_dir);
        if (theory->parsed()) return cmd_theory(out_dir, seed);
        if (metrics->parsed()) return cmd_metrics(in_path, out_path);
        if (reliability->parsed()) return cmd_reliability(in_path, bins, out_path);
        if (experiment->parsed()) return cmd_experiment(preset, out_dir);
        if (suite->parsed())
            return cmd_suite(in_path, out_path, seed, num_tasks, n_trajectories, difficulty);
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const dcpo::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const dcpo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckFailure;
    }
}
