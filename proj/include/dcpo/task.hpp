#pragma once

// Synthetic verifiable tasks with enumerable trajectory spaces, plus the
// block-wise "<conf>" textual output format and its parser.

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcpo/util.hpp"

namespace dcpo {

inline constexpr const char* kConfDelimiter = "<conf>";

// One prompt with an enumerated trajectory space. correct_set holds the indices
// with reward 1; phi is a per-trajectory confidence feature in [0,1].
struct TaskInstance {
    int task_id = 0;
    int num_trajectories = 0;
    std::vector<int> correct_set;  // sorted, unique
    std::vector<double> phi;
    std::vector<std::string> answer_strings;

    bool is_correct(int trajectory) const {
        return std::binary_search(correct_set.begin(), correct_set.end(), trajectory);
    }

    void validate() const {
        if (num_trajectories < 2) throw UsageError("task needs at least 2 trajectories");
        if (correct_set.empty() || static_cast<int>(correct_set.size()) > num_trajectories)
            throw UsageError("correct_set size must be in [1, N]");
        if (!std::is_sorted(correct_set.begin(), correct_set.end()))
            throw UsageError("correct_set must be sorted");
        for (int y : correct_set)
            if (y < 0 || y >= num_trajectories) throw UsageError("correct_set index out of range");
        if (std::adjacent_find(correct_set.begin(), correct_set.end()) != correct_set.end())
            throw UsageError("correct_set has duplicates");
        if (static_cast<int>(phi.size()) != num_trajectories)
            throw UsageError("phi length must equal N");
        for (double p : phi)
            if (!(p >= 0.0 && p <= 1.0)) throw UsageError("phi values must lie in [0,1]");
        if (static_cast<int>(answer_strings.size()) != num_trajectories)
            throw UsageError("answer_strings length must equal N");
        std::set<std::string> uniq(answer_strings.begin(), answer_strings.end());
        if (uniq.size() != answer_strings.size())
            throw UsageError("answer_strings must be pairwise distinct");
    }
};

struct DifficultyEntry {
    double fraction = 0.0;  // target |Y+|/N, in (0,1]
    double weight = 0.0;
};

struct TaskSuite {
    std::vector<TaskInstance> tasks;
    std::uint64_t seed = 0;
    std::vector<DifficultyEntry> difficulty_spec;
};

enum class PhiMode {
    correlated,   // phi = 1 on correct trajectories, uniform [0, 0.5] otherwise
    independent,  // phi uniform [0, 1] everywhere (negative-test mode)
};

struct SuiteOptions {
    PhiMode phi_mode = PhiMode::correlated;
    bool allow_degenerate = false;  // permit |Y+| = 1 or |Y+| = N
};

// 1 iff the trajectory is in the task's correct set.
inline int correctness(const TaskInstance& task, int trajectory) {
    if (trajectory < 0 || trajectory >= task.num_trajectories)
        throw UsageError("trajectory index out of range");
    return task.is_correct(trajectory) ? 1 : 0;
}

inline TaskSuite generate_suite(std::uint64_t seed, int num_tasks, int n_trajectories,
                                const std::vector<DifficultyEntry>& difficulty_spec,
                                const SuiteOptions& options = {}) {
    if (num_tasks < 1) throw ConfigError("num_tasks must be >= 1");
    if (n_trajectories < 2) throw ConfigError("n_trajectories must be >= 2");
    if (difficulty_spec.empty()) throw ConfigError("difficulty_spec must be nonempty");
    double weight_sum = 0.0;
    for (const auto& entry : difficulty_spec) {
        if (!(entry.fraction > 0.0 && entry.fraction <= 1.0))
            throw ConfigError("difficulty fraction must lie in (0,1]");
        if (entry.weight < 0.0) throw ConfigError("difficulty weight must be >= 0");
        weight_sum += entry.weight;
    }
    if (std::abs(weight_sum - 1.0) > 1e-9) throw ConfigError("difficulty weights must sum to 1");

    // Resolve target sizes up front so bad fractions fail before any sampling.
    std::vector<int> target_sizes;
    target_sizes.reserve(difficulty_spec.size());
    for (const auto& entry : difficulty_spec) {
        const int size = static_cast<int>(std::lround(entry.fraction * n_trajectories));
        if (size < 1 || size > n_trajectories)
            throw ConfigError("difficulty fraction rounds to an unachievable correct-set size");
        if (!options.allow_degenerate && (size == n_trajectories || size == 1))
            throw ConfigError("degenerate correct-set size (1 or N) requires allow_degenerate");
        target_sizes.push_back(size);
    }

    Rng rng(mix_seed(seed, 0x7461736bULL));
    TaskSuite suite;
    suite.seed = seed;
    suite.difficulty_spec = difficulty_spec;
    suite.tasks.reserve(num_tasks);

    for (int t = 0; t < num_tasks; ++t) {
        // Pick a difficulty entry by weight.
        const double u = rng.uniform();
        double acc = 0.0;
        std::size_t pick = difficulty_spec.size() - 1;
        for (std::size_t i = 0; i < difficulty_spec.size(); ++i) {
            acc += difficulty_spec[i].weight;
            if (u < acc) {
                pick = i;
                break;
            }
        }
        const int k = target_sizes[pick];

        // Uniform k-subset via partial Fisher-Yates.
        std::vector<int> indices(n_trajectories);
        std::iota(indices.begin(), indices.end(), 0);
        for (int i = 0; i < k; ++i) {
            const int j = i + static_cast<int>(rng.uniform() * (n_trajectories - i));
            std::swap(indices[i], indices[std::min(j, n_trajectories - 1)]);
        }
        TaskInstance task;
        task.task_id = t;
        task.num_trajectories = n_trajectories;
        task.correct_set.assign(indices.begin(), indices.begin() + k);
        std::sort(task.correct_set.begin(), task.correct_set.end());

        task.phi.resize(n_trajectories);
        for (int y = 0; y < n_trajectories; ++y) {
            if (options.phi_mode == PhiMode::independent) {
                task.phi[y] = rng.uniform();
            } else {
                task.phi[y] = task.is_correct(y) ? 1.0 : rng.uniform(0.0, 0.5);
            }
        }
        task.answer_strings.resize(n_trajectories);
        for (int y = 0; y < n_trajectories; ++y) task.answer_strings[y] = std::to_string(y);
        task.validate();
        suite.tasks.push_back(std::move(task));
    }
    return suite;
}

struct RenderedOutput {
    std::string text;
    bool is_well_formed = false;
};

// "{answer} <conf> Confidence: {value}" with the value fixed to 2 decimals.
// corrupt=true drops the delimiter so downstream parsing fails.
inline RenderedOutput render_output(const TaskInstance& task, int trajectory,
                                    double confidence_value, bool corrupt) {
    if (trajectory < 0 || trajectory >= task.num_trajectories)
        throw UsageError("trajectory index out of range");
    if (!(confidence_value >= 0.0 && confidence_value <= 1.0))
        throw UsageError("confidence_value must lie in [0,1]");
    char value[16];
    std::snprintf(value, sizeof(value), "%.2f", confidence_value);
    RenderedOutput out;
    if (corrupt) {
        out.text = task.answer_strings[trajectory] + " Confidence: " + value;
        out.is_well_formed = false;
    } else {
        out.text = task.answer_strings[trajectory] + " " + kConfDelimiter + " Confidence: " + value;
        out.is_well_formed = true;
    }
    return out;
}

// Splits on the first "<conf>" and expects "Confidence: <float>" with nothing
// else after it. Any float syntax parses, but values outside [0,1] are rejected.
// nullopt means format error; the caller applies the format penalty.
inline std::optional<double> parse_confidence(std::string_view text) {
    const std::size_t pos = text.find(kConfDelimiter);
    if (pos == std::string_view::npos) return std::nullopt;
    std::string_view rest = text.substr(pos + std::string_view(kConfDelimiter).size());

    auto strip = [](std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '\r'))
            s.remove_suffix(1);
        return s;
    };
    rest = strip(rest);
    constexpr std::string_view kLabel = "Confidence:";
    if (rest.substr(0, kLabel.size()) != kLabel) return std::nullopt;
    rest = strip(rest.substr(kLabel.size()));
    const auto value = parse_double(rest);
    if (!value || !(*value >= 0.0 && *value <= 1.0)) return std::nullopt;
    return value;
}

// --- JSON serialization: {seed, tasks:[{task_id, n, correct_set, phi, answers}]} ---

inline nlohmann::json suite_to_json(const TaskSuite& suite) {
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& task : suite.tasks) {
        tasks.push_back({{"task_id", task.task_id},
                         {"n", task.num_trajectories},
                         {"correct_set", task.correct_set},
                         {"phi", task.phi},
                         {"answers", task.answer_strings}});
    }
    return nlohmann::json{{"seed", suite.seed}, {"tasks", tasks}};
}

inline TaskSuite suite_from_json(const nlohmann::json& doc) {
    TaskSuite suite;
    suite.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& item : doc.at("tasks")) {
        TaskInstance task;
        task.task_id = item.at("task_id").get<int>();
        task.num_trajectories = item.at("n").get<int>();
        task.correct_set = item.at("correct_set").get<std::vector<int>>();
        task.phi = item.at("phi").get<std::vector<double>>();
        task.answer_strings = item.at("answers").get<std::vector<std::string>>();
        task.validate();
        suite.tasks.push_back(std::move(task));
    }
    return suite;
}

inline void save_suite(const TaskSuite& suite, const std::filesystem::path& path) {
    write_text_file(path, suite_to_json(suite).dump(2) + "\n");
}

inline TaskSuite load_suite(const std::filesystem::path& path) {
    return suite_from_json(nlohmann::json::parse(read_text_file(path)));
}

}  // namespace dcpo
