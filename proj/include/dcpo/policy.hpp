#pragma once

// Tabular softmax policy: a reasoning head over trajectories and a confidence
// head over a discrete confidence vocabulary, conditioned on (task, trajectory).
// Exact distributions, score functions, Fisher matrices, entropy, and sampling.

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "dcpo/task.hpp"
#include "dcpo/util.hpp"

namespace dcpo {

// Ordered confidence values the verbalized head can emit. Strictly increasing,
// spanning [0, 1].
struct ConfidenceVocab {
    std::vector<double> values;

    int size() const { return static_cast<int>(values.size()); }

    void validate() const {
        if (values.size() < 2) throw ConfigError("confidence vocab needs at least 2 values");
        if (values.front() != 0.0 || values.back() != 1.0)
            throw ConfigError("confidence vocab must start at 0.0 and end at 1.0");
        for (std::size_t i = 1; i < values.size(); ++i)
            if (!(values[i] > values[i - 1]))
                throw ConfigError("confidence vocab must be strictly increasing");
    }

    // V evenly spaced values from 0 to 1 (default V=21, step 0.05).
    static ConfidenceVocab even_grid(int v = 21) {
        if (v < 2) throw ConfigError("vocab size must be >= 2");
        ConfidenceVocab vocab;
        vocab.values.resize(v);
        for (int i = 0; i < v; ++i)
            vocab.values[i] = static_cast<double>(i) / static_cast<double>(v - 1);
        vocab.values.back() = 1.0;
        return vocab;
    }

    // Index of the value closest to c.
    int nearest_bin(double c) const {
        int best = 0;
        double best_d = std::abs(values[0] - c);
        for (int i = 1; i < size(); ++i) {
            const double d = std::abs(values[i] - c);
            if (d < best_d) {
                best = i;
                best_d = d;
            }
        }
        return best;
    }
};

struct PolicyParams {
    struct TaskBlock {
        int task_id = 0;
        std::vector<double> reasoning_logits;                 // length N
        std::vector<std::vector<double>> confidence_logits;   // N x V
    };

    ConfidenceVocab vocab;
    std::vector<TaskBlock> tasks;

    int num_tasks() const { return static_cast<int>(tasks.size()); }

    int num_trajectories(int task_index) const {
        return static_cast<int>(block(task_index).reasoning_logits.size());
    }

    const TaskBlock& block(int task_index) const {
        if (task_index < 0 || task_index >= num_tasks())
            throw UsageError("task index out of range");
        return tasks[task_index];
    }

    TaskBlock& block(int task_index) {
        if (task_index < 0 || task_index >= num_tasks())
            throw UsageError("task index out of range");
        return tasks[task_index];
    }
};

// Numerically stable softmax. Rejects non-finite logits.
inline std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw UsageError("softmax of empty vector");
    double max_logit = logits[0];
    for (double l : logits) {
        if (!std::isfinite(l)) throw NumericError("non-finite logit");
        max_logit = std::max(max_logit, l);
    }
    std::vector<double> probs(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - max_logit);
        z += probs[i];
    }
    for (double& p : probs) p /= z;
    return probs;
}

inline std::vector<double> reasoning_dist(const PolicyParams& params, int task_index) {
    return softmax(params.block(task_index).reasoning_logits);
}

inline std::vector<double> confidence_dist(const PolicyParams& params, int task_index,
                                           int trajectory) {
    const auto& blk = params.block(task_index);
    if (trajectory < 0 || trajectory >= static_cast<int>(blk.confidence_logits.size()))
        throw UsageError("trajectory index out of range");
    return softmax(blk.confidence_logits[trajectory]);
}

// Sequence-probability confidence of a trajectory; for this flat single-block
// policy it is exactly the reasoning-head probability ("logits" confidence).
inline double sequence_confidence(const PolicyParams& params, int task_index, int trajectory) {
    const auto probs = reasoning_dist(params, task_index);
    if (trajectory < 0 || trajectory >= static_cast<int>(probs.size()))
        throw UsageError("trajectory index out of range");
    return probs[trajectory];
}

// Score function of the reasoning head: g_i = 1{i = trajectory} - p_i.
inline std::vector<double> score(const PolicyParams& params, int task_index, int trajectory) {
    auto probs = reasoning_dist(params, task_index);
    if (trajectory < 0 || trajectory >= static_cast<int>(probs.size()))
        throw UsageError("trajectory index out of range");
    for (double& p : probs) p = -p;
    probs[trajectory] += 1.0;
    return probs;
}

// Fisher information matrix of the reasoning head: F = diag(p) - p p^T.
// Symmetric PSD of rank N-1 (the all-ones direction is the softmax gauge).
inline Eigen::MatrixXd fisher_matrix(const PolicyParams& params, int task_index) {
    const auto probs = reasoning_dist(params, task_index);
    const int n = static_cast<int>(probs.size());
    Eigen::MatrixXd fisher(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            fisher(i, j) = (i == j ? probs[i] : 0.0) - probs[i] * probs[j];
    return fisher;
}

// Shannon entropy of the reasoning distribution, in nats.
inline double entropy(const PolicyParams& params, int task_index) {
    const auto probs = reasoning_dist(params, task_index);
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return std::max(h, 0.0);
}

// Exact E[c | q] of the verbalized head under the full (trajectory, bin) mixture.
inline double mean_verbal_confidence(const PolicyParams& params, int task_index) {
    const auto probs = reasoning_dist(params, task_index);
    double mean = 0.0;
    for (int y = 0; y < static_cast<int>(probs.size()); ++y) {
        const auto conf = confidence_dist(params, task_index, y);
        double inner = 0.0;
        for (int v = 0; v < params.vocab.size(); ++v) inner += conf[v] * params.vocab.values[v];
        mean += probs[y] * inner;
    }
    return mean;
}

// Exact Var[c | q] of the verbalized head.
inline double verbal_confidence_variance(const PolicyParams& params, int task_index) {
    const auto probs = reasoning_dist(params, task_index);
    double m1 = 0.0;
    double m2 = 0.0;
    for (int y = 0; y < static_cast<int>(probs.size()); ++y) {
        const auto conf = confidence_dist(params, task_index, y);
        for (int v = 0; v < params.vocab.size(); ++v) {
            const double w = probs[y] * conf[v];
            const double c = params.vocab.values[v];
            m1 += w * c;
            m2 += w * c * c;
        }
    }
    return std::max(m2 - m1 * m1, 0.0);
}

struct RolloutSample {
    int trajectory = 0;
    int conf_bin = 0;
    double conf_value = 0.0;
    bool well_formed = true;
    double logprob_reasoning = 0.0;
    double logprob_conf = 0.0;
};

struct GroupRollout {
    int task_id = 0;
    std::vector<RolloutSample> samples;
    int group_size = 0;
};

// G i.i.d. draws: trajectory from the reasoning head, then a confidence bin
// conditioned on it. Each sample is rendered through the textual format and
// re-parsed; corruption drops the delimiter so the parse fails. Every sample
// consumes exactly three uniforms, so paired runs with equal seeds stay aligned
// across algorithm variants.
inline GroupRollout sample_rollout(const PolicyParams& params, const TaskInstance& task,
                                   int group_size, double corrupt_prob, Rng& rng) {
    if (group_size < 2) throw UsageError("group size must be >= 2");
    if (!(corrupt_prob >= 0.0 && corrupt_prob < 1.0))
        throw UsageError("corrupt_prob must lie in [0,1)");
    const int t = task.task_id;
    const auto probs = reasoning_dist(params, t);
    if (static_cast<int>(probs.size()) != task.num_trajectories)
        throw UsageError("policy/task trajectory-count mismatch");

    GroupRollout rollout;
    rollout.task_id = t;
    rollout.group_size = group_size;
    rollout.samples.reserve(group_size);
    for (int i = 0; i < group_size; ++i) {
        RolloutSample s;
        s.trajectory = rng.categorical(probs);
        const auto conf = confidence_dist(params, t, s.trajectory);
        s.conf_bin = rng.categorical(conf);
        const bool corrupt = rng.uniform() < corrupt_prob;
        const double emitted = params.vocab.values[s.conf_bin];
        const auto rendered = render_output(task, s.trajectory, emitted, corrupt);
        const auto parsed = parse_confidence(rendered.text);
        s.well_formed = parsed.has_value();
        s.conf_value = parsed.value_or(emitted);
        s.logprob_reasoning = std::log(probs[s.trajectory]);
        s.logprob_conf = std::log(conf[s.conf_bin]);
        rollout.samples.push_back(s);
    }
    return rollout;
}

// --- Initialization ---

// Confidence-head prior: logits peaked around an anchor tied to the task's phi
// feature, anchor = clamp(bias + gain * phi). Low concentration gives a wide,
// noisy verbalized confidence; high concentration a sharp one.
struct ConfidenceInit {
    double anchor_bias = 0.5;
    double anchor_gain = 0.45;
    double concentration = 6.0;
};

inline PolicyParams make_uniform_params(const TaskSuite& suite, const ConfidenceVocab& vocab) {
    vocab.validate();
    PolicyParams params;
    params.vocab = vocab;
    params.tasks.reserve(suite.tasks.size());
    for (const auto& task : suite.tasks) {
        PolicyParams::TaskBlock blk;
        blk.task_id = task.task_id;
        blk.reasoning_logits.assign(task.num_trajectories, 0.0);
        blk.confidence_logits.assign(task.num_trajectories,
                                     std::vector<double>(vocab.size(), 0.0));
        params.tasks.push_back(std::move(blk));
    }
    return params;
}

inline PolicyParams make_initial_params(const TaskSuite& suite, const ConfidenceVocab& vocab,
                                        const ConfidenceInit& init) {
    PolicyParams params = make_uniform_params(suite, vocab);
    for (std::size_t t = 0; t < suite.tasks.size(); ++t) {
        const auto& task = suite.tasks[t];
        auto& blk = params.tasks[t];
        for (int y = 0; y < task.num_trajectories; ++y) {
            const double anchor =
                std::clamp(init.anchor_bias + init.anchor_gain * task.phi[y], 0.0, 1.0);
            for (int v = 0; v < vocab.size(); ++v) {
                const double d = vocab.values[v] - anchor;
                blk.confidence_logits[y][v] = -init.concentration * d * d;
            }
        }
    }
    return params;
}

// --- Gradients over PolicyParams ---

struct ParamGrad {
    std::vector<std::vector<double>> reasoning;                // per task: N
    std::vector<std::vector<std::vector<double>>> confidence;  // per task: N x V

    static ParamGrad zeros_like(const PolicyParams& params) {
        ParamGrad grad;
        grad.reasoning.reserve(params.tasks.size());
        grad.confidence.reserve(params.tasks.size());
        for (const auto& blk : params.tasks) {
            grad.reasoning.emplace_back(blk.reasoning_logits.size(), 0.0);
            grad.confidence.emplace_back(blk.confidence_logits.size(),
                                         std::vector<double>(params.vocab.size(), 0.0));
        }
        return grad;
    }

    void add_scaled(const ParamGrad& other, double scale) {
        for (std::size_t t = 0; t < reasoning.size(); ++t) {
            for (std::size_t i = 0; i < reasoning[t].size(); ++i)
                reasoning[t][i] += scale * other.reasoning[t][i];
            for (std::size_t y = 0; y < confidence[t].size(); ++y)
                for (std::size_t v = 0; v < confidence[t][y].size(); ++v)
                    confidence[t][y][v] += scale * other.confidence[t][y][v];
        }
    }

    void zero_reasoning() {
        for (auto& row : reasoning) std::fill(row.begin(), row.end(), 0.0);
    }

    double squared_norm() const {
        double s = 0.0;
        for (const auto& row : reasoning)
            for (double g : row) s += g * g;
        for (const auto& task_block : confidence)
            for (const auto& row : task_block)
                for (double g : row) s += g * g;
        return s;
    }
};

// One gradient-ascent step; throws NumericError if any parameter goes non-finite.
inline void apply_update(PolicyParams& params, const ParamGrad& grad, double step_size) {
    for (std::size_t t = 0; t < params.tasks.size(); ++t) {
        auto& blk = params.tasks[t];
        for (std::size_t i = 0; i < blk.reasoning_logits.size(); ++i) {
            blk.reasoning_logits[i] += step_size * grad.reasoning[t][i];
            if (!std::isfinite(blk.reasoning_logits[i]))
                throw NumericError("non-finite reasoning logit after update");
        }
        for (std::size_t y = 0; y < blk.confidence_logits.size(); ++y)
            for (std::size_t v = 0; v < blk.confidence_logits[y].size(); ++v) {
                blk.confidence_logits[y][v] += step_size * grad.confidence[t][y][v];
                if (!std::isfinite(blk.confidence_logits[y][v]))
                    throw NumericError("non-finite confidence logit after update");
            }
    }
}

// --- Checkpoint JSON: {vocab:[...], tasks:[{task_id, reasoning_logits, confidence_logits}]} ---

inline nlohmann::json params_to_json(const PolicyParams& params) {
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& blk : params.tasks) {
        tasks.push_back({{"task_id", blk.task_id},
                         {"reasoning_logits", blk.reasoning_logits},
                         {"confidence_logits", blk.confidence_logits}});
    }
    return nlohmann::json{{"vocab", params.vocab.values}, {"tasks", tasks}};
}

inline PolicyParams params_from_json(const nlohmann::json& doc) {
    PolicyParams params;
    params.vocab.values = doc.at("vocab").get<std::vector<double>>();
    params.vocab.validate();
    for (const auto& item : doc.at("tasks")) {
        PolicyParams::TaskBlock blk;
        blk.task_id = item.at("task_id").get<int>();
        blk.reasoning_logits = item.at("reasoning_logits").get<std::vector<double>>();
        blk.confidence_logits =
            item.at("confidence_logits").get<std::vector<std::vector<double>>>();
        if (blk.confidence_logits.size() != blk.reasoning_logits.size())
            throw UsageError("checkpoint confidence head shape mismatch");
        for (const auto& row : blk.confidence_logits)
            if (static_cast<int>(row.size()) != params.vocab.size())
                throw UsageError("checkpoint confidence vocab shape mismatch");
        params.tasks.push_back(std::move(blk));
    }
    return params;
}

inline void save_params(const PolicyParams& params, const std::filesystem::path& path) {
    write_text_file(path, params_to_json(params).dump(2) + "\n");
}

inline PolicyParams load_params(const std::filesystem::path& path) {
    return params_from_json(nlohmann::json::parse(read_text_file(path)));
}

}  // namespace dcpo
