#pragma once

// Policy-gradient training with the clipped surrogate objective. Covers GRPO,
// DCPO (lambda configurable, including the DCPO-G and DCPO-I endpoints) and the
// coupled Brier-reward baseline, with masked-gradient decoupling of the
// reasoning and confidence token blocks.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dcpo/advantage.hpp"
#include "dcpo/calibration.hpp"
#include "dcpo/policy.hpp"
#include "dcpo/rewards.hpp"
#include "dcpo/task.hpp"
#include "dcpo/theory.hpp"
#include "dcpo/util.hpp"

namespace dcpo {

enum class Algorithm { grpo, dcpo, coupled };

inline std::string to_string(Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::grpo: return "grpo";
        case Algorithm::dcpo: return "dcpo";
        case Algorithm::coupled: return "coupled";
    }
    throw UsageError("unknown algorithm");
}

inline Algorithm algorithm_from_string(const std::string& name) {
    if (name == "grpo") return Algorithm::grpo;
    if (name == "dcpo") return Algorithm::dcpo;
    if (name == "coupled") return Algorithm::coupled;
    throw ConfigError("unknown algorithm: " + name);
}

struct TrainerConfig {
    Algorithm algorithm = Algorithm::dcpo;
    double lambda = 0.5;
    int group_size = 8;
    double learning_rate = 0.1;
    int steps = 100;
    double clip_low = 0.20;
    double clip_high = 0.28;
    double corrupt_prob = 0.0;
    std::uint64_t seed = 0;
    int log_every = 1;
    // Extra PPO-style passes over each step's rollouts; >1 exercises the clip path.
    int inner_epochs = 1;
    // Keeps the reasoning head fixed (confidence-head-only training).
    bool freeze_reasoning = false;

    void validate() const {
        if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0,1]");
        if (group_size < 2) throw ConfigError("group_size must be >= 2");
        if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
        if (steps < 0) throw ConfigError("steps must be >= 0");
        if (!(clip_low > 0.0 && clip_low < 1.0)) throw ConfigError("clip_low must lie in (0,1)");
        if (!(clip_high > 0.0 && clip_high < 1.0)) throw ConfigError("clip_high must lie in (0,1)");
        if (!(corrupt_prob >= 0.0 && corrupt_prob < 1.0))
            throw ConfigError("corrupt_prob must lie in [0,1)");
        if (log_every < 1) throw ConfigError("log_every must be >= 1");
        if (inner_epochs < 1) throw ConfigError("inner_epochs must be >= 1");
    }
};

struct TrainLogRow {
    int step = 0;
    double acc = 0.0;        // exact expected accuracy, mean over tasks
    double conf_mean = 0.0;  // exact E[c|q] of the verbal head, mean over tasks
    double conf_var = 0.0;   // exact Var[c|q], mean over tasks
    double ece = 0.0;        // from this step's rollout records (verbal channel)
    double pce = 0.0;
    std::optional<double> auroc;  // absent when the step's records are single-class
    double entropy = 0.0;         // reasoning-head entropy, mean over tasks
    double grad_norm = 0.0;       // Euclidean norm of the applied on-policy gradient
};

struct TrainLog {
    static constexpr const char* kCsvHeader = "step,acc,conf_mean,conf_var,ece,pce,auroc,entropy,grad_norm";

    std::vector<TrainLogRow> rows;

    std::string to_csv() const {
        std::string out = std::string(kCsvHeader) + "\n";
        for (const auto& row : rows) {
            out += std::to_string(row.step) + "," + format_double(row.acc) + "," +
                   format_double(row.conf_mean) + "," + format_double(row.conf_var) + "," +
                   format_double(row.ece) + "," + format_double(row.pce) + "," +
                   (row.auroc ? format_double(*row.auroc) : std::string()) + "," +
                   format_double(row.entropy) + "," + format_double(row.grad_norm) + "\n";
        }
        return out;
    }
};

// Euclidean norm over all parameter blocks.
inline double gradient_norm(const ParamGrad& grad) { return std::sqrt(grad.squared_norm()); }

// Builds per-sample advantages for one rollout according to the algorithm:
//   grpo    - group-normalized correctness on reasoning tokens, zero on confidence
//   dcpo    - independently normalized reasoning and confidence streams
//   coupled - one normalized scalar from the Brier-augmented reward on both blocks
inline std::pair<AdvantagePair, RewardBundle> compute_advantages(const GroupRollout& rollout,
                                                                 const TaskInstance& task,
                                                                 const TrainerConfig& config) {
    RewardBundle bundle = compute_reward_bundle(rollout, task, config.lambda);
    AdvantagePair pair;
    switch (config.algorithm) {
        case Algorithm::grpo: {
            auto normalized = group_normalize(bundle.r_reasoning);
            pair.a_reasoning = std::move(normalized.advantages);
            pair.degenerate_reasoning = normalized.degenerate;
            pair.a_conf.assign(bundle.r_reasoning.size(), 0.0);
            pair.degenerate_conf = true;  // vanilla GRPO carries no confidence signal
            break;
        }
        case Algorithm::dcpo: {
            pair = decoupled_advantages(bundle);
            break;
        }
        case Algorithm::coupled: {
            std::vector<double> coupled(rollout.samples.size());
            for (std::size_t i = 0; i < rollout.samples.size(); ++i) {
                const auto& sample = rollout.samples[i];
                coupled[i] = sample.well_formed
                                 ? coupled_reward(bundle.r_reasoning[i], sample.conf_value)
                                 : bundle.r_reasoning[i] + kFormatPenalty;
            }
            auto normalized = group_normalize(coupled);
            pair.a_reasoning = normalized.advantages;
            pair.a_conf = std::move(normalized.advantages);
            pair.degenerate_reasoning = normalized.degenerate;
            pair.degenerate_conf = pair.degenerate_reasoning;
            break;
        }
    }
    return {std::move(pair), std::move(bundle)};
}

namespace detail {

// Clipped ratio and whether the clip saturates (saturated terms have zero gradient).
struct ClippedRatio {
    double value = 1.0;
    bool saturated = false;
};

inline ClippedRatio clip_ratio(double ratio, double clip_low, double clip_high) {
    const double lo = 1.0 - clip_low;
    const double hi = 1.0 + clip_high;
    if (ratio < lo) return {lo, true};
    if (ratio > hi) return {hi, true};
    return {ratio, false};
}

inline void check_rollout_shape(const PolicyParams& params, const GroupRollout& rollout,
                                const AdvantagePair& adv) {
    if (rollout.task_id < 0 || rollout.task_id >= params.num_tasks())
        throw UsageError("rollout task id out of range for params");
    if (rollout.samples.empty() ||
        rollout.samples.size() != adv.a_reasoning.size() ||
        rollout.samples.size() != adv.a_conf.size())
        throw UsageError("rollout/advantage shape mismatch");
    const int n = params.num_trajectories(rollout.task_id);
    for (const auto& sample : rollout.samples) {
        if (sample.trajectory < 0 || sample.trajectory >= n)
            throw UsageError("rollout trajectory out of range for params");
        if (sample.conf_bin < 0 || sample.conf_bin >= params.vocab.size())
            throw UsageError("rollout confidence bin out of range for params");
    }
}

}  // namespace detail

// Per-sample confidence-token advantage under the algorithm's masking rule.
inline double confidence_token_advantage(const AdvantagePair& adv, std::size_t i,
                                         Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::grpo: return 0.0;                  // term dropped
        case Algorithm::dcpo: return adv.a_conf[i];        // masked, own stream
        case Algorithm::coupled: return adv.a_reasoning[i];  // shared scalar
    }
    throw UsageError("unknown algorithm");
}

// Value of the clipped surrogate objective for one rollout:
//   (1/G) sum_i (1/|o_i|) [ rho_hat_r A_{r,i} + rho_hat_c A_{c,i} ]
// with |o_i| = 2 (one reasoning token, one confidence token).
inline double surrogate_value(const PolicyParams& old_params, const PolicyParams& new_params,
                              const GroupRollout& rollout, const AdvantagePair& adv,
                              const TrainerConfig& config) {
    detail::check_rollout_shape(old_params, rollout, adv);
    detail::check_rollout_shape(new_params, rollout, adv);
    const int t = rollout.task_id;
    const auto new_reasoning = reasoning_dist(new_params, t);
    const double inv = 1.0 / (2.0 * static_cast<double>(rollout.samples.size()));
    double value = 0.0;
    for (std::size_t i = 0; i < rollout.samples.size(); ++i) {
        const auto& sample = rollout.samples[i];
        const double ratio_r =
            new_reasoning[sample.trajectory] / std::exp(sample.logprob_reasoning);
        value += detail::clip_ratio(ratio_r, config.clip_low, config.clip_high).value *
                 adv.a_reasoning[i] * inv;
        const double a_c = confidence_token_advantage(adv, i, config.algorithm);
        if (a_c != 0.0 || config.algorithm != Algorithm::grpo) {
            const auto new_conf = confidence_dist(new_params, t, sample.trajectory);
            const double ratio_c = new_conf[sample.conf_bin] / std::exp(sample.logprob_conf);
            value += detail::clip_ratio(ratio_c, config.clip_low, config.clip_high).value * a_c * inv;
        }
    }
    return value;
}

// Gradient of the surrogate objective with respect to new_params. The rollout
// must have been sampled under old_params (its stored logprobs are the old
// probabilities). Reasoning-token terms touch only reasoning logits and
// confidence-token terms only confidence logits.
inline ParamGrad surrogate_gradient(const PolicyParams& old_params, const PolicyParams& new_params,
                                    const GroupRollout& rollout, const AdvantagePair& adv,
                                    const TrainerConfig& config) {
    detail::check_rollout_shape(old_params, rollout, adv);
    detail::check_rollout_shape(new_params, rollout, adv);
    const int t = rollout.task_id;
    const auto new_reasoning = reasoning_dist(new_params, t);
    const int n = static_cast<int>(new_reasoning.size());
    const double inv = 1.0 / (2.0 * static_cast<double>(rollout.samples.size()));

    ParamGrad grad = ParamGrad::zeros_like(new_params);
    auto& reasoning_grad = grad.reasoning[t];
    for (std::size_t i = 0; i < rollout.samples.size(); ++i) {
        const auto& sample = rollout.samples[i];

        const double ratio_r =
            new_reasoning[sample.trajectory] / std::exp(sample.logprob_reasoning);
        const auto clipped_r = detail::clip_ratio(ratio_r, config.clip_low, config.clip_high);
        if (!clipped_r.saturated && adv.a_reasoning[i] != 0.0) {
            // d(rho A)/dlogits = A rho (e_y - p)
            const double w = adv.a_reasoning[i] * ratio_r * inv;
            for (int j = 0; j < n; ++j) reasoning_grad[j] -= w * new_reasoning[j];
            reasoning_grad[sample.trajectory] += w;
        }

        const double a_c = confidence_token_advantage(adv, i, config.algorithm);
        if (a_c == 0.0) continue;
        const auto new_conf = confidence_dist(new_params, t, sample.trajectory);
        const double ratio_c = new_conf[sample.conf_bin] / std::exp(sample.logprob_conf);
        const auto clipped_c = detail::clip_ratio(ratio_c, config.clip_low, config.clip_high);
        if (clipped_c.saturated) continue;
        const double w = a_c * ratio_c * inv;
        auto& conf_grad = grad.confidence[t][sample.trajectory];
        for (int v = 0; v < static_cast<int>(new_conf.size()); ++v) conf_grad[v] -= w * new_conf[v];
        conf_grad[sample.conf_bin] += w;
    }
    return grad;
}

// Called after each logged step with the pre-update policy and the logged row.
using StepObserver = std::function<void(int step, const PolicyParams& params, const TrainLogRow& row)>;

namespace detail {

inline TrainLogRow make_log_row(int step, const PolicyParams& params, const TaskSuite& suite,
                                const std::vector<CalibrationRecord>& step_records,
                                double grad_norm_value) {
    TrainLogRow row;
    row.step = step;
    const double num_tasks = static_cast<double>(suite.tasks.size());
    for (std::size_t t = 0; t < suite.tasks.size(); ++t) {
        row.acc += exact_accuracy(params, suite.tasks[t]) / num_tasks;
        row.conf_mean += mean_verbal_confidence(params, static_cast<int>(t)) / num_tasks;
        row.conf_var += verbal_confidence_variance(params, static_cast<int>(t)) / num_tasks;
        row.entropy += entropy(params, static_cast<int>(t)) / num_tasks;
    }
    if (!step_records.empty()) {
        const auto metrics = compute_metrics(step_records);
        row.ece = metrics.ece;
        row.pce = metrics.pce;
        row.auroc = metrics.auroc;
    }
    row.grad_norm = grad_norm_value;
    return row;
}

}  // namespace detail

// Runs the training loop: every step samples a G-rollout per task under the
// current policy, computes rewards and advantages, accumulates the surrogate
// gradient over tasks and applies one gradient-ascent step per inner epoch.
// Deterministic given config.seed. Metrics describe the pre-update policy that
// generated the step's rollouts.
inline std::pair<PolicyParams, TrainLog> train(const TrainerConfig& config, const TaskSuite& suite,
                                               const PolicyParams& initial,
                                               const StepObserver& observer = {}) {
    config.validate();
    if (suite.tasks.empty()) throw UsageError("training suite has no tasks");
    if (initial.num_tasks() != static_cast<int>(suite.tasks.size()))
        throw UsageError("initial params/suite task-count mismatch");
    for (std::size_t t = 0; t < suite.tasks.size(); ++t)
        if (initial.num_trajectories(static_cast<int>(t)) != suite.tasks[t].num_trajectories)
            throw UsageError("initial params/suite trajectory-count mismatch");

    PolicyParams params = initial;
    TrainLog log;
    Rng rng(mix_seed(config.seed, 0x747261696eULL));

    for (int step = 1; step <= config.steps; ++step) {
        const bool log_this_step = (step % config.log_every) == 0;
        const PolicyParams snapshot = params;  // old policy for this step's rollouts

        std::vector<GroupRollout> rollouts;
        std::vector<AdvantagePair> advantages;
        rollouts.reserve(suite.tasks.size());
        advantages.reserve(suite.tasks.size());
        std::vector<CalibrationRecord> step_records;
        for (const auto& task : suite.tasks) {
            auto rollout =
                sample_rollout(snapshot, task, config.group_size, config.corrupt_prob, rng);
            auto [adv, bundle] = compute_advantages(rollout, task, config);
            if (log_this_step) {
                for (std::size_t i = 0; i < rollout.samples.size(); ++i)
                    if (rollout.samples[i].well_formed)
                        step_records.push_back(
                            {rollout.samples[i].conf_value, bundle.r_reasoning[i]});
            }
            rollouts.push_back(std::move(rollout));
            advantages.push_back(std::move(adv));
        }

        double applied_grad_norm = 0.0;
        for (int epoch = 0; epoch < config.inner_epochs; ++epoch) {
            // Parameter blocks are disjoint across tasks, so accumulation is a
            // plain sum and every task trains at the nominal learning rate.
            ParamGrad grad = ParamGrad::zeros_like(params);
            for (std::size_t t = 0; t < rollouts.size(); ++t) {
                ParamGrad task_grad =
                    surrogate_gradient(snapshot, params, rollouts[t], advantages[t], config);
                grad.add_scaled(task_grad, 1.0);
            }
            if (config.freeze_reasoning) grad.zero_reasoning();
            if (epoch == 0) applied_grad_norm = gradient_norm(grad);
            try {
                apply_update(params, grad, config.learning_rate);
            } catch (const NumericError& err) {
                throw NumericError("training diverged at step " + std::to_string(step) + ": " +
                                   err.what());
            }
        }

        if (log_this_step) {
            TrainLogRow row =
                detail::make_log_row(step, snapshot, suite, step_records, applied_grad_norm);
            log.rows.push_back(row);
            if (observer) observer(step, snapshot, row);
        }
    }
    return {std::move(params), std::move(log)};
}

// --- Final-policy evaluation ---

// Deterministic evaluation rollout of a policy on a suite. Records are produced
// in both confidence channels: "verbal" pairs the sampled confidence token with
// the sample's correctness, "logits" pairs the sequence probability of the
// sampled trajectory with the same correctness.
struct EvalReport {
    std::vector<CalibrationRecord> verbal_records;
    std::vector<CalibrationRecord> logits_records;
    double exact_accuracy_mean = 0.0;
    double exact_verbal_conf_mean = 0.0;
    double exact_logits_conf_mean = 0.0;  // E[pi(y)] = sum_y pi(y)^2, mean over tasks
    double mean_entropy = 0.0;
};

inline EvalReport evaluate_policy(const PolicyParams& params, const TaskSuite& suite,
                                  int samples_per_task, std::uint64_t seed,
                                  double corrupt_prob = 0.0) {
    if (samples_per_task < 2) throw UsageError("samples_per_task must be >= 2");
    EvalReport report;
    Rng rng(mix_seed(seed, 0x6576616cULL));
    const double num_tasks = static_cast<double>(suite.tasks.size());
    for (std::size_t t = 0; t < suite.tasks.size(); ++t) {
        const auto& task = suite.tasks[t];
        const auto probs = reasoning_dist(params, static_cast<int>(t));
        const auto rollout = sample_rollout(params, task, samples_per_task, corrupt_prob, rng);
        for (const auto& sample : rollout.samples) {
            const int correct = correctness(task, sample.trajectory);
            if (sample.well_formed)
                report.verbal_records.push_back({sample.conf_value, correct});
            report.logits_records.push_back({probs[sample.trajectory], correct});
        }
        report.exact_accuracy_mean += exact_accuracy(params, task) / num_tasks;
        report.exact_verbal_conf_mean += mean_verbal_confidence(params, static_cast<int>(t)) / num_tasks;
        double self_mass = 0.0;
        for (double p : probs) self_mass += p * p;
        report.exact_logits_conf_mean += self_mass / num_tasks;
        report.mean_entropy += entropy(params, static_cast<int>(t)) / num_tasks;
    }
    return report;
}

}  // namespace dcpo
