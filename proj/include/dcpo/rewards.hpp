#pragma once

// Reward signals: correctness reward, group-level accuracy, hybrid calibration
// target, confidence reward with format penalty, and the coupled baseline.

#include <cmath>
#include <vector>

#include "dcpo/policy.hpp"
#include "dcpo/task.hpp"
#include "dcpo/util.hpp"

namespace dcpo {

// Reward for output that fails the prescribed format. Fixed at the worst
// possible calibration miss so malformed output is never preferable to a
// maximally wrong confidence.
inline constexpr double kFormatPenalty = -1.0;

// Mean correctness of a rollout group (the group-level accuracy estimator).
inline double group_accuracy(const std::vector<int>& r_reasoning) {
    if (r_reasoning.empty()) throw UsageError("group_accuracy of empty group");
    double sum = 0.0;
    for (int r : r_reasoning) {
        if (r != 0 && r != 1) throw UsageError("reasoning rewards must be 0 or 1");
        sum += r;
    }
    return sum / static_cast<double>(r_reasoning.size());
}

// Hybrid calibration target R_IG = lambda * group_acc + (1 - lambda) * instance_r.
// lambda=1 is the group-only variant (DCPO-G), lambda=0 instance-only (DCPO-I).
inline double hybrid_target(double group_acc, int instance_r, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0,1]");
    if (!(group_acc >= 0.0 && group_acc <= 1.0)) throw UsageError("group_acc must lie in [0,1]");
    if (instance_r != 0 && instance_r != 1) throw UsageError("instance_r must be 0 or 1");
    return lambda * group_acc + (1.0 - lambda) * static_cast<double>(instance_r);
}

// Confidence reward: negative absolute calibration miss, or the format penalty.
inline double confidence_reward(double conf_value, double r_ig, bool well_formed) {
    if (!well_formed) return kFormatPenalty;
    if (!(conf_value >= 0.0 && conf_value <= 1.0))
        throw UsageError("conf_value must lie in [0,1]");
    if (!(r_ig >= 0.0 && r_ig <= 1.0)) throw UsageError("r_ig must lie in [0,1]");
    return -std::abs(conf_value - r_ig);
}

// Coupled baseline reward (Brier-augmented correctness): one scalar for the
// whole sequence, r - (c - r)^2.
inline double coupled_reward(int instance_r, double conf_value) {
    if (instance_r != 0 && instance_r != 1) throw UsageError("instance_r must be 0 or 1");
    if (!(conf_value >= 0.0 && conf_value <= 1.0))
        throw UsageError("conf_value must lie in [0,1]");
    const double diff = conf_value - static_cast<double>(instance_r);
    return static_cast<double>(instance_r) - diff * diff;
}

struct RewardBundle {
    std::vector<int> r_reasoning;  // per sample, {0,1}
    double group_acc = 0.0;        // mean(r_reasoning)
    std::vector<double> r_conf;    // per sample, in [-1, 0]
    double lambda = 0.5;
};

inline RewardBundle compute_reward_bundle(const GroupRollout& rollout, const TaskInstance& task,
                                          double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0,1]");
    RewardBundle bundle;
    bundle.lambda = lambda;
    bundle.r_reasoning.reserve(rollout.samples.size());
    for (const auto& sample : rollout.samples)
        bundle.r_reasoning.push_back(correctness(task, sample.trajectory));
    bundle.group_acc = group_accuracy(bundle.r_reasoning);
    bundle.r_conf.reserve(rollout.samples.size());
    for (std::size_t i = 0; i < rollout.samples.size(); ++i) {
        const auto& sample = rollout.samples[i];
        const double r_ig = hybrid_target(bundle.group_acc, bundle.r_reasoning[i], lambda);
        bundle.r_conf.push_back(confidence_reward(sample.conf_value, r_ig, sample.well_formed));
    }
    return bundle;
}

}  // namespace dcpo
