#pragma once

// Group-relative advantage normalization and the decoupled reasoning/confidence
// advantage pair.

#include <cmath>
#include <vector>

#include "dcpo/rewards.hpp"
#include "dcpo/util.hpp"

namespace dcpo {

// Groups whose population standard deviation falls below this yield all-zero
// advantages (skip the update) instead of amplifying direction-less noise.
inline constexpr double kDegenerateSigma = 1e-8;

struct GroupNormalized {
    std::vector<double> advantages;
    bool degenerate = false;
};

// A_i = (r_i - m) / sigma with m the group mean and sigma the population
// (divide-by-G) standard deviation.
inline GroupNormalized group_normalize(const std::vector<double>& rewards) {
    if (rewards.size() < 2) throw UsageError("group_normalize needs G >= 2");
    const double m = mean_of(rewards);
    const double sigma = std::sqrt(population_variance(rewards));
    GroupNormalized out;
    out.advantages.resize(rewards.size());
    if (sigma < kDegenerateSigma) {
        out.degenerate = true;
        return out;
    }
    for (std::size_t i = 0; i < rewards.size(); ++i)
        out.advantages[i] = (rewards[i] - m) / sigma;
    return out;
}

inline GroupNormalized group_normalize(const std::vector<int>& rewards) {
    return group_normalize(std::vector<double>(rewards.begin(), rewards.end()));
}

struct AdvantagePair {
    std::vector<double> a_reasoning;
    std::vector<double> a_conf;
    bool degenerate_reasoning = false;
    bool degenerate_conf = false;
};

// Normalizes the reasoning and confidence reward streams independently; the
// two normalizations never mix statistics.
inline AdvantagePair decoupled_advantages(const RewardBundle& bundle) {
    if (bundle.r_reasoning.size() != bundle.r_conf.size())
        throw UsageError("reward streams must share length");
    auto reasoning = group_normalize(bundle.r_reasoning);
    auto conf = group_normalize(bundle.r_conf);
    AdvantagePair pair;
    pair.a_reasoning = std::move(reasoning.advantages);
    pair.degenerate_reasoning = reasoning.degenerate;
    pair.a_conf = std::move(conf.advantages);
    pair.degenerate_conf = conf.degenerate;
    return pair;
}

}  // namespace dcpo
