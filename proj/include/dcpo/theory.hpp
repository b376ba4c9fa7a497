#pragma once

// Enumeration-exact quantities behind the theoretical results: expected
// objectives, exact gradients, Fisher-metric inner products, the gradient
// conflict identity, and the group-estimator statistics.

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "dcpo/policy.hpp"
#include "dcpo/task.hpp"
#include "dcpo/util.hpp"

namespace dcpo {

// Calibration loss l(c, t), convex in c with dl/dc > 0 whenever c > t.
// Squared is the smooth default; absolute backs the subgradient-variance result.
struct CalLossSpec {
    enum class Kind { squared, absolute };
    Kind kind = Kind::squared;

    double evaluate(double c, double t) const {
        return kind == Kind::squared ? (c - t) * (c - t) : std::abs(c - t);
    }

    // Subgradient selection for the absolute loss: 0 at the kink.
    double derivative_in_c(double c, double t) const {
        if (kind == Kind::squared) return 2.0 * (c - t);
        if (c > t) return 1.0;
        if (c < t) return -1.0;
        return 0.0;
    }

    static CalLossSpec squared() { return CalLossSpec{Kind::squared}; }
    static CalLossSpec absolute() { return CalLossSpec{Kind::absolute}; }
};

// Expected accuracy J_acc = sum_{y in Y+} pi(y | x), by enumeration.
inline double exact_accuracy(const PolicyParams& params, const TaskInstance& task) {
    const auto probs = reasoning_dist(params, task.task_id);
    if (static_cast<int>(probs.size()) != task.num_trajectories)
        throw UsageError("policy/task trajectory-count mismatch");
    double acc = 0.0;
    for (int y : task.correct_set) acc += probs[y];
    return acc;
}

// Confidence prediction Conf = sum_y pi(y | x) phi(y).
inline double exact_confidence_feature(const PolicyParams& params, const TaskInstance& task) {
    const auto probs = reasoning_dist(params, task.task_id);
    if (probs.size() != task.phi.size())
        throw UsageError("policy/task trajectory-count mismatch");
    double conf = 0.0;
    for (std::size_t y = 0; y < probs.size(); ++y) conf += probs[y] * task.phi[y];
    return conf;
}

// Cov_pi(R, phi) = E[R phi] - E[R] E[phi], by enumeration.
inline double covariance_R_phi(const PolicyParams& params, const TaskInstance& task) {
    const auto probs = reasoning_dist(params, task.task_id);
    if (probs.size() != task.phi.size())
        throw UsageError("policy/task trajectory-count mismatch");
    double e_r = 0.0;
    double e_phi = 0.0;
    double e_rphi = 0.0;
    for (std::size_t y = 0; y < probs.size(); ++y) {
        const double r = task.is_correct(static_cast<int>(y)) ? 1.0 : 0.0;
        e_r += probs[y] * r;
        e_phi += probs[y] * task.phi[y];
        e_rphi += probs[y] * r * task.phi[y];
    }
    return e_rphi - e_r * e_phi;
}

struct ExactGradients {
    std::vector<double> grad_acc;  // nabla J_acc over the task's reasoning logits
    std::vector<double> grad_cal;  // nabla J_cal, target treated as a constant
};

// grad_acc = sum_y pi(y) (R(y) - E[R]) g(y)
// grad_cal = -(dl/dc at (E[phi], E[R])) * sum_y pi(y) (phi(y) - E[phi]) g(y)
// For the tabular softmax these reduce to F R and -(dl/dc) F phi.
inline ExactGradients exact_gradients(const PolicyParams& params, const TaskInstance& task,
                                      const CalLossSpec& loss) {
    const auto probs = reasoning_dist(params, task.task_id);
    const int n = static_cast<int>(probs.size());
    if (n != task.num_trajectories) throw UsageError("policy/task trajectory-count mismatch");
    const double e_r = exact_accuracy(params, task);
    const double e_phi = exact_confidence_feature(params, task);
    const double dl_dc = loss.derivative_in_c(e_phi, e_r);

    ExactGradients out;
    out.grad_acc.assign(n, 0.0);
    out.grad_cal.assign(n, 0.0);
    // sum_y pi(y) w(y) (e_y - p) has component i equal to p_i (w_i - E[w]).
    for (int i = 0; i < n; ++i) {
        const double r_i = task.is_correct(i) ? 1.0 : 0.0;
        out.grad_acc[i] = probs[i] * (r_i - e_r);
        out.grad_cal[i] = -dl_dc * probs[i] * (task.phi[i] - e_phi);
    }
    return out;
}

// a^T F^+ b with the Moore-Penrose pseudoinverse; eigenvalues below
// 1e-10 * lambda_max are treated as zero (the softmax Fisher has rank N-1).
inline double fisher_inner_product(const std::vector<double>& a, const std::vector<double>& b,
                                   const Eigen::MatrixXd& fisher) {
    const auto n = fisher.rows();
    if (fisher.cols() != n) throw UsageError("Fisher matrix must be square");
    if (static_cast<Eigen::Index>(a.size()) != n || static_cast<Eigen::Index>(b.size()) != n)
        throw UsageError("vector/matrix shape mismatch");
    if ((fisher - fisher.transpose()).cwiseAbs().maxCoeff() > 1e-9)
        throw UsageError("Fisher matrix must be symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(fisher);
    if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
    const auto& eigenvalues = solver.eigenvalues();
    const auto& eigenvectors = solver.eigenvectors();
    const double lambda_max = eigenvalues.cwiseAbs().maxCoeff();
    const double cutoff = 1e-10 * lambda_max;

    Eigen::Map<const Eigen::VectorXd> va(a.data(), n);
    Eigen::Map<const Eigen::VectorXd> vb(b.data(), n);
    double result = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (eigenvalues[i] <= cutoff) continue;
        const double pa = eigenvectors.col(i).dot(va);
        const double pb = eigenvectors.col(i).dot(vb);
        result += pa * pb / eigenvalues[i];
    }
    return result;
}

struct ConflictReport {
    bool applicable = false;  // both Prop-2 hypotheses hold
    double expected_accuracy = 0.0;
    double expected_confidence = 0.0;
    double covariance_R_phi = 0.0;
    double dl_dc = 0.0;
    double inner_product = 0.0;     // <grad_acc, grad_cal> under F^+
    double identity_residual = 0.0; // |inner_product + dl_dc * Cov(R, phi)|
};

// Verifies the conflict identity <grad J_acc, grad J_cal>_{F^+} = -(dl/dc) Cov(R, phi).
// Only claims a sign when the over-confidence and positive-correlation
// hypotheses both hold; otherwise the report is flagged not applicable and the
// identity quantities are still filled in.
inline ConflictReport check_gradient_conflict(const PolicyParams& params, const TaskInstance& task,
                                              const CalLossSpec& loss) {
    ConflictReport report;
    report.expected_accuracy = exact_accuracy(params, task);
    report.expected_confidence = exact_confidence_feature(params, task);
    report.covariance_R_phi = covariance_R_phi(params, task);
    report.dl_dc = loss.derivative_in_c(report.expected_confidence, report.expected_accuracy);
    const auto grads = exact_gradients(params, task, loss);
    const auto fisher = fisher_matrix(params, task.task_id);
    report.inner_product = fisher_inner_product(grads.grad_acc, grads.grad_cal, fisher);
    report.identity_residual =
        std::abs(report.inner_product + report.dl_dc * report.covariance_R_phi);
    report.applicable = report.expected_confidence > report.expected_accuracy &&
                        report.covariance_R_phi > 0.0;
    return report;
}

struct EstimatorStats {
    double empirical_mean = 0.0;
    double empirical_var = 0.0;
};

// Simulates `trials` groups of G Bernoulli(p) draws and returns the mean and
// population variance of the group-level accuracy estimator.
inline EstimatorStats group_estimator_stats(double p, int group_size, int trials, Rng& rng) {
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError("p must lie in [0,1]");
    if (group_size < 1) throw UsageError("group size must be >= 1");
    if (trials < 1) throw UsageError("trials must be >= 1");
    std::vector<double> group_means;
    group_means.reserve(trials);
    for (int t = 0; t < trials; ++t) {
        int hits = 0;
        for (int i = 0; i < group_size; ++i) hits += rng.bernoulli(p) ? 1 : 0;
        group_means.push_back(static_cast<double>(hits) / group_size);
    }
    EstimatorStats stats;
    stats.empirical_mean = mean_of(group_means);
    stats.empirical_var = population_variance(group_means);
    return stats;
}

struct SubgradientVariance {
    bool applicable = false;  // false at the kink c == p
    double var_instance = 0.0;
    double var_group = 0.0;
};

// Variance of the absolute-loss subgradient under instance-level supervision
// (R ~ Bernoulli(p); analytic value 4p(1-p)) versus group-level supervision
// (deterministic target, variance exactly 0).
inline SubgradientVariance subgradient_variance_comparison(double c, double p, int trials,
                                                           Rng& rng) {
    if (!(c > 0.0 && c < 1.0)) throw UsageError("c must lie in (0,1)");
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError("p must lie in [0,1]");
    if (trials < 1) throw UsageError("trials must be >= 1");
    SubgradientVariance out;
    if (c == p) return out;  // subdifferential ambiguity at the kink
    out.applicable = true;

    const CalLossSpec loss = CalLossSpec::absolute();
    std::vector<double> instance_grads;
    instance_grads.reserve(trials);
    std::vector<double> group_grads;
    group_grads.reserve(trials);
    for (int t = 0; t < trials; ++t) {
        const double r = rng.bernoulli(p) ? 1.0 : 0.0;
        instance_grads.push_back(loss.derivative_in_c(c, r));
        group_grads.push_back(loss.derivative_in_c(c, p));
    }
    out.var_instance = population_variance(instance_grads);
    out.var_group = population_variance(group_grads);
    return out;
}

}  // namespace dcpo
