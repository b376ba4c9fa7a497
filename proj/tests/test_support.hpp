#pragma once

// Test-only oracles, deliberately independent of the library implementations
// they check: brute-force calibration metrics (direct double loops), a
// hand-rolled Jacobi eigensolver backing a brute-force pseudoinverse, and
// direct-arithmetic group normalization.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "dcpo/calibration.hpp"

namespace oracle {

// ECE by direct accumulation: assign each record to its bin, average per bin,
// weight by bin occupancy.
inline double ece_bruteforce(const std::vector<dcpo::CalibrationRecord>& records, int num_bins) {
    const double n = static_cast<double>(records.size());
    double total = 0.0;
    for (int m = 0; m < num_bins; ++m) {
        double conf_sum = 0.0, correct_sum = 0.0, count = 0.0;
        for (const auto& rec : records) {
            int bin = static_cast<int>(rec.confidence * num_bins);
            if (bin >= num_bins) bin = num_bins - 1;
            if (bin != m) continue;
            conf_sum += rec.confidence;
            correct_sum += rec.correct;
            count += 1.0;
        }
        if (count == 0.0) continue;
        total += (count / n) * std::abs(correct_sum / count - conf_sum / count);
    }
    return total;
}

inline double pce_bruteforce(const std::vector<dcpo::CalibrationRecord>& records, int num_bins) {
    const double n = static_cast<double>(records.size());
    double total = 0.0;
    for (int m = 0; m < num_bins; ++m) {
        double conf_sum = 0.0, correct_sum = 0.0, count = 0.0;
        for (const auto& rec : records) {
            int bin = static_cast<int>(rec.confidence * num_bins);
            if (bin >= num_bins) bin = num_bins - 1;
            if (bin != m) continue;
            conf_sum += rec.confidence;
            correct_sum += rec.correct;
            count += 1.0;
        }
        if (count == 0.0) continue;
        const double conf_mean = conf_sum / count;
        const double acc_mean = correct_sum / count;
        if (conf_mean > acc_mean) total += (count / n) * (conf_mean - acc_mean);
    }
    return total;
}

// AUROC as the literal pair probability: loop over every (positive, negative)
// pair, ties worth one half.
inline std::optional<double> auroc_bruteforce(const std::vector<dcpo::CalibrationRecord>& records) {
    double wins = 0.0;
    long long pairs = 0;
    for (const auto& pos : records) {
        if (pos.correct != 1) continue;
        for (const auto& neg : records) {
            if (neg.correct != 0) continue;
            ++pairs;
            if (pos.confidence > neg.confidence) wins += 1.0;
            else if (pos.confidence == neg.confidence) wins += 0.5;
        }
    }
    if (pairs == 0) return std::nullopt;
    return wins / static_cast<double>(pairs);
}

inline double brier_bruteforce(const std::vector<dcpo::CalibrationRecord>& records) {
    double total = 0.0;
    for (const auto& rec : records) {
        const double d = rec.confidence - rec.correct;
        total += d * d;
    }
    return total / static_cast<double>(records.size());
}

// Eq.-1 style normalization by direct arithmetic, independent of the library path.
inline std::pair<std::vector<double>, bool> normalize_bruteforce(const std::vector<double>& r) {
    const double g = static_cast<double>(r.size());
    double m = 0.0;
    for (double x : r) m += x;
    m /= g;
    double var = 0.0;
    for (double x : r) var += (x - m) * (x - m);
    var /= g;
    const double sigma = std::sqrt(var);
    std::vector<double> out(r.size(), 0.0);
    if (sigma < 1e-8) return {out, true};
    for (std::size_t i = 0; i < r.size(); ++i) out[i] = (r[i] - m) / sigma;
    return {out, false};
}

// Classic cyclic Jacobi rotations for symmetric matrices (dense vectors of
// vectors, no Eigen). Returns eigenvalues and column eigenvectors.
struct JacobiEigen {
    std::vector<double> values;
    std::vector<std::vector<double>> vectors;  // vectors[i] is the i-th eigenvector
};

inline JacobiEigen jacobi_eigen(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-28) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a[p][q] == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k];
                    const double aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k][p];
                    const double vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    JacobiEigen out;
    out.values.resize(n);
    out.vectors.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        out.values[i] = a[i][i];
        for (std::size_t k = 0; k < n; ++k) out.vectors[i][k] = v[k][i];
    }
    return out;
}

// a^T F^+ b through the Jacobi decomposition, dropping tiny eigenvalues.
inline double pinv_inner_bruteforce(const std::vector<double>& a, const std::vector<double>& b,
                                    const std::vector<std::vector<double>>& fisher) {
    const auto eig = jacobi_eigen(fisher);
    double lambda_max = 0.0;
    for (double lam : eig.values) lambda_max = std::max(lambda_max, std::abs(lam));
    const double cutoff = 1e-10 * lambda_max;
    double result = 0.0;
    for (std::size_t i = 0; i < eig.values.size(); ++i) {
        if (eig.values[i] <= cutoff) continue;
        double pa = 0.0, pb = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            pa += eig.vectors[i][k] * a[k];
            pb += eig.vectors[i][k] * b[k];
        }
        result += pa * pb / eig.values[i];
    }
    return result;
}

}  // namespace oracle
