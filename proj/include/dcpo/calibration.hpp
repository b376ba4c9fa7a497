#pragma once

// Calibration metrics and reliability-diagram data: equal-width binning,
// ECE, PCE, AUROC (rank/Mann-Whitney with midrank ties), and Brier score.

#include <algorithm>
#include <numeric>
#include <optional>
#include <sstream>
#include <vector>

#include "dcpo/util.hpp"

namespace dcpo {

struct CalibrationRecord {
    double confidence = 0.0;  // in [0,1]
    int correct = 0;          // {0,1}
};

struct ReliabilityBin {
    long long count = 0;
    double mean_confidence = 0.0;  // c(B_m), 0 for empty bins
    double accuracy = 0.0;         // a(B_m), 0 for empty bins
};

struct ReliabilityBins {
    int num_bins = 0;
    long long total = 0;
    std::vector<ReliabilityBin> bins;

    double bin_lo(int m) const { return static_cast<double>(m) / num_bins; }
    double bin_hi(int m) const { return static_cast<double>(m + 1) / num_bins; }
};

// Equal-width bins over [0,1]; bin m covers [m/M, (m+1)/M) and the last bin is
// closed at 1.0. Empty bins keep count 0 and contribute nothing downstream.
inline ReliabilityBins bin_records(const std::vector<CalibrationRecord>& records, int num_bins) {
    if (num_bins < 1) throw UsageError("bin count must be >= 1");
    if (records.empty()) throw UsageError("bin_records needs at least one record");
    ReliabilityBins out;
    out.num_bins = num_bins;
    out.total = static_cast<long long>(records.size());
    out.bins.resize(num_bins);
    std::vector<double> conf_sum(num_bins, 0.0);
    std::vector<long long> correct_sum(num_bins, 0);
    for (const auto& rec : records) {
        if (!(rec.confidence >= 0.0 && rec.confidence <= 1.0))
            throw UsageError("record confidence must lie in [0,1]");
        if (rec.correct != 0 && rec.correct != 1)
            throw UsageError("record correctness must be 0 or 1");
        int m = static_cast<int>(rec.confidence * num_bins);
        if (m >= num_bins) m = num_bins - 1;  // confidence == 1.0
        out.bins[m].count += 1;
        conf_sum[m] += rec.confidence;
        correct_sum[m] += rec.correct;
    }
    for (int m = 0; m < num_bins; ++m) {
        if (out.bins[m].count == 0) continue;
        out.bins[m].mean_confidence = conf_sum[m] / static_cast<double>(out.bins[m].count);
        out.bins[m].accuracy =
            static_cast<double>(correct_sum[m]) / static_cast<double>(out.bins[m].count);
    }
    return out;
}

// Expected Calibration Error: sum_m (|B_m|/N) |a(B_m) - c(B_m)|.
inline double ece(const ReliabilityBins& bins) {
    if (bins.total < 1) throw UsageError("ece needs at least one record");
    double sum = 0.0;
    for (const auto& bin : bins.bins) {
        if (bin.count == 0) continue;
        sum += static_cast<double>(bin.count) / static_cast<double>(bins.total) *
               std::abs(bin.accuracy - bin.mean_confidence);
    }
    return sum;
}

// Positive Calibration Error: ECE restricted to bins where confidence exceeds
// accuracy (isolates over-confidence).
inline double pce(const ReliabilityBins& bins) {
    if (bins.total < 1) throw UsageError("pce needs at least one record");
    double sum = 0.0;
    for (const auto& bin : bins.bins) {
        if (bin.count == 0 || !(bin.mean_confidence > bin.accuracy)) continue;
        sum += static_cast<double>(bin.count) / static_cast<double>(bins.total) *
               std::abs(bin.accuracy - bin.mean_confidence);
    }
    return sum;
}

// Probability a uniformly random positive outranks a uniformly random negative,
// ties counted 0.5 (Mann-Whitney U via midranks). Undefined on single-class input.
inline std::optional<double> auroc(const std::vector<CalibrationRecord>& records) {
    const std::size_t n = records.size();
    long long n_pos = 0;
    for (const auto& rec : records) {
        if (rec.correct != 0 && rec.correct != 1)
            throw UsageError("record correctness must be 0 or 1");
        n_pos += rec.correct;
    }
    const long long n_neg = static_cast<long long>(n) - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&records](std::size_t a, std::size_t b) {
        return records[a].confidence < records[b].confidence;
    });
    // Midranks over tie runs; rank_sum over positives.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n &&
               records[order[j + 1]].confidence == records[order[i]].confidence)
            ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k)
            if (records[order[k]].correct == 1) rank_sum_pos += midrank;
        i = j + 1;
    }
    const double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// Mean squared error between confidence and correctness.
inline double brier(const std::vector<CalibrationRecord>& records) {
    if (records.empty()) throw UsageError("brier needs at least one record");
    double sum = 0.0;
    for (const auto& rec : records) {
        const double d = rec.confidence - static_cast<double>(rec.correct);
        sum += d * d;
    }
    return sum / static_cast<double>(records.size());
}

struct MetricsSummary {
    std::size_t n = 0;
    double ece = 0.0;
    double pce = 0.0;
    double brier = 0.0;
    std::optional<double> auroc;
};

inline MetricsSummary compute_metrics(const std::vector<CalibrationRecord>& records,
                                      int num_bins = 10) {
    const auto bins = bin_records(records, num_bins);
    MetricsSummary m;
    m.n = records.size();
    m.ece = ece(bins);
    m.pce = pce(bins);
    m.brier = brier(records);
    m.auroc = auroc(records);
    return m;
}

// --- CSV interchange ---

// Reads "confidence,correct" rows; a leading header line is accepted and skipped.
inline std::vector<CalibrationRecord> records_from_csv(const std::string& content) {
    std::vector<CalibrationRecord> records;
    std::istringstream in(content);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first && line.rfind("confidence", 0) == 0) {
            first = false;
            continue;
        }
        first = false;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw UsageError("records CSV row missing comma: " + line);
        const auto conf = parse_double(std::string_view(line).substr(0, comma));
        const auto correct = parse_double(std::string_view(line).substr(comma + 1));
        if (!conf || !correct) throw UsageError("records CSV row not numeric: " + line);
        if (*correct != 0.0 && *correct != 1.0)
            throw UsageError("records CSV correctness must be 0 or 1: " + line);
        records.push_back({*conf, static_cast<int>(*correct)});
    }
    return records;
}

inline std::string records_to_csv(const std::vector<CalibrationRecord>& records) {
    std::string out = "confidence,correct\n";
    for (const auto& rec : records)
        out += format_double(rec.confidence) + "," + std::to_string(rec.correct) + "\n";
    return out;
}

// "bin_lo,bin_hi,count,mean_conf,accuracy" rows (feeds reliability diagrams).
inline std::string reliability_to_csv(const ReliabilityBins& bins) {
    std::string out = "bin_lo,bin_hi,count,mean_conf,accuracy\n";
    for (int m = 0; m < bins.num_bins; ++m) {
        const auto& bin = bins.bins[m];
        out += format_double(bins.bin_lo(m)) + "," + format_double(bins.bin_hi(m)) + "," +
               std::to_string(bin.count) + "," + format_double(bin.mean_confidence) + "," +
               format_double(bin.accuracy) + "\n";
    }
    return out;
}

}  // namespace dcpo
