#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "dcpo/calibration.hpp"
#include "test_support.hpp"

using namespace dcpo;

namespace {

std::vector<CalibrationRecord> random_records(Rng& rng, int max_size = 200) {
    const int n = 1 + static_cast<int>(rng.uniform() * max_size);
    std::vector<CalibrationRecord> records(n);
    for (auto& rec : records) {
        // occasional exact boundary values to stress the bin edges
        const double u = rng.uniform();
        if (u < 0.05) rec.confidence = 1.0;
        else if (u < 0.1) rec.confidence = 0.0;
        else if (u < 0.2) rec.confidence = std::round(rng.uniform() * 10.0) / 10.0;
        else rec.confidence = rng.uniform();
        rec.correct = rng.uniform() < 0.5 ? 1 : 0;
    }
    return records;
}

}  // namespace

TEST_CASE("bin_records partitions with a closed last bin", "[calibration]") {
    std::vector<CalibrationRecord> ones(5, {1.0, 1});
    const auto bins = bin_records(ones, 10);
    CHECK(bins.bins[9].count == 5);
    CHECK(bins.total == 5);

    const std::vector<CalibrationRecord> spec_example = {
        {0.95, 1}, {0.95, 0}, {0.45, 1}, {0.45, 0}};
    const auto b = bin_records(spec_example, 10);
    CHECK(b.bins[9].count == 2);
    CHECK(b.bins[9].accuracy == 0.5);
    CHECK(b.bins[9].mean_confidence == Catch::Approx(0.95).margin(1e-15));
    CHECK(b.bins[4].count == 2);
    CHECK(b.bins[4].accuracy == 0.5);
    CHECK(b.bins[4].mean_confidence == Catch::Approx(0.45).margin(1e-15));
    long long total = 0;
    for (const auto& bin : b.bins) total += bin.count;
    CHECK(total == b.total);

    CHECK_THROWS_AS(bin_records({}, 10), UsageError);
    CHECK_THROWS_AS(bin_records(ones, 0), UsageError);
}

TEST_CASE("ece hand examples", "[calibration]") {
    const std::vector<CalibrationRecord> example = {{0.95, 1}, {0.95, 0}, {0.45, 1}, {0.45, 0}};
    CHECK(ece(bin_records(example, 10)) == Catch::Approx(0.25).margin(1e-12));

    std::vector<CalibrationRecord> calibrated = {{1.0, 1}, {0.0, 0}};
    CHECK(ece(bin_records(calibrated, 10)) == 0.0);

    std::vector<CalibrationRecord> maximal(7, {1.0, 0});
    CHECK(ece(bin_records(maximal, 10)) == 1.0);
}

TEST_CASE("pce hand examples and the subset bound", "[calibration]") {
    const std::vector<CalibrationRecord> example = {{0.95, 1}, {0.95, 0}, {0.45, 1}, {0.45, 0}};
    CHECK(pce(bin_records(example, 10)) == Catch::Approx(0.225).margin(1e-12));

    // every occupied bin has accuracy above its mean confidence
    const std::vector<CalibrationRecord> under = {{0.1, 1}, {0.2, 1}, {0.05, 1}, {0.3, 1}};
    CHECK(pce(bin_records(under, 10)) == 0.0);

    Rng rng(19);
    for (int rep = 0; rep < 200; ++rep) {
        const auto records = random_records(rng);
        const auto bins = bin_records(records, 10);
        CHECK(pce(bins) <= ece(bins) + 1e-15);
        CHECK(ece(bins) <= 1.0 + 1e-15);
        CHECK(pce(bins) >= 0.0);
    }
}

TEST_CASE("auroc hand examples", "[calibration]") {
    CHECK(auroc({{0.9, 1}, {0.1, 0}}) == 1.0);
    CHECK(auroc({{0.9, 1}, {0.8, 0}, {0.3, 1}}) == 0.5);
    CHECK(auroc({{0.4, 1}, {0.4, 0}, {0.4, 1}}) == 0.5);
    CHECK_FALSE(auroc({{0.9, 1}, {0.3, 1}}).has_value());
    CHECK_FALSE(auroc({{0.9, 0}}).has_value());
}

TEST_CASE("auroc is invariant under strictly increasing transforms", "[calibration]") {
    Rng rng(29);
    for (int rep = 0; rep < 100; ++rep) {
        auto records = random_records(rng, 60);
        const auto base = auroc(records);
        auto transformed = records;
        for (auto& rec : transformed)
            rec.confidence = 1.0 / (1.0 + std::exp(-3.0 * (rec.confidence - 0.5)));
        const auto mapped = auroc(transformed);
        REQUIRE(base.has_value() == mapped.has_value());
        if (base) CHECK(*mapped == Catch::Approx(*base).margin(1e-12));
    }
}

TEST_CASE("brier hand examples", "[calibration]") {
    CHECK(brier({{1.0, 1}}) == 0.0);
    CHECK(brier({{0.5, 1}}) == 0.25);
    CHECK(brier({{0.5, 0}}) == 0.25);
    CHECK(brier({{0.8, 1}, {0.8, 0}}) == Catch::Approx(0.34).margin(1e-12));
}

TEST_CASE("metrics are permutation invariant", "[calibration]") {
    Rng rng(37);
    auto records = random_records(rng, 80);
    const auto base = compute_metrics(records);
    std::mt19937 shuffler(5);
    std::shuffle(records.begin(), records.end(), shuffler);
    const auto shuffled = compute_metrics(records);
    CHECK(base.ece == Catch::Approx(shuffled.ece).margin(1e-12));
    CHECK(base.pce == Catch::Approx(shuffled.pce).margin(1e-12));
    CHECK(base.brier == Catch::Approx(shuffled.brier).margin(1e-12));
    REQUIRE(base.auroc.has_value() == shuffled.auroc.has_value());
    if (base.auroc) CHECK(*base.auroc == Catch::Approx(*shuffled.auroc).margin(1e-12));
}

TEST_CASE("metrics match the brute-force oracles on random sets", "[calibration]") {
    Rng rng(43);
    for (int rep = 0; rep < 1000; ++rep) {
        const auto records = random_records(rng);
        const auto bins = bin_records(records, 10);
        CHECK(std::abs(ece(bins) - oracle::ece_bruteforce(records, 10)) <= 1e-12);
        CHECK(std::abs(pce(bins) - oracle::pce_bruteforce(records, 10)) <= 1e-12);
        CHECK(std::abs(brier(records) - oracle::brier_bruteforce(records)) <= 1e-12);
        const auto fast = auroc(records);
        const auto slow = oracle::auroc_bruteforce(records);
        REQUIRE(fast.has_value() == slow.has_value());
        if (fast) CHECK(std::abs(*fast - *slow) <= 1e-12);
    }
}

TEST_CASE("records CSV round-trips", "[calibration]") {
    Rng rng(53);
    const auto records = random_records(rng, 40);
    const auto csv = records_to_csv(records);
    const auto reloaded = records_from_csv(csv);
    REQUIRE(reloaded.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(reloaded[i].confidence == records[i].confidence);
        CHECK(reloaded[i].correct == records[i].correct);
    }
    CHECK_THROWS_AS(records_from_csv("confidence,correct\n0.5;1\n"), UsageError);
    CHECK_THROWS_AS(records_from_csv("0.5,2\n"), UsageError);
}

TEST_CASE("reliability CSV has the documented shape", "[calibration]") {
    const std::vector<CalibrationRecord> example = {{0.95, 1}, {0.45, 0}};
    const auto csv = reliability_to_csv(bin_records(example, 10));
    CHECK(csv.rfind("bin_lo,bin_hi,count,mean_conf,accuracy\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
}
