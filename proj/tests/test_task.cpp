#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dcpo/task.hpp"

using namespace dcpo;

TEST_CASE("generate_suite honors the difficulty spec", "[task]") {
    const auto suite = generate_suite(7, 4, 10, {{0.3, 1.0}});
    REQUIRE(suite.tasks.size() == 4);
    for (const auto& task : suite.tasks) {
        CHECK(task.correct_set.size() == 3);
        CHECK(task.num_trajectories == 10);
    }
}

TEST_CASE("generate_suite is deterministic", "[task]") {
    const auto a = generate_suite(7, 6, 12, {{0.25, 0.5}, {0.5, 0.5}});
    const auto b = generate_suite(7, 6, 12, {{0.25, 0.5}, {0.5, 0.5}});
    REQUIRE(suite_to_json(a).dump() == suite_to_json(b).dump());
}

TEST_CASE("generated mean fraction-correct tracks the weighted spec", "[task]") {
    const auto suite = generate_suite(7, 50, 20, {{0.25, 0.5}, {0.75, 0.5}});
    double mean_fraction = 0.0;
    for (const auto& task : suite.tasks)
        mean_fraction += static_cast<double>(task.correct_set.size()) / task.num_trajectories;
    mean_fraction /= static_cast<double>(suite.tasks.size());
    CHECK(std::abs(mean_fraction - 0.5) <= 0.1);
}

TEST_CASE("generate_suite rejects bad configurations", "[task]") {
    CHECK_THROWS_AS(generate_suite(1, 0, 10, {{0.3, 1.0}}), ConfigError);
    CHECK_THROWS_AS(generate_suite(1, 2, 10, {}), ConfigError);
    // fraction rounds to zero correct trajectories
    CHECK_THROWS_AS(generate_suite(1, 2, 10, {{0.01, 1.0}}), ConfigError);
    // weights must sum to 1
    CHECK_THROWS_AS(generate_suite(1, 2, 10, {{0.3, 0.4}}), ConfigError);
    // degenerate |Y+| = N rejected unless requested
    CHECK_THROWS_AS(generate_suite(1, 2, 10, {{1.0, 1.0}}), ConfigError);
    SuiteOptions allow;
    allow.allow_degenerate = true;
    CHECK_NOTHROW(generate_suite(1, 2, 10, {{1.0, 1.0}}, allow));
}

TEST_CASE("correctness is membership in the correct set", "[task]") {
    TaskInstance task;
    task.task_id = 0;
    task.num_trajectories = 10;
    task.correct_set = {1, 3};
    task.phi.assign(10, 0.5);
    for (int y = 0; y < 10; ++y) task.answer_strings.push_back(std::to_string(y));
    task.validate();

    CHECK(correctness(task, 3) == 1);
    CHECK(correctness(task, 0) == 0);
    CHECK_THROWS_AS(correctness(task, 10), UsageError);

    // exhaustive enumeration: |Y+| = 3 of 10 with one more member
    task.correct_set = {1, 3, 7};
    int sum = 0;
    for (int y = 0; y < task.num_trajectories; ++y) sum += correctness(task, y);
    CHECK(static_cast<double>(sum) / task.num_trajectories == Catch::Approx(0.3));
}

namespace {

TaskInstance answer_task(const std::string& answer) {
    TaskInstance task;
    task.task_id = 0;
    task.num_trajectories = 2;
    task.correct_set = {0};
    task.phi = {1.0, 0.2};
    task.answer_strings = {answer, answer + "_alt"};
    task.validate();
    return task;
}

}  // namespace

TEST_CASE("render_output matches the prescribed format", "[task]") {
    const auto task = answer_task("42");
    const auto ok = render_output(task, 0, 0.83, false);
    CHECK(ok.text == "42 <conf> Confidence: 0.83");
    CHECK(ok.is_well_formed);

    const auto corrupt = render_output(task, 0, 0.83, true);
    CHECK(corrupt.text.find("<conf>") == std::string::npos);
    CHECK_FALSE(corrupt.is_well_formed);

    const auto seven = render_output(answer_task("7"), 0, 1.0, false);
    CHECK(seven.text == "7 <conf> Confidence: 1.00");
}

TEST_CASE("parse_confidence accepts the format and enforces the range", "[task]") {
    CHECK(parse_confidence("x=3 <conf> Confidence: 0.83") == 0.83);
    CHECK_FALSE(parse_confidence("x=3 Confidence: 0.83").has_value());
    CHECK_FALSE(parse_confidence("x=3 <conf> Confidence: 1.7").has_value());
    CHECK_FALSE(parse_confidence("x=3 <conf> Confidence: -0.2").has_value());
    CHECK_FALSE(parse_confidence("x=3 <conf> Confidence: abc").has_value());
    CHECK_FALSE(parse_confidence("x=3 <conf> sure").has_value());
    CHECK(parse_confidence("y <conf> Confidence: 1") == 1.0);
}

TEST_CASE("render/parse round-trip holds to 2 decimals", "[task]") {
    const auto task = answer_task("ans");
    Rng rng(99);
    for (int i = 0; i < 200; ++i) {
        const double c = rng.uniform();
        const auto rendered = render_output(task, 1, c, false);
        const auto parsed = parse_confidence(rendered.text);
        REQUIRE(parsed.has_value());
        CHECK(*parsed == Catch::Approx(std::round(c * 100.0) / 100.0).margin(1e-9));
    }
}

TEST_CASE("default phi generation keeps Cov_uniform(R, phi) positive", "[task]") {
    const auto suite = generate_suite(3, 30, 15, {{0.2, 0.5}, {0.4, 0.5}});
    for (const auto& task : suite.tasks) {
        const double n = task.num_trajectories;
        double e_r = 0.0, e_phi = 0.0, e_rphi = 0.0;
        for (int y = 0; y < task.num_trajectories; ++y) {
            const double r = task.is_correct(y) ? 1.0 : 0.0;
            e_r += r / n;
            e_phi += task.phi[y] / n;
            e_rphi += r * task.phi[y] / n;
        }
        CHECK(e_rphi - e_r * e_phi > 0.0);
    }
}

TEST_CASE("suite JSON round-trips bit-exactly", "[task]") {
    const auto suite = generate_suite(11, 9, 14, {{0.25, 1.0}});
    const auto dumped = suite_to_json(suite).dump();
    const auto reloaded = suite_from_json(nlohmann::json::parse(dumped));
    CHECK(suite_to_json(reloaded).dump() == dumped);
}
