#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dcpo/policy.hpp"

using namespace dcpo;

namespace {

TaskSuite one_task_suite(int n, std::vector<int> correct = {0}) {
    TaskSuite suite;
    TaskInstance task;
    task.task_id = 0;
    task.num_trajectories = n;
    task.correct_set = std::move(correct);
    task.phi.assign(n, 0.5);
    for (int y = 0; y < n; ++y) task.answer_strings.push_back(std::to_string(y));
    task.validate();
    suite.tasks.push_back(std::move(task));
    return suite;
}

PolicyParams random_params(const TaskSuite& suite, Rng& rng, int vocab_size = 21) {
    PolicyParams params = make_uniform_params(suite, ConfidenceVocab::even_grid(vocab_size));
    for (auto& blk : params.tasks) {
        for (double& l : blk.reasoning_logits) l = rng.uniform(-2.0, 2.0);
        for (auto& row : blk.confidence_logits)
            for (double& l : row) l = rng.uniform(-2.0, 2.0);
    }
    return params;
}

}  // namespace

TEST_CASE("reasoning_dist softmax closed forms", "[policy]") {
    auto suite = one_task_suite(4);
    auto params = make_uniform_params(suite, ConfidenceVocab::even_grid());
    auto probs = reasoning_dist(params, 0);
    for (double p : probs) CHECK(p == Catch::Approx(0.25).margin(1e-15));

    params.tasks[0].reasoning_logits = {std::log(4.0), 0.0, 0.0, 0.0};
    probs = reasoning_dist(params, 0);
    CHECK(probs[0] == Catch::Approx(4.0 / 7.0).margin(1e-12));
    CHECK(probs[1] == Catch::Approx(1.0 / 7.0).margin(1e-12));

    double sum = 0.0;
    for (double p : probs) sum += p;
    CHECK(std::abs(sum - 1.0) <= 1e-12);

    params.tasks[0].reasoning_logits[2] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(reasoning_dist(params, 0), NumericError);
}

TEST_CASE("confidence_dist normalization and concentration", "[policy]") {
    auto suite = one_task_suite(3);
    auto params = make_uniform_params(suite, ConfidenceVocab::even_grid(21));
    auto conf = confidence_dist(params, 0, 1);
    REQUIRE(conf.size() == 21);
    for (double q : conf) CHECK(q == Catch::Approx(1.0 / 21.0).margin(1e-15));

    params.tasks[0].confidence_logits[1][5] = 10.0;
    conf = confidence_dist(params, 0, 1);
    CHECK(conf[5] >= 0.999);
    double sum = 0.0;
    for (double q : conf) sum += q;
    CHECK(std::abs(sum - 1.0) <= 1e-12);
}

TEST_CASE("sequence_confidence equals the reasoning probability", "[policy]") {
    Rng rng(17);
    for (int rep = 0; rep < 100; ++rep) {
        auto suite = one_task_suite(5, {1, 2});
        auto params = random_params(suite, rng, 5);
        const auto probs = reasoning_dist(params, 0);
        for (int y = 0; y < 5; ++y)
            CHECK(sequence_confidence(params, 0, y) == probs[y]);
    }
}

TEST_CASE("score matches the softmax score identity", "[policy]") {
    auto suite = one_task_suite(2);
    auto params = make_uniform_params(suite, ConfidenceVocab::even_grid());
    const auto g = score(params, 0, 0);
    CHECK(g[0] == Catch::Approx(0.5).margin(1e-15));
    CHECK(g[1] == Catch::Approx(-0.5).margin(1e-15));

    Rng rng(23);
    for (int rep = 0; rep < 100; ++rep) {
        auto s = one_task_suite(6, {0, 3});
        auto p = random_params(s, rng, 5);
        const auto probs = reasoning_dist(p, 0);
        std::vector<double> expectation(6, 0.0);
        for (int y = 0; y < 6; ++y) {
            const auto gy = score(p, 0, y);
            for (int i = 0; i < 6; ++i) expectation[i] += probs[y] * gy[i];
        }
        for (double e : expectation) CHECK(std::abs(e) <= 1e-12);
    }
}

TEST_CASE("score matches finite differences of log pi", "[policy]") {
    Rng rng(31);
    auto suite = one_task_suite(5);
    auto params = random_params(suite, rng, 5);
    const int y = 2;
    const auto g = score(params, 0, y);
    const double h = 1e-5;
    for (int i = 0; i < 5; ++i) {
        auto plus = params;
        auto minus = params;
        plus.tasks[0].reasoning_logits[i] += h;
        minus.tasks[0].reasoning_logits[i] -= h;
        const double fd = (std::log(reasoning_dist(plus, 0)[y]) -
                           std::log(reasoning_dist(minus, 0)[y])) /
                          (2.0 * h);
        CHECK(std::abs(fd - g[i]) <= 1e-6);
    }
}

TEST_CASE("fisher_matrix closed form and gauge direction", "[policy]") {
    auto suite = one_task_suite(2);
    auto params = make_uniform_params(suite, ConfidenceVocab::even_grid());
    const auto fisher = fisher_matrix(params, 0);
    CHECK(fisher(0, 0) == Catch::Approx(0.25).margin(1e-15));
    CHECK(fisher(0, 1) == Catch::Approx(-0.25).margin(1e-15));
    CHECK(fisher(1, 0) == Catch::Approx(-0.25).margin(1e-15));
    CHECK(fisher(1, 1) == Catch::Approx(0.25).margin(1e-15));

    Rng rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        auto s = one_task_suite(7, {2});
        auto p = random_params(s, rng, 5);
        const auto f = fisher_matrix(p, 0);
        // F 1 = 0 and eigenvalues >= -1e-12
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(7);
        CHECK((f * ones).cwiseAbs().maxCoeff() <= 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f);
        CHECK(es.eigenvalues().minCoeff() >= -1e-12);
        // F = sum_y p(y) g(y) g(y)^T
        const auto probs = reasoning_dist(p, 0);
        Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(7, 7);
        for (int y = 0; y < 7; ++y) {
            const auto gy = score(p, 0, y);
            Eigen::Map<const Eigen::VectorXd> gv(gy.data(), 7);
            outer += probs[y] * gv * gv.transpose();
        }
        CHECK((outer - f).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("entropy closed forms and bound", "[policy]") {
    auto suite = one_task_suite(4);
    auto params = make_uniform_params(suite, ConfidenceVocab::even_grid());
    CHECK(entropy(params, 0) == Catch::Approx(std::log(4.0)).margin(1e-12));

    params.tasks[0].reasoning_logits = {60.0, 0.0, 0.0, 0.0};
    CHECK(entropy(params, 0) <= 1e-12);

    Rng rng(41);
    for (int rep = 0; rep < 50; ++rep) {
        auto p = random_params(suite, rng, 5);
        CHECK(entropy(p, 0) <= std::log(4.0) + 1e-12);
        CHECK(entropy(p, 0) >= 0.0);
    }
}

TEST_CASE("sample_rollout degenerate and contract cases", "[policy]") {
    auto suite = one_task_suite(4, {1});
    auto params = make_uniform_params(suite, ConfidenceVocab::even_grid());
    params.tasks[0].reasoning_logits = {-50.0, 50.0, -50.0, -50.0};
    for (auto& row : params.tasks[0].confidence_logits) {
        std::fill(row.begin(), row.end(), -50.0);
        row[7] = 50.0;
    }
    Rng rng(13);
    const auto rollout = sample_rollout(params, suite.tasks[0], 8, 0.0, rng);
    REQUIRE(rollout.samples.size() == 8);
    for (const auto& s : rollout.samples) {
        CHECK(s.trajectory == 1);
        CHECK(s.conf_bin == 7);
        CHECK(s.well_formed);
        CHECK(s.conf_value == params.vocab.values[7]);
        CHECK(std::abs(std::exp(s.logprob_reasoning) -
                       sequence_confidence(params, 0, s.trajectory)) <= 1e-12);
    }
    CHECK_THROWS_AS(sample_rollout(params, suite.tasks[0], 1, 0.0, rng), UsageError);
    CHECK_THROWS_AS(sample_rollout(params, suite.tasks[0], 8, 1.0, rng), UsageError);
}

TEST_CASE("sample_rollout empirical frequencies converge", "[policy]") {
    auto suite = one_task_suite(4, {2});
    auto params = make_uniform_params(suite, ConfidenceVocab::even_grid());
    Rng rng(2024);
    std::vector<int> counts(4, 0);
    const int total = 100000;
    int drawn = 0;
    while (drawn < total) {
        const auto rollout = sample_rollout(params, suite.tasks[0], 8, 0.0, rng);
        for (const auto& s : rollout.samples) {
            ++counts[s.trajectory];
            ++drawn;
        }
    }
    double chi2 = 0.0;
    for (int y = 0; y < 4; ++y) {
        const double freq = static_cast<double>(counts[y]) / total;
        CHECK(std::abs(freq - 0.25) <= 0.01);
        const double expected = total * 0.25;
        chi2 += (counts[y] - expected) * (counts[y] - expected) / expected;
    }
    CHECK(chi2 <= 16.27);  // chi-square df=3, p=0.001
}

TEST_CASE("corrupt_prob drives the malformed flag", "[policy]") {
    auto suite = one_task_suite(3, {1});
    auto params = make_uniform_params(suite, ConfidenceVocab::even_grid());
    Rng rng(8);
    const auto clean = sample_rollout(params, suite.tasks[0], 64, 0.0, rng);
    for (const auto& s : clean.samples) CHECK(s.well_formed);
    const auto noisy = sample_rollout(params, suite.tasks[0], 2048, 0.5, rng);
    int malformed = 0;
    for (const auto& s : noisy.samples) malformed += s.well_formed ? 0 : 1;
    CHECK(malformed > 800);
    CHECK(malformed < 1300);
}

TEST_CASE("checkpoint JSON round-trips bit-exactly", "[policy]") {
    Rng rng(77);
    auto suite = one_task_suite(5, {0, 4});
    auto params = random_params(suite, rng);
    const auto dumped = params_to_json(params).dump();
    const auto reloaded = params_from_json(nlohmann::json::parse(dumped));
    CHECK(params_to_json(reloaded).dump() == dumped);
}

TEST_CASE("anchored initialization is over-confident and phi-tied", "[policy]") {
    auto suite = generate_suite(5, 6, 12, {{0.25, 1.0}});
    ConfidenceInit init;
    const auto params = make_initial_params(suite, ConfidenceVocab::even_grid(), init);
    for (std::size_t t = 0; t < suite.tasks.size(); ++t) {
        double uniform_acc =
            static_cast<double>(suite.tasks[t].correct_set.size()) / suite.tasks[t].num_trajectories;
        CHECK(mean_verbal_confidence(params, static_cast<int>(t)) > uniform_acc);
    }
}
