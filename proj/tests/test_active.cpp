#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "isingdyn/active.hpp"
#include "support/oracles.hpp"

using namespace isingdyn;

TEST_CASE("entropy of the free model is exactly n ln 2") {
    const IsingModel model(16, {});
    const SpinConfiguration sigma(16, 1);
    CHECK(glauber_entropy(model, sigma) == 16.0 * std::log(2.0));
}

TEST_CASE("single-node entropy value at A = 1") {
    const IsingModel model(2, {{0, 1, 1.0}});
    // only node 0 and node 1 both see A = +-1; per-node term ln(2 cosh 1) - tanh 1
    const double term = 0.3653338550872076;
    CHECK(glauber_entropy(model, {1, 1}) == doctest::Approx(2.0 * term).epsilon(1e-12));
}

TEST_CASE("entropy bounds and zero-field symmetry") {
    RngStream rng(42);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<Edge> edges;
        for (int i = 0; i < 6; ++i)
            for (int j = i + 1; j < 6; ++j)
                if (rng.next_bernoulli(0.5)) edges.push_back({i, j, 3.0 * (rng.next_double() - 0.5)});
        if (edges.empty()) edges.push_back({0, 1, 1.0});
        const IsingModel model(6, std::move(edges));
        for (int c = 0; c < 10; ++c) {
            SpinConfiguration sigma(6);
            for (auto& s : sigma) s = rng.next_bernoulli(0.5) ? 1 : -1;
            const double s_val = glauber_entropy(model, sigma);
            CHECK(s_val >= 0.0);
            CHECK(s_val <= 6.0 * std::log(2.0) + 1e-12);
            SpinConfiguration flipped = sigma;
            for (auto& s : flipped) s = static_cast<Spin>(-s);
            CHECK(glauber_entropy(model, flipped) == s_val);
        }
    }
}

TEST_CASE("mixing coefficient") {
    CHECK(mixing_coefficient(1) == 0.0);
    CHECK(mixing_coefficient(64) == 0.5);
    double prev = 0.0;
    for (std::size_t c = 1; c < 4000; c += 7) {
        const double mu = mixing_coefficient(c);
        CHECK(mu >= prev);
        CHECK(mu < 1.0);
        prev = mu;
    }
    CHECK_THROWS_AS(mixing_coefficient(0), std::invalid_argument);
}

TEST_CASE("query distribution of the free model is exactly uniform") {
    const IsingModel model(8, {});
    for (double mu : {0.0, 0.3, 1.0}) {
        const QueryDistribution q = build_query_distribution(model, mu);
        REQUIRE(q.probabilities.size() == 256);
        for (double p : q.probabilities) CHECK(p == 1.0 / 256.0);
    }
}

TEST_CASE("mu = 0 gives the uniform distribution for any estimate") {
    const IsingModel model(6, {{0, 1, 2.0}, {2, 3, -1.0}});
    const QueryDistribution q = build_query_distribution(model, 0.0);
    for (double p : q.probabilities) CHECK(p == doctest::Approx(1.0 / 64.0).epsilon(1e-12));
}

TEST_CASE("query probabilities are normalized and rescale-invariant") {
    const IsingModel model(6, {{0, 1, 1.2}, {1, 2, -0.5}, {3, 4, 0.8}});
    const QueryDistribution q = build_query_distribution(model, 0.7);
    long double total = 0.0L;
    for (double p : q.probabilities) {
        CHECK(p >= 0.0);
        total += p;
    }
    CHECK(std::abs(static_cast<double>(total) - 1.0) <= 1e-10);

    // scaling all entropies by a positive constant leaves q unchanged
    std::vector<double> entropies(64);
    RngStream rng(77);
    for (auto& s : entropies) s = rng.next_double();
    const QueryDistribution a = query_distribution_from_entropies(entropies, 0.6);
    for (auto& s : entropies) s *= 17.5;
    const QueryDistribution b = query_distribution_from_entropies(entropies, 0.6);
    for (std::size_t k = 0; k < a.probabilities.size(); ++k)
        CHECK(a.probabilities[k] == doctest::Approx(b.probabilities[k]).epsilon(1e-12));

    // all-zero entropies fall back to uniform
    const QueryDistribution degenerate =
        query_distribution_from_entropies(std::vector<double>(16, 0.0), 0.9);
    for (double p : degenerate.probabilities) CHECK(p == 1.0 / 16.0);
}

TEST_CASE("lookup-table entropy enumeration matches the direct formula") {
    RngStream rng(88);
    std::vector<Edge> edges{{0, 1, 0.9}, {1, 2, -1.3}, {2, 3, 0.4}, {0, 3, 0.7}, {1, 4, 1.1}};
    std::vector<double> fields{0.1, -0.2, 0.0, 0.3, -0.1};
    const IsingModel model(5, std::move(edges), std::move(fields));
    const QueryDistribution q = build_query_distribution(model, 1.0);
    std::vector<double> entropies(32);
    long double total = 0.0L;
    for (std::size_t mask = 0; mask < 32; ++mask) {
        entropies[mask] = glauber_entropy(model, q.configuration(mask));
        total += entropies[mask];
    }
    for (std::size_t mask = 0; mask < 32; ++mask)
        CHECK(q.probabilities[mask] ==
              doctest::Approx(entropies[mask] / static_cast<double>(total)).epsilon(1e-10));
}

TEST_CASE("build_query_distribution rejects large supports") {
    CHECK_THROWS_AS(build_query_distribution(IsingModel(21, {}), 0.5), std::invalid_argument);
}

TEST_CASE("active learning accounting and sample validity") {
    const IsingModel truth(6, {{0, 1, 0.8}, {1, 2, 0.8}, {3, 4, -0.8}});
    ActiveConfig cfg;
    cfg.i_max = 5;
    cfg.m_b = 40;
    cfg.initial_count = 100;
    cfg.reg.c_lambda = 0.1;
    RngStream rng(5150);
    const ActiveResult result = active_learn(model_query_oracle(truth), 6, cfg, rng);
    CHECK(result.samples.size() == 100 + 5 * 40);
    CHECK(result.samples.regime() == Regime::M);
    result.samples.validate();
    REQUIRE(result.rounds.size() == 5);
    for (int r = 0; r < 5; ++r) {
        CHECK(result.rounds[static_cast<std::size_t>(r)].round == r + 1);
        CHECK(result.rounds[static_cast<std::size_t>(r)].accumulated_samples ==
              100 + static_cast<std::size_t>(r) * 40);
        CHECK(result.rounds[static_cast<std::size_t>(r)].mu < 1.0);
        CHECK(result.rounds[static_cast<std::size_t>(r)].entropy_max <= 6.0 * std::log(2.0) + 1e-12);
    }
    CHECK(result.estimates.size() == 6);
}

TEST_CASE("forced mu = 0 reduces to plain uniform queries") {
    const IsingModel truth(5, {{0, 1, 1.2}, {2, 3, 1.2}});
    ActiveConfig cfg;
    cfg.i_max = 8;
    cfg.m_b = 500;
    cfg.initial_count = 400;
    cfg.reg.c_lambda = 0.1;
    cfg.forced_mu = 0.0;
    RngStream rng(6001);
    const ActiveResult result = active_learn(model_query_oracle(truth), 5, cfg, rng);
    // sigma0 marginals should look uniform: mean of each coordinate near 0
    const double bound = 4.0 / std::sqrt(static_cast<double>(result.samples.size()));
    for (int i = 0; i < 5; ++i) {
        long double mean = 0.0L;
        for (std::size_t t = 0; t < result.samples.size(); ++t)
            mean += result.samples.sigma0(t)[static_cast<std::size_t>(i)];
        CHECK(std::abs(static_cast<double>(mean) / result.samples.size()) <= bound);
    }
}

TEST_CASE("for_total_budget splits the budget exactly") {
    for (std::size_t total : {100, 1001, 4567, 30000}) {
        const ActiveConfig cfg = ActiveConfig::for_total_budget(total, 15, 1.0 / 3.0);
        CHECK(cfg.total_samples() == total);
        CHECK(cfg.m_b >= 1);
        // seed set is near a third of the budget
        CHECK(std::abs(static_cast<double>(cfg.seed_set_size()) - total / 3.0) <=
              static_cast<double>(cfg.i_max) + 1.0);
    }
}

TEST_CASE("active run replays identically from the same seed") {
    const IsingModel truth(5, {{0, 1, 1.0}, {1, 2, -1.0}});
    ActiveConfig cfg;
    cfg.i_max = 3;
    cfg.m_b = 30;
    cfg.initial_count = 60;
    cfg.reg.c_lambda = 0.1;
    RngStream a(7777), b(7777);
    const ActiveResult ra = active_learn(model_query_oracle(truth), 5, cfg, a);
    const ActiveResult rb = active_learn(model_query_oracle(truth), 5, cfg, b);
    REQUIRE(ra.samples.size() == rb.samples.size());
    for (std::size_t t = 0; t < ra.samples.size(); ++t) {
        CHECK(ra.samples.updated_node(t) == rb.samples.updated_node(t));
        CHECK(std::equal(ra.samples.sigma0(t).begin(), ra.samples.sigma0(t).end(),
                         rb.samples.sigma0(t).begin()));
    }
    for (std::size_t k = 0; k < ra.estimates.size(); ++k)
        CHECK(ra.estimates[k].couplings == rb.estimates[k].couplings);
}
