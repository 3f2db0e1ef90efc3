#include <doctest.h>

#include <cmath>

#include "nonxcrc/rng.hpp"
#include "nonxcrc/weights.hpp"
#include "support.hpp"

using namespace nonxcrc;

TEST_CASE("uniform_weights") {
    const WeightVector w = uniform_weights(3);
    CHECK(w.raw() == std::vector<double>{1.0, 1.0, 1.0});
    for (double v : w.normalized()) CHECK(v == doctest::Approx(0.25));

    CHECK(uniform_weights(0).normalized() == std::vector<double>{1.0});
    const WeightVector w1 = uniform_weights(1);
    CHECK(w1.normalized()[0] == doctest::Approx(0.5));
    CHECK(w1.normalized()[1] == doctest::Approx(0.5));
}

TEST_CASE("decay_weights") {
    SUBCASE("paper formula rho^{n+1-i}") {
        const WeightVector w = decay_weights(2, 0.99);
        REQUIRE(w.raw().size() == 2);
        CHECK(w.raw()[0] == doctest::Approx(0.9801).epsilon(1e-12));
        CHECK(w.raw()[1] == doctest::Approx(0.99).epsilon(1e-12));
    }
    SUBCASE("rho = 1 reduces to uniform") {
        CHECK(decay_weights(3, 1.0).raw() == std::vector<double>{1.0, 1.0, 1.0});
    }
    SUBCASE("single point") {
        CHECK(decay_weights(1, 0.5).raw() == std::vector<double>{0.5});
    }
    SUBCASE("recency: weights increase with i") {
        const WeightVector w = decay_weights(20, 0.9);
        for (std::size_t i = 1; i < w.raw().size(); ++i) {
            CHECK(w.raw()[i] > w.raw()[i - 1]);
        }
    }
    CHECK_THROWS_AS(decay_weights(3, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(decay_weights(3, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(decay_weights(3, -0.2), std::invalid_argument);
}

TEST_CASE("maxent_weights") {
    const RiskSpec spec(0.2, 0.0, 1.0);

    SUBCASE("beta = 0 flattens to uniform normalized weights") {
        const WeightVector w = maxent_weights(TvEstimates({0.3, 0.9, 0.1}), 0.0, spec);
        for (double v : w.raw()) CHECK(v == 1.0);
        for (double v : w.normalized()) CHECK(v == doctest::Approx(0.25));
    }

    SUBCASE("Lipschitz drift bound reproduces exponential decay") {
        const double eps = 0.01;
        const double beta = 3.0;
        const std::size_t n = 12;
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = eps * static_cast<double>(n - i);
        const WeightVector w = maxent_weights(TvEstimates(d), beta, spec);
        const double rho = std::exp(-beta * spec.range() * eps);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(w.raw()[i] ==
                  doctest::Approx(std::pow(rho, static_cast<double>(n - i))).epsilon(1e-12));
        }
    }

    SUBCASE("large beta concentrates on zero-distance entries") {
        const WeightVector w = maxent_weights(TvEstimates({1.0, 0.0}), 50.0, spec);
        REQUIRE(w.normalized().size() == 3);
        CHECK(w.normalized()[0] <= 1e-12);
        CHECK(w.normalized()[1] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(w.normalized()[2] == doctest::Approx(0.5).epsilon(1e-12));
    }

    CHECK_THROWS_AS(maxent_weights(TvEstimates({0.5}), -1.0, spec), std::invalid_argument);
    CHECK_THROWS_AS(TvEstimates({1.2}), std::invalid_argument);
    CHECK_THROWS_AS(TvEstimates({-0.1}), std::invalid_argument);
}

// The closed form minimizes the entropy-regularized coverage gap over the
// feasible normalized weights; compare against random feasible points.
TEST_CASE("maxent closed form beats random feasible alternatives") {
    Rng rng(1234);
    const RiskSpec spec(0.3, 0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 2 + rng.below(20);
        std::vector<double> d(n);
        for (auto& v : d) v = rng.uniform01();
        const double beta = rng.uniform(0.1, 5.0);

        const WeightVector closed = maxent_weights(TvEstimates(d), beta, spec);
        const double best = testsupport::maxent_objective(closed.normalized(), d, beta, spec);

        for (int k = 0; k < 100; ++k) {
            std::vector<double> raw(n);
            for (auto& v : raw) v = rng.uniform01();
            const WeightVector sample{raw};
            const double other =
                testsupport::maxent_objective(sample.normalized(), d, beta, spec);
            CHECK(best <= other + 1e-9);
        }
    }
}

TEST_CASE("similarity_weights") {
    SUBCASE("min-max of dot products") {
        const WeightVector w =
            similarity_weights({{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}}, {1.0, 0.0});
        CHECK(w.raw() == std::vector<double>{1.0, 0.5, 0.0});
    }
    SUBCASE("single calibration point degenerates to weight one") {
        CHECK(similarity_weights({{0.3, 0.4}}, {1.0, 2.0}).raw() == std::vector<double>{1.0});
    }
    SUBCASE("all-equal dot products fall back to uniform") {
        const WeightVector w =
            similarity_weights({{1.0, 0.0}, {1.0, 0.0}}, {0.0, 1.0});  // both dots zero
        CHECK(w.raw() == std::vector<double>{1.0, 1.0});
    }
    CHECK_THROWS_AS(similarity_weights({{1.0, 0.0}}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(similarity_weights({}, {1.0}), std::invalid_argument);
}

TEST_CASE("all schemes produce valid weight vectors") {
    Rng rng(555);
    const RiskSpec spec(0.2, -1.0, 2.0);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 1 + rng.below(30);
        std::vector<double> d(n);
        for (auto& v : d) v = rng.uniform01();
        std::vector<std::vector<double>> embeds(n, std::vector<double>(4));
        std::vector<double> test(4);
        for (auto& e : embeds) {
            for (auto& v : e) v = rng.gaussian();
        }
        for (auto& v : test) v = rng.gaussian();

        for (const WeightVector& w :
             {uniform_weights(n), decay_weights(n, 0.5 + 0.5 * rng.uniform01()),
              maxent_weights(TvEstimates(d), rng.uniform(0.0, 10.0), spec),
              similarity_weights(embeds, test)}) {
            double sum = 0.0;
            for (double v : w.normalized()) sum += v;
            CHECK(std::abs(sum - 1.0) <= 1e-12);
            for (double v : w.raw()) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
        }
    }
}
