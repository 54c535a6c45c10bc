#include "doctest.h"
#include "oracles.hpp"

#include "marginalis/compare.hpp"
#include "marginalis/diagnostics.hpp"
#include "marginalis/error.hpp"
#include "marginalis/normal.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace marginalis;

namespace {

std::vector<double> normal_draws(std::size_t n, double mu, double sd, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(mu, sd);
    std::vector<double> x(n);
    for (auto& v : x) v = z(rng);
    return x;
}

}  // namespace

TEST_CASE("Bayes factor") {
    const BayesFactor b = bayes_factor(std::log(0.2), std::log(0.05));
    CHECK(b.bf == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(b.log_bf == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    const BayesFactor inv = bayes_factor(std::log(0.05), std::log(0.2));
    CHECK(inv.log_bf == -b.log_bf);
    CHECK(bayes_factor(-1000.0, -1003.0).log_bf == doctest::Approx(3.0));
    CHECK_THROWS_AS(bayes_factor(-INFINITY, 0.0), DomainError);
}

TEST_CASE("posterior model probabilities") {
    ModelComparison c{{"a", "b", "c"}, {std::log(0.1), std::log(0.3), std::log(0.6)}, {}};
    auto p = posterior_model_probs(c);
    CHECK(p[0] == doctest::Approx(0.1));
    CHECK(p[1] == doctest::Approx(0.3));
    CHECK(p[2] == doctest::Approx(0.6));

    c.prior_probs = {0.5, 0.5, 0.0};
    p = posterior_model_probs(c);
    CHECK(p[0] == doctest::Approx(0.25));
    CHECK(p[1] == doctest::Approx(0.75));
    CHECK(p[2] == 0.0);

    ModelComparison deep{{}, {-5000.0, -5001.0}, {}};
    p = posterior_model_probs(deep);
    CHECK(p[0] == doctest::Approx(1 / (1 + std::exp(-1.0))));
    CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-12));

    c.prior_probs = {0.5, 0.6, 0.1};
    CHECK_THROWS_AS(posterior_model_probs(c), DomainError);
    c.prior_probs = {0.5, 0.5};
    CHECK_THROWS_AS(posterior_model_probs(c), DimensionError);
}

TEST_CASE("Silverman bandwidth") {
    const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    // sd = sqrt(55/6), IQR (type 7) = 7.75 - 3.25 = 4.5
    const double sd = std::sqrt(55.0 / 6.0);
    const double expect = 0.9 * std::min(sd, 4.5 / 1.34) * std::pow(10.0, -0.2);
    CHECK(silverman_bandwidth(x) == doctest::Approx(expect).epsilon(1e-14));
    const std::vector<double> spiky{0, 0, 0, 0, 0, 0, 0, 1};
    CHECK(silverman_bandwidth(spiky) > 0.0);
    const std::vector<double> flat(5, 2.0);
    CHECK_THROWS_AS(silverman_bandwidth(flat), DomainError);
}

TEST_CASE("Savage-Dickey on a conjugate normal problem") {
    // Prior N(0, 1), posterior N(0.5, 0.3^2): BF01 at 0 = post(0) / prior(0),
    // so the prior-over-posterior ratio is prior(0) / post(0).
    const auto draws = normal_draws(200000, 0.5, 0.3, 1);
    const ScalarLogDensity prior = [](double x) { return std_normal_log_pdf(x); };
    const SavageDickey sd = savage_dickey(prior, draws, 0.0);
    const double expect = std::log(oracle::normal_pdf(0.0) / oracle::normal_pdf(0.0, 0.5, 0.3));
    CHECK(std::abs(sd.log_bf - expect) < 0.03);
    CHECK_FALSE(sd.tail_warning);
    CHECK(sd.bf == doctest::Approx(std::exp(sd.log_bf)));

    std::vector<std::string> msgs;
    auto prev = set_warning_sink([&](const std::string& m) { msgs.push_back(m); });
    const SavageDickey far = savage_dickey(prior, draws, 5.0);
    set_warning_sink(prev);
    CHECK(far.tail_warning);
    CHECK(msgs.size() == 1);

    const std::vector<double> few(50, 0.1);
    CHECK_THROWS_AS(savage_dickey(prior, few, 0.0), DomainError);
}

TEST_CASE("intersection of prior and posterior densities") {
    // N(0, 1) prior vs N(1, 0.5^2) posterior: log ratio is a quadratic with
    // two roots; the one near the posterior mode lies between 0 and 1.
    const auto draws = normal_draws(100000, 1.0, 0.5, 2);
    const ScalarLogDensity prior = [](double x) { return std_normal_log_pdf(x); };
    const double x = find_intersection(prior, draws);
    // Equal log densities: 1.5 x^2 - 4 x + 2 - log 2 = 0.
    const double a = 1.5, b = -4.0, c = 2.0 - std::log(2.0);
    const double r1 = (-b - std::sqrt(b * b - 4 * a * c)) / (2 * a);
    CHECK(x == doctest::Approx(r1).epsilon(0.02));
    CHECK(find_intersection(prior, draws, 512, Exec::serial) == x);

    const ScalarLogDensity tiny = [](double) { return -1000.0; };
    CHECK_THROWS_AS(find_intersection(tiny, draws), NoIntersectionError);
}
