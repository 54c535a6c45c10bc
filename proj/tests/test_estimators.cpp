#include "doctest.h"
#include "oracles.hpp"

#include "marginalis/diagnostics.hpp"
#include "marginalis/error.hpp"
#include "marginalis/estimators.hpp"
#include "marginalis/models.hpp"
#include "marginalis/normal.hpp"
#include "marginalis/pipeline.hpp"

#include <cmath>
#include <random>

using namespace marginalis;

namespace {

const BetaBinomialData kData{2, 10};
const double kLogMl = std::log(1.0 / 11.0);

Matrix column(const std::vector<double>& v) {
    Matrix m(static_cast<Eigen::Index>(v.size()), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
    return m;
}

// iid Beta(a, b) draws mapped to xi, as a sample store with `chains` chains.
SampleStore analytic_store(std::size_t per_chain, std::size_t chains, std::uint64_t seed, double a = 3, double b = 9) {
    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> ga(a), gb(b);
    SampleStore s;
    s.space = ParameterSpace({ParameterSpec::interval("theta", 0.0, 1.0)});
    for (std::size_t c = 0; c < chains; ++c) {
        Matrix m(static_cast<Eigen::Index>(per_chain), 1);
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const double x = ga(rng), y = gb(rng);
            m(i, 0) = std_normal_quantile(x / (x + y));
        }
        s.chains.push_back(m);
    }
    return s;
}

// Exact normalized Beta(3, 9) posterior density in xi.
double exact_post_xi(std::span<const double> xi) {
    const double t = std_normal_cdf(xi[0]);
    return std::log(oracle::beta_pdf(t, 3, 9)) + std_normal_log_pdf(xi[0]);
}

struct CaptureWarnings {
    CaptureWarnings() { previous = set_warning_sink([this](const std::string& m) { messages.push_back(m); }); }
    ~CaptureWarnings() { set_warning_sink(previous); }
    std::vector<std::string> messages;
    WarningSink previous;
};

}  // namespace

TEST_CASE("naive Monte Carlo") {
    const LogDensity lik = [](std::span<const double> t) { return bb_log_likelihood(kData, t[0]); };
    const Matrix draws = column({0.58, 0.76, 0.03, 0.93, 0.27, 0.97, 0.45, 0.46, 0.18, 0.64, 0.06, 0.15});
    CHECK(std::abs(std::exp(naive_mc(lik, draws)) - 0.0945) <= 0.0001);

    const LogDensity one = [](std::span<const double>) { return 0.0; };
    CHECK(naive_mc(one, draws) == 0.0);

    const Model m = make_beta_binomial_model(kData);
    const double est = naive_mc(m.log_likelihood, m.sample_prior, 1000000, 5);
    CHECK(std::abs(std::exp(est) - 1.0 / 11.0) < 0.002);

    CaptureWarnings cap;
    const LogDensity zero = [](std::span<const double>) { return -INFINITY; };
    CHECK(naive_mc(zero, draws) == -INFINITY);
    CHECK(cap.messages.size() == 1);
}

TEST_CASE("importance sampling") {
    const LogDensity lik = [](std::span<const double> t) { return bb_log_likelihood(kData, t[0]); };
    const BetaMixtureIS q{0.3, 2.721, 9.006};
    const LogDensity lq = [q](std::span<const double> t) { return beta_mixture_log_pdf(q, t[0]); };
    const Matrix draws = column({0.11, 0.07, 0.32, 0.25, 0.41, 0.39, 0.25, 0.13, 0.64, 0.26, 0.74, 0.92});
    CHECK(std::abs(std::exp(importance_sampling(lik, lq, draws)) - 0.0827) <= 0.0001);

    // q equal to the (uniform) prior reduces to naive Monte Carlo.
    const LogDensity uniform = [](std::span<const double>) { return 0.0; };
    CHECK(importance_sampling(lik, uniform, draws) == naive_mc(lik, draws));

    const double est = importance_sampling(lik, as_density(q), 1000000, 6);
    CHECK(std::abs(std::exp(est) - 1.0 / 11.0) < 0.002);

    const LogDensity broken = [](std::span<const double>) { return -INFINITY; };
    CHECK_THROWS_AS(importance_sampling(lik, broken, draws), DomainError);
}

TEST_CASE("generalized harmonic mean") {
    const Model m = make_beta_binomial_model(kData);
    const LogDensity target = m.log_unnorm_post_fn();
    const MvnProposal q(Vector::Constant(1, -0.793), Eigen::MatrixXd::Constant(1, 1, std::pow(0.423 / 1.5, 2)));
    const LogDensity lq = [&q](std::span<const double> x) { return q.log_pdf(x); };
    const Matrix xi = column({-0.77, -0.99, -1.34, -0.39, -1.55, -0.61, -0.64, -0.23, -0.84, -0.18, -0.81, -1.17});
    CHECK(std::abs(std::exp(generalized_harmonic_mean(target, lq, xi)) - 0.092) <= 0.001);

    // The exact posterior as q gives the exact answer for any draws.
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    std::vector<double> arbitrary(7);
    for (auto& v : arbitrary) v = z(rng);
    CHECK(generalized_harmonic_mean(target, exact_post_xi, column(arbitrary)) == doctest::Approx(kLogMl).epsilon(1e-9));

    const SampleStore s = analytic_store(100000, 1, 7);
    const MvnProposal fitted = fit_mvn_moments(s.chains[0]).shrunk(1.5);
    const double est = generalized_harmonic_mean(target, [&](std::span<const double> x) { return fitted.log_pdf(x); },
                                                 s.chains[0]);
    CHECK(std::abs(std::exp(est) - 1.0 / 11.0) < 0.002);
}

TEST_CASE("generic bridge reduces to the special cases") {
    const Model m = make_beta_binomial_model(kData);
    const LogDensity target = m.log_unnorm_post_fn();
    std::mt19937_64 rng(11);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 50; ++rep) {
        const double mu = -1.0 + 0.3 * z(rng), sd = 0.3 + 0.2 * std::abs(z(rng));
        const MvnProposal g(Vector::Constant(1, mu), Eigen::MatrixXd::Constant(1, 1, sd * sd));
        const LogDensity lg = [&g](std::span<const double> x) { return g.log_pdf(x); };
        const LogDensity neg_lg = [&g](std::span<const double> x) { return -g.log_pdf(x); };
        const LogDensity neg_target = [&target](std::span<const double> x) { return -target(x); };
        const Matrix post = mvn_sample(g, 40, 100 + rep);
        const Matrix prop = mvn_sample(g, 30, 200 + rep);

        const double is = importance_sampling(target, lg, prop);
        CHECK(generic_bridge(target, lg, neg_lg, post, prop) == doctest::Approx(is).epsilon(1e-12));

        const double ghm = generalized_harmonic_mean(target, lg, post);
        CHECK(generic_bridge(target, lg, neg_target, post, prop) == doctest::Approx(ghm).epsilon(1e-12));

        const LogDensity prior = m.log_prior;
        const LogDensity neg_prior = [&prior](std::span<const double> x) { return -prior(x); };
        const double naive = naive_mc(m.log_likelihood, prop);
        CHECK(generic_bridge(target, prior, neg_prior, post, prop) == doctest::Approx(naive).epsilon(1e-12));
    }
    const LogDensity none = [](std::span<const double>) { return -INFINITY; };
    const Matrix p = column({0.1, 0.2});
    CHECK_THROWS_AS(generic_bridge(target, none, none, p, p), NoOverlapError);
}

TEST_CASE("running example bridge") {
    const RunningExample ex = running_example();
    CHECK(std::abs(ex.bridge_first - 0.0908) <= 0.0001);
    CHECK(std::abs(ex.bridge - 0.0902) <= 0.0001);
    CHECK(ex.bridge_converged);
    CHECK(ex.bridge_iterations <= 6);
}

TEST_CASE("bridge iteration details") {
    // Equal sample sizes: s1 = s2 = 0.5; first step from r = 0 is
    // mean(1/s1) / mean(1/(s1 l1)).
    LogWeights w;
    w.log_l1 = {std::log(0.08), std::log(0.1), std::log(0.09)};
    w.log_l2 = {std::log(0.07), std::log(0.11), std::log(0.095)};
    w.l_star = std::log(0.09);
    BridgeConfig one;
    one.max_iterations = 1;
    const BridgeIteration first = bridge_iterate(w, one);
    const double den = (1 / (0.5 * 0.08) + 1 / (0.5 * 0.1) + 1 / (0.5 * 0.09)) / 3.0;
    CHECK(std::exp(first.log_ml) == doctest::Approx((1 / 0.5) / den).epsilon(1e-13));
    CHECK_FALSE(first.converged);
    CHECK(first.iterations == 1);

    const BridgeIteration full = bridge_iterate(w);
    CHECK(full.converged);
    CHECK(full.trace.size() == full.iterations);

    // A zero-likelihood proposal draw adds nothing to the numerator.
    LogWeights wz = w;
    wz.log_l2.push_back(-INFINITY);
    CHECK(std::isfinite(bridge_iterate(wz).log_ml));
    CHECK_THROWS_AS(BridgeConfig{0.0}.validate(), DomainError);
}

TEST_CASE("log-stabilized and direct recursions agree") {
    const Model m = make_beta_binomial_model(kData);
    const SampleStore s = analytic_store(2000, 1, 21);
    const MvnProposal g = fit_mvn_moments(s.chains[0]);
    const Matrix prop = mvn_sample(g, 3000, 22);
    const LogWeights w = compute_log_weights(m.log_unnorm_post_fn(), [&](std::span<const double> x) { return g.log_pdf(x); },
                                             s.chains[0], prop);
    std::vector<double> l1, l2;
    for (double v : w.log_l1) l1.push_back(std::exp(v));
    for (double v : w.log_l2) l2.push_back(std::exp(v));
    const double direct = bridge_iterate_unscaled(l1, l2).log_ml;
    const double stable = bridge_iterate(w).log_ml;
    CHECK(std::abs(direct - stable) <= 1e-8 * std::abs(direct));
}

TEST_CASE("bridge on analytic posterior draws") {
    const Model m = make_beta_binomial_model(kData);
    const SampleStore s = analytic_store(100000, 1, 31);
    const BridgeEstimate est = bridge_optimal(m, s, 50000, {}, 32);
    CHECK(std::abs(est.log_ml - kLogMl) < 0.01);
    CHECK(est.converged);
    CHECK(est.n1 == 50000);
    CHECK(est.n2 == 50000);
    CHECK(est.re2 == est.error.term1 + est.error.term2);
    CHECK(est.cv_percent > 0.0);
}

TEST_CASE("estimators shift by log kappa under scaling") {
    const double log_kappa = 10.0;
    const Model base = make_beta_binomial_model(kData);
    Model scaled = base;
    scaled.log_likelihood = [f = base.log_likelihood, log_kappa](std::span<const double> x) { return f(x) + log_kappa; };
    const SampleStore s = analytic_store(4000, 2, 41);

    const BridgeEstimate b0 = bridge_optimal(base, s, 4000, {}, 42);
    const BridgeEstimate b1 = bridge_optimal(scaled, s, 4000, {}, 42);
    CHECK(b1.log_ml - b0.log_ml == doctest::Approx(log_kappa).epsilon(1e-9));

    EstimatorSettings set;
    set.seed = 43;
    for (Estimator e : {Estimator::is, Estimator::ghm}) {
        const double a = estimate_log_ml(base, s, e, set).log_ml;
        const double b = estimate_log_ml(scaled, s, e, set).log_ml;
        CHECK(b - a == doctest::Approx(log_kappa).epsilon(1e-9));
    }
}

TEST_CASE("bridge survives a log posterior near -3800") {
    const Model base = make_beta_binomial_model(kData);
    Model deep = base;
    deep.log_likelihood = [f = base.log_likelihood](std::span<const double> x) { return f(x) - 3800.0; };
    const SampleStore s = analytic_store(5000, 2, 51);
    const BridgeEstimate b = bridge_optimal(deep, s, 5000, {}, 52);
    CHECK(std::isfinite(b.log_ml));
    CHECK(b.log_ml == doctest::Approx(kLogMl - 3800.0).epsilon(1e-5));
    CHECK(std::isfinite(b.cv_percent));
}

TEST_CASE("estimate_log_ml dispatch") {
    const Model m = make_beta_binomial_model(kData);
    const SampleStore s = analytic_store(20000, 2, 61);
    EstimatorSettings set;
    set.seed = 62;
    for (Estimator e : {Estimator::naive, Estimator::is, Estimator::ghm, Estimator::bridge}) {
        const MlResult r = estimate_log_ml(m, s, e, set);
        CHECK(std::abs(r.log_ml - kLogMl) < 0.03);
        CHECK(r.bridge.has_value() == (e == Estimator::bridge));
    }
    CHECK(parse_estimator("bridge") == Estimator::bridge);
    CHECK_FALSE(parse_estimator("warp").has_value());
    CHECK(estimator_name(Estimator::ghm) == "ghm");
}

TEST_CASE("importance sampling error matches replication spread") {
    const Model m = make_beta_binomial_model(kData);
    const MvnProposal fitted(Vector::Constant(1, -0.75), Eigen::MatrixXd::Constant(1, 1, 0.2));
    const Density q = mixture(0.3, prior_density(m), as_density(fitted));
    std::vector<double> est, cvs;
    for (std::uint64_t rep = 0; rep < 400; ++rep) {
        const ImportanceEstimate r = importance_sampling_with_error(m.log_unnorm_post_fn(), q, 500, 1000 + rep);
        est.push_back(std::exp(r.log_ml));
        cvs.push_back(r.cv_percent);
    }
    const double empirical = 100.0 * std::sqrt(sample_variance(est)) / mean(est);
    CHECK(mean(cvs) == doctest::Approx(empirical).epsilon(0.15));
}
