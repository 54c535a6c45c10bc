#include "marginalis/estimators.hpp"

#include "marginalis/diagnostics.hpp"
#include "marginalis/error.hpp"

#include <cmath>
#include <limits>

namespace marginalis {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> differences(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

void require_draws(const Matrix& m, const char* what) {
    if (m.rows() == 0) throw DomainError(std::string(what) + ": no draws");
}

}  // namespace

double naive_mc(const LogDensity& log_likelihood, const Matrix& prior_draws, Exec exec) {
    require_draws(prior_draws, "naive Monte Carlo");
    const auto ll = evaluate_rows(log_likelihood, prior_draws, exec);
    const double out = log_mean_exp(ll);
    if (out == kNegInf) warn("naive Monte Carlo: every prior draw has zero likelihood");
    return out;
}

double naive_mc(const LogDensity& log_likelihood, const std::function<std::vector<double>(Rng&)>& prior_sampler,
                std::size_t n, std::uint64_t seed, Exec exec) {
    if (n == 0) throw DomainError("naive Monte Carlo: no draws");
    Rng rng = make_stream(seed);
    const auto first = prior_sampler(rng);
    Matrix draws(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(first.size()));
    std::copy(first.begin(), first.end(), row_span(draws, 0).begin());
    for (Eigen::Index i = 1; i < draws.rows(); ++i) {
        const auto x = prior_sampler(rng);
        std::copy(x.begin(), x.end(), row_span(draws, i).begin());
    }
    return naive_mc(log_likelihood, draws, exec);
}

namespace {

std::vector<double> importance_log_weights(const LogDensity& log_target, const LogDensity& log_q,
                                           const Matrix& q_draws, Exec exec) {
    require_draws(q_draws, "importance sampling");
    const auto t = evaluate_rows(log_target, q_draws, exec);
    const auto q = evaluate_rows(log_q, q_draws, exec);
    const auto w = differences(t, q);
    for (double v : w) {
        if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
            throw DomainError("importance sampling: non-finite weight; the importance density must have fatter "
                              "tails than the posterior and cover its support");
    }
    return w;
}

}  // namespace

double importance_sampling(const LogDensity& log_target, const LogDensity& log_q, const Matrix& q_draws, Exec exec) {
    return log_mean_exp(importance_log_weights(log_target, log_q, q_draws, exec));
}

double importance_sampling(const LogDensity& log_target, const Density& q, std::size_t n, std::uint64_t seed,
                           Exec exec) {
    return importance_sampling_with_error(log_target, q, n, seed, exec).log_ml;
}

ImportanceEstimate importance_sampling_with_error(const LogDensity& log_target, const Density& q, std::size_t n,
                                                  std::uint64_t seed, Exec exec) {
    if (n == 0) throw DomainError("importance sampling: no draws");
    Rng rng = make_stream(seed);
    const auto w = importance_log_weights(log_target, q.log_pdf, q.sample(n, rng), exec);
    ImportanceEstimate out;
    out.log_ml = log_mean_exp(w);
    if (out.log_ml == kNegInf || n < 2) {
        out.cv_percent = std::numeric_limits<double>::infinity();
        return out;
    }
    std::vector<double> scaled(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) scaled[i] = std::exp(w[i] - out.log_ml);
    out.cv_percent = 100.0 * std::sqrt(sample_variance(scaled) / static_cast<double>(n));
    return out;
}

double generalized_harmonic_mean(const LogDensity& log_target, const LogDensity& log_q, const Matrix& posterior_draws,
                                 Exec exec) {
    require_draws(posterior_draws, "generalized harmonic mean");
    const auto t = evaluate_rows(log_target, posterior_draws, exec);
    const auto q = evaluate_rows(log_q, posterior_draws, exec);
    const auto w = differences(q, t);
    for (double v : w) {
        if (!std::isfinite(v) && v != kNegInf)
            throw DomainError("generalized harmonic mean: non-finite term; posterior draws must have positive "
                              "unnormalized density");
    }
    return -log_mean_exp(w);
}

double generic_bridge(const LogDensity& log_target, const LogDensity& log_g, const LogDensity& log_h,
                      const Matrix& posterior_draws, const Matrix& proposal_draws, Exec exec) {
    require_draws(posterior_draws, "bridge");
    require_draws(proposal_draws, "bridge");
    const auto t2 = evaluate_rows(log_target, proposal_draws, exec);
    const auto h2 = evaluate_rows(log_h, proposal_draws, exec);
    const auto h1 = evaluate_rows(log_h, posterior_draws, exec);
    const auto g1 = evaluate_rows(log_g, posterior_draws, exec);
    std::vector<double> num(t2.size()), den(h1.size());
    for (std::size_t i = 0; i < num.size(); ++i) num[i] = t2[i] + h2[i];
    for (std::size_t j = 0; j < den.size(); ++j) den[j] = h1[j] + g1[j];
    const double log_den = log_mean_exp(den);
    if (log_den == kNegInf) throw NoOverlapError("bridge: denominator sum is zero (no overlap)");
    const double log_num = log_mean_exp(num);
    if (log_num == kNegInf) throw NoOverlapError("bridge: numerator sum is zero (no overlap)");
    return log_num - log_den;
}

void BridgeConfig::validate() const {
    if (!(tolerance > 0.0)) throw DomainError("bridge tolerance must be positive");
    if (max_iterations == 0) throw DomainError("bridge needs at least one iteration");
    if (!(initial_guess >= 0.0) || !std::isfinite(initial_guess))
        throw DomainError("bridge initial guess must be finite and non-negative");
}

LogWeights compute_log_weights(const LogDensity& log_target, const LogDensity& log_g, const Matrix& posterior_draws,
                               const Matrix& proposal_draws, Exec exec) {
    require_draws(posterior_draws, "bridge");
    require_draws(proposal_draws, "bridge");
    auto weights = [&](const Matrix& draws) {
        const auto t = evaluate_rows(log_target, draws, exec);
        const auto g = evaluate_rows(log_g, draws, exec);
        std::vector<double> out(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (std::isnan(t[i]) || t[i] == std::numeric_limits<double>::infinity())
                throw DomainError("bridge: target density is not a finite number at a draw");
            if (!std::isfinite(g[i])) throw DomainError("bridge: proposal density is not finite at a draw");
            out[i] = t[i] == kNegInf ? kNegInf : t[i] - g[i];
        }
        return out;
    };
    LogWeights w;
    w.log_l1 = weights(posterior_draws);
    w.log_l2 = weights(proposal_draws);
    w.l_star = median(w.log_l1);
    if (!std::isfinite(w.l_star)) throw NoOverlapError("bridge: median posterior weight is not finite");
    return w;
}

namespace {

// One optimal-bridge update on weights already divided by exp(l_star), done on
// the log scale so that neither extreme weights nor r = 0 overflow.
double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

double bridge_update(std::span<const double> x1, std::span<const double> x2, double log_s1, double log_s2,
                     double log_r, std::vector<double>& scratch) {
    const double log_s2r = log_s2 + log_r;
    scratch.clear();
    for (double x : x2) {
        if (x == kNegInf) continue;
        scratch.push_back(x - log_add(log_s1 + x, log_s2r));
    }
    const double log_num = scratch.empty() ? kNegInf
                                           : log_sum_exp(scratch) - std::log(static_cast<double>(x2.size()));
    scratch.clear();
    for (double x : x1) {
        if (x == kNegInf && log_r == kNegInf) continue;
        scratch.push_back(-log_add(log_s1 + x, log_s2r));
    }
    const double log_den = log_sum_exp(scratch) - std::log(static_cast<double>(x1.size()));
    return log_num - log_den;
}

// Iterates on log r; the relative change |r' - r| / r' is |expm1(log r - log r')|.
template <class Update>
BridgeIteration fixed_point(Update update, double log_r0, double shift, const BridgeConfig& config) {
    config.validate();
    BridgeIteration out;
    double log_r = log_r0;
    int passes = 0;
    for (std::size_t t = 1; t <= config.max_iterations; ++t) {
        const double next = update(log_r);
        if (!std::isfinite(next)) throw NoOverlapError("bridge iteration produced a zero or non-finite estimate");
        out.trace.push_back(next + shift);
        out.iterations = t;
        const double change = log_r == kNegInf ? 1.0 : std::abs(std::expm1(log_r - next));
        log_r = next;
        passes = change <= config.tolerance ? passes + 1 : 0;
        if (passes >= 2) {
            out.converged = true;
            break;
        }
    }
    out.log_ml = log_r + shift;
    return out;
}

}  // namespace

BridgeIteration bridge_iterate(const LogWeights& w, const BridgeConfig& config) {
    if (w.log_l1.empty() || w.log_l2.empty()) throw DomainError("bridge: no weights");
    const double n1 = static_cast<double>(w.log_l1.size());
    const double n2 = static_cast<double>(w.log_l2.size());
    const double log_s1 = std::log(n1 / (n1 + n2));
    const double log_s2 = std::log(n2 / (n1 + n2));
    std::vector<double> x1(w.log_l1.size()), x2(w.log_l2.size()), scratch;
    for (std::size_t j = 0; j < x1.size(); ++j) x1[j] = w.log_l1[j] - w.l_star;
    for (std::size_t i = 0; i < x2.size(); ++i) x2[i] = w.log_l2[i] - w.l_star;
    const double log_r0 = config.initial_guess > 0.0 ? std::log(config.initial_guess) - w.l_star : kNegInf;
    return fixed_point([&](double log_r) { return bridge_update(x1, x2, log_s1, log_s2, log_r, scratch); }, log_r0,
                       w.l_star, config);
}

BridgeIteration bridge_iterate_unscaled(std::span<const double> l1, std::span<const double> l2,
                                        const BridgeConfig& config) {
    if (l1.empty() || l2.empty()) throw DomainError("bridge: no weights");
    const double n1 = static_cast<double>(l1.size());
    const double n2 = static_cast<double>(l2.size());
    const double s1 = n1 / (n1 + n2);
    const double s2 = n2 / (n1 + n2);
    auto update = [&](double log_r) {
        const double r = std::exp(log_r);
        double num = 0.0;
        for (double l : l2) num += l / (s1 * l + s2 * r);
        double den = 0.0;
        for (double l : l1) den += 1.0 / (s1 * l + s2 * r);
        return std::log((num / n2) / (den / n1));
    };
    const double log_r0 = config.initial_guess > 0.0 ? std::log(config.initial_guess) : kNegInf;
    return fixed_point(update, log_r0, 0.0, config);
}

BridgeEstimate bridge_sampling(const Model& model, const MvnProposal& proposal, const SampleStore& iterate_half,
                               const Matrix& proposal_draws, const BridgeConfig& config, Exec exec) {
    if (proposal.dimension() != model.dimension())
        throw DimensionError("proposal dimension does not match the model");
    const Matrix posterior = iterate_half.pooled();
    const LogDensity target = model.log_unnorm_post_fn();
    const LogDensity g = [&proposal](std::span<const double> xi) { return proposal.log_pdf(xi); };
    const LogWeights w = compute_log_weights(target, g, posterior, proposal_draws, exec);
    const BridgeIteration it = bridge_iterate(w, config);

    BridgeEstimate est;
    est.log_ml = it.log_ml;
    est.iterations = it.iterations;
    est.converged = it.converged;
    est.trace = it.trace;
    est.n1 = w.log_l1.size();
    est.n2 = w.log_l2.size();
    est.l_star = w.l_star;
    for (double v : w.log_l1) est.zero_l1 += v == kNegInf;
    for (double v : w.log_l2) est.zero_l2 += v == kNegInf;
    if (!est.converged)
        warn("bridge iteration did not converge within " + std::to_string(config.max_iterations) + " iterations");

    std::vector<std::size_t> lengths(iterate_half.num_chains(), iterate_half.retained());
    est.error = re2_from_log_weights(w.log_l1, lengths, w.log_l2, est.log_ml);
    est.re2 = est.error.re2;
    est.cv_percent = est.error.cv_percent;
    return est;
}

BridgeEstimate bridge_optimal(const Model& model, const SampleStore& store, std::size_t n2,
                              const BridgeConfig& config, std::uint64_t seed, Exec exec) {
    if (n2 == 0) throw DomainError("bridge needs at least one proposal draw");
    store.validate();
    const auto [fit_half, iterate_half] = split_halves(store);
    const MvnProposal proposal = fit_mvn_moments(fit_half.pooled());
    const Matrix proposal_draws = mvn_sample(proposal, n2, seed);
    return bridge_sampling(model, proposal, iterate_half, proposal_draws, config, exec);
}

}  // namespace marginalis
