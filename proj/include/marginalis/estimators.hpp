#pragma once

#include "marginalis/accuracy.hpp"
#include "marginalis/kernels.hpp"
#include "marginalis/model.hpp"
#include "marginalis/proposal.hpp"
#include "marginalis/sampler.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace marginalis {

// All estimators return log marginal likelihoods.

// log mean exp(loglik) over draws from the prior.
double naive_mc(const LogDensity& log_likelihood, const Matrix& prior_draws, Exec exec = Exec::parallel);
double naive_mc(const LogDensity& log_likelihood, const std::function<std::vector<double>(Rng&)>& prior_sampler,
                std::size_t n, std::uint64_t seed, Exec exec = Exec::parallel);

// log mean exp(log target - log q) over draws from q.
double importance_sampling(const LogDensity& log_target, const LogDensity& log_q, const Matrix& q_draws,
                           Exec exec = Exec::parallel);
double importance_sampling(const LogDensity& log_target, const Density& q, std::size_t n, std::uint64_t seed,
                           Exec exec = Exec::parallel);

struct ImportanceEstimate {
    double log_ml = 0.0;
    double cv_percent = 0.0;  // standard error of the mean weight over the mean weight
};

ImportanceEstimate importance_sampling_with_error(const LogDensity& log_target, const Density& q, std::size_t n,
                                                  std::uint64_t seed, Exec exec = Exec::parallel);

// -log mean exp(log q - log target) over posterior draws.
double generalized_harmonic_mean(const LogDensity& log_target, const LogDensity& log_q, const Matrix& posterior_draws,
                                 Exec exec = Exec::parallel);

// Bridge identity for an arbitrary bridge function given on the log scale:
// log mean_g[target * h] - log mean_post[h * g].
double generic_bridge(const LogDensity& log_target, const LogDensity& log_g, const LogDensity& log_h,
                      const Matrix& posterior_draws, const Matrix& proposal_draws, Exec exec = Exec::parallel);

struct BridgeConfig {
    double tolerance = 1e-10;
    std::size_t max_iterations = 1000;
    double initial_guess = 0.0;  // on the marginal-likelihood scale

    void validate() const;
};

// log l = log target - log g on posterior (l1) and proposal (l2) draws.
struct LogWeights {
    std::vector<double> log_l1;
    std::vector<double> log_l2;
    double l_star = 0.0;  // median of log_l1
};

LogWeights compute_log_weights(const LogDensity& log_target, const LogDensity& log_g, const Matrix& posterior_draws,
                               const Matrix& proposal_draws, Exec exec = Exec::parallel);

struct BridgeIteration {
    double log_ml = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> trace;  // log_ml after each iteration
};

// Optimal-bridge fixed point with every weight scaled by exp(-l_star), iterated
// on log r.
// Convergence needs two consecutive relative changes <= tolerance.
BridgeIteration bridge_iterate(const LogWeights& w, const BridgeConfig& config = {});

// The same recursion on unscaled weights l1, l2. Reference only; overflows
// for realistic models.
BridgeIteration bridge_iterate_unscaled(std::span<const double> l1, std::span<const double> l2,
                                        const BridgeConfig& config = {});

struct BridgeEstimate {
    double log_ml = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    double re2 = 0.0;
    double cv_percent = 0.0;
    ErrorReport error;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    double l_star = 0.0;
    std::size_t zero_l1 = 0;  // posterior draws with zero likelihood
    std::size_t zero_l2 = 0;  // proposal draws with zero likelihood
    std::vector<double> trace;  // log_ml after each iteration
};

// Bridge estimate from given iterate-half chains and proposal draws.
BridgeEstimate bridge_sampling(const Model& model, const MvnProposal& proposal, const SampleStore& iterate_half,
                               const Matrix& proposal_draws, const BridgeConfig& config = {},
                               Exec exec = Exec::parallel);

// Full pipeline: split the store, fit the proposal to the first half, draw N2
// proposal samples, iterate on the second half, attach the error report.
BridgeEstimate bridge_optimal(const Model& model, const SampleStore& store, std::size_t n2,
                              const BridgeConfig& config, std::uint64_t seed, Exec exec = Exec::parallel);

}  // namespace marginalis
