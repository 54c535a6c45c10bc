#pragma once

#include "marginalis/kernels.hpp"
#include "marginalis/model.hpp"
#include "marginalis/proposal.hpp"
#include "marginalis/sampler.hpp"

#include <span>
#include <vector>

namespace marginalis {

struct ErrorReport {
    double re2 = 0.0;
    double cv_percent = 0.0;
    double rho_f2_zero = 1.0;  // spectral density at zero over variance, f2 series
    double term1 = 0.0;        // proposal-draw contribution
    double term2 = 0.0;        // posterior-draw contribution
};

struct ArFit {
    std::size_t order = 0;
    std::vector<double> coefficients;
    double var_pred = 0.0;  // innovation variance
};

// Yule-Walker AR fit (mean removed) with the order chosen by AIC over
// 0..order_max. order_max defaults to min(N - 1, floor(10 log10 N)).
ArFit fit_ar_yule_walker(std::span<const double> series, std::size_t order_max = 0);

// Spectral density at frequency zero from the AR fit:
// var_pred / (1 - sum coefficients)^2.
double spectrum0_ar(std::span<const double> series);

// Relative mean-squared error of the bridge estimate from the log weights.
// log_l1 holds the iterate-half posterior draws chain after chain;
// chain_lengths partitions it.
ErrorReport re2_from_log_weights(std::span<const double> log_l1, std::span<const std::size_t> chain_lengths,
                                 std::span<const double> log_l2, double log_ml);

ErrorReport re2_bridge(const Model& model, const MvnProposal& proposal, double log_ml, const SampleStore& iterate_half,
                       const Matrix& proposal_draws, Exec exec = Exec::parallel);

}  // namespace marginalis
