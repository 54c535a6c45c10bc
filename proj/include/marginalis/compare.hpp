#pragma once

#include "marginalis/kernels.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace marginalis {

struct BayesFactor {
    double bf;
    double log_bf;
};

// BF_12 = p(y | M1) / p(y | M2).
BayesFactor bayes_factor(double log_ml_1, double log_ml_2);

struct ModelComparison {
    std::vector<std::string> labels;
    std::vector<double> log_mls;
    std::vector<double> prior_probs;  // empty means uniform

    void validate() const;
};

std::vector<double> posterior_model_probs(const ModelComparison& c);

using ScalarLogDensity = std::function<double(double)>;

// Silverman's rule: 0.9 * min(sd, IQR / 1.34) * n^(-1/5).
double silverman_bandwidth(std::span<const double> samples);

struct SavageDickey {
    double bf;  // prior density over posterior density at theta0
    double log_bf;
    double prior_log_density;
    double posterior_log_density;
    double bandwidth;
    bool tail_warning;  // theta0 outside the sample range +- 3 bandwidths
};

SavageDickey savage_dickey(const ScalarLogDensity& prior_log_density, std::span<const double> posterior_samples,
                           double theta0, Exec exec = Exec::parallel);

// Crossing of the prior density and the posterior KDE. Scans a grid over the
// sample range, bisects every sign change and returns the root closest to the
// KDE mode.
double find_intersection(const ScalarLogDensity& prior_log_density, std::span<const double> posterior_samples,
                         std::size_t grid_points = 512, Exec exec = Exec::parallel);

}  // namespace marginalis
