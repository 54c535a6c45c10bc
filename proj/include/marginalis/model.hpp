#pragma once

#include "marginalis/paramspace.hpp"
#include "marginalis/rng.hpp"
#include "marginalis/types.hpp"

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace marginalis {

// A model as seen by the samplers and estimators: an unnormalized posterior
// over the unconstrained coordinates xi. The prior term already includes the
// log-Jacobian of the transform, so log_likelihood + log_prior is the log
// density the sampler targets and the bridge integrates.
//
// The split into likelihood and prior is what the naive Monte Carlo and the
// defensive importance densities need; sample_prior draws xi from the prior.
// Coordinates updated together by the blocked sampler. log_conditional must
// contain every log-posterior term that involves these coordinates, so that
// differences in it equal differences in the full log posterior.
struct ModelBlock {
    std::vector<std::size_t> indices;
    LogDensity log_conditional;
};

struct Model {
    std::string label;
    ParameterSpace space;
    LogDensity log_likelihood;
    LogDensity log_prior;
    std::function<std::vector<double>(Rng&)> sample_prior;
    std::vector<ModelBlock> blocks;  // optional partition of the coordinates

    std::size_t dimension() const { return space.dimension(); }

    double log_unnorm_post(std::span<const double> xi) const {
        const double lp = log_prior(xi);
        if (lp == -std::numeric_limits<double>::infinity()) return lp;
        return log_likelihood(xi) + lp;
    }

    LogDensity log_unnorm_post_fn() const {
        return [lik = log_likelihood, prior = log_prior](std::span<const double> xi) {
            const double lp = prior(xi);
            if (lp == -std::numeric_limits<double>::infinity()) return lp;
            return lik(xi) + lp;
        };
    }
};

}  // namespace marginalis
