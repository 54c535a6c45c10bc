#pragma once

#include "marginalis/estimators.hpp"
#include "marginalis/models.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>

namespace marginalis {

enum class Estimator { naive, is, ghm, bridge };

std::optional<Estimator> parse_estimator(const std::string& s);
std::string estimator_name(Estimator e);

struct EstimatorSettings {
    std::size_t n2 = 0;  // proposal / importance / prior draws; 0 means as many as iterate-half draws
    BridgeConfig bridge;
    double is_mixture_weight = 0.3;  // weight of the prior in the defensive importance density
    double ghm_shrink = 1.5;         // fitted sd divided by this for the harmonic-mean density
    std::uint64_t seed = 0;
};

struct MlResult {
    Estimator estimator = Estimator::bridge;
    double log_ml = 0.0;
    std::size_t draws = 0;
    std::optional<double> cv_percent;  // bridge and importance sampling
    std::optional<BridgeEstimate> bridge;
};

// The model prior over xi as a normalized density.
Density prior_density(const Model& model);

// Estimates from a posterior sample. Importance and harmonic-mean densities
// are fitted to the first half of each chain, like the bridge proposal; the
// harmonic mean averages over the second half.
MlResult estimate_log_ml(const Model& model, const SampleStore& store, Estimator estimator,
                         const EstimatorSettings& settings, Exec exec = Exec::parallel);

// Beta-binomial (k = 2, n = 10) worked example on fixed two-decimal draws.
namespace fixtures {

extern const std::array<double, 12> kPriorDraws;       // theta from the uniform prior
extern const std::array<double, 12> kMixtureDraws;     // theta from the beta mixture
extern const std::array<double, 24> kPosteriorDraws;   // theta from Beta(3, 9)
extern const std::array<double, 12> kProbitFirst;      // probit of the first 12 posterior draws
extern const std::array<double, 12> kProbitSecond;     // probit of the last 12 posterior draws
extern const std::array<double, 12> kProposalDraws;    // xi from the fitted normal proposal
inline constexpr double kPosteriorMean = 0.232;        // rounded moments of the first 12 posterior draws
inline constexpr double kPosteriorVariance = 0.014;
inline constexpr double kMixtureWeight = 0.3;
inline constexpr int kSuccesses = 2;
inline constexpr int kTrials = 10;

}  // namespace fixtures

struct RunningExample {
    double naive = 0.0;  // marginal likelihood, not log
    double importance = 0.0;
    double harmonic_mean = 0.0;
    double bridge_first = 0.0;
    double bridge = 0.0;
    std::size_t bridge_iterations = 0;
    bool bridge_converged = false;
    BetaShape beta_fit{};
    double probit_mean = 0.0;
    double probit_sd = 0.0;
};

RunningExample running_example(const BridgeConfig& config = {});

}  // namespace marginalis
