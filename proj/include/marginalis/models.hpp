#pragma once

#include "marginalis/model.hpp"

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace marginalis {

// ---------------------------------------------------------------------------
// Beta-binomial

struct BetaBinomialData {
    int k = 0;  // successes
    int n = 0;  // trials

    void validate() const;
};

struct BetaPrior {
    double alpha = 1.0;
    double beta = 1.0;
};

// log[C(n,k) theta^k (1-theta)^(n-k)]; theta must lie in (0, 1).
double bb_log_likelihood(const BetaBinomialData& data, double theta);

// Analytic log marginal likelihood: -log(n+1) under the uniform prior,
// log[C(n,k) B(k+alpha, n-k+beta) / B(alpha, beta)] in general.
double bb_analytic_log_ml(const BetaBinomialData& data);
double bb_analytic_log_ml(const BetaBinomialData& data, const BetaPrior& prior);

// Conjugate posterior under the uniform prior: Beta(k+1, n-k+1).
BetaPrior bb_posterior_params(const BetaBinomialData& data);

// Model over xi = Phi^{-1}(theta).
Model make_beta_binomial_model(const BetaBinomialData& data, const BetaPrior& prior = {});

// ---------------------------------------------------------------------------
// Expectancy Valence model for the Iowa gambling task

inline constexpr int kDecks = 4;

struct EVParams {
    double w = 0.5;  // attention weight on losses
    double a = 0.5;  // updating rate
    double c = 0.5;  // consistency rescaled to [0,1]; c' = 4c - 2

    double c_prime() const { return 4.0 * c - 2.0; }
    static EVParams from_c_prime(double w, double a, double c_prime) { return {w, a, (c_prime + 2.0) / 4.0}; }
    void validate() const;
};

struct IGTRecord {
    std::string subject;
    std::vector<int> choices;     // deck index 1..4
    std::vector<double> rewards;  // W(t) >= 0
    std::vector<double> losses;   // L(t) <= 0

    std::size_t trials() const { return choices.size(); }
    double net(std::size_t t) const { return rewards[t] + losses[t]; }
    void validate() const;
};

// Incremental EV learner: delta-rule expectancies plus the trial-dependent
// softmax. Only the chosen deck's expectancy moves.
class EvLearner {
public:
    explicit EvLearner(const EVParams& params);

    // Choice probabilities for the next trial, given the trials observed so far.
    std::array<double, kDecks> probabilities() const;
    // log probability of choosing deck (1..4) on the next trial.
    double log_probability(int deck) const;
    void observe(int deck, double reward, double loss);

    std::size_t trials_observed() const { return trials_; }
    const std::array<double, kDecks>& expectancies() const { return ev_; }

private:
    double sensitivity() const;
    std::array<double, kDecks> logits() const;

    EVParams params_;
    double c_prime_;
    std::array<double, kDecks> ev_{};
    std::size_t trials_ = 0;
};

// Probabilities for trial t+1 after replaying the first t trials of history.
std::array<double, kDecks> ev_trial_probabilities(const EVParams& params, const IGTRecord& history,
                                                  std::size_t t);

// Sum over trials of log Pr[chosen deck].
double ev_log_likelihood(const EVParams& params, const IGTRecord& record);

// Individual model over xi = (omega, alpha, gamma) = probit of (w, a, c) with
// uniform priors on [0,1], i.e. standard normal priors in xi.
double ev_individual_log_unnorm_post(std::span<const double> xi, const IGTRecord& record);
Model make_individual_ev_model(const IGTRecord& record);

// Hierarchical model. Coordinate layout for S subjects:
//   (omega_1..omega_S, alpha_1..alpha_S, gamma_1..gamma_S,
//    mu_omega, tau_omega, mu_alpha, tau_alpha, mu_gamma, tau_gamma)
// with group sd sigma_p = 1.5 * Phi(tau_p).
enum class GroupParam { omega = 0, alpha = 1, gamma = 2 };

std::string group_mean_name(GroupParam p);
std::optional<GroupParam> parse_group_param(const std::string& s);

struct HierLayout {
    std::size_t subjects;

    std::size_t dimension() const { return 3 * subjects + 6; }
    std::size_t individual(GroupParam p, std::size_t s) const {
        return static_cast<std::size_t>(p) * subjects + s;
    }
    std::size_t mu(GroupParam p) const { return 3 * subjects + 2 * static_cast<std::size_t>(p); }
    std::size_t tau(GroupParam p) const { return mu(p) + 1; }
};

ParameterSpace hierarchical_space(std::size_t subjects);

double hier_ev_log_unnorm_post(std::span<const double> xi, std::span<const IGTRecord> records);

// Group mean pinned to a fixed value and removed from the parameter space.
struct Restriction {
    GroupParam param;
    double value;
};

Model make_hierarchical_ev_model(std::vector<IGTRecord> records,
                                 std::optional<Restriction> restriction = std::nullopt);

// Insert the pinned coordinate back into a restricted-model draw.
std::vector<double> expand_restricted(std::span<const double> xi, std::size_t subjects,
                                      const Restriction& restriction);

}  // namespace marginalis
