#include "marginalis/models.hpp"

#include "marginalis/error.hpp"
#include "marginalis/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace marginalis {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_choose(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

}  // namespace

// ---------------------------------------------------------------------------
// Beta-binomial

void BetaBinomialData::validate() const {
    if (n < 0 || k < 0 || k > n)
        throw DataError("beta-binomial data needs 0 <= k <= n, got k=" + std::to_string(k) +
                        ", n=" + std::to_string(n));
}

double bb_log_likelihood(const BetaBinomialData& data, double theta) {
    data.validate();
    if (!(theta > 0.0 && theta < 1.0))
        throw DomainError("binomial rate must lie in (0, 1), got " + std::to_string(theta));
    double out = log_choose(data.n, data.k);
    if (data.k > 0) out += data.k * std::log(theta);
    if (data.n - data.k > 0) out += (data.n - data.k) * std::log1p(-theta);
    return out;
}

double bb_analytic_log_ml(const BetaBinomialData& data) { return bb_analytic_log_ml(data, BetaPrior{}); }

double bb_analytic_log_ml(const BetaBinomialData& data, const BetaPrior& prior) {
    data.validate();
    if (!(prior.alpha > 0.0 && prior.beta > 0.0)) throw DomainError("beta prior shapes must be positive");
    if (prior.alpha == 1.0 && prior.beta == 1.0) return -std::log1p(static_cast<double>(data.n));
    return log_choose(data.n, data.k) + log_beta_fn(data.k + prior.alpha, data.n - data.k + prior.beta) -
           log_beta_fn(prior.alpha, prior.beta);
}

BetaPrior bb_posterior_params(const BetaBinomialData& data) {
    data.validate();
    return {data.k + 1.0, data.n - data.k + 1.0};
}

Model make_beta_binomial_model(const BetaBinomialData& data, const BetaPrior& prior) {
    data.validate();
    if (!(prior.alpha > 0.0 && prior.beta > 0.0)) throw DomainError("beta prior shapes must be positive");

    Model m;
    m.label = "beta-binomial";
    m.space = ParameterSpace({ParameterSpec::interval("theta", 0.0, 1.0)});
    const double log_c = log_choose(data.n, data.k);
    // log theta and log(1 - theta) straight from xi keep the tails finite.
    m.log_likelihood = [data, log_c](std::span<const double> xi) {
        double out = log_c;
        if (data.k > 0) out += data.k * std_normal_log_cdf(xi[0]);
        if (data.n - data.k > 0) out += (data.n - data.k) * std_normal_log_cdf(-xi[0]);
        return out;
    };
    const bool uniform = prior.alpha == 1.0 && prior.beta == 1.0;
    const double log_b = log_beta_fn(prior.alpha, prior.beta);
    m.log_prior = [prior, uniform, log_b](std::span<const double> xi) {
        double out = std_normal_log_pdf(xi[0]);
        if (!uniform)
            out += (prior.alpha - 1.0) * std_normal_log_cdf(xi[0]) +
                   (prior.beta - 1.0) * std_normal_log_cdf(-xi[0]) - log_b;
        return out;
    };
    m.sample_prior = [prior](Rng& rng) {
        std::gamma_distribution<double> ga(prior.alpha, 1.0), gb(prior.beta, 1.0);
        const double x = ga(rng);
        const double y = gb(rng);
        double theta = x / (x + y);
        theta = std::clamp(theta, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
        return std::vector<double>{std_normal_quantile(theta)};
    };
    return m;
}

// ---------------------------------------------------------------------------
// EV model

void EVParams::validate() const {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(w) || !in_unit(a) || !in_unit(c))
        throw DomainError("EV parameters w, a, c must lie in [0, 1]");
}

void IGTRecord::validate() const {
    if (rewards.size() != choices.size() || losses.size() != choices.size())
        throw DataError("subject '" + subject + "': choices, rewards and losses differ in length");
    for (std::size_t t = 0; t < choices.size(); ++t) {
        if (choices[t] < 1 || choices[t] > kDecks)
            throw DataError("subject '" + subject + "', trial " + std::to_string(t + 1) + ": deck " +
                            std::to_string(choices[t]) + " outside 1..4");
        if (!(rewards[t] >= 0.0) || !std::isfinite(rewards[t]))
            throw DataError("subject '" + subject + "', trial " + std::to_string(t + 1) +
                            ": reward must be finite and non-negative");
        if (!(losses[t] <= 0.0) || !std::isfinite(losses[t]))
            throw DataError("subject '" + subject + "', trial " + std::to_string(t + 1) +
                            ": loss must be finite and non-positive");
    }
}

namespace {

// log(t / 10) for the sensitivity theta(t) = (t/10)^c' = exp(c' log(t/10)).
double log_tenth(std::size_t t) {
    static const std::vector<double> table = [] {
        std::vector<double> v(1024);
        v[0] = kNegInf;
        for (std::size_t i = 1; i < v.size(); ++i) v[i] = std::log(static_cast<double>(i) / 10.0);
        return v;
    }();
    return t < table.size() ? table[t] : std::log(static_cast<double>(t) / 10.0);
}

void check_deck(int deck) {
    if (deck < 1 || deck > kDecks) throw DataError("deck index " + std::to_string(deck) + " outside 1..4");
}

}  // namespace

EvLearner::EvLearner(const EVParams& params) : params_(params), c_prime_(params.c_prime()) {
    params_.validate();
}

double EvLearner::sensitivity() const { return std::exp(c_prime_ * log_tenth(trials_)); }

std::array<double, kDecks> EvLearner::logits() const {
    std::array<double, kDecks> x{};
    // theta(0) * Ev(0) is defined as 0: all expectancies start at zero and
    // (0/10)^c' is undefined for c' < 0.
    if (trials_ == 0) return x;
    const double theta = sensitivity();
    for (int k = 0; k < kDecks; ++k) x[k] = theta * ev_[k];
    return x;
}

std::array<double, kDecks> EvLearner::probabilities() const {
    const auto x = logits();
    const double m = *std::max_element(x.begin(), x.end());
    std::array<double, kDecks> p{};
    double total = 0.0;
    for (int k = 0; k < kDecks; ++k) {
        p[k] = std::exp(x[k] - m);
        total += p[k];
    }
    for (auto& v : p) v /= total;
    return p;
}

double EvLearner::log_probability(int deck) const {
    check_deck(deck);
    const auto x = logits();
    const double m = *std::max_element(x.begin(), x.end());
    double total = 0.0;
    for (int k = 0; k < kDecks; ++k) total += std::exp(x[k] - m);
    return x[deck - 1] - m - std::log(total);
}

void EvLearner::observe(int deck, double reward, double loss) {
    check_deck(deck);
    const double utility = (1.0 - params_.w) * reward + params_.w * loss;
    double& ev = ev_[deck - 1];
    ev += params_.a * (utility - ev);
    ++trials_;
}

std::array<double, kDecks> ev_trial_probabilities(const EVParams& params, const IGTRecord& history,
                                                  std::size_t t) {
    if (t > history.trials())
        throw DataError("history has " + std::to_string(history.trials()) + " trials, requested replay of " +
                        std::to_string(t));
    EvLearner learner(params);
    for (std::size_t i = 0; i < t; ++i) learner.observe(history.choices[i], history.rewards[i], history.losses[i]);
    return learner.probabilities();
}

double ev_log_likelihood(const EVParams& params, const IGTRecord& record) {
    EvLearner learner(params);
    double acc = 0.0;
    const std::size_t n = record.trials();
    for (std::size_t t = 0; t < n; ++t) {
        const int deck = record.choices[t];
        acc += learner.log_probability(deck);
        learner.observe(deck, record.rewards[t], record.losses[t]);
    }
    return acc;
}

namespace {

EVParams params_from_probit(double omega, double alpha, double gamma) {
    return {std_normal_cdf(omega), std_normal_cdf(alpha), std_normal_cdf(gamma)};
}

}  // namespace

double ev_individual_log_unnorm_post(std::span<const double> xi, const IGTRecord& record) {
    if (xi.size() != 3) throw DimensionError("individual EV model has 3 coordinates");
    return ev_log_likelihood(params_from_probit(xi[0], xi[1], xi[2]), record) + std_normal_log_pdf(xi[0]) +
           std_normal_log_pdf(xi[1]) + std_normal_log_pdf(xi[2]);
}

Model make_individual_ev_model(const IGTRecord& record) {
    record.validate();
    auto data = std::make_shared<const IGTRecord>(record);
    Model m;
    m.label = "ev-individual:" + record.subject;
    m.space = ParameterSpace({ParameterSpec::interval("w", 0.0, 1.0), ParameterSpec::interval("a", 0.0, 1.0),
                              ParameterSpec::interval("c", 0.0, 1.0)});
    m.log_likelihood = [data](std::span<const double> xi) {
        return ev_log_likelihood(params_from_probit(xi[0], xi[1], xi[2]), *data);
    };
    m.log_prior = [](std::span<const double> xi) {
        return std_normal_log_pdf(xi[0]) + std_normal_log_pdf(xi[1]) + std_normal_log_pdf(xi[2]);
    };
    m.sample_prior = [](Rng& rng) {
        std::normal_distribution<double> z;
        std::vector<double> out(3);
        for (auto& v : out) v = z(rng);
        return out;
    };
    return m;
}

// ---------------------------------------------------------------------------
// Hierarchical EV model

namespace {

constexpr std::array<GroupParam, 3> kGroups = {GroupParam::omega, GroupParam::alpha, GroupParam::gamma};
constexpr double kSigmaMax = 1.5;

const char* individual_prefix(GroupParam p) {
    switch (p) {
        case GroupParam::omega: return "w";
        case GroupParam::alpha: return "a";
        case GroupParam::gamma: return "c";
    }
    return "?";
}

double hier_log_likelihood(std::span<const double> xi, std::span<const IGTRecord> records) {
    const HierLayout lay{records.size()};
    double acc = 0.0;
    for (std::size_t s = 0; s < records.size(); ++s) {
        acc += ev_log_likelihood(params_from_probit(xi[lay.individual(GroupParam::omega, s)],
                                                    xi[lay.individual(GroupParam::alpha, s)],
                                                    xi[lay.individual(GroupParam::gamma, s)]),
                                 records[s]);
    }
    return acc;
}

// Group-level normal densities of the individual coordinates plus the
// standard normal priors on mu and tau. skip_mu_prior drops log phi(mu_p)
// for a pinned group mean.
double hier_log_prior(std::span<const double> xi, std::size_t subjects,
                      std::optional<GroupParam> skip_mu_prior = std::nullopt) {
    const HierLayout lay{subjects};
    double acc = 0.0;
    for (GroupParam p : kGroups) {
        const double mu = xi[lay.mu(p)];
        const double tau = xi[lay.tau(p)];
        const double log_sigma = std::log(kSigmaMax) + std_normal_log_cdf(tau);
        const double inv_sigma = std::exp(-log_sigma);
        for (std::size_t s = 0; s < subjects; ++s) {
            const double z = (xi[lay.individual(p, s)] - mu) * inv_sigma;
            if (!std::isfinite(z)) return kNegInf;
            acc += -0.5 * z * z - kLogSqrt2Pi - log_sigma;
        }
        if (skip_mu_prior != p) acc += std_normal_log_pdf(mu);
        acc += std_normal_log_pdf(tau);
    }
    return acc;
}

// Terms of the hierarchical log posterior that involve subject s: its
// likelihood and its three group-level normal densities.
double hier_subject_conditional(std::span<const double> xi, std::size_t s, const IGTRecord& record,
                                std::size_t subjects) {
    const HierLayout lay{subjects};
    double acc = 0.0;
    for (GroupParam p : kGroups) {
        const double log_sigma = std::log(kSigmaMax) + std_normal_log_cdf(xi[lay.tau(p)]);
        const double z = (xi[lay.individual(p, s)] - xi[lay.mu(p)]) * std::exp(-log_sigma);
        if (!std::isfinite(z)) return kNegInf;
        acc += -0.5 * z * z - kLogSqrt2Pi - log_sigma;
    }
    return acc + ev_log_likelihood(params_from_probit(xi[lay.individual(GroupParam::omega, s)],
                                                      xi[lay.individual(GroupParam::alpha, s)],
                                                      xi[lay.individual(GroupParam::gamma, s)]),
                                   record);
}

}  // namespace

std::string group_mean_name(GroupParam p) { return std::string("mu_") + individual_prefix(p); }

std::optional<GroupParam> parse_group_param(const std::string& s) {
    for (GroupParam p : kGroups) {
        if (s == group_mean_name(p) || s == individual_prefix(p)) return p;
    }
    if (s == "mu_omega" || s == "omega") return GroupParam::omega;
    if (s == "mu_alpha" || s == "alpha") return GroupParam::alpha;
    if (s == "mu_gamma" || s == "gamma") return GroupParam::gamma;
    return std::nullopt;
}

ParameterSpace hierarchical_space(std::size_t subjects) {
    if (subjects == 0) throw DomainError("hierarchical model needs at least one subject");
    std::vector<ParameterSpec> specs;
    specs.reserve(3 * subjects + 6);
    for (GroupParam p : kGroups)
        for (std::size_t s = 0; s < subjects; ++s)
            specs.push_back(ParameterSpec::interval(std::string(individual_prefix(p)) + "_" + std::to_string(s + 1),
                                                    0.0, 1.0));
    for (GroupParam p : kGroups) {
        specs.push_back(ParameterSpec::real_line(group_mean_name(p)));
        specs.push_back(ParameterSpec::interval(std::string("sigma_") + individual_prefix(p), 0.0, kSigmaMax));
    }
    return ParameterSpace(std::move(specs));
}

double hier_ev_log_unnorm_post(std::span<const double> xi, std::span<const IGTRecord> records) {
    if (records.empty()) throw DimensionError("hierarchical model needs at least one subject");
    const HierLayout lay{records.size()};
    if (xi.size() != lay.dimension())
        throw DimensionError("hierarchical EV layout for " + std::to_string(records.size()) + " subjects needs " +
                             std::to_string(lay.dimension()) + " coordinates, got " + std::to_string(xi.size()));
    const double prior = hier_log_prior(xi, records.size());
    if (prior == kNegInf) return prior;
    return hier_log_likelihood(xi, records) + prior;
}

std::vector<double> expand_restricted(std::span<const double> xi, std::size_t subjects,
                                      const Restriction& restriction) {
    const HierLayout lay{subjects};
    if (xi.size() + 1 != lay.dimension())
        throw DimensionError("restricted hierarchical layout needs " + std::to_string(lay.dimension() - 1) +
                             " coordinates, got " + std::to_string(xi.size()));
    const std::size_t pinned = lay.mu(restriction.param);
    std::vector<double> full(lay.dimension());
    std::copy(xi.begin(), xi.begin() + static_cast<std::ptrdiff_t>(pinned), full.begin());
    full[pinned] = restriction.value;
    std::copy(xi.begin() + static_cast<std::ptrdiff_t>(pinned), xi.end(),
              full.begin() + static_cast<std::ptrdiff_t>(pinned) + 1);
    return full;
}

Model make_hierarchical_ev_model(std::vector<IGTRecord> records, std::optional<Restriction> restriction) {
    if (records.empty()) throw DimensionError("hierarchical model needs at least one subject");
    for (const auto& r : records) r.validate();
    const std::size_t subjects = records.size();
    auto data = std::make_shared<const std::vector<IGTRecord>>(std::move(records));
    const HierLayout lay{subjects};

    Model m;
    m.space = hierarchical_space(subjects);
    if (!restriction) {
        m.label = "ev-hierarchical";
        m.log_likelihood = [data](std::span<const double> xi) { return hier_log_likelihood(xi, *data); };
        m.log_prior = [subjects](std::span<const double> xi) { return hier_log_prior(xi, subjects); };
    } else {
        const Restriction r = *restriction;
        if (!std::isfinite(r.value)) throw DomainError("restriction value must be finite");
        m.label = "ev-hierarchical[" + group_mean_name(r.param) + "=" + std::to_string(r.value) + "]";
        m.space = m.space.without(lay.mu(r.param));
        m.log_likelihood = [data, subjects, r](std::span<const double> xi) {
            const auto full = expand_restricted(xi, subjects, r);
            return hier_log_likelihood(full, *data);
        };
        m.log_prior = [subjects, r](std::span<const double> xi) {
            const auto full = expand_restricted(xi, subjects, r);
            return hier_log_prior(full, subjects, r.param);
        };
    }
    // Blocks: each subject's (omega, alpha, gamma), then the free group parameters.
    const std::optional<std::size_t> pinned =
        restriction ? std::optional<std::size_t>(lay.mu(restriction->param)) : std::nullopt;
    auto model_index = [pinned](std::size_t j) { return pinned && j > *pinned ? j - 1 : j; };
    auto expand = [subjects, restriction](std::span<const double> xi) {
        return restriction ? expand_restricted(xi, subjects, *restriction) : std::vector<double>(xi.begin(), xi.end());
    };
    for (std::size_t s = 0; s < subjects; ++s) {
        ModelBlock b;
        for (GroupParam p : kGroups) b.indices.push_back(model_index(lay.individual(p, s)));
        b.log_conditional = [data, s, subjects, expand](std::span<const double> xi) {
            return hier_subject_conditional(expand(xi), s, (*data)[s], subjects);
        };
        m.blocks.push_back(std::move(b));
    }
    ModelBlock group;
    for (GroupParam p : kGroups) {
        if (!restriction || restriction->param != p) group.indices.push_back(model_index(lay.mu(p)));
        group.indices.push_back(model_index(lay.tau(p)));
    }
    group.log_conditional = [subjects, restriction, expand](std::span<const double> xi) {
        return hier_log_prior(expand(xi), subjects,
                              restriction ? std::optional<GroupParam>(restriction->param) : std::nullopt);
    };
    m.blocks.push_back(std::move(group));

    m.sample_prior = [subjects, restriction](Rng& rng) {
        const HierLayout lay{subjects};
        std::normal_distribution<double> z;
        std::vector<double> full(lay.dimension());
        for (GroupParam p : kGroups) {
            full[lay.mu(p)] = z(rng);
            full[lay.tau(p)] = z(rng);
        }
        if (restriction) full[lay.mu(restriction->param)] = restriction->value;
        for (GroupParam p : kGroups) {
            const double sigma = kSigmaMax * std_normal_cdf(full[lay.tau(p)]);
            for (std::size_t s = 0; s < subjects; ++s) full[lay.individual(p, s)] = full[lay.mu(p)] + sigma * z(rng);
        }
        if (!restriction) return full;
        full.erase(full.begin() + static_cast<std::ptrdiff_t>(lay.mu(restriction->param)));
        return full;
    };
    return m;
}

}  // namespace marginalis
