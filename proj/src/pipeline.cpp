#include "marginalis/pipeline.hpp"

#include "marginalis/error.hpp"

#include <cmath>

namespace marginalis {

std::optional<Estimator> parse_estimator(const std::string& s) {
    if (s == "naive") return Estimator::naive;
    if (s == "is") return Estimator::is;
    if (s == "ghm") return Estimator::ghm;
    if (s == "bridge") return Estimator::bridge;
    return std::nullopt;
}

std::string estimator_name(Estimator e) {
    switch (e) {
        case Estimator::naive: return "naive";
        case Estimator::is: return "is";
        case Estimator::ghm: return "ghm";
        case Estimator::bridge: return "bridge";
    }
    return "?";
}

Density prior_density(const Model& model) {
    Density d;
    d.dimension = model.dimension();
    d.log_pdf = model.log_prior;
    d.sample = [sampler = model.sample_prior, dim = model.dimension()](std::size_t n, Rng& rng) {
        Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
            const auto x = sampler(rng);
            std::copy(x.begin(), x.end(), row_span(out, i).begin());
        }
        return out;
    };
    return d;
}

MlResult estimate_log_ml(const Model& model, const SampleStore& store, Estimator estimator,
                         const EstimatorSettings& settings, Exec exec) {
    store.validate();
    if (store.dimension() != model.dimension()) throw DimensionError("samples do not match the model dimension");
    const auto [fit_half, iterate_half] = split_halves(store);
    const std::size_t n2 = settings.n2 ? settings.n2 : iterate_half.total_draws();

    MlResult out;
    out.estimator = estimator;
    switch (estimator) {
        case Estimator::naive:
            out.log_ml = naive_mc(model.log_likelihood, model.sample_prior, n2, settings.seed, exec);
            out.draws = n2;
            break;
        case Estimator::is: {
            const MvnProposal fitted = fit_mvn_moments(fit_half.pooled());
            const Density q = mixture(settings.is_mixture_weight, prior_density(model), as_density(fitted));
            const ImportanceEstimate is = importance_sampling_with_error(model.log_unnorm_post_fn(), q, n2,
                                                                         settings.seed, exec);
            out.log_ml = is.log_ml;
            out.cv_percent = is.cv_percent;
            out.draws = n2;
            break;
        }
        case Estimator::ghm: {
            const MvnProposal q = fit_mvn_moments(fit_half.pooled()).shrunk(settings.ghm_shrink);
            const Matrix draws = iterate_half.pooled();
            out.log_ml = generalized_harmonic_mean(model.log_unnorm_post_fn(),
                                                   [&q](std::span<const double> xi) { return q.log_pdf(xi); }, draws,
                                                   exec);
            out.draws = static_cast<std::size_t>(draws.rows());
            break;
        }
        case Estimator::bridge:
            out.bridge = bridge_optimal(model, store, n2, settings.bridge, settings.seed, exec);
            out.log_ml = out.bridge->log_ml;
            out.cv_percent = out.bridge->cv_percent;
            out.draws = out.bridge->n1 + out.bridge->n2;
            break;
    }
    return out;
}

namespace fixtures {

const std::array<double, 12> kPriorDraws = {0.58, 0.76, 0.03, 0.93, 0.27, 0.97, 0.45, 0.46, 0.18, 0.64, 0.06, 0.15};
const std::array<double, 12> kMixtureDraws = {0.11, 0.07, 0.32, 0.25, 0.41, 0.39, 0.25, 0.13, 0.64, 0.26, 0.74, 0.92};
const std::array<double, 24> kPosteriorDraws = {0.22, 0.16, 0.09, 0.35, 0.06, 0.27, 0.26, 0.41,
                                                0.20, 0.43, 0.21, 0.12, 0.15, 0.21, 0.24, 0.18,
                                                0.12, 0.22, 0.15, 0.22, 0.23, 0.26, 0.29, 0.28};
const std::array<double, 12> kProbitFirst = {-0.77, -0.99, -1.34, -0.39, -1.55, -0.61,
                                             -0.64, -0.23, -0.84, -0.18, -0.81, -1.17};
const std::array<double, 12> kProbitSecond = {-1.04, -0.81, -0.71, -0.92, -1.17, -0.77,
                                              -1.04, -0.77, -0.74, -0.64, -0.55, -0.58};
const std::array<double, 12> kProposalDraws = {-1.11, -0.63, -1.48, -0.59, -0.48, -0.69,
                                               -0.74, -0.51, -0.82, -1.54, -0.76, -0.96};

}  // namespace fixtures

namespace {

template <std::size_t N>
Matrix column(const std::array<double, N>& v) {
    Matrix m(static_cast<Eigen::Index>(N), 1);
    for (std::size_t i = 0; i < N; ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
    return m;
}

}  // namespace

RunningExample running_example(const BridgeConfig& config) {
    using namespace fixtures;
    const BetaBinomialData data{kSuccesses, kTrials};
    const Model model = make_beta_binomial_model(data);
    RunningExample out;

    // Uniform prior: the theta-space target is the likelihood itself.
    const LogDensity lik_theta = [data](std::span<const double> t) { return bb_log_likelihood(data, t[0]); };
    out.naive = std::exp(naive_mc(lik_theta, column(kPriorDraws), Exec::serial));

    out.beta_fit = fit_beta_from_moments(kPosteriorMean, kPosteriorVariance);
    const BetaMixtureIS q{kMixtureWeight, out.beta_fit.alpha, out.beta_fit.beta};
    out.importance = std::exp(importance_sampling(
        lik_theta, [q](std::span<const double> t) { return beta_mixture_log_pdf(q, t[0]); }, column(kMixtureDraws),
        Exec::serial));

    const MvnProposal proposal = fit_mvn_moments(column(kProbitFirst));
    out.probit_mean = proposal.mean()(0);
    out.probit_sd = std::sqrt(proposal.covariance()(0, 0));
    const MvnProposal thin = proposal.shrunk(1.5);
    const LogDensity target = model.log_unnorm_post_fn();
    out.harmonic_mean = std::exp(generalized_harmonic_mean(
        target, [&thin](std::span<const double> xi) { return thin.log_pdf(xi); }, column(kProbitFirst),
        Exec::serial));

    const LogWeights w = compute_log_weights(
        target, [&proposal](std::span<const double> xi) { return proposal.log_pdf(xi); }, column(kProbitSecond),
        column(kProposalDraws), Exec::serial);
    const BridgeIteration it = bridge_iterate(w, config);
    out.bridge_first = std::exp(it.trace.front());
    out.bridge = std::exp(it.log_ml);
    out.bridge_iterations = it.iterations;
    out.bridge_converged = it.converged;
    return out;
}

}  // namespace marginalis
