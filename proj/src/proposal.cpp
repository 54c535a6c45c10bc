#include "marginalis/proposal.hpp"

#include "marginalis/error.hpp"
#include "marginalis/kernels.hpp"
#include "marginalis/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace marginalis {

MvnProposal::MvnProposal(Vector mean, Eigen::MatrixXd covariance) : mean_(std::move(mean)), cov_(std::move(covariance)) {
    const auto d = mean_.size();
    if (d == 0) throw DimensionError("normal proposal needs at least one dimension");
    if (cov_.rows() != d || cov_.cols() != d) throw DimensionError("covariance shape does not match the mean");
    if (!mean_.allFinite() || !cov_.allFinite()) throw FitError("normal proposal has non-finite moments");
    cov_ = 0.5 * (cov_ + cov_.transpose());

    Eigen::LLT<Eigen::MatrixXd> llt(cov_);
    const double base = 1e-10 * std::abs(cov_.diagonal().mean());
    double ridge = base;
    for (int attempt = 0; llt.info() != Eigen::Success; ++attempt) {
        if (attempt == 6 || !(base > 0.0))
            throw FitError("covariance is not positive definite even after ridge repair");
        Eigen::MatrixXd repaired = cov_;
        repaired.diagonal().array() += ridge;
        llt.compute(repaired);
        if (llt.info() == Eigen::Success) {
            cov_ = repaired;
            ridge_ = ridge;
        }
        ridge *= 10.0;
    }
    chol_ = llt.matrixL();
    log_det_ = 2.0 * chol_.diagonal().array().log().sum();
}

double MvnProposal::log_pdf(std::span<const double> xi) const {
    const auto d = static_cast<std::size_t>(mean_.size());
    if (xi.size() != d)
        throw DimensionError("normal density of dimension " + std::to_string(d) + " evaluated at a point of dimension " +
                             std::to_string(xi.size()));
    // Forward substitution L v = xi - mean.
    std::vector<double> v(d);
    double quad = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double acc = xi[i] - mean_(static_cast<Eigen::Index>(i));
        for (std::size_t k = 0; k < i; ++k) acc -= chol_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) * v[k];
        v[i] = acc / chol_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
        quad += v[i] * v[i];
    }
    return -0.5 * (static_cast<double>(d) * 2.0 * kLogSqrt2Pi + log_det_ + quad);
}

Matrix MvnProposal::sample(std::size_t n, Rng& rng) const {
    const auto d = mean_.size();
    std::normal_distribution<double> normal;
    Matrix out(static_cast<Eigen::Index>(n), d);
    Vector z(d);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
        for (Eigen::Index j = 0; j < d; ++j) z(j) = normal(rng);
        out.row(i) = (mean_ + chol_.triangularView<Eigen::Lower>() * z).transpose();
    }
    return out;
}

MvnProposal MvnProposal::shrunk(double factor) const {
    if (!(factor > 0.0)) throw DomainError("shrink factor must be positive");
    return MvnProposal(mean_, cov_ / (factor * factor));
}

MvnProposal fit_mvn_moments(const Matrix& samples) {
    const auto n = samples.rows();
    const auto d = samples.cols();
    if (d == 0) throw DimensionError("cannot fit a normal proposal to zero-dimensional draws");
    if (n <= d)
        throw FitError("fitting a " + std::to_string(d) + "-dimensional normal needs more than " + std::to_string(d) +
                       " draws, got " + std::to_string(n));
    const Vector m = samples.colwise().mean().transpose();
    const Eigen::MatrixXd centered = samples.rowwise() - m.transpose();
    Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
    return MvnProposal(m, std::move(cov));
}

double mvn_log_pdf(const MvnProposal& p, std::span<const double> xi) { return p.log_pdf(xi); }

Matrix mvn_sample(const MvnProposal& p, std::size_t n, std::uint64_t seed) {
    Rng rng = make_stream(seed);
    return p.sample(n, rng);
}

double beta_log_pdf(double theta, double alpha, double beta) {
    if (!(theta > 0.0 && theta < 1.0)) throw BoundaryError(0, "beta density needs theta strictly inside (0, 1)");
    return (alpha - 1.0) * std::log(theta) + (beta - 1.0) * std::log1p(-theta) - std::lgamma(alpha) - std::lgamma(beta) +
           std::lgamma(alpha + beta);
}

BetaShape fit_beta_from_moments(double m, double variance) {
    if (!(m > 0.0 && m < 1.0)) throw FitError("beta moment fit needs a mean inside (0, 1)");
    if (!(variance > 0.0)) throw FitError("beta moment fit needs a positive variance");
    const double k = m * (1.0 - m) / variance - 1.0;
    if (!(k > 0.0)) throw FitError("sample variance too large for a beta distribution (shapes would be non-positive)");
    return {m * k, (1.0 - m) * k};
}

BetaShape fit_beta_moments(std::span<const double> samples) {
    if (samples.size() < 2) throw FitError("beta moment fit needs at least two samples");
    for (double s : samples)
        if (!(s > 0.0 && s < 1.0)) throw FitError("beta moment fit needs samples inside (0, 1)");
    return fit_beta_from_moments(mean(samples), sample_variance(samples));
}

namespace {

void check_mixture(const BetaMixtureIS& q) {
    if (!(q.gamma >= 0.0 && q.gamma <= 1.0)) throw DomainError("mixture weight must lie in [0, 1]");
    if (!(q.alpha > 0.0 && q.beta > 0.0)) throw DomainError("beta shapes must be positive");
}

double draw_beta(double a, double b, Rng& rng) {
    std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    const double theta = x / (x + y);
    return std::clamp(theta, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

}  // namespace

double beta_mixture_log_pdf(const BetaMixtureIS& q, double theta) {
    check_mixture(q);
    if (!(theta > 0.0 && theta < 1.0)) throw BoundaryError(0, "mixture density needs theta strictly inside (0, 1)");
    if (q.gamma == 1.0) return 0.0;
    const double lb = std::log1p(-q.gamma) + beta_log_pdf(theta, q.alpha, q.beta);
    if (q.gamma == 0.0) return lb;
    const double lu = std::log(q.gamma);
    const double hi = std::max(lu, lb);
    return hi + std::log1p(std::exp(std::min(lu, lb) - hi));
}

std::vector<double> beta_mixture_sample(const BetaMixtureIS& q, std::size_t n, std::uint64_t seed) {
    check_mixture(q);
    Rng rng = make_stream(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> out(n);
    for (auto& v : out) v = unif(rng) < q.gamma ? draw_beta(1.0, 1.0, rng) : draw_beta(q.alpha, q.beta, rng);
    return out;
}

Density as_density(const MvnProposal& p) {
    Density d;
    d.dimension = p.dimension();
    d.log_pdf = [p](std::span<const double> xi) { return p.log_pdf(xi); };
    d.sample = [p](std::size_t n, Rng& rng) { return p.sample(n, rng); };
    return d;
}

Density as_density(const BetaMixtureIS& q) {
    check_mixture(q);
    Density d;
    d.dimension = 1;
    d.log_pdf = [q](std::span<const double> theta) { return beta_mixture_log_pdf(q, theta[0]); };
    d.sample = [q](std::size_t n, Rng& rng) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        Matrix out(static_cast<Eigen::Index>(n), 1);
        for (Eigen::Index i = 0; i < out.rows(); ++i)
            out(i, 0) = unif(rng) < q.gamma ? draw_beta(1.0, 1.0, rng) : draw_beta(q.alpha, q.beta, rng);
        return out;
    };
    return d;
}

Density in_unconstrained(const Density& theta_density, const ParameterSpace& space) {
    if (theta_density.dimension != space.dimension()) throw DimensionError("density and parameter space differ in dimension");
    Density d;
    d.dimension = space.dimension();
    d.log_pdf = [q = theta_density.log_pdf, space](std::span<const double> xi) {
        const auto theta = from_unconstrained(xi, space);
        return q(theta) + log_jacobian(xi, space);
    };
    d.sample = [q = theta_density.sample, space](std::size_t n, Rng& rng) {
        Matrix theta = q(n, rng);
        for (Eigen::Index i = 0; i < theta.rows(); ++i) {
            const auto xi = to_unconstrained(row_span(theta, i), space);
            std::copy(xi.begin(), xi.end(), row_span(theta, i).begin());
        }
        return theta;
    };
    return d;
}

Density mixture(double weight, const Density& a, const Density& b) {
    if (!(weight >= 0.0 && weight <= 1.0)) throw DomainError("mixture weight must lie in [0, 1]");
    if (a.dimension != b.dimension) throw DimensionError("mixture components differ in dimension");
    Density d;
    d.dimension = a.dimension;
    const double lw = std::log(weight);
    const double l1w = std::log1p(-weight);
    d.log_pdf = [lw, l1w, fa = a.log_pdf, fb = b.log_pdf](std::span<const double> x) {
        const double u = lw + fa(x);
        const double v = l1w + fb(x);
        const double hi = std::max(u, v);
        if (hi == -std::numeric_limits<double>::infinity()) return hi;
        return hi + std::log1p(std::exp(std::min(u, v) - hi));
    };
    d.sample = [weight, sa = a.sample, sb = b.sample, dim = a.dimension](std::size_t n, Rng& rng) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
        for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) = unif(rng) < weight ? sa(1, rng) : sb(1, rng);
        return out;
    };
    return d;
}

}  // namespace marginalis
