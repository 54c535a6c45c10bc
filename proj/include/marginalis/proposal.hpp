#pragma once

#include "marginalis/paramspace.hpp"
#include "marginalis/rng.hpp"
#include "marginalis/types.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace marginalis {

// Multivariate normal with a cached lower Cholesky factor. A covariance that
// fails to factor gets a ridge of 1e-10 * mean(diag), grown tenfold up to six
// times before FitError.
class MvnProposal {
public:
    MvnProposal(Vector mean, Eigen::MatrixXd covariance);

    std::size_t dimension() const { return static_cast<std::size_t>(mean_.size()); }
    const Vector& mean() const { return mean_; }
    const Eigen::MatrixXd& covariance() const { return cov_; }
    const Eigen::MatrixXd& factor() const { return chol_; }
    double ridge() const { return ridge_; }

    double log_pdf(std::span<const double> xi) const;
    Matrix sample(std::size_t n, Rng& rng) const;

    // Same mean, standard deviations divided by factor.
    MvnProposal shrunk(double factor) const;

private:
    Vector mean_;
    Eigen::MatrixXd cov_;
    Eigen::MatrixXd chol_;
    double log_det_ = 0.0;
    double ridge_ = 0.0;
};

// Column means and the N-1 sample covariance. Needs N >= d + 1.
MvnProposal fit_mvn_moments(const Matrix& samples);

double mvn_log_pdf(const MvnProposal& p, std::span<const double> xi);
Matrix mvn_sample(const MvnProposal& p, std::size_t n, std::uint64_t seed);

struct BetaShape {
    double alpha;
    double beta;
};

double beta_log_pdf(double theta, double alpha, double beta);

BetaShape fit_beta_from_moments(double mean, double variance);
BetaShape fit_beta_moments(std::span<const double> samples);

// gamma * Beta(1, 1) + (1 - gamma) * Beta(alpha, beta) on (0, 1).
struct BetaMixtureIS {
    double gamma = 0.3;
    double alpha = 1.0;
    double beta = 1.0;
};

double beta_mixture_log_pdf(const BetaMixtureIS& q, double theta);
std::vector<double> beta_mixture_sample(const BetaMixtureIS& q, std::size_t n, std::uint64_t seed);

// A normalized density with a sampler, over whatever coordinates the caller uses.
struct Density {
    std::size_t dimension = 0;
    std::function<double(std::span<const double>)> log_pdf;
    std::function<Matrix(std::size_t, Rng&)> sample;
};

Density as_density(const MvnProposal& p);
Density as_density(const BetaMixtureIS& q);

// Density of a theta-space density expressed in xi coordinates.
Density in_unconstrained(const Density& theta_density, const ParameterSpace& space);

// w * a + (1 - w) * b.
Density mixture(double weight, const Density& a, const Density& b);

}  // namespace marginalis
