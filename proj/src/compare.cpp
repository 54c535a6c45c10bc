#include "marginalis/compare.hpp"

#include "marginalis/diagnostics.hpp"
#include "marginalis/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace marginalis {

BayesFactor bayes_factor(double log_ml_1, double log_ml_2) {
    if (!std::isfinite(log_ml_1) || !std::isfinite(log_ml_2))
        throw DomainError("Bayes factor needs finite log marginal likelihoods");
    const double lb = log_ml_1 - log_ml_2;
    return {std::exp(lb), lb};
}

void ModelComparison::validate() const {
    if (log_mls.empty()) throw DomainError("comparison needs at least one model");
    if (!labels.empty() && labels.size() != log_mls.size()) throw DimensionError("labels and log_mls differ in length");
    if (prior_probs.empty()) return;
    if (prior_probs.size() != log_mls.size()) throw DimensionError("prior_probs and log_mls differ in length");
    double total = 0.0;
    for (double p : prior_probs) {
        if (!(p >= 0.0)) throw DomainError("prior model probabilities must be non-negative");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DomainError("prior model probabilities must sum to 1");
}

std::vector<double> posterior_model_probs(const ModelComparison& c) {
    c.validate();
    const std::size_t k = c.log_mls.size();
    std::vector<double> a(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double lp = c.prior_probs.empty() ? -std::log(static_cast<double>(k)) : std::log(c.prior_probs[i]);
        a[i] = lp == -std::numeric_limits<double>::infinity() ? lp : c.log_mls[i] + lp;
    }
    const double norm = log_sum_exp(a);
    if (!std::isfinite(norm)) throw DomainError("posterior model probabilities are undefined");
    for (auto& v : a) v = std::exp(v - norm);
    return a;
}

namespace {

double quantile_sorted(const std::vector<double>& s, double p) {
    const double h = (static_cast<double>(s.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace

double silverman_bandwidth(std::span<const double> samples) {
    if (samples.size() < 2) throw DomainError("bandwidth needs at least two samples");
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    const double sd = std::sqrt(sample_variance(samples));
    const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) spread = sd;
    if (!(spread > 0.0)) throw DomainError("bandwidth of a constant sample");
    return 0.9 * spread * std::pow(static_cast<double>(s.size()), -0.2);
}

SavageDickey savage_dickey(const ScalarLogDensity& prior_log_density, std::span<const double> posterior_samples,
                           double theta0, Exec exec) {
    if (posterior_samples.size() < 100) throw DomainError("Savage-Dickey ratio needs at least 100 posterior samples");
    SavageDickey out{};
    out.bandwidth = silverman_bandwidth(posterior_samples);
    const double point[1] = {theta0};
    out.posterior_log_density = kde_log_density(posterior_samples, point, out.bandwidth, exec)[0];
    out.prior_log_density = prior_log_density(theta0);
    out.log_bf = out.prior_log_density - out.posterior_log_density;
    out.bf = std::exp(out.log_bf);
    const auto [lo, hi] = std::minmax_element(posterior_samples.begin(), posterior_samples.end());
    out.tail_warning = theta0 < *lo - 3.0 * out.bandwidth || theta0 > *hi + 3.0 * out.bandwidth;
    if (out.tail_warning)
        warn("Savage-Dickey: test value lies in the tail of the posterior sample; the density ratio is unstable");
    return out;
}

double find_intersection(const ScalarLogDensity& prior_log_density, std::span<const double> posterior_samples,
                         std::size_t grid_points, Exec exec) {
    if (posterior_samples.size() < 2) throw DomainError("intersection needs posterior samples");
    if (grid_points < 3) throw DomainError("intersection grid needs at least 3 points");
    const double bw = silverman_bandwidth(posterior_samples);
    const auto [lo_it, hi_it] = std::minmax_element(posterior_samples.begin(), posterior_samples.end());
    const double lo = *lo_it, hi = *hi_it;

    std::vector<double> grid(grid_points);
    for (std::size_t i = 0; i < grid_points; ++i)
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    const auto post = kde_log_density(posterior_samples, grid, bw, exec);
    std::vector<double> diff(grid_points);
    for (std::size_t i = 0; i < grid_points; ++i) diff[i] = prior_log_density(grid[i]) - post[i];
    const double mode = grid[static_cast<std::size_t>(std::max_element(post.begin(), post.end()) - post.begin())];

    auto gap = [&](double x) {
        const double p[1] = {x};
        return prior_log_density(x) - kde_log_density_serial(posterior_samples, p, bw)[0];
    };

    std::vector<double> roots;
    for (std::size_t i = 0; i + 1 < grid_points; ++i) {
        if (diff[i] == 0.0) {
            roots.push_back(grid[i]);
            continue;
        }
        if ((diff[i] < 0.0) == (diff[i + 1] < 0.0) || diff[i + 1] == 0.0) continue;
        double a = grid[i], b = grid[i + 1], fa = diff[i];
        for (int it = 0; it < 100 && b - a > 1e-12 * std::max(1.0, std::abs(a)); ++it) {
            const double m = 0.5 * (a + b);
            const double fm = gap(m);
            if ((fm < 0.0) == (fa < 0.0)) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        roots.push_back(0.5 * (a + b));
    }
    if (diff.back() == 0.0) roots.push_back(grid.back());
    if (roots.empty()) throw NoIntersectionError("prior and posterior densities do not cross within the sample range");
    return *std::min_element(roots.begin(), roots.end(),
                             [mode](double x, double y) { return std::abs(x - mode) < std::abs(y - mode); });
}

}  // namespace marginalis
