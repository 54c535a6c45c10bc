#include "marginalis/accuracy.hpp"

#include "marginalis/diagnostics.hpp"
#include "marginalis/error.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace marginalis {

ArFit fit_ar_yule_walker(std::span<const double> series, std::size_t order_max) {
    const std::size_t n = series.size();
    if (n < 2) throw DiagnosticError("AR fit needs at least two values");
    const double nd = static_cast<double>(n);
    if (order_max == 0)
        order_max = std::min<std::size_t>(n - 1, static_cast<std::size_t>(std::floor(10.0 * std::log10(nd))));
    order_max = std::min(order_max, n - 1);

    const double m = mean(series);
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) x[t] = series[t] - m;
    std::vector<double> acov(order_max + 1);
    for (std::size_t k = 0; k <= order_max; ++k) {
        double acc = 0.0;
        for (std::size_t t = 0; t + k < n; ++t) acc += x[t] * x[t + k];
        acov[k] = acc / nd;
    }
    if (!(acov[0] > 0.0) || !std::isfinite(acov[0]))
        throw DiagnosticError("AR fit of a series with zero or non-finite variance");

    // Levinson-Durbin recursion; phi[k] holds the order-k coefficients.
    std::vector<std::vector<double>> phi(order_max + 1);
    std::vector<double> vars(order_max + 1);
    vars[0] = acov[0];
    std::size_t best = 0;
    double best_aic = nd * std::log(vars[0]);
    for (std::size_t k = 1; k <= order_max; ++k) {
        double acc = acov[k];
        for (std::size_t j = 1; j < k; ++j) acc -= phi[k - 1][j - 1] * acov[k - j];
        const double pacf = acc / vars[k - 1];
        phi[k].resize(k);
        for (std::size_t j = 1; j < k; ++j) phi[k][j - 1] = phi[k - 1][j - 1] - pacf * phi[k - 1][k - j - 1];
        phi[k][k - 1] = pacf;
        vars[k] = vars[k - 1] * (1.0 - pacf * pacf);
        if (!(vars[k] > 0.0)) {
            phi.resize(k);
            break;
        }
        const double aic = nd * std::log(vars[k]) + 2.0 * static_cast<double>(k);
        if (aic < best_aic) {
            best_aic = aic;
            best = k;
        }
    }

    ArFit fit;
    fit.order = best;
    fit.coefficients = best ? phi[best] : std::vector<double>{};
    fit.var_pred = vars[best] * nd / (nd - static_cast<double>(best + 1));
    return fit;
}

double spectrum0_ar(std::span<const double> series) {
    if (series.size() < 8) throw DiagnosticError("spectral density at zero needs at least 8 values");
    const ArFit fit = fit_ar_yule_walker(series);
    const double phi_sum = std::accumulate(fit.coefficients.begin(), fit.coefficients.end(), 0.0);
    return fit.var_pred / ((1.0 - phi_sum) * (1.0 - phi_sum));
}

ErrorReport re2_from_log_weights(std::span<const double> log_l1, std::span<const std::size_t> chain_lengths,
                                 std::span<const double> log_l2, double log_ml) {
    if (!std::isfinite(log_ml)) throw DomainError("error report needs a finite log marginal likelihood");
    if (log_l1.size() < 2 || log_l2.size() < 2) throw DomainError("error report needs at least two draws of each kind");
    if (std::accumulate(chain_lengths.begin(), chain_lengths.end(), std::size_t{0}) != log_l1.size())
        throw DimensionError("chain lengths do not partition the posterior weights");

    const double n1 = static_cast<double>(log_l1.size());
    const double n2 = static_cast<double>(log_l2.size());
    const double s1 = n1 / (n1 + n2);
    const double s2 = n2 / (n1 + n2);

    std::vector<double> f1(log_l2.size());
    for (std::size_t i = 0; i < f1.size(); ++i) {
        const double u = log_l2[i] - log_ml;
        if (u == -std::numeric_limits<double>::infinity())
            f1[i] = 0.0;
        else
            f1[i] = u > 0.0 ? 1.0 / (s1 + s2 * std::exp(-u)) : std::exp(u) / (s1 * std::exp(u) + s2);
    }
    const double e1 = mean(f1);
    if (!(e1 > 0.0)) throw NoOverlapError("error report: proposal draws carry no posterior mass");

    std::vector<double> f2(log_l1.size());
    for (std::size_t j = 0; j < f2.size(); ++j) f2[j] = 1.0 / (s1 * std::exp(log_l1[j] - log_ml) + s2);
    const double e2 = mean(f2);
    const double v2 = sample_variance(f2);

    ErrorReport r;
    r.term1 = sample_variance(f1) / (e1 * e1) / n2;
    if (v2 / (e2 * e2) <= 1e-24) {
        r.rho_f2_zero = 1.0;
        r.term2 = 0.0;
    } else {
        double spec = 0.0, var = 0.0;
        std::size_t offset = 0;
        for (std::size_t len : chain_lengths) {
            std::span<const double> chain(f2.data() + offset, len);
            offset += len;
            if (len < 8) continue;
            const double vc = sample_variance(chain);
            if (!(vc > 0.0)) continue;
            spec += spectrum0_ar(chain);
            var += vc;
        }
        if (var > 0.0) {
            r.rho_f2_zero = spec / var;
        } else {
            warn("error report: chains too short for a spectral estimate; assuming independent posterior draws");
            r.rho_f2_zero = 1.0;
        }
        r.term2 = r.rho_f2_zero * v2 / (e2 * e2) / n1;
    }
    r.re2 = r.term1 + r.term2;
    r.cv_percent = 100.0 * std::sqrt(r.re2);
    return r;
}

ErrorReport re2_bridge(const Model& model, const MvnProposal& proposal, double log_ml, const SampleStore& iterate_half,
                       const Matrix& proposal_draws, Exec exec) {
    const LogDensity target = model.log_unnorm_post_fn();
    const LogDensity g = [&proposal](std::span<const double> xi) { return proposal.log_pdf(xi); };
    const Matrix posterior = iterate_half.pooled();
    const auto t1 = evaluate_rows(target, posterior, exec);
    const auto g1 = evaluate_rows(g, posterior, exec);
    const auto t2 = evaluate_rows(target, proposal_draws, exec);
    const auto g2 = evaluate_rows(g, proposal_draws, exec);
    std::vector<double> l1(t1.size()), l2(t2.size());
    for (std::size_t j = 0; j < l1.size(); ++j) l1[j] = t1[j] - g1[j];
    for (std::size_t i = 0; i < l2.size(); ++i) l2[i] = t2[i] - g2[i];
    std::vector<std::size_t> lengths(iterate_half.num_chains(), iterate_half.retained());
    return re2_from_log_weights(l1, lengths, l2, log_ml);
}

}  // namespace marginalis
