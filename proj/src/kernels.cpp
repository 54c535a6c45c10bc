#include "marginalis/kernels.hpp"

#include "marginalis/error.hpp"
#include "marginalis/normal.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

namespace marginalis {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

std::vector<double> evaluate_rows_serial(const LogDensity& f, const Matrix& draws) {
    std::vector<double> out(static_cast<std::size_t>(draws.rows()));
    for (Eigen::Index i = 0; i < draws.rows(); ++i) out[i] = f(row_span(draws, i));
    return out;
}

std::vector<double> evaluate_rows_omp(const LogDensity& f, const Matrix& draws) {
    const Eigen::Index n = draws.rows();
    std::vector<double> out(static_cast<std::size_t>(n));
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        try {
            out[i] = f(row_span(draws, i));
        } catch (...) {
#pragma omp critical(marginalis_eval_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::vector<double> evaluate_rows(const LogDensity& f, const Matrix& draws, Exec exec) {
    return exec == Exec::serial ? evaluate_rows_serial(f, draws) : evaluate_rows_omp(f, draws);
}

namespace {

double kde_at(std::span<const double> samples, double x, double bandwidth) {
    // log mean exp of the kernel log densities, shifted by the largest term
    double best = kNegInf;
    for (double s : samples) {
        const double z = (x - s) / bandwidth;
        best = std::max(best, -0.5 * z * z);
    }
    double acc = 0.0;
    for (double s : samples) {
        const double z = (x - s) / bandwidth;
        acc += std::exp(-0.5 * z * z - best);
    }
    return best + std::log(acc / static_cast<double>(samples.size())) - kLogSqrt2Pi - std::log(bandwidth);
}

void check_kde(std::span<const double> samples, double bandwidth) {
    if (samples.empty()) throw DomainError("kernel density estimate needs samples");
    if (!(bandwidth > 0.0)) throw DomainError("kernel bandwidth must be positive");
}

}  // namespace

std::vector<double> kde_log_density_serial(std::span<const double> samples, std::span<const double> points,
                                           double bandwidth) {
    check_kde(samples, bandwidth);
    std::vector<double> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = kde_at(samples, points[i], bandwidth);
    return out;
}

std::vector<double> kde_log_density_omp(std::span<const double> samples, std::span<const double> points,
                                        double bandwidth) {
    check_kde(samples, bandwidth);
    const auto n = static_cast<std::ptrdiff_t>(points.size());
    std::vector<double> out(points.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = kde_at(samples, points[i], bandwidth);
    return out;
}

std::vector<double> kde_log_density(std::span<const double> samples, std::span<const double> points,
                                    double bandwidth, Exec exec) {
    return exec == Exec::serial ? kde_log_density_serial(samples, points, bandwidth)
                                : kde_log_density_omp(samples, points, bandwidth);
}

double log_sum_exp(std::span<const double> x) {
    if (x.empty()) return kNegInf;
    const double m = *std::max_element(x.begin(), x.end());
    if (m == kNegInf) return kNegInf;
    if (!std::isfinite(m)) return m;
    double acc = 0.0;
    for (double v : x) acc += std::exp(v - m);
    return m + std::log(acc);
}

double log_mean_exp(std::span<const double> x) {
    if (x.empty()) throw DomainError("log_mean_exp of an empty sequence");
    return log_sum_exp(x) - std::log(static_cast<double>(x.size()));
}

double mean(std::span<const double> x) {
    if (x.empty()) throw DomainError("mean of an empty sequence");
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
    if (x.size() < 2) throw DomainError("sample variance needs at least two values");
    const double m = mean(x);
    double acc = 0.0;
    for (double v : x) acc += (v - m) * (v - m);
    return acc / static_cast<double>(x.size() - 1);
}

double median(std::vector<double> x) {
    if (x.empty()) throw DomainError("median of an empty sequence");
    const std::size_t mid = x.size() / 2;
    std::nth_element(x.begin(), x.begin() + mid, x.end());
    const double upper = x[mid];
    if (x.size() % 2 == 1) return upper;
    const double lower = *std::max_element(x.begin(), x.begin() + mid);
    return 0.5 * (lower + upper);
}

}  // namespace marginalis
