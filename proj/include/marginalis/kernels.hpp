#pragma once

// Data-parallel inner loops. Every kernel has a serial reference and an
// OpenMP version; both produce bit-identical results because parallelism is
// only over independent elements, never over a floating-point reduction.

#include "marginalis/types.hpp"

#include <span>
#include <vector>

namespace marginalis {

enum class Exec { serial, parallel };

// f(row_i) for each row of draws.
std::vector<double> evaluate_rows(const LogDensity& f, const Matrix& draws, Exec exec = Exec::parallel);
std::vector<double> evaluate_rows_serial(const LogDensity& f, const Matrix& draws);
std::vector<double> evaluate_rows_omp(const LogDensity& f, const Matrix& draws);

// Gaussian kernel density estimate, log density at each point.
std::vector<double> kde_log_density(std::span<const double> samples, std::span<const double> points,
                                    double bandwidth, Exec exec = Exec::parallel);
std::vector<double> kde_log_density_serial(std::span<const double> samples, std::span<const double> points,
                                           double bandwidth);
std::vector<double> kde_log_density_omp(std::span<const double> samples, std::span<const double> points,
                                        double bandwidth);

// Reductions (sequential, fixed order).
double log_sum_exp(std::span<const double> x);
double log_mean_exp(std::span<const double> x);
double mean(std::span<const double> x);
double sample_variance(std::span<const double> x);  // N - 1 denominator
double median(std::vector<double> x);                // averages the middle pair when even

}  // namespace marginalis
