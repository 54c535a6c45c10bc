#pragma once

namespace marginalis {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))

inline double std_normal_log_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double std_normal_pdf(double x);
double std_normal_cdf(double x);

// log Phi(x), accurate far into the lower tail where Phi(x) underflows.
double std_normal_log_cdf(double x);

// Phi^{-1}(p) via Wichura's AS241 (relative error ~1e-16). Inputs in (0, 1e-15)
// and (1 - 1e-15, 1) are clamped; p outside the open unit interval throws DomainError.
double std_normal_quantile(double p);

// log N(x; mean, sd)
double normal_log_pdf(double x, double mean, double sd);

}  // namespace marginalis
