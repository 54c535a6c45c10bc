#include "marginalis/normal.hpp"

#include "marginalis/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace marginalis {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

double poly(const double* c, int n, double x) {
    double acc = c[n - 1];
    for (int i = n - 2; i >= 0; --i) acc = acc * x + c[i];
    return acc;
}

// AS241 PPND16 coefficients, lowest order first.
constexpr double kA[8] = {3.3871328727963666080e0, 1.3314166789178437745e+2,
                          1.9715909503065514427e+3, 1.3731693765509461125e+4,
                          4.5921953931549871457e+4, 6.7265770927008700853e+4,
                          3.3430575583588128105e+4, 2.5090809287301226727e+3};
constexpr double kB[8] = {1.0,
                          4.2313330701600911252e+1, 6.8718700749205790830e+2,
                          5.3941960214247511077e+3, 2.1213794301586595867e+4,
                          3.9307895800092710610e+4, 2.8729085735721942674e+4,
                          5.2264952788528545610e+3};
constexpr double kC[8] = {1.42343711074968357734e0, 4.63033784615654529590e0,
                          5.76949722146069140550e0, 3.64784832476320460504e0,
                          1.27045825245236838258e0, 2.41780725177450611770e-1,
                          2.27238449892691845833e-2, 7.74545014278341407640e-4};
constexpr double kD[8] = {1.0,
                          2.05319162663775882187e0, 1.67638483018380384940e0,
                          6.89767334985100004550e-1, 1.48103976427480074590e-1,
                          1.51986665636164571966e-2, 5.47593808499534494600e-4,
                          1.05075007164441684324e-9};
constexpr double kE[8] = {6.65790464350110377720e0, 5.46378491116411436990e0,
                          1.78482653991729133580e0, 2.96560571828504891230e-1,
                          2.65321895265761230930e-2, 1.24266094738807843860e-3,
                          2.71155556874348757815e-5, 2.01033439929228813265e-7};
constexpr double kF[8] = {1.0,
                          5.99832206555887937690e-1, 1.36929880922735805310e-1,
                          1.48753612908506148525e-2, 7.86869131145613259100e-4,
                          1.84631831751005468180e-5, 1.42151175831644588870e-7,
                          2.04426310338993978564e-15};

}  // namespace

double std_normal_pdf(double x) { return std::exp(std_normal_log_pdf(x)); }

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double std_normal_log_cdf(double x) {
    if (x > -35.0) return std::log(0.5 * std::erfc(-x * kInvSqrt2));
    // Mills-ratio asymptotic series; truncation error < 1e-12 relative here.
    const double z = 1.0 / (x * x);
    const double series = 1.0 - z * (1.0 - z * (3.0 - z * (15.0 - z * (105.0 - z * 945.0))));
    return std_normal_log_pdf(x) - std::log(-x) + std::log(series);
}

double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw DomainError("normal quantile requires p in (0, 1), got " + std::to_string(p));
    constexpr double lo = 1e-15;
    if (p < lo) p = lo;
    if (p > 1.0 - lo) p = 1.0 - lo;

    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * poly(kA, 8, r) / poly(kB, 8, r);
    }
    double r = std::sqrt(-std::log(q < 0.0 ? p : 1.0 - p));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = poly(kC, 8, r) / poly(kD, 8, r);
    } else {
        r -= 5.0;
        value = poly(kE, 8, r) / poly(kF, 8, r);
    }
    return q < 0.0 ? -value : value;
}

double normal_log_pdf(double x, double mean, double sd) {
    if (!(sd > 0.0)) return -std::numeric_limits<double>::infinity();
    const double z = (x - mean) / sd;
    return -0.5 * z * z - kLogSqrt2Pi - std::log(sd);
}

}  // namespace marginalis
