#include "marginalis/paramspace.hpp"

#include "marginalis/error.hpp"
#include "marginalis/normal.hpp"

#include <cmath>
#include <set>

namespace marginalis {

ParameterSpace::ParameterSpace(std::vector<ParameterSpec> specs) : specs_(std::move(specs)) {
    std::set<std::string> seen;
    for (const auto& s : specs_) {
        if (!seen.insert(s.name).second)
            throw DomainError("duplicate parameter name '" + s.name + "'");
        if (const auto* iv = std::get_if<Interval>(&s.support)) {
            if (!std::isfinite(iv->lower) || !std::isfinite(iv->upper) || !(iv->lower < iv->upper))
                throw DomainError("parameter '" + s.name + "' needs finite bounds with lower < upper");
        }
    }
}

std::vector<std::string> ParameterSpace::names() const {
    std::vector<std::string> out;
    out.reserve(specs_.size());
    for (const auto& s : specs_) out.push_back(s.name);
    return out;
}

std::optional<std::size_t> ParameterSpace::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < specs_.size(); ++i)
        if (specs_[i].name == name) return i;
    return std::nullopt;
}

ParameterSpace ParameterSpace::without(std::size_t i) const {
    auto copy = specs_;
    copy.erase(copy.begin() + static_cast<std::ptrdiff_t>(i));
    return ParameterSpace(std::move(copy));
}

namespace {

void check_dimension(std::size_t n, const ParameterSpace& space) {
    if (n != space.dimension())
        throw DimensionError("expected " + std::to_string(space.dimension()) + " coordinates, got " +
                             std::to_string(n));
}

}  // namespace

std::vector<double> to_unconstrained(std::span<const double> theta, const ParameterSpace& space) {
    check_dimension(theta.size(), space);
    std::vector<double> xi(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const auto& spec = space[i];
        const auto* iv = std::get_if<Interval>(&spec.support);
        if (!iv) {
            if (!std::isfinite(theta[i]))
                throw BoundaryError(i, "parameter '" + spec.name + "' (coordinate " + std::to_string(i) +
                                           ") is not finite");
            xi[i] = theta[i];
            continue;
        }
        if (!(theta[i] > iv->lower && theta[i] < iv->upper))
            throw BoundaryError(i, "parameter '" + spec.name + "' (coordinate " + std::to_string(i) +
                                       ") value " + std::to_string(theta[i]) +
                                       " is not strictly inside its support");
        xi[i] = std_normal_quantile((theta[i] - iv->lower) / (iv->upper - iv->lower));
    }
    return xi;
}

std::vector<double> from_unconstrained(std::span<const double> xi, const ParameterSpace& space) {
    check_dimension(xi.size(), space);
    std::vector<double> theta(xi.size());
    for (std::size_t i = 0; i < xi.size(); ++i) {
        if (!std::isfinite(xi[i]))
            throw DomainError("unconstrained coordinate " + std::to_string(i) + " is not finite");
        const auto* iv = std::get_if<Interval>(&space[i].support);
        if (!iv) {
            theta[i] = xi[i];
            continue;
        }
        double t = iv->lower + (iv->upper - iv->lower) * std_normal_cdf(xi[i]);
        // Phi saturates in double precision beyond |xi| ~ 8; keep the open interval.
        if (t <= iv->lower) t = std::nextafter(iv->lower, iv->upper);
        if (t >= iv->upper) t = std::nextafter(iv->upper, iv->lower);
        theta[i] = t;
    }
    return theta;
}

double log_jacobian(std::span<const double> xi, const ParameterSpace& space) {
    check_dimension(xi.size(), space);
    double acc = 0.0;
    for (std::size_t i = 0; i < xi.size(); ++i) {
        if (const auto* iv = std::get_if<Interval>(&space[i].support))
            acc += std::log(iv->upper - iv->lower) + std_normal_log_pdf(xi[i]);
    }
    return acc;
}

}  // namespace marginalis
