#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace marginalis {

struct RealLine {};

struct Interval {
    double lower;
    double upper;
};

using Support = std::variant<RealLine, Interval>;

struct ParameterSpec {
    std::string name;
    Support support;

    static ParameterSpec real_line(std::string name) { return {std::move(name), RealLine{}}; }
    static ParameterSpec interval(std::string name, double lower, double upper) {
        return {std::move(name), Interval{lower, upper}};
    }
    bool is_interval() const { return std::holds_alternative<Interval>(support); }
};

// Ordered parameter list defining the unconstrained coordinate system.
// Interval coordinates map through the scaled probit xi = Phi^{-1}((theta - l) / (u - l));
// real-line coordinates are the identity.
class ParameterSpace {
public:
    ParameterSpace() = default;
    explicit ParameterSpace(std::vector<ParameterSpec> specs);

    std::size_t dimension() const { return specs_.size(); }
    const std::vector<ParameterSpec>& specs() const { return specs_; }
    const ParameterSpec& operator[](std::size_t i) const { return specs_[i]; }
    std::vector<std::string> names() const;
    std::optional<std::size_t> index_of(const std::string& name) const;

    // Copy of this space with coordinate i removed.
    ParameterSpace without(std::size_t i) const;

private:
    std::vector<ParameterSpec> specs_;
};

std::vector<double> to_unconstrained(std::span<const double> theta, const ParameterSpace& space);
std::vector<double> from_unconstrained(std::span<const double> xi, const ParameterSpace& space);

// log |d theta / d xi| = sum over interval coordinates of log(u - l) + log phi(xi_i).
double log_jacobian(std::span<const double> xi, const ParameterSpace& space);

}  // namespace marginalis
