#pragma once

#include "marginalis/kernels.hpp"
#include "marginalis/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace marginalis {

enum class Adaptation {
    diagonal,  // per-coordinate scales
    full,      // full covariance shape; for strongly correlated targets
    blocked,   // one update per model block and iteration, full shape per block
};

struct SamplerConfig {
    std::size_t chains = 4;
    std::size_t iterations = 10000;  // after burn-in, before thinning
    std::size_t burn_in = 1000;
    std::size_t thin = 1;
    std::uint64_t seed = 0;
    double target_acceptance = 0.234;
    Adaptation adaptation = Adaptation::diagonal;

    void validate() const;
    std::size_t retained() const { return iterations / thin; }
};

struct SampleStore {
    std::vector<Matrix> chains;  // retained x dimension, xi coordinates
    ParameterSpace space;
    SamplerConfig config;
    std::vector<double> acceptance;  // post burn-in acceptance rate per chain

    std::size_t num_chains() const { return chains.size(); }
    std::size_t retained() const { return chains.empty() ? 0 : static_cast<std::size_t>(chains.front().rows()); }
    std::size_t dimension() const { return space.dimension(); }
    std::size_t total_draws() const { return num_chains() * retained(); }
    // All chains stacked in chain order.
    Matrix pooled() const;
    std::vector<double> pooled_column(std::size_t j) const;
    void validate() const;
};

// Adaptive random-walk Metropolis. The proposal scale (and shape) adapts
// during burn-in by Robbins-Monro toward the target acceptance rate and is
// frozen afterwards. Chain c uses stream (seed, c); chains start at iid
// standard normal draws. In blocked mode an iteration updates each of the
// model's blocks in turn, each with its own adapted proposal, and the reported
// acceptance is the mean over block updates.
SampleStore run_mcmc(const Model& model, const SamplerConfig& config, Exec exec = Exec::parallel);

inline constexpr double kRHatDivergent = 1e12;

struct RHatReport {
    std::vector<double> values;
    std::vector<bool> divergent;  // zero within-chain variance with distinct means

    double max() const;
    bool any_divergent() const;
};

// Split-chain potential scale reduction per coordinate, floored at 1.
RHatReport r_hat(const SampleStore& store);

// First half of every chain, then second half. An odd length drops the last draw.
std::pair<SampleStore, SampleStore> split_halves(const SampleStore& store);

// CSV with header chain,iter,<names>; 1-based chain and iteration indices.
void write_samples_csv(std::ostream& out, const SampleStore& store);
SampleStore read_samples_csv(std::istream& in, const ParameterSpace& space);
void save_samples_csv(const std::string& path, const SampleStore& store);
SampleStore load_samples_csv(const std::string& path, const ParameterSpace& space);

}  // namespace marginalis
