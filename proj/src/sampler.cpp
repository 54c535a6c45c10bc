#include "marginalis/sampler.hpp"

#include "marginalis/diagnostics.hpp"
#include "marginalis/error.hpp"
#include "marginalis/io.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace marginalis {

void SamplerConfig::validate() const {
    if (chains == 0) throw SamplingError("sampler needs at least one chain");
    if (iterations == 0) throw SamplingError("zero iterations after burn-in would leave an empty sample store");
    if (thin == 0) throw SamplingError("thinning interval must be positive");
    if (iterations % thin != 0)
        throw SamplingError("iterations (" + std::to_string(iterations) + ") must be divisible by thin (" +
                            std::to_string(thin) + ")");
    if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
        throw SamplingError("target acceptance must lie in (0, 1)");
}

Matrix SampleStore::pooled() const {
    Matrix out(static_cast<Eigen::Index>(total_draws()), static_cast<Eigen::Index>(dimension()));
    Eigen::Index row = 0;
    for (const auto& c : chains) {
        out.middleRows(row, c.rows()) = c;
        row += c.rows();
    }
    return out;
}

std::vector<double> SampleStore::pooled_column(std::size_t j) const {
    std::vector<double> out;
    out.reserve(total_draws());
    for (const auto& c : chains)
        for (Eigen::Index i = 0; i < c.rows(); ++i) out.push_back(c(i, static_cast<Eigen::Index>(j)));
    return out;
}

void SampleStore::validate() const {
    if (chains.empty()) throw SamplingError("sample store has no chains");
    const auto rows = chains.front().rows();
    for (const auto& c : chains) {
        if (c.rows() != rows || c.cols() != static_cast<Eigen::Index>(dimension()))
            throw DimensionError("chains in a sample store must share one shape");
        if (!c.allFinite()) throw SamplingError("sample store contains non-finite values");
    }
    if (rows == 0) throw SamplingError("sample store is empty");
}

namespace {

std::string describe_point(std::span<const double> xi) {
    std::string s = "(";
    for (std::size_t i = 0; i < xi.size(); ++i) {
        if (i) s += ", ";
        s += format_double(xi[i]);
    }
    return s + ")";
}

double checked_eval(const LogDensity& f, std::span<const double> xi) {
    const double v = f(xi);
    if (std::isnan(v)) throw SamplingError("log posterior returned NaN at xi = " + describe_point(xi));
    return v;
}

// Running mean and scatter of the adaptation window.
struct Moments {
    explicit Moments(std::size_t d) : mean(Vector::Zero(static_cast<Eigen::Index>(d))),
                                      scatter(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                                                    static_cast<Eigen::Index>(d))) {}
    void add(const Vector& x, bool full) {
        ++n;
        const Vector delta = x - mean;
        mean += delta / static_cast<double>(n);
        if (full)
            scatter.noalias() += delta * (x - mean).transpose();
        else
            scatter.diagonal().array() += delta.array() * (x - mean).array();
    }
    std::size_t n = 0;
    Vector mean;
    Eigen::MatrixXd scatter;
};

struct ChainResult {
    Matrix draws;
    double acceptance = 0.0;
};

// Proposal state of one block: y = x + exp(log_scale) * shape * z on the
// block's coordinates, shape lower triangular (diagonal in diagonal mode).
struct BlockState {
    std::vector<std::size_t> indices;
    LogDensity log_target;  // full log posterior, or the block's conditional terms
    bool full = false;
    Eigen::MatrixXd shape;
    double log_scale = 0.0;
    Moments moments{1};
    bool shaped = false;
    Vector z, step;

    BlockState(std::vector<std::size_t> idx, LogDensity f, bool full_shape)
        : indices(std::move(idx)), log_target(std::move(f)), full(full_shape), moments(indices.size()) {
        const auto k = static_cast<Eigen::Index>(indices.size());
        shape = Eigen::MatrixXd::Identity(k, k);
        log_scale = initial_log_scale();
        z.resize(k);
        step.resize(k);
    }
    double initial_log_scale() const { return std::log(2.38 / std::sqrt(static_cast<double>(indices.size()))); }
    std::size_t min_window() const { return full ? std::max<std::size_t>(100, 2 * indices.size()) : 50; }
    Vector gather(const Vector& x) const {
        Vector v(static_cast<Eigen::Index>(indices.size()));
        for (std::size_t i = 0; i < indices.size(); ++i)
            v(static_cast<Eigen::Index>(i)) = x(static_cast<Eigen::Index>(indices[i]));
        return v;
    }

    void update_shape() {
        const double denom = static_cast<double>(moments.n - 1);
        if (full) {
            Eigen::MatrixXd cov = moments.scatter / denom;
            cov = 0.5 * (cov + cov.transpose());
            cov.diagonal().array() += 1e-10 * std::max(cov.diagonal().mean(), 1e-300);
            Eigen::LLT<Eigen::MatrixXd> llt(cov);
            if (llt.info() != Eigen::Success) return;
            shape = llt.matrixL();
        } else {
            Vector sd = (moments.scatter.diagonal() / denom).array().sqrt();
            if (!sd.allFinite() || !(sd.array() > 0.0).all()) return;
            shape.diagonal() = sd;
        }
        if (!shaped) log_scale = initial_log_scale();
        shaped = true;
    }
};

std::vector<BlockState> make_blocks(const Model& model, const SamplerConfig& cfg) {
    std::vector<BlockState> blocks;
    if (cfg.adaptation != Adaptation::blocked) {
        std::vector<std::size_t> all(model.dimension());
        for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
        blocks.emplace_back(std::move(all), model.log_unnorm_post_fn(), cfg.adaptation == Adaptation::full);
        return blocks;
    }
    if (model.blocks.empty()) throw SamplingError("blocked adaptation needs a model with coordinate blocks");
    std::vector<int> seen(model.dimension(), 0);
    for (const auto& b : model.blocks) {
        if (b.indices.empty() || !b.log_conditional) throw SamplingError("model block is empty");
        for (std::size_t j : b.indices) {
            if (j >= seen.size() || seen[j]++) throw SamplingError("model blocks must partition the coordinates");
        }
        blocks.emplace_back(b.indices, b.log_conditional, true);
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
        throw SamplingError("model blocks must partition the coordinates");
    return blocks;
}

ChainResult run_chain(const Model& model, const SamplerConfig& cfg, std::size_t chain) {
    Rng rng = make_stream(cfg.seed, {chain});
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::size_t d = model.dimension();
    const auto dim = static_cast<Eigen::Index>(d);
    const LogDensity lp_fn = model.log_unnorm_post_fn();

    Vector x(dim);
    double lp = -std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < 100 && !std::isfinite(lp); ++attempt) {
        for (Eigen::Index j = 0; j < dim; ++j) x(j) = normal(rng);
        lp = checked_eval(lp_fn, {x.data(), d});
    }
    if (!std::isfinite(lp))
        throw SamplingError("chain " + std::to_string(chain + 1) +
                            ": no finite log posterior among 100 standard normal starting points");

    std::vector<BlockState> blocks = make_blocks(model, cfg);
    const bool single = blocks.size() == 1;
    double current = lp;  // target of the single block at x
    Vector y = x;

    // One Metropolis update of block b; returns (accepted, acceptance probability).
    auto update = [&](BlockState& b) {
        for (Eigen::Index j = 0; j < b.z.size(); ++j) b.z(j) = normal(rng);
        if (b.full)
            b.step.noalias() = b.shape.triangularView<Eigen::Lower>() * b.z;
        else
            b.step = (b.shape.diagonal().array() * b.z.array()).matrix();
        const double scale = std::exp(b.log_scale);
        for (std::size_t i = 0; i < b.indices.size(); ++i) {
            const auto j = static_cast<Eigen::Index>(b.indices[i]);
            y(j) = x(j) + scale * b.step(static_cast<Eigen::Index>(i));
        }
        const double here = single ? current : checked_eval(b.log_target, {x.data(), d});
        const double there = checked_eval(b.log_target, {y.data(), d});
        const double log_ratio = there - here;
        const double accept_prob = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
        const bool accepted = unif(rng) < accept_prob;
        for (std::size_t i = 0; i < b.indices.size(); ++i) {
            const auto j = static_cast<Eigen::Index>(b.indices[i]);
            if (accepted)
                x(j) = y(j);
            else
                y(j) = x(j);
        }
        if (accepted && single) current = there;
        return std::pair{accepted, accept_prob};
    };

    const std::size_t window_start = cfg.burn_in / 5;
    constexpr std::size_t kShapeInterval = 100;
    for (std::size_t t = 0; t < cfg.burn_in; ++t) {
        const double gain = std::pow(static_cast<double>(t + 1), -0.6);
        for (auto& b : blocks) {
            const double prob = update(b).second;
            b.log_scale = std::clamp(b.log_scale + gain * (prob - cfg.target_acceptance), std::log(1e-8), std::log(1e3));
        }
        if (t < window_start) continue;
        for (auto& b : blocks) {
            b.moments.add(b.gather(x), b.full);
            if (b.moments.n >= b.min_window() && b.moments.n % kShapeInterval == 0) b.update_shape();
        }
    }

    ChainResult out;
    out.draws.resize(static_cast<Eigen::Index>(cfg.retained()), dim);
    std::size_t accepted_count = 0;
    Eigen::Index row = 0;
    for (std::size_t t = 0; t < cfg.iterations; ++t) {
        for (auto& b : blocks)
            if (update(b).first) ++accepted_count;
        if ((t + 1) % cfg.thin == 0) out.draws.row(row++) = x.transpose();
    }
    out.acceptance = static_cast<double>(accepted_count) /
                     static_cast<double>(cfg.iterations * blocks.size());
    return out;
}

}  // namespace

SampleStore run_mcmc(const Model& model, const SamplerConfig& config, Exec exec) {
    config.validate();
    const std::size_t d = model.dimension();
    if (d == 0) throw SamplingError("model has no parameters");

    std::vector<ChainResult> results(config.chains);
    if (exec == Exec::serial) {
        for (std::size_t c = 0; c < config.chains; ++c) results[c] = run_chain(model, config, c);
    } else {
        std::exception_ptr failure;
        const auto n = static_cast<std::ptrdiff_t>(config.chains);
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t c = 0; c < n; ++c) {
            try {
                results[static_cast<std::size_t>(c)] = run_chain(model, config, static_cast<std::size_t>(c));
            } catch (...) {
#pragma omp critical(marginalis_chain_failure)
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
    }

    SampleStore store;
    store.space = model.space;
    store.config = config;
    for (auto& r : results) {
        store.chains.push_back(std::move(r.draws));
        store.acceptance.push_back(r.acceptance);
    }
    return store;
}

double RHatReport::max() const {
    return values.empty() ? std::numeric_limits<double>::quiet_NaN() : *std::max_element(values.begin(), values.end());
}

bool RHatReport::any_divergent() const { return std::find(divergent.begin(), divergent.end(), true) != divergent.end(); }

RHatReport r_hat(const SampleStore& store) {
    const std::size_t half = store.retained() / 2;
    const std::size_t m = 2 * store.num_chains();
    if (m < 2 || half < 4)
        throw DiagnosticError("split R-hat needs at least 2 half-chains of 4 draws, have " + std::to_string(m) +
                              " of " + std::to_string(half));
    const std::size_t d = store.dimension();
    const double n = static_cast<double>(half);
    RHatReport out;
    out.values.resize(d);
    out.divergent.assign(d, false);
    std::vector<double> means(m), vars(m), seg(half);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t c = 0; c < store.num_chains(); ++c) {
            for (std::size_t h = 0; h < 2; ++h) {
                for (std::size_t i = 0; i < half; ++i)
                    seg[i] = store.chains[c](static_cast<Eigen::Index>(h * half + i), static_cast<Eigen::Index>(j));
                means[2 * c + h] = mean(seg);
                vars[2 * c + h] = sample_variance(seg);
            }
        }
        const double w = mean(vars);
        const double b_over_n = sample_variance(means);
        if (w <= 0.0) {
            // All half-chains constant: identical constants converge, distinct ones never do.
            if (b_over_n > 0.0) {
                out.values[j] = kRHatDivergent;
                out.divergent[j] = true;
            } else {
                out.values[j] = 1.0;
            }
            continue;
        }
        const double var_plus = (n - 1.0) / n * w + b_over_n;
        out.values[j] = std::max(1.0, std::sqrt(var_plus / w));
    }
    return out;
}

std::pair<SampleStore, SampleStore> split_halves(const SampleStore& store) {
    const std::size_t len = store.retained();
    if (len % 2 == 1)
        warn("odd retained chain length " + std::to_string(len) + ": dropping the final draw of each chain");
    const auto half = static_cast<Eigen::Index>(len / 2);
    SampleStore first, second;
    first.space = second.space = store.space;
    first.config = second.config = store.config;
    first.acceptance = second.acceptance = store.acceptance;
    for (const auto& c : store.chains) {
        first.chains.emplace_back(c.topRows(half));
        second.chains.emplace_back(c.middleRows(half, half));
    }
    return {std::move(first), std::move(second)};
}

void write_samples_csv(std::ostream& out, const SampleStore& store) {
    out << "chain,iter";
    for (const auto& name : store.space.names()) out << ',' << name;
    out << '\n';
    for (std::size_t c = 0; c < store.num_chains(); ++c) {
        const Matrix& m = store.chains[c];
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            out << (c + 1) << ',' << (i + 1);
            for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << format_double(m(i, j));
            out << '\n';
        }
    }
}

SampleStore read_samples_csv(std::istream& in, const ParameterSpace& space) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty samples file", 1);
    const auto header = split_csv_line(line);
    const auto names = space.names();
    bool ok = header.size() == names.size() + 2 && header[0] == "chain" && header[1] == "iter";
    for (std::size_t j = 0; ok && j < names.size(); ++j) ok = header[j + 2] == names[j];
    if (!ok) throw DataError("samples header does not match the model parameters", 1);

    const std::size_t d = names.size();
    std::vector<std::vector<double>> chains;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != d + 2) throw DataError("expected " + std::to_string(d + 2) + " fields", lineno);
        long long chain = 0, iter = 0;
        if (!parse_int(f[0], chain) || !parse_int(f[1], iter)) throw DataError("bad chain or iter index", lineno);
        if (chain == static_cast<long long>(chains.size()) + 1) chains.emplace_back();
        if (chain != static_cast<long long>(chains.size()))
            throw DataError("chains must be numbered contiguously from 1", lineno);
        auto& rows = chains.back();
        if (iter != static_cast<long long>(rows.size() / std::max<std::size_t>(d, 1)) + 1)
            throw DataError("iterations must be numbered contiguously from 1", lineno);
        for (std::size_t j = 0; j < d; ++j) {
            double v = 0.0;
            if (!parse_double(f[j + 2], v) || !std::isfinite(v)) throw DataError("non-finite or malformed value", lineno);
            rows.push_back(v);
        }
    }
    if (chains.empty()) throw DataError("samples file has no rows");
    SampleStore store;
    store.space = space;
    for (auto& rows : chains) {
        const auto n = static_cast<Eigen::Index>(rows.size() / d);
        store.chains.emplace_back(Eigen::Map<const Matrix>(rows.data(), n, static_cast<Eigen::Index>(d)));
    }
    for (const auto& c : store.chains)
        if (c.rows() != store.chains.front().rows()) throw DataError("chains differ in length");
    store.config.chains = store.chains.size();
    store.config.iterations = store.retained();
    store.config.burn_in = 0;
    store.config.thin = 1;
    return store;
}

void save_samples_csv(const std::string& path, const SampleStore& store) {
    std::ostringstream out;
    write_samples_csv(out, store);
    write_file_atomic(path, out.str());
}

SampleStore load_samples_csv(const std::string& path, const ParameterSpace& space) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return read_samples_csv(in, space);
}

}  // namespace marginalis
