#include "marginalis/igt.hpp"
#include "marginalis/kernels.hpp"
#include "marginalis/models.hpp"
#include "marginalis/sampler.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace marginalis;

namespace {

const std::vector<IGTRecord>& records() {
    static const std::vector<IGTRecord> recs = [] {
        SimConfig cfg;
        cfg.subjects = 30;
        cfg.trials = 100;
        cfg.group = GroupGenerator{};
        cfg.seed = 1;
        return simulate(cfg).records;
    }();
    return recs;
}

Matrix normal_rows(Eigen::Index n, Eigen::Index d) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z(0.0, 0.3);
    Matrix m(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = z(rng);
    return m;
}

void BM_HierarchicalRows(benchmark::State& state, Exec exec) {
    const Model model = make_hierarchical_ev_model(records());
    const Matrix draws = normal_rows(256, static_cast<Eigen::Index>(model.dimension()));
    const LogDensity f = model.log_unnorm_post_fn();
    for (auto _ : state) benchmark::DoNotOptimize(evaluate_rows(f, draws, exec));
    state.SetItemsProcessed(state.iterations() * draws.rows());
}

void BM_Kde(benchmark::State& state, Exec exec) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    std::vector<double> samples(n), points(512);
    for (auto& v : samples) v = z(rng);
    for (std::size_t i = 0; i < points.size(); ++i) points[i] = -3.0 + 6.0 * static_cast<double>(i) / 511.0;
    for (auto _ : state) benchmark::DoNotOptimize(kde_log_density(samples, points, 0.1, exec));
}

void BM_Chains(benchmark::State& state, Exec exec) {
    const Model model = make_individual_ev_model(records().front());
    SamplerConfig cfg;
    cfg.chains = 4;
    cfg.iterations = 2000;
    cfg.burn_in = 500;
    cfg.seed = 4;
    for (auto _ : state) benchmark::DoNotOptimize(run_mcmc(model, cfg, exec));
}

}  // namespace

BENCHMARK_CAPTURE(BM_HierarchicalRows, serial, Exec::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_HierarchicalRows, openmp, Exec::parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Kde, serial, Exec::serial)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Kde, openmp, Exec::parallel)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Chains, serial, Exec::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Chains, openmp, Exec::parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
