#include "marginalis/compare.hpp"
#include "marginalis/diagnostics.hpp"
#include "marginalis/error.hpp"
#include "marginalis/igt.hpp"
#include "marginalis/io.hpp"
#include "marginalis/normal.hpp"
#include "marginalis/pipeline.hpp"
#include "marginalis/sampler.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

using namespace marginalis;
using json = nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kNotConverged = 4 };

constexpr double kRHatLimit = 1.05;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) { return make_stream(seed, {0x6d6c, k})(); }

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// ---------------------------------------------------------------------------
// Flat "key = value" config files, expanded into flags that the command line
// has not already set.

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::vector<std::string> out;
    std::optional<std::string> path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        } else {
            out.push_back(args[i]);
        }
    }
    if (!path) return out;
    std::ifstream in(*path);
    if (!in) throw DataError("cannot open config file " + *path);
    std::set<std::string> given;
    for (const auto& a : out)
        if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));

    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> extra;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError("config entry without '='", lineno);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw DataError("config entry without a key", lineno);
        if (given.count(key)) continue;
        if (value == "true") {
            extra.push_back("--" + key);
        } else if (value != "false") {
            extra.push_back("--" + key);
            extra.push_back(value);
        }
    }
    // Insert after the subcommand name so the options bind to it.
    out.insert(out.begin() + (out.empty() ? 0 : 1), extra.begin(), extra.end());
    return out;
}

// ---------------------------------------------------------------------------
// Shared option groups

struct SamplerOpts {
    std::optional<std::size_t> chains, iterations, burn_in, thin;
    std::string adaptation;
    bool allow_unconverged = false;
};

struct ModelOpts {
    std::string model = "bb";
    int k = 2, n = 10;
    std::string data;
    std::string subject;
    std::vector<std::string> restrict;
};

std::optional<std::uint64_t> seed_flag;

void add_model_options(CLI::App* app, ModelOpts& m) {
    app->add_option("--model", m.model, "bb | ev-individual | ev-hierarchical")
        ->check(CLI::IsMember({"bb", "ev-individual", "ev-hierarchical"}));
    app->add_option("--k", m.k, "successes (bb)")->check(CLI::NonNegativeNumber);
    app->add_option("--n", m.n, "trials (bb)")->check(CLI::PositiveNumber);
    app->add_option("--data", m.data, "IGT choice CSV (ev models)");
    app->add_option("--subject", m.subject, "subject label (ev-individual)");
}

void add_sampler_options(CLI::App* app, SamplerOpts& s) {
    app->add_option("--chains", s.chains)->check(CLI::PositiveNumber);
    app->add_option("--iterations", s.iterations, "post burn-in iterations per chain")->check(CLI::PositiveNumber);
    app->add_option("--burn-in", s.burn_in);
    app->add_option("--thin", s.thin)->check(CLI::PositiveNumber);
    app->add_option("--adaptation", s.adaptation, "diagonal | full | blocked")
        ->check(CLI::IsMember({"diagonal", "full", "blocked"}));
    app->add_flag("--allow-unconverged", s.allow_unconverged, "report instead of failing on R-hat >= 1.05");
}

void add_seed(CLI::App* app) { app->add_option("--seed", seed_flag, "random seed (else MARGINALIS_SEED)"); }

std::uint64_t resolve_seed() {
    if (seed_flag) return *seed_flag;
    if (const char* env = std::getenv("MARGINALIS_SEED")) {
        long long v = 0;
        if (!parse_int(env, v) || v < 0) throw UsageError("MARGINALIS_SEED is not a non-negative integer");
        return static_cast<std::uint64_t>(v);
    }
    throw UsageError("a seed is required (--seed or MARGINALIS_SEED)");
}

std::vector<IGTRecord> load_records(const std::string& path) {
    if (path.empty()) throw UsageError("--data is required for EV models");
    if (!std::filesystem::exists(path)) throw DataError("data file not found: " + path);
    return load_igt_csv(path);
}

const IGTRecord& pick_subject(const std::vector<IGTRecord>& recs, const std::string& subject) {
    if (subject.empty()) {
        if (recs.size() == 1) return recs.front();
        throw UsageError("data holds several subjects; choose one with --subject");
    }
    for (const auto& r : recs)
        if (r.subject == subject) return r;
    throw DataError("subject not found in data: " + subject);
}

std::optional<Restriction> parse_restriction(const std::string& s) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("restriction must look like mu_w=0.1");
    const auto p = parse_group_param(s.substr(0, eq));
    double v = 0.0;
    if (!p || !parse_double(s.substr(eq + 1), v)) throw UsageError("bad restriction: " + s);
    return Restriction{*p, v};
}

SamplerConfig sampler_config(const std::string& model, const SamplerOpts& o, std::uint64_t seed) {
    SamplerConfig c;
    if (model == "ev-hierarchical") {
        c.chains = 2;
        c.iterations = 120000;
        c.burn_in = 30000;
        c.thin = 4;
        c.adaptation = Adaptation::blocked;
    } else if (model == "ev-individual") {
        c.chains = 4;
        c.iterations = 20000;
        c.burn_in = 5000;
    }
    if (o.chains) c.chains = *o.chains;
    if (o.iterations) c.iterations = *o.iterations;
    if (o.burn_in) c.burn_in = *o.burn_in;
    if (o.thin) c.thin = *o.thin;
    if (o.adaptation == "full") c.adaptation = Adaptation::full;
    if (o.adaptation == "diagonal") c.adaptation = Adaptation::diagonal;
    if (o.adaptation == "blocked") c.adaptation = Adaptation::blocked;
    c.seed = seed;
    try {
        c.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    return c;
}

json sampler_json(const SamplerConfig& c) {
    return {{"chains", c.chains},
            {"iterations", c.iterations},
            {"burn_in", c.burn_in},
            {"thin", c.thin},
            {"seed", c.seed},
            {"target_acceptance", c.target_acceptance},
            {"adaptation", c.adaptation == Adaptation::full      ? "full"
                           : c.adaptation == Adaptation::blocked ? "blocked"
                                                                 : "diagonal"}};
}

struct Fitted {
    SampleStore store;
    RHatReport rhat;
};

Fitted fit_and_check(const Model& model, const SamplerConfig& cfg, bool allow_unconverged) {
    if (cfg.chains == 1) warn("a single chain: R-hat compares its two halves only");
    Fitted f{run_mcmc(model, cfg), {}};
    f.rhat = r_hat(f.store);
    if ((f.rhat.max() >= kRHatLimit || f.rhat.any_divergent()) && !allow_unconverged) {
        std::ostringstream msg;
        msg << model.label << ": max R-hat " << f.rhat.max() << " >= " << kRHatLimit
            << " (use --allow-unconverged to report anyway)";
        throw ConvergenceError(msg.str());
    }
    return f;
}

json diagnostics_json(const Fitted& f) {
    json rh = json::object();
    const auto names = f.store.space.names();
    double worst = 1.0;
    std::string worst_name;
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (f.rhat.values[j] >= worst) {
            worst = f.rhat.values[j];
            worst_name = names[j];
        }
    }
    rh["max"] = number(f.rhat.max());
    rh["max_parameter"] = worst_name;
    rh["all_below_limit"] = f.rhat.max() < kRHatLimit && !f.rhat.any_divergent();
    if (names.size() <= 12) {
        json per = json::object();
        for (std::size_t j = 0; j < names.size(); ++j) per[names[j]] = number(f.rhat.values[j]);
        rh["values"] = per;
    }
    return {{"r_hat", rh}, {"acceptance", f.store.acceptance}, {"retained_per_chain", f.store.retained()}};
}

struct ModelEntry {
    Model model;
    std::string label;
};

std::vector<ModelEntry> build_models(const ModelOpts& m, bool all_subjects) {
    std::vector<ModelEntry> out;
    if (m.model == "bb") {
        BetaBinomialData d{m.k, m.n};
        d.validate();
        out.push_back({make_beta_binomial_model(d), "bb"});
        return out;
    }
    const auto recs = load_records(m.data);
    if (m.model == "ev-individual") {
        if (all_subjects && m.subject.empty()) {
            for (const auto& r : recs) out.push_back({make_individual_ev_model(r), r.subject});
        } else {
            const auto& r = pick_subject(recs, m.subject);
            out.push_back({make_individual_ev_model(r), r.subject});
        }
        return out;
    }
    std::optional<Restriction> res;
    if (!m.restrict.empty()) {
        if (m.restrict.size() > 1) throw UsageError("fit and ml take at most one --restrict");
        res = parse_restriction(m.restrict.front());
    }
    std::string label = "hierarchical";
    if (res) label += "|" + group_mean_name(res->param) + "=" + format_double(res->value);
    out.push_back({make_hierarchical_ev_model(recs, res), label});
    return out;
}

json ml_json(const MlResult& r) {
    json j = {{"estimator", estimator_name(r.estimator)}, {"log_ml", number(r.log_ml)}, {"draws", r.draws}};
    if (r.cv_percent) j["cv_percent"] = number(*r.cv_percent);
    if (r.bridge) {
        const auto& b = *r.bridge;
        j["re2"] = number(b.re2);
        j["iterations"] = b.iterations;
        j["converged"] = b.converged;
        j["n1"] = b.n1;
        j["n2"] = b.n2;
        j["zero_likelihood_draws"] = {{"posterior", b.zero_l1}, {"proposal", b.zero_l2}};
    }
    return j;
}

void emit(const json& report, const std::string& out) {
    const std::string text = report.dump(2) + "\n";
    if (out.empty())
        std::cout << text;
    else
        write_file_atomic(out, text);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Commands

struct SimulateOpts {
    std::size_t subjects = 1, trials = 100;
    std::optional<double> w, a, c;
    std::string out, truth;
};

int cmd_simulate(const SimulateOpts& o) {
    SimConfig cfg;
    cfg.subjects = o.subjects;
    cfg.trials = o.trials;
    cfg.seed = resolve_seed();
    if (o.w || o.a || o.c) {
        cfg.params = {EVParams{o.w.value_or(0.5), o.a.value_or(0.5), o.c.value_or(0.5)}};
    } else {
        cfg.group = GroupGenerator{};
    }
    try {
        cfg.validate();
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    const SimOutput sim = simulate(cfg);
    std::ostringstream csv;
    write_igt_csv(csv, sim.records);
    if (o.out.empty())
        std::cout << csv.str();
    else
        write_file_atomic(o.out, csv.str());
    if (!o.truth.empty()) {
        json t = json::object();
        for (std::size_t s = 0; s < sim.records.size(); ++s)
            t[sim.records[s].subject] = {{"w", sim.truth[s].w}, {"a", sim.truth[s].a}, {"c", sim.truth[s].c}};
        write_file_atomic(o.truth, t.dump(2) + "\n");
    }
    return kOk;
}

struct FitOpts {
    ModelOpts model;
    SamplerOpts sampler;
    std::string out, report;
};

int cmd_fit(const FitOpts& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t seed = resolve_seed();
    if (o.out.empty()) throw UsageError("--out is required for the samples file");
    auto models = build_models(o.model, false);
    const SamplerConfig cfg = sampler_config(o.model.model, o.sampler, seed);
    json report;
    report["command"] = "fit";
    report["config"] = {{"model", o.model.model}, {"sampler", sampler_json(cfg)}, {"data", o.model.data}};
    const ModelEntry& m = models.front();
    const Fitted f = fit_and_check(m.model, cfg, o.sampler.allow_unconverged);
    std::ostringstream csv;
    write_samples_csv(csv, f.store);
    write_file_atomic(o.out, csv.str());

    json entry = diagnostics_json(f);
    entry["label"] = m.label;
    json means = json::object();
    const auto names = f.store.space.names();
    const Matrix pooled = f.store.pooled();
    std::vector<double> acc(names.size(), 0.0);
    for (Eigen::Index i = 0; i < pooled.rows(); ++i) {
        const auto theta = from_unconstrained(row_span(pooled, i), f.store.space);
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += theta[j];
    }
    if (names.size() <= 12)
        for (std::size_t j = 0; j < names.size(); ++j) means[names[j]] = acc[j] / static_cast<double>(pooled.rows());
    entry["posterior_mean"] = means;
    report["models"] = json::array({entry});
    report["samples"] = o.out;
    report["wall_time_seconds"] = seconds_since(t0);
    emit(report, o.report);
    return kOk;
}

struct MlOpts {
    ModelOpts model;
    SamplerOpts sampler;
    std::string estimator = "bridge";
    std::string fixture;
    std::string samples;
    std::optional<std::size_t> n1;
    std::size_t n2 = 0;
    double tolerance = 1e-10;
    std::size_t max_iter = 1000;
    std::string out;
};

int cmd_fixture(const MlOpts& o) {
    if (o.fixture != "running-example") throw UsageError("unknown fixture: " + o.fixture);
    BridgeConfig bc;
    bc.tolerance = o.tolerance;
    bc.max_iterations = o.max_iter;
    const RunningExample ex = running_example(bc);
    json report;
    report["command"] = "ml";
    report["fixture"] = o.fixture;
    report["marginal_likelihood"] = {{"naive", ex.naive},
                                     {"importance_sampling", ex.importance},
                                     {"harmonic_mean", ex.harmonic_mean},
                                     {"bridge_first_iterate", ex.bridge_first},
                                     {"bridge", ex.bridge}};
    report["bridge_iterations"] = ex.bridge_iterations;
    report["bridge_converged"] = ex.bridge_converged;
    report["beta_fit"] = {{"alpha", ex.beta_fit.alpha}, {"beta", ex.beta_fit.beta}};
    report["probit_fit"] = {{"mean", ex.probit_mean}, {"sd", ex.probit_sd}};
    emit(report, o.out);
    return kOk;
}

int cmd_ml(const MlOpts& o) {
    if (!o.fixture.empty()) return cmd_fixture(o);
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t seed = resolve_seed();
    const auto est = parse_estimator(o.estimator);
    if (!est) throw UsageError("unknown estimator: " + o.estimator + " (naive, is, ghm, bridge)");

    SamplerOpts so = o.sampler;
    if (o.n1) {
        // n1 posterior draws in the iterate half: 2 * n1 retained draws in total.
        const std::size_t chains = so.chains.value_or(o.model.model == "ev-hierarchical" ? 2 : 4);
        const std::size_t thin = so.thin.value_or(o.model.model == "ev-hierarchical" ? 4 : 1);
        const std::size_t per_chain = (2 * *o.n1 + chains - 1) / chains;
        so.iterations = per_chain * thin;
    }
    const SamplerConfig cfg = sampler_config(o.model.model, so, seed);

    EstimatorSettings settings;
    settings.n2 = o.n2;
    settings.bridge.tolerance = o.tolerance;
    settings.bridge.max_iterations = o.max_iter;
    try {
        settings.bridge.validate();
    } catch (const Error& e) {
        throw UsageError(e.what());
    }

    auto models = build_models(o.model, o.samples.empty());
    if (!o.samples.empty() && models.size() != 1) throw UsageError("--samples needs a single model");

    json report;
    report["command"] = "ml";
    report["config"] = {{"model", o.model.model},
                        {"estimator", o.estimator},
                        {"sampler", sampler_json(cfg)},
                        {"n2", o.n2},
                        {"tolerance", o.tolerance},
                        {"max_iter", o.max_iter},
                        {"data", o.model.data},
                        {"samples", o.samples}};
    json entries = json::array();
    bool all_converged = true;
    for (std::size_t i = 0; i < models.size(); ++i) {
        const ModelEntry& m = models[i];
        json entry;
        Fitted f;
        if (o.samples.empty()) {
            SamplerConfig c = cfg;
            c.seed = derive_seed(seed, 2 * i);
            f = fit_and_check(m.model, c, o.sampler.allow_unconverged);
            entry = diagnostics_json(f);
        } else {
            if (!std::filesystem::exists(o.samples)) throw DataError("samples file not found: " + o.samples);
            f.store = load_samples_csv(o.samples, m.model.space);
        }
        settings.seed = derive_seed(seed, 2 * i + 1);
        const MlResult r = estimate_log_ml(m.model, f.store, *est, settings);
        entry.update(ml_json(r));
        entry["label"] = m.label;
        if (r.bridge && !r.bridge->converged) all_converged = false;
        entries.push_back(entry);
    }
    report["models"] = entries;
    report["wall_time_seconds"] = seconds_since(t0);
    emit(report, o.out);
    if (!all_converged && !o.sampler.allow_unconverged) {
        std::cerr << "error: bridge iteration did not converge\n";
        return kNotConverged;
    }
    return kOk;
}

struct CompareOpts {
    ModelOpts model;
    SamplerOpts sampler;
    std::vector<std::string> entries;
    std::size_t n2 = 0;
    double tolerance = 1e-10;
    std::size_t max_iter = 1000;
    std::size_t grid = 512;
    std::string out;
};

json compare_entries(const CompareOpts& o) {
    ModelComparison mc;
    for (const auto& path : o.entries) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open report " + path);
        json r;
        try {
            r = json::parse(in);
        } catch (const json::exception& e) {
            throw DataError(path + ": " + e.what());
        }
        if (!r.contains("models") || !r["models"].is_array()) throw DataError(path + ": no models in report");
        for (const auto& m : r["models"]) {
            if (!m.contains("log_ml") || !m["log_ml"].is_number()) throw DataError(path + ": model without a log_ml");
            mc.labels.push_back(m.value("label", path));
            mc.log_mls.push_back(m["log_ml"].get<double>());
        }
    }
    if (mc.log_mls.size() < 2) throw UsageError("compare needs at least two models");
    json rows = json::array();
    for (std::size_t i = 1; i < mc.log_mls.size(); ++i) {
        const BayesFactor b = bayes_factor(mc.log_mls[0], mc.log_mls[i]);
        rows.push_back({{"numerator", mc.labels[0]}, {"denominator", mc.labels[i]}, {"bf", number(b.bf)},
                        {"log_bf", b.log_bf}});
    }
    const auto probs = posterior_model_probs(mc);
    json pm = json::array();
    for (std::size_t i = 0; i < probs.size(); ++i) pm.push_back({{"label", mc.labels[i]}, {"probability", probs[i]}});
    return {{"bayes_factors", rows}, {"posterior_model_probs", pm}, {"entries", o.entries}};
}

json compare_hierarchical(const CompareOpts& o, std::uint64_t seed) {
    const auto recs = load_records(o.model.data);
    const SamplerConfig base = sampler_config("ev-hierarchical", o.sampler, seed);
    EstimatorSettings settings;
    settings.n2 = o.n2;
    settings.bridge.tolerance = o.tolerance;
    settings.bridge.max_iterations = o.max_iter;

    // Restrictions: "w" pins mu_w at the prior/posterior crossing, "w=0.1" at a value.
    struct Request {
        GroupParam param;
        std::optional<double> value;
    };
    std::vector<Request> requests;
    for (const auto& s : o.model.restrict) {
        const auto eq = s.find('=');
        const auto p = parse_group_param(s.substr(0, eq));
        if (!p) throw UsageError("unknown group parameter: " + s);
        std::optional<double> v;
        if (eq != std::string::npos) {
            double x = 0.0;
            if (!parse_double(s.substr(eq + 1), x)) throw UsageError("bad restriction value: " + s);
            v = x;
        }
        requests.push_back({*p, v});
    }
    if (requests.empty()) throw UsageError("compare on a model needs at least one --restrict");

    const Model full = make_hierarchical_ev_model(recs);
    SamplerConfig c = base;
    c.seed = derive_seed(seed, 0);
    const Fitted ff = fit_and_check(full, c, o.sampler.allow_unconverged);
    settings.seed = derive_seed(seed, 1);
    const MlResult full_ml = estimate_log_ml(full, ff.store, Estimator::bridge, settings);
    bool converged = full_ml.bridge->converged;

    json full_entry = diagnostics_json(ff);
    full_entry.update(ml_json(full_ml));
    full_entry["label"] = "full";

    const HierLayout layout{recs.size()};
    const ScalarLogDensity mu_prior = [](double x) { return std_normal_log_pdf(x); };
    json rows = json::array();
    ModelComparison mc{{"full"}, {full_ml.log_ml}, {}};
    for (std::size_t i = 0; i < requests.size(); ++i) {
        const Request& rq = requests[i];
        const auto mu_draws = ff.store.pooled_column(layout.mu(rq.param));
        const double value = rq.value ? *rq.value : find_intersection(mu_prior, mu_draws, o.grid);
        const SavageDickey sd = savage_dickey(mu_prior, mu_draws, value);

        const Model restricted = make_hierarchical_ev_model(recs, Restriction{rq.param, value});
        SamplerConfig rc = base;
        rc.seed = derive_seed(seed, 2 * i + 2);
        const Fitted fr = fit_and_check(restricted, rc, o.sampler.allow_unconverged);
        settings.seed = derive_seed(seed, 2 * i + 3);
        const MlResult r = estimate_log_ml(restricted, fr.store, Estimator::bridge, settings);
        converged = converged && r.bridge->converged;
        const BayesFactor bf = bayes_factor(full_ml.log_ml, r.log_ml);
        const std::string label = group_mean_name(rq.param) + "=" + format_double(value);
        mc.labels.push_back(label);
        mc.log_mls.push_back(r.log_ml);

        json restricted_entry = diagnostics_json(fr);
        restricted_entry.update(ml_json(r));
        restricted_entry["label"] = label;
        rows.push_back({{"parameter", group_mean_name(rq.param)},
                        {"value", value},
                        {"value_source", rq.value ? "given" : "intersection"},
                        {"restricted", restricted_entry},
                        {"bf_full_vs_restricted", number(bf.bf)},
                        {"log_bf_full_vs_restricted", bf.log_bf},
                        {"savage_dickey_bf", number(sd.bf)},
                        {"savage_dickey_tail_warning", sd.tail_warning}});
    }
    const auto probs = posterior_model_probs(mc);
    json pm = json::array();
    for (std::size_t i = 0; i < probs.size(); ++i) pm.push_back({{"label", mc.labels[i]}, {"probability", probs[i]}});
    return {{"full", full_entry},
            {"restrictions", rows},
            {"posterior_model_probs", pm},
            {"sampler", sampler_json(base)},
            {"all_bridges_converged", converged}};
}

int cmd_compare(const CompareOpts& o) {
    const auto t0 = std::chrono::steady_clock::now();
    json report;
    report["command"] = "compare";
    bool converged = true;
    if (!o.entries.empty()) {
        report["comparison"] = compare_entries(o);
    } else {
        if (o.model.model != "ev-hierarchical")
            throw UsageError("compare takes --entry reports, or --model ev-hierarchical with --restrict");
        const std::uint64_t seed = resolve_seed();
        report["comparison"] = compare_hierarchical(o, seed);
        report["config"] = {{"model", o.model.model}, {"data", o.model.data}, {"seed", seed},
                            {"restrict", o.model.restrict}, {"n2", o.n2}, {"grid", o.grid}};
        converged = report["comparison"]["all_bridges_converged"].get<bool>();
    }
    report["wall_time_seconds"] = seconds_since(t0);
    emit(report, o.out);
    if (!converged && !o.sampler.allow_unconverged) {
        std::cerr << "error: bridge iteration did not converge\n";
        return kNotConverged;
    }
    return kOk;
}

int cmd_fixtures(const std::string& out) {
    auto arr = [](const auto& a) { return std::vector<double>(a.begin(), a.end()); };
    json report = {{"successes", fixtures::kSuccesses},
                   {"trials", fixtures::kTrials},
                   {"prior_draws", arr(fixtures::kPriorDraws)},
                   {"mixture_draws", arr(fixtures::kMixtureDraws)},
                   {"mixture_weight", fixtures::kMixtureWeight},
                   {"posterior_draws", arr(fixtures::kPosteriorDraws)},
                   {"posterior_mean", fixtures::kPosteriorMean},
                   {"posterior_variance", fixtures::kPosteriorVariance},
                   {"probit_first_half", arr(fixtures::kProbitFirst)},
                   {"probit_second_half", arr(fixtures::kProbitSecond)},
                   {"proposal_draws", arr(fixtures::kProposalDraws)}};
    emit(report, out);
    return kOk;
}

int run(int argc, char** argv) {
    CLI::App app{"Marginal likelihoods by bridge sampling"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    SimulateOpts sim;
    auto* s = app.add_subcommand("simulate", "simulate Iowa gambling task choices");
    s->add_option("--subjects", sim.subjects)->check(CLI::PositiveNumber);
    s->add_option("--trials", sim.trials)->check(CLI::PositiveNumber);
    s->add_option("--w", sim.w, "shared attention weight (else drawn per subject)")->check(CLI::Range(0.0, 1.0));
    s->add_option("--a", sim.a, "shared updating rate")->check(CLI::Range(0.0, 1.0));
    s->add_option("--c", sim.c, "shared consistency")->check(CLI::Range(0.0, 1.0));
    s->add_option("--out", sim.out, "CSV path (stdout if omitted)");
    s->add_option("--truth", sim.truth, "JSON file for the generating parameters");
    add_seed(s);

    FitOpts fit;
    auto* f = app.add_subcommand("fit", "sample a posterior");
    add_model_options(f, fit.model);
    add_sampler_options(f, fit.sampler);
    f->add_option("--restrict", fit.model.restrict, "pin a group mean, e.g. mu_w=0.1");
    f->add_option("--out", fit.out, "samples CSV")->required();
    f->add_option("--report", fit.report, "report path (stdout if omitted)");
    add_seed(f);

    MlOpts ml;
    auto* m = app.add_subcommand("ml", "estimate a log marginal likelihood");
    add_model_options(m, ml.model);
    add_sampler_options(m, ml.sampler);
    m->add_option("--restrict", ml.model.restrict, "pin a group mean, e.g. mu_w=0.1");
    m->add_option("--estimator", ml.estimator, "naive | is | ghm | bridge");
    m->add_option("--fixture", ml.fixture, "running-example");
    m->add_option("--samples", ml.samples, "reuse a samples CSV instead of sampling");
    m->add_option("--n1", ml.n1, "posterior draws used by the estimator (half the retained draws)")
        ->check(CLI::PositiveNumber);
    m->add_option("--n2", ml.n2, "proposal draws (default: as many as n1)");
    m->add_option("--tolerance", ml.tolerance)->check(CLI::PositiveNumber);
    m->add_option("--max-iter", ml.max_iter)->check(CLI::PositiveNumber);
    m->add_option("--out", ml.out, "report path (stdout if omitted)");
    add_seed(m);

    CompareOpts cmp;
    auto* c = app.add_subcommand("compare", "Bayes factors and posterior model probabilities");
    c->add_option("--entry", cmp.entries, "ml report to include (repeatable)");
    add_model_options(c, cmp.model);
    add_sampler_options(c, cmp.sampler);
    c->add_option("--restrict", cmp.model.restrict, "group mean to pin: w, a, c, or w=value (repeatable)");
    c->add_option("--n2", cmp.n2);
    c->add_option("--tolerance", cmp.tolerance)->check(CLI::PositiveNumber);
    c->add_option("--max-iter", cmp.max_iter)->check(CLI::PositiveNumber);
    c->add_option("--grid", cmp.grid, "grid points for the density crossing")->check(CLI::Range(3, 1000000));
    c->add_option("--out", cmp.out, "report path (stdout if omitted)");
    add_seed(c);

    std::string fixtures_out;
    auto* fx = app.add_subcommand("fixtures", "print the embedded worked-example draws");
    fx->add_option("--out", fixtures_out);

    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(args);
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    if (*s) return cmd_simulate(sim);
    if (*f) return cmd_fit(fit);
    if (*m) return cmd_ml(ml);
    if (*c) return cmd_compare(cmp);
    return cmd_fixtures(fixtures_out);
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const ConvergenceError& e) {
        std::cerr << "not converged: " << e.what() << "\n";
        return kNotConverged;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
