#include "marginalis/igt.hpp"

#include "marginalis/error.hpp"
#include "marginalis/io.hpp"
#include "marginalis/normal.hpp"
#include "marginalis/rng.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace marginalis {

PayoffScheme default_scheme() {
    PayoffScheme s;
    s.decks = {DeckPayoff{100.0, 5, -1250.0}, DeckPayoff{100.0, 1, -1250.0}, DeckPayoff{50.0, 5, -250.0},
               DeckPayoff{50.0, 1, -250.0}};
    s.block_size = 10;
    return s;
}

Payoff draw_payoff(const PayoffScheme& scheme, int deck, std::size_t draw_index, std::uint64_t seed,
                   std::uint64_t stream) {
    if (deck < 1 || deck > kDecks) throw DataError("deck index " + std::to_string(deck) + " outside 1..4");
    const DeckPayoff& d = scheme.decks[static_cast<std::size_t>(deck - 1)];
    const auto block_size = static_cast<std::size_t>(scheme.block_size);
    const std::size_t block = draw_index / block_size;
    const std::size_t position = draw_index % block_size;

    Rng rng = make_stream(seed, {stream, static_cast<std::uint64_t>(deck), block});
    std::vector<std::size_t> slots(block_size);
    std::iota(slots.begin(), slots.end(), std::size_t{0});
    // Partial Fisher-Yates: the first losses_per_block slots carry a loss.
    const auto losses = static_cast<std::size_t>(d.losses_per_block);
    for (std::size_t i = 0; i < losses; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, block_size - 1);
        std::swap(slots[i], slots[pick(rng)]);
    }
    const bool hit = std::find(slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(losses), position) !=
                     slots.begin() + static_cast<std::ptrdiff_t>(losses);
    return {d.reward_per_trial, hit ? d.loss_total_per_block / static_cast<double>(losses) : 0.0};
}

void SimConfig::validate() const {
    if (subjects == 0) throw DomainError("simulation needs at least one subject");
    if (trials == 0) throw DomainError("simulation needs at least one trial");
    if (!group) {
        if (params.size() != 1 && params.size() != subjects)
            throw DomainError("need one EV parameter set or one per subject");
        for (const auto& p : params) p.validate();
    }
}

int sample_choice(const std::array<double, kDecks>& probabilities, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    double cum = 0.0;
    for (int k = 0; k < kDecks; ++k) {
        cum += probabilities[k];
        if (u < cum) return k + 1;
    }
    return kDecks;
}

namespace {

std::string subject_label(std::size_t s, std::size_t subjects) {
    const std::size_t width = std::to_string(subjects).size();
    std::string digits = std::to_string(s + 1);
    return "s" + std::string(width - digits.size(), '0') + digits;
}

IGTRecord play(const EVParams& params, std::size_t trials, const PayoffScheme& scheme, std::uint64_t seed,
               std::size_t subject, std::string label) {
    IGTRecord r;
    r.subject = std::move(label);
    r.choices.reserve(trials);
    r.rewards.reserve(trials);
    r.losses.reserve(trials);
    Rng rng = make_stream(seed, {0, subject});
    std::array<std::size_t, kDecks> drawn{};
    EvLearner learner(params);
    for (std::size_t t = 0; t < trials; ++t) {
        const int deck = sample_choice(learner.probabilities(), rng);
        const Payoff pay = draw_payoff(scheme, deck, drawn[deck - 1]++, seed, subject + 1);
        r.choices.push_back(deck);
        r.rewards.push_back(pay.reward);
        r.losses.push_back(pay.loss);
        learner.observe(deck, pay.reward, pay.loss);
    }
    return r;
}

}  // namespace

SimOutput simulate(const SimConfig& config, const PayoffScheme& scheme) {
    config.validate();
    SimOutput out;
    out.truth.resize(config.subjects);
    for (std::size_t s = 0; s < config.subjects; ++s) {
        if (config.group) {
            Rng rng = make_stream(config.seed, {1, s});
            std::normal_distribution<double> z;
            std::array<double, 3> v{};
            for (std::size_t j = 0; j < 3; ++j)
                v[j] = std_normal_cdf(config.group->probit_mean[j] + config.group->probit_sd[j] * z(rng));
            out.truth[s] = {v[0], v[1], v[2]};
        } else {
            out.truth[s] = config.params.size() == 1 ? config.params[0] : config.params[s];
        }
    }

    out.records.resize(config.subjects);
    std::exception_ptr failure;
    const auto n = static_cast<std::ptrdiff_t>(config.subjects);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto s = static_cast<std::size_t>(i);
        try {
            out.records[s] =
                play(out.truth[s], config.trials, scheme, config.seed, s, subject_label(s, config.subjects));
        } catch (...) {
#pragma omp critical(marginalis_sim_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

namespace {

constexpr const char* kHeader = "subject,trial,deck,reward,loss";

}  // namespace

void write_igt_csv(std::ostream& out, const std::vector<IGTRecord>& records) {
    out << kHeader << '\n';
    for (const auto& r : records) {
        r.validate();
        if (r.subject.empty() || r.subject.find_first_of(",\n\r") != std::string::npos)
            throw DataError("subject identifier '" + r.subject + "' cannot be written to CSV");
        for (std::size_t t = 0; t < r.trials(); ++t)
            out << r.subject << ',' << (t + 1) << ',' << r.choices[t] << ',' << format_double(r.rewards[t]) << ','
                << format_double(r.losses[t]) << '\n';
    }
}

std::vector<IGTRecord> read_igt_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) throw DataError("empty file, expected header '" + std::string(kHeader) + "'", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader) throw DataError("expected header '" + std::string(kHeader) + "'", 1);

    std::vector<IGTRecord> records;
    std::map<std::string, std::size_t, std::less<>> index;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != 5) throw DataError("expected 5 fields, got " + std::to_string(f.size()), lineno);
        if (f[0].empty()) throw DataError("empty subject identifier", lineno);
        long long trial = 0, deck = 0;
        double reward = 0.0, loss = 0.0;
        if (!parse_int(f[1], trial)) throw DataError("trial is not an integer", lineno);
        if (!parse_int(f[2], deck)) throw DataError("deck is not an integer", lineno);
        if (deck < 1 || deck > kDecks) throw DataError("deck " + std::to_string(deck) + " outside 1..4", lineno);
        if (!parse_double(f[3], reward) || !std::isfinite(reward) || reward < 0.0)
            throw DataError("reward must be a finite number >= 0", lineno);
        if (!parse_double(f[4], loss) || !std::isfinite(loss) || loss > 0.0)
            throw DataError("loss must be a finite number <= 0", lineno);

        auto it = index.find(f[0]);
        if (it == index.end()) {
            it = index.emplace(std::string(f[0]), records.size()).first;
            records.push_back(IGTRecord{std::string(f[0]), {}, {}, {}});
        }
        IGTRecord& r = records[it->second];
        if (trial != static_cast<long long>(r.trials()) + 1)
            throw DataError("subject '" + r.subject + "': expected trial " + std::to_string(r.trials() + 1) +
                                ", got " + std::to_string(trial),
                            lineno);
        r.choices.push_back(static_cast<int>(deck));
        r.rewards.push_back(reward);
        r.losses.push_back(loss);
    }
    if (records.empty()) throw DataError("no data rows");

    std::size_t expected = 0;
    for (const auto& r : records) expected = std::max(expected, r.trials());
    for (const auto& r : records) {
        if (r.trials() != expected)
            throw ValidationError("incomplete subject '" + r.subject + "': " + std::to_string(r.trials()) + " of " +
                                  std::to_string(expected) + " trials");
    }
    return records;
}

void save_igt_csv(const std::string& path, const std::vector<IGTRecord>& records) {
    std::ostringstream out;
    write_igt_csv(out, records);
    write_file_atomic(path, out.str());
}

std::vector<IGTRecord> load_igt_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return read_igt_csv(in);
}

}  // namespace marginalis
