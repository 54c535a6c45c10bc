#pragma once

#include "marginalis/models.hpp"
#include "marginalis/rng.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace marginalis {

struct DeckPayoff {
    double reward_per_trial;
    int losses_per_block;
    double loss_total_per_block;  // <= 0

    double net_per_block(int block_size) const { return block_size * reward_per_trial + loss_total_per_block; }
};

struct PayoffScheme {
    std::array<DeckPayoff, kDecks> decks;
    int block_size = 10;
};

// Decks A..D: (100, 5, -1250), (100, 1, -1250), (50, 5, -250), (50, 1, -250).
PayoffScheme default_scheme();

struct Payoff {
    double reward;
    double loss;
};

// Payoff of the draw_index-th card (0-based) taken from deck (1..4). Loss
// positions are shuffled per block of block_size cards from a stream keyed by
// (seed, stream, deck, block), so the result does not depend on call order.
Payoff draw_payoff(const PayoffScheme& scheme, int deck, std::size_t draw_index, std::uint64_t seed,
                   std::uint64_t stream = 0);

// Subject parameters drawn in probit space: w = Phi(mean + sd * z), etc.
struct GroupGenerator {
    std::array<double, 3> probit_mean{0.0, 0.0, 0.0};  // (w, a, c)
    std::array<double, 3> probit_sd{0.5, 0.5, 0.5};
};

struct SimConfig {
    std::size_t subjects = 1;
    std::size_t trials = 100;
    // One entry per subject, or a single entry shared by all. Ignored when
    // group is set.
    std::vector<EVParams> params;
    std::optional<GroupGenerator> group;
    std::uint64_t seed = 0;

    void validate() const;
};

// Deck (1..4) drawn from choice probabilities by inversion of one uniform.
int sample_choice(const std::array<double, kDecks>& probabilities, Rng& rng);

struct SimOutput {
    std::vector<IGTRecord> records;
    std::vector<EVParams> truth;
};

SimOutput simulate(const SimConfig& config, const PayoffScheme& scheme = default_scheme());

// CSV schema: subject,trial,deck,reward,loss
void write_igt_csv(std::ostream& out, const std::vector<IGTRecord>& records);
std::vector<IGTRecord> read_igt_csv(std::istream& in);
void save_igt_csv(const std::string& path, const std::vector<IGTRecord>& records);
std::vector<IGTRecord> load_igt_csv(const std::string& path);

}  // namespace marginalis
