#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace marginalis {

using Rng = std::mt19937_64;

// Independent generator for the stream identified by (seed, path...).
// Distinct paths give statistically independent streams through seed_seq
// mixing, so chains, subjects and payoff blocks never share state.
inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {}) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * path.size());
    auto push = [&](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto p : path) push(p);
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

}  // namespace marginalis
