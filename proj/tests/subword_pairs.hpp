#pragma once

#include <string>
#include <vector>

#include "logsearch/synthetic.hpp"

namespace testutil {

struct ShorteningCase {
    std::string full;
    std::string shortening;
    std::string unrelated;
};

// German-looking compound words from a syllable pool; each case pairs a word
// with its truncation+dot shortening and an independently drawn word.
inline std::vector<ShorteningCase> shortening_cases(std::uint64_t seed, std::size_t n) {
    static const std::vector<std::string> syllables{
        "druck", "temp", "ver", "schwan", "kung", "ab", "fall", "mess", "stel", "le", "pum", "pen", "wär",
        "me",    "tau",  "scher", "ven", "til", "lei", "tung", "kühl", "was", "ser", "reak", "tor", "schalt",
        "an",    "la",   "ge", "fil", "ter", "wech", "sel", "rühr", "werk", "kes", "dich", "ung", "stand"};
    logsearch::SplitMixRng rng(seed);
    auto word = [&] {
        std::string w;
        std::size_t parts = 3 + rng.below(3);
        for (std::size_t i = 0; i < parts; ++i) {
            w += rng.pick(syllables);
        }
        w[0] = static_cast<char>(w[0] - 'a' + 'A');
        return w;
    };
    std::vector<ShorteningCase> out;
    while (out.size() < n) {
        auto full = word();
        auto other = word();
        if (logsearch::text::length(full) < 8 || full.substr(0, 4) == other.substr(0, 4)) {
            continue;
        }
        out.push_back({full, logsearch::synthetic::shorten(full, rng), other});
    }
    return out;
}

}  // namespace testutil
