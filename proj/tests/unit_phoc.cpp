#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <string>

#include "ws/phoc.hpp"
#include "ws/rng.hpp"

using ws::phoc::PhocConfig;
using ws::phoc::PhocVector;

namespace {

// Independent brute force: iterate every (character occurrence, level,
// region) pair and apply the interval-overlap rule directly.
PhocVector oracle_phoc(const std::string& word, const PhocConfig& cfg) {
    const int n = static_cast<int>(word.size());
    const int a = static_cast<int>(cfg.alphabet.size());
    PhocVector bits(static_cast<std::size_t>(cfg.dimension()), 0);
    for (int k = 0; k < n; ++k) {
        const int sym = cfg.symbol_index(word[static_cast<std::size_t>(k)]);
        if (sym < 0) continue;
        const double occ_lo = static_cast<double>(k) / n;
        const double occ_hi = static_cast<double>(k + 1) / n;
        int region_index = 0;
        for (int level : cfg.levels) {
            for (int r = 0; r < level; ++r, ++region_index) {
                const double lo = static_cast<double>(r) / level;
                const double hi = static_cast<double>(r + 1) / level;
                const double inter = std::min(occ_hi, hi) - std::max(occ_lo, lo);
                if (inter > 0.0 && inter / (occ_hi - occ_lo) >= cfg.overlap_threshold) {
                    bits[static_cast<std::size_t>(region_index) * a +
                         static_cast<std::size_t>(sym)] = 1;
                }
            }
        }
    }
    return bits;
}

std::string random_word(ws::rng::Engine& g, const std::string& alphabet, int min_len,
                        int max_len) {
    const int len = min_len + static_cast<int>(ws::rng::uniform_index(
                                  g, static_cast<std::size_t>(max_len - min_len + 1)));
    std::string w;
    for (int i = 0; i < len; ++i) {
        w += alphabet[ws::rng::uniform_index(g, alphabet.size())];
    }
    return w;
}

} // namespace

TEST_CASE("normalize_transcription folds case and strips out-of-alphabet symbols") {
    const PhocConfig cfg;
    CHECK(ws::phoc::normalize_transcription("The", cfg) == "the");
    CHECK(ws::phoc::normalize_transcription("a-b1", cfg) == "ab1");
    CHECK(ws::phoc::normalize_transcription("", cfg) == "");
    CHECK(ws::phoc::normalize_transcription("..-!", cfg) == "");
}

TEST_CASE("phoc_dimension") {
    CHECK(ws::phoc::phoc_dimension(PhocConfig{}) == 540);

    PhocConfig small;
    small.alphabet = "ab";
    small.levels = {1, 2};
    CHECK(ws::phoc::phoc_dimension(small) == 6);

    PhocConfig unit;
    unit.alphabet = "a";
    unit.levels = {1};
    CHECK(ws::phoc::phoc_dimension(unit) == 1);
}

TEST_CASE("build_phoc hand-evaluated examples") {
    PhocConfig cfg;
    cfg.alphabet = "ab";
    cfg.levels = {1, 2};

    CHECK(ws::phoc::build_phoc("ab", cfg) == PhocVector{1, 1, 1, 0, 0, 1});

    PhocConfig one;
    one.alphabet = "a";
    one.levels = {1, 2};
    // exact 50% overlap with both halves counts as active
    CHECK(ws::phoc::build_phoc("a", one) == PhocVector{1, 1, 1});

    PhocConfig lvl1;
    lvl1.alphabet = "ab";
    lvl1.levels = {1};
    CHECK(ws::phoc::build_phoc("a", lvl1) == PhocVector{1, 0});

    CHECK_THROWS_AS(ws::phoc::build_phoc("", cfg), std::invalid_argument);
}

TEST_CASE("build_phoc matches the brute-force oracle on random configs") {
    auto g = ws::rng::make_engine(7321);
    const std::vector<std::vector<int>> level_choices = {
        {1, 2, 4, 8}, {1, 2}, {1, 3, 5}, {2, 3}, {1, 2, 4}};
    const double thresholds[] = {0.3, 0.5, 0.5, 0.7, 0.45};
    for (int c = 0; c < 5; ++c) {
        PhocConfig cfg;
        const int alpha_size =
            2 + static_cast<int>(ws::rng::uniform_index(g, 7)); // 2..8 symbols
        cfg.alphabet = std::string("abcdefgh").substr(0, static_cast<std::size_t>(alpha_size));
        cfg.levels = level_choices[static_cast<std::size_t>(c)];
        cfg.overlap_threshold = thresholds[c];
        for (int i = 0; i < 50; ++i) {
            const std::string w = random_word(g, cfg.alphabet, 1, 10);
            CAPTURE(w);
            CHECK(ws::phoc::build_phoc(w, cfg) == oracle_phoc(w, cfg));
        }
    }
}

TEST_CASE("build_phoc output length always equals phoc_dimension") {
    auto g = ws::rng::make_engine(99);
    PhocConfig cfg;
    cfg.alphabet = "abcd";
    cfg.levels = {1, 2, 4};
    for (int i = 0; i < 20; ++i) {
        const std::string w = random_word(g, cfg.alphabet, 1, 12);
        CHECK(ws::phoc::build_phoc(w, cfg).size() ==
              static_cast<std::size_t>(ws::phoc::phoc_dimension(cfg)));
    }
}

TEST_CASE("level-1 block is the character-set indicator") {
    auto g = ws::rng::make_engine(4242);
    PhocConfig cfg;
    cfg.alphabet = "abcde";
    cfg.levels = {1, 2, 4};
    for (int i = 0; i < 30; ++i) {
        const std::string w = random_word(g, cfg.alphabet, 1, 9);
        const auto bits = ws::phoc::build_phoc(w, cfg);
        for (std::size_t s = 0; s < cfg.alphabet.size(); ++s) {
            const bool occurs = w.find(cfg.alphabet[s]) != std::string::npos;
            CHECK(bits[s] == (occurs ? 1 : 0));
        }
    }
}

TEST_CASE("repeated characters OR their regions") {
    PhocConfig cfg;
    cfg.alphabet = "ab";
    cfg.levels = {1, 2};
    // "aa": 'a' occupies both halves
    CHECK(ws::phoc::build_phoc("aa", cfg) == PhocVector{1, 0, 1, 0, 1, 0});
    // permuting duplicate positions never unsets the level-1 bit
    const auto ab = ws::phoc::build_phoc("aab", cfg);
    const auto ba = ws::phoc::build_phoc("aba", cfg);
    CHECK(ab[0] == 1);
    CHECK(ba[0] == 1);
    CHECK(ab[1] == 1);
    CHECK(ba[1] == 1);
}
