#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ws::phoc {

// Pyramidal Histogram of Characters. A word is embedded as one binary slot
// per (pyramid level, region, alphabet symbol): the slot is set when a
// character occurrence overlaps the region by at least overlap_threshold of
// the occurrence's own width.
struct PhocConfig {
    std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
    std::vector<int> levels = {1, 2, 4, 8};
    double overlap_threshold = 0.5;

    int dimension() const;
    int level_sum() const;
    // Index of a symbol in the alphabet, or -1.
    int symbol_index(char c) const;
    // Canonical digest used to bind models to the embedding they were
    // trained for.
    std::string digest() const;

    void validate() const; // throws ConfigError
};

using PhocVector = std::vector<std::uint8_t>; // entries in {0,1}

// Lowercases the input and drops every symbol not in the alphabet.
// May return an empty string; callers decide what to do with it.
std::string normalize_transcription(std::string_view raw, const PhocConfig& config);

// Builds the PHOC embedding of an already normalized, nonempty word.
// Layout: for each level in order, for each region left to right, one block
// of |alphabet| slots in alphabet order.
// Throws std::invalid_argument on an empty word.
PhocVector build_phoc(std::string_view word, const PhocConfig& config);

int phoc_dimension(const PhocConfig& config);

} // namespace ws::phoc
