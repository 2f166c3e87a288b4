#include "ws/phoc.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <stdexcept>

#include "ws/errors.hpp"
#include "ws/rng.hpp"

namespace ws::phoc {

int PhocConfig::level_sum() const {
    int s = 0;
    for (int l : levels) s += l;
    return s;
}

int PhocConfig::dimension() const {
    return static_cast<int>(alphabet.size()) * level_sum();
}

int PhocConfig::symbol_index(char c) const {
    const auto pos = alphabet.find(c);
    return pos == std::string::npos ? -1 : static_cast<int>(pos);
}

std::string PhocConfig::digest() const {
    std::string canon = "phoc|";
    canon += alphabet;
    canon += '|';
    for (int l : levels) {
        canon += std::to_string(l);
        canon += ',';
    }
    canon += '|';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", overlap_threshold);
    canon += buf;
    std::uint64_t h = 0xcbf29ce484222325ull; // FNV-1a
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void PhocConfig::validate() const {
    if (alphabet.empty()) throw ConfigError("phoc: alphabet must not be empty");
    std::array<int, 256> seen{};
    for (unsigned char c : alphabet) {
        if (seen[c]++) throw ConfigError("phoc: alphabet symbols must be unique");
    }
    if (levels.empty()) throw ConfigError("phoc: levels must not be empty");
    for (int l : levels) {
        if (l <= 0) throw ConfigError("phoc: level region counts must be positive");
    }
    if (!(overlap_threshold > 0.0 && overlap_threshold <= 1.0)) {
        throw ConfigError("phoc: overlap_threshold must be in (0,1]");
    }
}

std::string normalize_transcription(std::string_view raw, const PhocConfig& config) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        const char lc = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (config.symbol_index(lc) >= 0) out += lc;
    }
    return out;
}

PhocVector build_phoc(std::string_view word, const PhocConfig& config) {
    if (word.empty()) throw std::invalid_argument("empty transcription");
    const int n = static_cast<int>(word.size());
    const int a = static_cast<int>(config.alphabet.size());
    PhocVector bits(static_cast<std::size_t>(config.dimension()), 0);

    // Character k of an n-character word occupies [k/n, (k+1)/n]; region r of
    // level L is [r/L, (r+1)/L]. The slot activates when the occupancy
    // overlaps the region by >= overlap_threshold of the occupancy width,
    // OR-ed over all occurrences of the symbol.
    std::size_t block = 0; // start of the current region's alphabet block
    for (int level : config.levels) {
        for (int r = 0; r < level; ++r) {
            const double region_lo = static_cast<double>(r) / level;
            const double region_hi = static_cast<double>(r + 1) / level;
            for (int k = 0; k < n; ++k) {
                const int sym = config.symbol_index(word[static_cast<std::size_t>(k)]);
                if (sym < 0) continue;
                const double occ_lo = static_cast<double>(k) / n;
                const double occ_hi = static_cast<double>(k + 1) / n;
                const double inter =
                    std::min(occ_hi, region_hi) - std::max(occ_lo, region_lo);
                if (inter <= 0.0) continue;
                if (inter / (occ_hi - occ_lo) >= config.overlap_threshold) {
                    bits[block + static_cast<std::size_t>(sym)] = 1;
                }
            }
            block += static_cast<std::size_t>(a);
        }
    }
    return bits;
}

int phoc_dimension(const PhocConfig& config) {
    return config.dimension();
}

} // namespace ws::phoc
