#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ws/phoc.hpp"

namespace ws::retrieval {

// Attribute probabilities in (0,1), clamped to [1e-7, 1-1e-7] on read.
using Estimate = std::vector<double>;

struct RetrievalEntry {
    std::string sample_id;
    double log_score = 0.0;
};

// Entries descending by log_score, ties broken by ascending sample id.
struct RetrievalList {
    std::string query;
    std::vector<RetrievalEntry> entries;
};

// log p(a|x) = sum_i a_i ln(est_i) + (1-a_i) ln(1-est_i), with est clamped.
// Always finite; the Bernoulli posterior of the query under the estimate.
double log_posterior(const phoc::PhocVector& query, std::span<const double> estimate);

// Scores every sample against the normalized query word and returns the full
// ordering. Throws std::invalid_argument if the query normalizes to empty.
RetrievalList rank(const std::string& query_word,
                   const std::vector<std::pair<std::string, Estimate>>& estimates,
                   const phoc::PhocConfig& config);

// log p of the ground-truth embedding under the estimate: the estimate's
// quality for transcription t.
double quality(const std::string& transcription, std::span<const double> estimate,
               const phoc::PhocConfig& config);

struct Lexicon {
    // Sorted unique normalized words with precomputed embeddings.
    std::vector<std::pair<std::string, phoc::PhocVector>> words;

    // Normalizes, deduplicates and drops words that normalize to empty.
    static Lexicon build(const std::vector<std::string>& raw_words,
                         const phoc::PhocConfig& config);
};

// argmax over the lexicon of log_posterior; ties resolve to the
// lexicographically smallest word. Throws std::invalid_argument on an empty
// lexicon.
std::string recognize(std::span<const double> estimate, const Lexicon& lexicon);

// Keeps exactly the entries with confidence >= threshold, preserving order.
// Throws std::invalid_argument when a listed sample has no confidence.
RetrievalList prune(const RetrievalList& list,
                    const std::unordered_map<std::string, double>& confidences,
                    double threshold);

} // namespace ws::retrieval
