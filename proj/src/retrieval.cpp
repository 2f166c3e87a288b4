#include "ws/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "ws/nnet.hpp"

namespace ws::retrieval {

double log_posterior(const phoc::PhocVector& query, std::span<const double> estimate) {
    if (query.size() != estimate.size()) {
        throw std::invalid_argument("log_posterior: length mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < query.size(); ++i) {
        const double p = std::clamp(estimate[i], nnet::kProbClamp, 1.0 - nnet::kProbClamp);
        s += query[i] ? std::log(p) : std::log(1.0 - p);
    }
    return s;
}

RetrievalList rank(const std::string& query_word,
                   const std::vector<std::pair<std::string, Estimate>>& estimates,
                   const phoc::PhocConfig& config) {
    const std::string normalized = phoc::normalize_transcription(query_word, config);
    if (normalized.empty()) {
        throw std::invalid_argument("rank: query normalizes to empty");
    }
    const phoc::PhocVector q = phoc::build_phoc(normalized, config);

    RetrievalList list;
    list.query = normalized;
    list.entries.reserve(estimates.size());
    for (const auto& [id, est] : estimates) {
        list.entries.push_back({id, log_posterior(q, est)});
    }
    std::sort(list.entries.begin(), list.entries.end(),
              [](const RetrievalEntry& a, const RetrievalEntry& b) {
                  if (a.log_score != b.log_score) return a.log_score > b.log_score;
                  return a.sample_id < b.sample_id;
              });
    return list;
}

double quality(const std::string& transcription, std::span<const double> estimate,
               const phoc::PhocConfig& config) {
    const std::string normalized = phoc::normalize_transcription(transcription, config);
    if (normalized.empty()) {
        throw std::invalid_argument("quality: transcription normalizes to empty");
    }
    return log_posterior(phoc::build_phoc(normalized, config), estimate);
}

Lexicon Lexicon::build(const std::vector<std::string>& raw_words,
                       const phoc::PhocConfig& config) {
    std::set<std::string> unique;
    for (const auto& w : raw_words) {
        const std::string n = phoc::normalize_transcription(w, config);
        if (!n.empty()) unique.insert(n);
    }
    Lexicon lex;
    lex.words.reserve(unique.size());
    for (const auto& w : unique) {
        lex.words.emplace_back(w, phoc::build_phoc(w, config));
    }
    return lex;
}

std::string recognize(std::span<const double> estimate, const Lexicon& lexicon) {
    if (lexicon.words.empty()) throw std::invalid_argument("recognize: empty lexicon");
    // Words are sorted, so scanning with a strict > keeps the
    // lexicographically smallest word on ties.
    std::size_t best = 0;
    double best_score = log_posterior(lexicon.words[0].second, estimate);
    for (std::size_t i = 1; i < lexicon.words.size(); ++i) {
        const double s = log_posterior(lexicon.words[i].second, estimate);
        if (s > best_score) {
            best_score = s;
            best = i;
        }
    }
    return lexicon.words[best].first;
}

RetrievalList prune(const RetrievalList& list,
                    const std::unordered_map<std::string, double>& confidences,
                    double threshold) {
    RetrievalList out;
    out.query = list.query;
    out.entries.reserve(list.entries.size());
    for (const auto& e : list.entries) {
        const auto it = confidences.find(e.sample_id);
        if (it == confidences.end()) {
            throw std::invalid_argument("prune: missing confidence for sample " + e.sample_id);
        }
        if (it->second >= threshold) out.entries.push_back(e);
    }
    return out;
}

} // namespace ws::retrieval
