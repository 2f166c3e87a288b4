#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ws/phoc.hpp"
#include "ws/retrieval.hpp"

namespace ws::eval {

// Uninterpolated average precision: mean precision at each relevant rank,
// divided by the total number of relevant items.
// Throws std::invalid_argument when total_relevant < 1.
double average_precision(const std::vector<int>& relevance_flags, int total_relevant);

// One evaluated sample: everything the protocols need about it.
struct EvalSample {
    std::string id;
    std::string transcription; // normalized
    retrieval::Estimate estimate;
};

// QbS mean average precision: every query ranks all samples by log-posterior
// (ties by ascending id); relevance is transcription equality. Queries
// without any relevant sample in the evaluated set are excluded.
double qbs_map(const std::vector<std::string>& query_words,
               const std::vector<EvalSample>& samples, const phoc::PhocConfig& config);

struct ThresholdCurveRow {
    double threshold = 0.0;
    std::optional<double> map_at_t; // empty when no query has a relevant sample left
    double mr_at_t = 0.0;
    double coverage = 0.0;
};

// Pruning sweep over the composed test set. The default grid is every
// distinct confidence value plus -infinity, ascending. At threshold T the
// evaluated set is {samples with confidence >= T}; mR@T divides by each
// query's relevant count in the FULL composed set; coverage is the retained
// fraction of the composed set.
std::vector<ThresholdCurveRow>
threshold_sweep(const std::vector<EvalSample>& composed,
                const std::unordered_map<std::string, double>& confidences,
                const std::vector<std::string>& query_words, const phoc::PhocConfig& config,
                const std::vector<double>& grid = {});

// Single row of the sweep at one threshold (same semantics).
ThresholdCurveRow evaluate_at_threshold(const std::vector<EvalSample>& composed,
                                        const std::unordered_map<std::string, double>& confidences,
                                        const std::vector<std::string>& query_words,
                                        const phoc::PhocConfig& config, double threshold);

// Nearest-rank quantile: the ceil(q*N)-th smallest value.
double quantile_threshold(std::vector<double> values, double q = 0.01);

struct WerCurvePoint {
    int portion = 0;  // percent
    double wer = 0.0; // over the most confident portion% samples
};

struct WerSample {
    std::string id;
    std::string transcription; // normalized ground truth
    retrieval::Estimate estimate;
};

// Sorts by oriented confidence descending (ties by ascending id) and reports
// the lexicon-recognition word error rate over the top ceil(p*N/100) samples
// for each portion p in [from..to] stepping by `step`.
std::vector<WerCurvePoint>
cumulative_wer(const std::vector<WerSample>& id_set,
               const std::unordered_map<std::string, double>& confidences,
               const retrieval::Lexicon& lexicon, int portion_from = 10, int portion_to = 100,
               int portion_step = 1);

struct HistogramRow {
    double bin_center = 0.0; // on the joint [0,100] normalized axis
    long train_count = 0;
    long id_count = 0;
    long od_count = 0;
};

struct Histogram {
    std::vector<HistogramRow> rows;
    bool degenerate = false; // all values identical: all mass in bin 0
};

// Joint min-max normalization of all provided splits to [0,100], equal-width
// bins, maximum value in the last bin.
Histogram histogram(const std::vector<double>& train_conf, const std::vector<double>& id_conf,
                    const std::vector<double>& od_conf, int bins = 100);

// Probability that a random positive outscores a random negative; ties count
// one half (Mann-Whitney). Throws std::invalid_argument on an empty side.
double auroc(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores);

struct ScatterRow {
    std::string sample_id;
    std::string split;
    double confidence = 0.0;      // oriented
    double neg_log_quality = 0.0; // -log p(ground truth | estimate)
};

struct ScatterResult {
    std::vector<ScatterRow> rows;
    int skipped = 0; // samples without a usable transcription
};

struct ScatterSample {
    std::string id;
    std::string split;
    std::string transcription;
    retrieval::Estimate estimate;
};

ScatterResult quality_scatter(const std::vector<ScatterSample>& samples,
                              const std::unordered_map<std::string, double>& confidences,
                              const phoc::PhocConfig& config);

// Spearman rank correlation (average ranks on ties).
double spearman(const std::vector<double>& a, const std::vector<double>& b);

} // namespace ws::eval
