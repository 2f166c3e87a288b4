#include "ws/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "ws/batch.hpp"
#include "ws/parallel.hpp"

namespace ws::eval {

double average_precision(const std::vector<int>& relevance_flags, int total_relevant) {
    if (total_relevant < 1) {
        throw std::invalid_argument("average_precision: total_relevant must be >= 1");
    }
    int hits = 0;
    double sum = 0.0;
    for (std::size_t k = 0; k < relevance_flags.size(); ++k) {
        if (relevance_flags[k]) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    }
    if (hits > total_relevant) {
        throw std::invalid_argument("average_precision: more hits than total_relevant");
    }
    return sum / total_relevant;
}

namespace {

// Shared machinery for qbs_map / threshold sweeps: per query, the full sample
// ordering (score descending, id ascending) and the relevance flags.
struct RankedQueries {
    std::vector<std::string> queries;                 // normalized, deduplicated
    std::vector<std::vector<std::size_t>> order;      // per query: sample permutation
    std::vector<std::vector<char>> relevant;          // per query: flag per sample
    std::vector<int> total_relevant;                  // per query: count in the full set
};

RankedQueries rank_queries(const std::vector<std::string>& query_words,
                           const std::vector<EvalSample>& samples,
                           const phoc::PhocConfig& config) {
    RankedQueries rq;
    std::set<std::string> unique;
    for (const auto& w : query_words) {
        const std::string n = phoc::normalize_transcription(w, config);
        if (!n.empty()) unique.insert(n);
    }
    rq.queries.assign(unique.begin(), unique.end());

    std::vector<phoc::PhocVector> qvecs;
    qvecs.reserve(rq.queries.size());
    for (const auto& q : rq.queries) qvecs.push_back(phoc::build_phoc(q, config));

    std::vector<std::vector<double>> estimates;
    estimates.reserve(samples.size());
    for (const auto& s : samples) estimates.push_back(s.estimate);

    std::vector<std::vector<double>> scores;
    batch::posterior_matrix(qvecs, estimates, scores);

    const std::size_t n = samples.size();
    rq.order.resize(rq.queries.size());
    rq.relevant.resize(rq.queries.size());
    rq.total_relevant.assign(rq.queries.size(), 0);
    parallel_for(static_cast<std::int64_t>(rq.queries.size()), [&](std::int64_t qi) {
        const auto q = static_cast<std::size_t>(qi);
        auto& perm = rq.order[q];
        perm.resize(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        const auto& sc = scores[q];
        std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
            if (sc[a] != sc[b]) return sc[a] > sc[b];
            return samples[a].id < samples[b].id;
        });
        auto& rel = rq.relevant[q];
        rel.resize(n, 0);
        int count = 0;
        for (std::size_t s = 0; s < n; ++s) {
            if (samples[s].transcription == rq.queries[q]) {
                rel[s] = 1;
                ++count;
            }
        }
        rq.total_relevant[q] = count;
    });
    return rq;
}

// AP over the subset of the ordering passing `keep`, relative to the kept
// relevant count. Returns nothing when no relevant sample is kept.
template <typename Keep>
std::optional<double> ap_over_subset(const std::vector<std::size_t>& order,
                                     const std::vector<char>& relevant, Keep&& keep) {
    int kept_rank = 0;
    int hits = 0;
    double sum = 0.0;
    for (std::size_t s : order) {
        if (!keep(s)) continue;
        ++kept_rank;
        if (relevant[s]) {
            ++hits;
            sum += static_cast<double>(hits) / kept_rank;
        }
    }
    if (hits == 0) return std::nullopt;
    return sum / hits;
}

} // namespace

double qbs_map(const std::vector<std::string>& query_words,
               const std::vector<EvalSample>& samples, const phoc::PhocConfig& config) {
    const RankedQueries rq = rank_queries(query_words, samples, config);
    double sum = 0.0;
    int counted = 0;
    for (std::size_t q = 0; q < rq.queries.size(); ++q) {
        if (rq.total_relevant[q] == 0) continue; // query never occurs: excluded
        const auto ap = ap_over_subset(rq.order[q], rq.relevant[q],
                                       [](std::size_t) { return true; });
        sum += *ap;
        ++counted;
    }
    if (counted == 0) {
        throw std::invalid_argument("qbs_map: no query has a relevant sample");
    }
    return sum / counted;
}

namespace {

ThresholdCurveRow row_at_threshold(const std::vector<EvalSample>& composed,
                                   const std::vector<double>& conf, const RankedQueries& rq,
                                   double threshold) {
    ThresholdCurveRow row;
    row.threshold = threshold;

    std::size_t remaining = 0;
    for (double c : conf) {
        if (c >= threshold) ++remaining;
    }
    row.coverage = composed.empty()
                       ? 0.0
                       : static_cast<double>(remaining) / static_cast<double>(composed.size());

    double ap_sum = 0.0;
    int ap_n = 0;
    double recall_sum = 0.0;
    int query_n = 0;
    for (std::size_t q = 0; q < rq.queries.size(); ++q) {
        if (rq.total_relevant[q] == 0) continue;
        ++query_n;
        int rel_remaining = 0;
        for (std::size_t s = 0; s < conf.size(); ++s) {
            if (rq.relevant[q][s] && conf[s] >= threshold) ++rel_remaining;
        }
        recall_sum += static_cast<double>(rel_remaining) / rq.total_relevant[q];
        if (rel_remaining > 0) {
            const auto ap = ap_over_subset(rq.order[q], rq.relevant[q],
                                           [&](std::size_t s) { return conf[s] >= threshold; });
            ap_sum += *ap;
            ++ap_n;
        }
    }
    row.mr_at_t = query_n ? recall_sum / query_n : 0.0;
    if (ap_n > 0) row.map_at_t = ap_sum / ap_n;
    return row;
}

std::vector<double> lookup_confidences(const std::vector<EvalSample>& samples,
                                       const std::unordered_map<std::string, double>& conf) {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        const auto it = conf.find(s.id);
        if (it == conf.end()) {
            throw std::invalid_argument("threshold sweep: missing confidence for " + s.id);
        }
        out.push_back(it->second);
    }
    return out;
}

} // namespace

std::vector<ThresholdCurveRow>
threshold_sweep(const std::vector<EvalSample>& composed,
                const std::unordered_map<std::string, double>& confidences,
                const std::vector<std::string>& query_words, const phoc::PhocConfig& config,
                const std::vector<double>& grid) {
    if (composed.empty()) throw std::invalid_argument("threshold_sweep: empty composed set");
    const std::vector<double> conf = lookup_confidences(composed, confidences);
    const RankedQueries rq = rank_queries(query_words, composed, config);

    std::vector<double> thresholds = grid;
    if (thresholds.empty()) {
        thresholds = conf;
        thresholds.push_back(-std::numeric_limits<double>::infinity());
    }
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    std::vector<ThresholdCurveRow> rows(thresholds.size());
    parallel_for(static_cast<std::int64_t>(thresholds.size()), [&](std::int64_t i) {
        rows[static_cast<std::size_t>(i)] =
            row_at_threshold(composed, conf, rq, thresholds[static_cast<std::size_t>(i)]);
    });
    return rows;
}

ThresholdCurveRow evaluate_at_threshold(const std::vector<EvalSample>& composed,
                                        const std::unordered_map<std::string, double>& confidences,
                                        const std::vector<std::string>& query_words,
                                        const phoc::PhocConfig& config, double threshold) {
    if (composed.empty()) throw std::invalid_argument("threshold row: empty composed set");
    const std::vector<double> conf = lookup_confidences(composed, confidences);
    const RankedQueries rq = rank_queries(query_words, composed, config);
    return row_at_threshold(composed, conf, rq, threshold);
}

double quantile_threshold(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile_threshold: empty list");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile_threshold: q in [0,1]");
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    // Nearest rank; the tiny slack keeps exact products like 0.01*100 from
    // rounding up to the next rank.
    auto h = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
    h = std::clamp<std::size_t>(h, 1, values.size());
    return values[h - 1];
}

std::vector<WerCurvePoint>
cumulative_wer(const std::vector<WerSample>& id_set,
               const std::unordered_map<std::string, double>& confidences,
               const retrieval::Lexicon& lexicon, int portion_from, int portion_to,
               int portion_step) {
    if (id_set.empty()) throw std::invalid_argument("cumulative_wer: empty ID set");
    if (portion_from <= 0 || portion_to > 100 || portion_from > portion_to || portion_step <= 0) {
        throw std::invalid_argument("cumulative_wer: bad portion grid");
    }

    const std::size_t n = id_set.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> conf(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto it = confidences.find(id_set[i].id);
        if (it == confidences.end()) {
            throw std::invalid_argument("cumulative_wer: missing confidence for " + id_set[i].id);
        }
        conf[i] = it->second;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (conf[a] != conf[b]) return conf[a] > conf[b];
        return id_set[a].id < id_set[b].id;
    });

    std::vector<char> wrong(n, 0);
    parallel_for(static_cast<std::int64_t>(n), [&](std::int64_t i) {
        const auto& s = id_set[static_cast<std::size_t>(i)];
        wrong[static_cast<std::size_t>(i)] =
            retrieval::recognize(s.estimate, lexicon) != s.transcription ? 1 : 0;
    });

    // errors among the first k most confident samples
    std::vector<int> prefix_errors(n + 1, 0);
    for (std::size_t k = 0; k < n; ++k) {
        prefix_errors[k + 1] = prefix_errors[k] + (wrong[order[k]] ? 1 : 0);
    }

    std::vector<WerCurvePoint> curve;
    for (int p = portion_from; p <= portion_to; p += portion_step) {
        const std::size_t top = (static_cast<std::size_t>(p) * n + 99) / 100; // ceil(p*n/100)
        WerCurvePoint pt;
        pt.portion = p;
        pt.wer = static_cast<double>(prefix_errors[top]) / static_cast<double>(top);
        curve.push_back(pt);
    }
    return curve;
}

Histogram histogram(const std::vector<double>& train_conf, const std::vector<double>& id_conf,
                    const std::vector<double>& od_conf, int bins) {
    if (bins <= 0) throw std::invalid_argument("histogram: bins must be positive");
    if (train_conf.empty() && id_conf.empty() && od_conf.empty()) {
        throw std::invalid_argument("histogram: all splits empty");
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto* split : {&train_conf, &id_conf, &od_conf}) {
        for (double v : *split) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }

    Histogram h;
    h.rows.resize(static_cast<std::size_t>(bins));
    const double bin_width = 100.0 / bins;
    for (int b = 0; b < bins; ++b) {
        h.rows[static_cast<std::size_t>(b)].bin_center = (b + 0.5) * bin_width;
    }
    h.degenerate = !(hi > lo);

    auto fill = [&](const std::vector<double>& values, auto member) {
        for (double v : values) {
            std::size_t b = 0;
            if (!h.degenerate) {
                const double norm = (v - lo) / (hi - lo) * 100.0;
                b = std::min(static_cast<std::size_t>(norm / bin_width),
                             static_cast<std::size_t>(bins - 1));
            }
            h.rows[b].*member += 1;
        }
    };
    fill(train_conf, &HistogramRow::train_count);
    fill(id_conf, &HistogramRow::id_count);
    fill(od_conf, &HistogramRow::od_count);
    return h;
}

double auroc(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores) {
    if (pos_scores.empty() || neg_scores.empty()) {
        throw std::invalid_argument("auroc: empty score list");
    }
    // Rank-sum form; average ranks over ties give the half-credit convention.
    struct Item {
        double v;
        bool pos;
    };
    std::vector<Item> items;
    items.reserve(pos_scores.size() + neg_scores.size());
    for (double v : pos_scores) items.push_back({v, true});
    for (double v : neg_scores) items.push_back({v, false});
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.v < b.v; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < items.size()) {
        std::size_t j = i;
        while (j < items.size() && items[j].v == items[i].v) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k) {
            if (items[k].pos) rank_sum_pos += avg_rank;
        }
        i = j;
    }
    const double np = static_cast<double>(pos_scores.size());
    const double nn = static_cast<double>(neg_scores.size());
    const double u = rank_sum_pos - np * (np + 1.0) / 2.0;
    return u / (np * nn);
}

ScatterResult quality_scatter(const std::vector<ScatterSample>& samples,
                              const std::unordered_map<std::string, double>& confidences,
                              const phoc::PhocConfig& config) {
    ScatterResult result;
    result.rows.reserve(samples.size());
    for (const auto& s : samples) {
        const std::string n = phoc::normalize_transcription(s.transcription, config);
        if (n.empty()) {
            ++result.skipped;
            continue;
        }
        const auto it = confidences.find(s.id);
        if (it == confidences.end()) {
            throw std::invalid_argument("quality_scatter: missing confidence for " + s.id);
        }
        ScatterRow row;
        row.sample_id = s.id;
        row.split = s.split;
        row.confidence = it->second;
        row.neg_log_quality = -retrieval::log_posterior(phoc::build_phoc(n, config), s.estimate);
        result.rows.push_back(std::move(row));
    }
    return result;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && v[order[j]] == v[order[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
        i = j;
    }
    return ranks;
}

} // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
    if (a.size() < 2) throw std::invalid_argument("spearman: need at least two points");
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = ra[i] - ma;
        const double db = rb[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va == 0.0 || vb == 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

} // namespace ws::eval
