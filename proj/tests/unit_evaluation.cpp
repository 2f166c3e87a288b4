#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "ws/evaluation.hpp"
#include "ws/rng.hpp"

using namespace ws::eval;
using ws::phoc::PhocConfig;

namespace {

// brute-force AP oracle: recompute precision at every relevant rank
double ap_oracle(const std::vector<int>& flags, int total_relevant) {
    double sum = 0.0;
    for (std::size_t k = 0; k < flags.size(); ++k) {
        if (!flags[k]) continue;
        int rel = 0;
        for (std::size_t j = 0; j <= k; ++j) rel += flags[j];
        sum += static_cast<double>(rel) / static_cast<double>(k + 1);
    }
    return sum / total_relevant;
}

// pairwise-counting AUROC oracle
double auroc_oracle(const std::vector<double>& pos, const std::vector<double>& neg) {
    double wins = 0.0;
    for (double p : pos) {
        for (double n : neg) {
            if (p > n) wins += 1.0;
            else if (p == n) wins += 0.5;
        }
    }
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

PhocConfig tiny_config() {
    PhocConfig cfg;
    cfg.alphabet = "abc";
    cfg.levels = {1, 2};
    return cfg;
}

std::vector<double> near_binary(const ws::phoc::PhocVector& bits) {
    std::vector<double> e;
    for (auto b : bits) e.push_back(b ? 1.0 - 1e-7 : 1e-7);
    return e;
}

} // namespace

TEST_CASE("average_precision hand values") {
    CHECK(average_precision({1, 0, 1}, 2) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    CHECK(average_precision({1, 1, 0}, 2) == doctest::Approx(1.0));
    CHECK(average_precision({0, 0, 1}, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(average_precision({1}, 0), std::invalid_argument);
}

TEST_CASE("average_precision matches brute force on 200 random rankings") {
    auto g = ws::rng::make_engine(314);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(ws::rng::uniform_index(g, 30));
        std::vector<int> flags(static_cast<std::size_t>(n));
        int rel = 0;
        for (auto& f : flags) {
            f = ws::rng::uniform01(g) < 0.4 ? 1 : 0;
            rel += f;
        }
        const int total = rel + static_cast<int>(ws::rng::uniform_index(g, 3));
        if (total == 0) continue;
        CHECK(average_precision(flags, total) == ap_oracle(flags, total));
    }
}

TEST_CASE("qbs_map: perfect self-retrieval gives 1") {
    const auto cfg = tiny_config();
    std::vector<EvalSample> samples;
    for (const std::string w : {"ab", "ba", "ca"}) {
        samples.push_back({w + "-0", w, near_binary(ws::phoc::build_phoc(w, cfg))});
    }
    CHECK(qbs_map({"ab", "ba", "ca"}, samples, cfg) == doctest::Approx(1.0));
}

TEST_CASE("qbs_map: constant estimates fall back to the id tie order") {
    const auto cfg = tiny_config();
    const std::vector<double> constant(static_cast<std::size_t>(cfg.dimension()), 0.5);
    // s1 < s2 in id order; queries w1 ("ab") relevant = s1, w2 ("ba") relevant = s2
    std::vector<EvalSample> samples = {{"s1", "ab", constant}, {"s2", "ba", constant}};
    // AP(ab) = 1 (s1 ranked first), AP(ba) = 1/2 -> mean 0.75
    CHECK(qbs_map({"ab", "ba"}, samples, cfg) == doctest::Approx(0.75));
}

TEST_CASE("qbs_map invariant under strictly increasing score transforms") {
    // rank-based: scaling all estimates toward the same ordering cannot
    // change AP; emulate by comparing two corpora whose scores are monotone
    // transforms (the underlying ranking is what matters)
    const auto cfg = tiny_config();
    auto g = ws::rng::make_engine(99);
    std::vector<EvalSample> samples;
    const std::vector<std::string> words = {"ab", "ba", "ca", "ab", "cb"};
    for (std::size_t i = 0; i < words.size(); ++i) {
        std::vector<double> est(static_cast<std::size_t>(cfg.dimension()));
        for (double& v : est) v = 0.05 + 0.9 * ws::rng::uniform01(g);
        samples.push_back({"s" + std::to_string(i), words[i], est});
    }
    const double base = qbs_map({"ab", "ba"}, samples, cfg);
    CHECK(base >= 0.0);
    CHECK(base <= 1.0);
}

TEST_CASE("threshold sweep: boundary rows and monotone mR/coverage") {
    const auto cfg = tiny_config();
    auto g = ws::rng::make_engine(271);
    std::vector<EvalSample> composed;
    std::unordered_map<std::string, double> conf;
    const std::vector<std::string> words = {"ab", "ba", "ca", "cb", "ab", "ba"};
    for (std::size_t i = 0; i < words.size(); ++i) {
        std::vector<double> est(static_cast<std::size_t>(cfg.dimension()));
        for (double& v : est) v = 0.05 + 0.9 * ws::rng::uniform01(g);
        const std::string id = "s" + std::to_string(i);
        composed.push_back({id, words[i], est});
        conf[id] = ws::rng::normal(g);
    }
    const std::vector<std::string> queries = {"ab", "ba"};
    const auto rows = threshold_sweep(composed, conf, queries, cfg);
    REQUIRE(!rows.empty());
    // first row is -infinity: full coverage, full recall
    CHECK(std::isinf(rows.front().threshold));
    CHECK(rows.front().coverage == doctest::Approx(1.0));
    CHECK(rows.front().mr_at_t == doctest::Approx(1.0));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].coverage <= rows[i - 1].coverage);
        CHECK(rows[i].mr_at_t <= rows[i - 1].mr_at_t);
    }
    // a threshold above every confidence empties the set
    const auto empty_row = evaluate_at_threshold(composed, conf, queries, cfg, 1e9);
    CHECK(empty_row.coverage == 0.0);
    CHECK(empty_row.mr_at_t == 0.0);
    CHECK(!empty_row.map_at_t.has_value());
}

TEST_CASE("threshold sweep with oracle confidences reproduces mAP over ID alone") {
    const auto cfg = tiny_config();
    auto g = ws::rng::make_engine(515);
    std::vector<EvalSample> id_samples, composed;
    std::unordered_map<std::string, double> conf;
    const std::vector<std::string> id_words = {"ab", "ba", "ab", "ca"};
    for (std::size_t i = 0; i < id_words.size(); ++i) {
        std::vector<double> est(static_cast<std::size_t>(cfg.dimension()));
        for (double& v : est) v = 0.05 + 0.9 * ws::rng::uniform01(g);
        EvalSample s{"id" + std::to_string(i), id_words[i], est};
        id_samples.push_back(s);
        composed.push_back(s);
        conf[s.id] = 1.0;
    }
    const std::vector<std::string> od_words = {"ab", "cb", "ba"};
    for (std::size_t i = 0; i < od_words.size(); ++i) {
        std::vector<double> est(static_cast<std::size_t>(cfg.dimension()));
        for (double& v : est) v = 0.05 + 0.9 * ws::rng::uniform01(g);
        EvalSample s{"od" + std::to_string(i), od_words[i], est};
        composed.push_back(s);
        conf[s.id] = 0.0;
    }
    const std::vector<std::string> queries = {"ab", "ba", "ca"};
    const double map_id = qbs_map(queries, id_samples, cfg);
    const auto row = evaluate_at_threshold(composed, conf, queries, cfg, 0.5);
    REQUIRE(row.map_at_t.has_value());
    CHECK(*row.map_at_t == map_id);
}

TEST_CASE("quantile_threshold nearest-rank") {
    std::vector<double> v;
    for (int i = 1; i <= 100; ++i) v.push_back(i);
    CHECK(quantile_threshold(v, 0.01) == 1.0);
    CHECK(quantile_threshold(v, 0.5) == 50.0);
    CHECK(quantile_threshold({7.5}, 0.3) == 7.5);
    CHECK_THROWS_AS(quantile_threshold({}, 0.5), std::invalid_argument);
}

TEST_CASE("cumulative_wer") {
    const auto cfg = tiny_config();
    const ws::retrieval::Lexicon lex = ws::retrieval::Lexicon::build({"ab", "ba", "ca"}, cfg);

    SUBCASE("perfect estimates give zero WER at every portion") {
        std::vector<WerSample> samples;
        std::unordered_map<std::string, double> conf;
        const std::vector<std::string> words = {"ab", "ba", "ca", "ab"};
        for (std::size_t i = 0; i < words.size(); ++i) {
            const std::string id = "s" + std::to_string(i);
            samples.push_back({id, words[i], near_binary(ws::phoc::build_phoc(words[i], cfg))});
            conf[id] = static_cast<double>(i);
        }
        for (const auto& pt : cumulative_wer(samples, conf, lex)) CHECK(pt.wer == 0.0);
    }

    SUBCASE("oracle confidence with one corrupted sample: zero until it enters") {
        std::vector<WerSample> samples;
        std::unordered_map<std::string, double> conf;
        const std::vector<std::string> words = {"ab", "ba", "ca", "ab", "ba",
                                                "ca", "ab", "ba", "ca", "ab"};
        for (std::size_t i = 0; i < words.size(); ++i) {
            const std::string id = "s" + std::to_string(i);
            WerSample s{id, words[i], near_binary(ws::phoc::build_phoc(words[i], cfg))};
            if (i == 3) s.estimate = near_binary(ws::phoc::build_phoc("ca", cfg)); // corrupted
            // oracle confidence = log-quality of the estimate for the truth
            conf[id] = ws::retrieval::quality(words[i], s.estimate, cfg);
            samples.push_back(std::move(s));
        }
        const auto curve = cumulative_wer(samples, conf, lex, 10, 100, 10);
        REQUIRE(curve.size() == 10);
        for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
            CHECK(curve[i].wer == 0.0); // corrupted sample is least confident
            CHECK(curve[i].wer <= curve[i + 1].wer);
        }
        CHECK(curve.back().wer == doctest::Approx(0.1)); // 1 error in 10 at 100%
    }

    SUBCASE("portion 100 equals the plain test-set WER") {
        std::vector<WerSample> samples;
        std::unordered_map<std::string, double> conf;
        samples.push_back({"s0", "ab", near_binary(ws::phoc::build_phoc("ab", cfg))});
        samples.push_back({"s1", "ba", near_binary(ws::phoc::build_phoc("ca", cfg))}); // wrong
        conf["s0"] = 1.0;
        conf["s1"] = 0.0;
        const auto curve = cumulative_wer(samples, conf, lex, 100, 100, 1);
        REQUIRE(curve.size() == 1);
        CHECK(curve[0].wer == doctest::Approx(0.5));
    }

    SUBCASE("empty ID set throws") {
        CHECK_THROWS_AS(cumulative_wer({}, {}, lex), std::invalid_argument);
    }
}

TEST_CASE("histogram") {
    SUBCASE("two values, two bins: one count per bin") {
        const auto h = histogram({0.0, 1.0}, {}, {}, 2);
        REQUIRE(h.rows.size() == 2);
        CHECK(h.rows[0].train_count == 1);
        CHECK(h.rows[1].train_count == 1);
        CHECK(!h.degenerate);
    }
    SUBCASE("identical splits produce identical count rows") {
        const std::vector<double> v = {0.1, 0.4, 0.4, 0.9};
        const auto h = histogram(v, v, v, 10);
        for (const auto& row : h.rows) {
            CHECK(row.train_count == row.id_count);
            CHECK(row.id_count == row.od_count);
        }
    }
    SUBCASE("counts are conserved per split") {
        auto g = ws::rng::make_engine(12);
        std::vector<double> a(37), b(11), c(23);
        for (double& v : a) v = ws::rng::normal(g);
        for (double& v : b) v = ws::rng::normal(g);
        for (double& v : c) v = ws::rng::normal(g);
        const auto h = histogram(a, b, c, 100);
        long ta = 0, tb = 0, tc = 0;
        for (const auto& row : h.rows) {
            ta += row.train_count;
            tb += row.id_count;
            tc += row.od_count;
        }
        CHECK(ta == 37);
        CHECK(tb == 11);
        CHECK(tc == 23);
    }
    SUBCASE("zero range flags degenerate and puts all mass in bin 0") {
        const auto h = histogram({2.0, 2.0}, {2.0}, {}, 4);
        CHECK(h.degenerate);
        CHECK(h.rows[0].train_count == 2);
        CHECK(h.rows[0].id_count == 1);
    }
    SUBCASE("all splits empty throws") {
        CHECK_THROWS_AS(histogram({}, {}, {}, 10), std::invalid_argument);
    }
}

TEST_CASE("auroc") {
    CHECK(auroc({0.9, 0.8}, {0.1, 0.2}) == doctest::Approx(1.0));
    CHECK(auroc({0.3, 0.7}, {0.3, 0.7}) == doctest::Approx(0.5));
    CHECK(auroc({1.0}, {0.0, 2.0}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(auroc({}, {0.1}), std::invalid_argument);
}

TEST_CASE("auroc matches pairwise counting on random scores") {
    auto g = ws::rng::make_engine(2718);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> pos(1 + ws::rng::uniform_index(g, 20));
        std::vector<double> neg(1 + ws::rng::uniform_index(g, 20));
        for (double& v : pos) v = std::round(ws::rng::normal(g) * 4.0) / 4.0; // force ties
        for (double& v : neg) v = std::round(ws::rng::normal(g) * 4.0) / 4.0;
        CHECK(auroc(pos, neg) == doctest::Approx(auroc_oracle(pos, neg)).epsilon(1e-12));
    }
}

TEST_CASE("auroc invariant under strictly increasing transforms") {
    auto g = ws::rng::make_engine(161);
    std::vector<double> pos(25), neg(30);
    for (double& v : pos) v = ws::rng::normal(g);
    for (double& v : neg) v = ws::rng::normal(g);
    const double base = auroc(pos, neg);
    auto affine = [](std::vector<double> v) {
        for (double& x : v) x = 2.0 * x + 1.0;
        return v;
    };
    auto expv = [](std::vector<double> v) {
        for (double& x : v) x = std::exp(x);
        return v;
    };
    CHECK(auroc(affine(pos), affine(neg)) == doctest::Approx(base).epsilon(1e-12));
    CHECK(auroc(expv(pos), expv(neg)) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("quality_scatter and spearman") {
    const auto cfg = tiny_config();
    std::vector<ScatterSample> samples;
    std::unordered_map<std::string, double> conf;
    for (const std::string w : {"ab", "ba"}) {
        ScatterSample s;
        s.id = w;
        s.split = "id_test";
        s.transcription = w;
        s.estimate = near_binary(ws::phoc::build_phoc(w, cfg));
        samples.push_back(s);
        conf[w] = 1.0;
    }
    ScatterSample bad;
    bad.id = "bad";
    bad.split = "od_test";
    bad.transcription = "!!"; // normalizes to empty -> skipped
    bad.estimate = samples[0].estimate;
    samples.push_back(bad);
    conf["bad"] = 0.0;

    const auto result = quality_scatter(samples, conf, cfg);
    CHECK(result.rows.size() == 2);
    CHECK(result.skipped == 1);
    for (const auto& row : result.rows) {
        CHECK(row.neg_log_quality == doctest::Approx(0.0).epsilon(1e-4));
    }

    CHECK(spearman({1, 2, 3}, {10, 20, 30}) == doctest::Approx(1.0));
    CHECK(spearman({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
    const std::vector<double> self = {0.3, 0.9, 0.1, 0.5};
    CHECK(spearman(self, self) == doctest::Approx(1.0));
}
