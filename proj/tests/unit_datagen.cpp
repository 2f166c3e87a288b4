#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "ws/confidence.hpp"
#include "ws/datagen.hpp"
#include "ws/errors.hpp"
#include "ws/estimator.hpp"
#include "ws/evaluation.hpp"
#include "ws/retrieval.hpp"

using namespace ws::datagen;

namespace {

CorpusConfig small_config() {
    CorpusConfig cfg;
    cfg.seed = 7;
    cfg.feature_dim = 32;
    cfg.lexicon_size = 12;
    cfg.word_min_len = 2;
    cfg.word_max_len = 6;
    cfg.od_writers = 8;
    cfg.samples = {160, 60, 60, 160};
    return cfg;
}

std::vector<std::vector<double>> features_of(const Corpus& corpus, Split split) {
    std::vector<std::vector<double>> out;
    for (const auto* s : corpus.split_view(split)) out.push_back(s->features);
    return out;
}

} // namespace

TEST_CASE("sample_lexicon is deterministic and in-alphabet") {
    const auto cfg = small_config();
    auto g1 = ws::rng::make_engine(3);
    auto g2 = ws::rng::make_engine(3);
    const auto lex1 = sample_lexicon(cfg, g1);
    const auto lex2 = sample_lexicon(cfg, g2);
    CHECK(lex1 == lex2);
    CHECK(lex1.size() == static_cast<std::size_t>(cfg.lexicon_size));
    const ws::phoc::PhocConfig phoc_cfg;
    for (const auto& w : lex1) {
        CHECK(ws::phoc::normalize_transcription(w, phoc_cfg) == w);
        CHECK(static_cast<int>(w.size()) >= cfg.word_min_len);
        CHECK(static_cast<int>(w.size()) <= cfg.word_max_len);
    }
    CHECK(std::set<std::string>(lex1.begin(), lex1.end()).size() == lex1.size());

    CorpusConfig one = cfg;
    one.lexicon_size = 1;
    auto g3 = ws::rng::make_engine(4);
    CHECK(sample_lexicon(one, g3).size() == 1);
}

TEST_CASE("render: no style and no noise is a pure function of the word") {
    CorpusConfig cfg = small_config();
    cfg.style_strength = 0.0;
    cfg.noise_sigma = 0.0;
    const auto book = make_codebook(cfg, Process::base);
    const auto style = make_writer_style(cfg, 0, 1.0);
    auto g = ws::rng::make_engine(5);
    const auto a = render("abc", style, book, g, cfg);
    const auto b = render("abc", style, book, g, cfg);
    CHECK(a == b);
    CHECK_THROWS_AS(render("", style, book, g, cfg), std::invalid_argument);
}

TEST_CASE("render: distinct writers produce distinct vectors for the same word") {
    CorpusConfig cfg = small_config();
    cfg.noise_sigma = 0.0;
    const auto book = make_codebook(cfg, Process::base);
    const auto s0 = make_writer_style(cfg, 0, 1.0);
    const auto s1 = make_writer_style(cfg, 1, 1.0);
    auto g = ws::rng::make_engine(5);
    CHECK(render("abc", s0, book, g, cfg) != render("abc", s1, book, g, cfg));
}

TEST_CASE("generate_corpus: determinism, structure and jsonl round-trip") {
    const auto cfg = small_config();
    const Corpus c1 = generate_corpus(cfg);
    const Corpus c2 = generate_corpus(cfg);
    CHECK(to_jsonl(c1) == to_jsonl(c2));

    // split sizes match the config exactly
    CHECK(c1.split_view(Split::train).size() == 160);
    CHECK(c1.split_view(Split::id_test).size() == 60);
    CHECK(c1.split_view(Split::od_test).size() == 60);
    CHECK(c1.split_view(Split::meta_od).size() == 160);

    // no id collisions
    std::set<std::string> ids;
    for (const auto& s : c1.samples) CHECK(ids.insert(s.id).second);

    // id writers and od writers are disjoint
    std::set<int> id_writers, od_writers;
    for (const auto* s : c1.split_view(Split::train)) id_writers.insert(s->writer);
    for (const auto* s : c1.split_view(Split::id_test)) id_writers.insert(s->writer);
    for (const auto* s : c1.split_view(Split::od_test)) od_writers.insert(s->writer);
    for (int w : od_writers) CHECK(!id_writers.count(w));

    // all transcriptions come from the shared lexicon
    const auto lex = corpus_lexicon(cfg);
    const std::set<std::string> lex_set(lex.begin(), lex.end());
    for (const auto& s : c1.samples) CHECK(lex_set.count(s.transcription) == 1);

    // round-trip through the file format
    const auto path = std::filesystem::temp_directory_path() / "ws_datagen_test.jsonl";
    save_jsonl(c1, path);
    const Corpus loaded = load_jsonl(path);
    CHECK(loaded.config.seed == cfg.seed);
    CHECK(loaded.samples.size() == c1.samples.size());
    for (std::size_t i = 0; i < loaded.samples.size(); ++i) {
        CHECK(loaded.samples[i].id == c1.samples[i].id);
        CHECK(loaded.samples[i].features == c1.samples[i].features);
    }
    CHECK(to_jsonl(loaded) == to_jsonl(c1));
    std::filesystem::remove(path);
}

TEST_CASE("load_jsonl names the corrupted line") {
    const auto cfg = small_config();
    const Corpus corpus = generate_corpus(cfg);
    const auto path = std::filesystem::temp_directory_path() / "ws_datagen_corrupt.jsonl";
    {
        std::string text = to_jsonl(corpus);
        // damage the 4th line
        std::size_t pos = 0;
        for (int i = 0; i < 3; ++i) pos = text.find('\n', pos) + 1;
        text.insert(pos, "{broken");
        std::ofstream f(path, std::ios::binary);
        f << text;
    }
    try {
        load_jsonl(path);
        FAIL("expected DataError");
    } catch (const ws::DataError& e) {
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("base and surrogate codebooks are separable by a linear probe") {
    const auto cfg = small_config();
    const Corpus corpus = generate_corpus(cfg);
    const auto x = features_of(corpus, Split::train);
    const auto o = features_of(corpus, Split::meta_od);

    ws::confidence::TiConfig probe;
    probe.hidden = {}; // logistic regression
    probe.train.iterations = 2000;
    probe.train.lr = 1e-2;
    probe.train.lr_schedule.clear();
    probe.train.weight_decay = 1e-4;
    probe.train.seed = 99;
    const auto meta = ws::confidence::train_ti_meta(x, o, probe);

    std::vector<double> pos, neg;
    for (const auto& f : x) pos.push_back(meta.logit(f));
    for (const auto& f : o) neg.push_back(meta.logit(f));
    CHECK(ws::eval::auroc(pos, neg) > 0.9);
}

TEST_CASE("null control: no style and shared codebooks make splits indistinguishable") {
    CorpusConfig cfg = small_config();
    cfg.style_strength = 0.0;
    cfg.shared_codebooks = true;
    const Corpus corpus = generate_corpus(cfg);

    ws::confidence::TiConfig probe;
    probe.hidden = {16};
    probe.train.iterations = 1500;
    probe.train.lr = 1e-2;
    probe.train.lr_schedule.clear();
    probe.train.weight_decay = 1e-4;
    probe.train.seed = 21;
    const auto meta = ws::confidence::train_ti_meta(features_of(corpus, Split::train),
                                                    features_of(corpus, Split::meta_od), probe);

    std::vector<double> pos, neg;
    for (const auto* s : corpus.split_view(Split::id_test)) pos.push_back(meta.logit(s->features));
    for (const auto* s : corpus.split_view(Split::od_test)) neg.push_back(meta.logit(s->features));
    const double a = ws::eval::auroc(pos, neg);
    CHECK(a > 0.35);
    CHECK(a < 0.65);
}

TEST_CASE("with defaults-style knobs, od estimates are stochastically worse than id") {
    CorpusConfig cfg = small_config();
    cfg.feature_dim = 64;
    cfg.lexicon_size = 15;
    cfg.samples = {400, 80, 80, 100};
    const Corpus corpus = generate_corpus(cfg);

    ws::phoc::PhocConfig phoc_cfg; // default 540-dim embedding
    ws::estimator::EstimatorConfig est_cfg;
    est_cfg.hidden = {128, 128};
    est_cfg.train.iterations = 2500;
    est_cfg.train.lr = 1e-3;
    est_cfg.train.lr_schedule = {{2000, 10.0}};
    est_cfg.train.seed = 5;

    std::vector<std::vector<double>> feats;
    std::vector<std::string> words;
    for (const auto* s : corpus.split_view(Split::train)) {
        feats.push_back(s->features);
        words.push_back(s->transcription);
    }
    const auto est = ws::estimator::train_estimator(feats, words, phoc_cfg, est_cfg);

    auto median_quality = [&](Split split) {
        std::vector<double> q;
        for (const auto* s : corpus.split_view(split)) {
            q.push_back(ws::retrieval::quality(s->transcription, est.estimate(s->features),
                                               phoc_cfg));
        }
        std::sort(q.begin(), q.end());
        return q[q.size() / 2];
    };
    CHECK(median_quality(Split::id_test) > median_quality(Split::od_test));
}
