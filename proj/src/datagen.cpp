#include "ws/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "nlohmann/json.hpp"

#include "ws/errors.hpp"
#include "ws/textio.hpp"

namespace ws::datagen {

namespace {

// rng stream layout for one corpus seed
constexpr std::uint64_t kStreamLexicon = 1;
constexpr std::uint64_t kStreamCodebookBase = 2;
constexpr std::uint64_t kStreamCodebookSurrogate = 3;
constexpr std::uint64_t kStreamSplitBase = 16;   // + split index
constexpr std::uint64_t kStreamWriterBase = 1024; // + global writer index

// style variance continua (relative to the unit variance of ID writers)
constexpr double kOdVarianceMin = 0.15;
constexpr double kOdVarianceMax = 4.0;
constexpr double kMetaVarianceMin = 0.02;
constexpr double kMetaVarianceMax = 6.0;

// Surrogate codebook: correlation sqrt(1-beta^2) with the base codebook.
// Small beta keeps the surrogate's inner shell as close to the training
// clusters as the closest od writers get, so a classifier separating the
// training set from the surrogate has to hug the training manifold.
constexpr double kSurrogateBlend = 0.15;

constexpr const char* kLetters = "abcdefghijklmnopqrstuvwxyz";
constexpr const char* kDigits = "0123456789";

double positional(int d, int k, int n) {
    const double t = (k + 0.5) / n;
    const int freq = 1 + (d % 8);
    const double phase = ((d / 8) % 2) ? 1.5707963267948966 : 0.0;
    return 1.0 + 0.5 * std::sin(6.283185307179586476925286766559 * freq * t + phase);
}

} // namespace

const char* split_name(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::id_test: return "id_test";
    case Split::od_test: return "od_test";
    case Split::meta_od: return "meta_od";
    }
    return "train";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "id_test") return Split::id_test;
    if (name == "od_test") return Split::od_test;
    if (name == "meta_od") return Split::meta_od;
    throw DataError("unknown split: " + name);
}

void CorpusConfig::validate() const {
    if (feature_dim <= 0) throw ConfigError("datagen: feature_dim must be positive");
    if (lexicon_size <= 0) throw ConfigError("datagen: lexicon_size must be positive");
    if (word_min_len <= 0 || word_max_len < word_min_len) {
        throw ConfigError("datagen: invalid word length range");
    }
    if (id_writers <= 0 || od_writers <= 0) {
        throw ConfigError("datagen: writer counts must be positive");
    }
    if (samples.train <= 0 || samples.id_test <= 0 || samples.od_test <= 0 ||
        samples.meta_od <= 0) {
        throw ConfigError("datagen: split sizes must be positive");
    }
    if (noise_sigma < 0.0 || style_strength < 0.0) {
        throw ConfigError("datagen: noise_sigma and style_strength must be >= 0");
    }
    if (degradation < 0.0 || degradation > 1.0) {
        throw ConfigError("datagen: degradation must be in [0,1]");
    }
}

std::vector<const Sample*> Corpus::split_view(Split s) const {
    std::vector<const Sample*> view;
    for (const auto& sample : samples) {
        if (sample.split == s) view.push_back(&sample);
    }
    return view;
}

int Codebook::symbol_index(char c) const {
    if (c >= 'a' && c <= 'z') return c - 'a';
    if (c >= '0' && c <= '9') return 26 + (c - '0');
    return -1;
}

Codebook make_codebook(const CorpusConfig& config, Process process) {
    auto g = rng::make_engine(rng::derive_seed(config.seed, kStreamCodebookBase));
    Codebook book;
    book.vectors.resize(36);
    for (auto& v : book.vectors) {
        v.resize(static_cast<std::size_t>(config.feature_dim));
        for (double& x : v) x = rng::normal(g);
    }
    if (process == Process::surrogate && !config.shared_codebooks) {
        // Blend each symbol vector with a fresh seeded draw. Every symbol
        // renders slightly differently under the surrogate process (a real
        // per-word distribution gap), but there is no single feature-space
        // direction that separates the two processes globally.
        auto pg = rng::make_engine(rng::derive_seed(config.seed, kStreamCodebookSurrogate));
        const double keep = std::sqrt(1.0 - kSurrogateBlend * kSurrogateBlend);
        for (auto& v : book.vectors) {
            for (double& x : v) x = keep * x + kSurrogateBlend * rng::normal(pg);
        }
    }
    return book;
}

WriterStyle make_writer_style(const CorpusConfig& config, int writer_index, double variance) {
    auto g = rng::make_engine(
        rng::derive_seed(config.seed, kStreamWriterBase + static_cast<std::uint64_t>(writer_index)));
    WriterStyle style;
    style.writer = writer_index;
    style.strength = config.style_strength;
    const std::size_t d = static_cast<std::size_t>(config.feature_dim);
    const double g_sd = std::sqrt(variance / config.feature_dim);
    style.transform.resize(d * d);
    for (double& x : style.transform) x = g_sd * rng::normal(g);
    const double b_sd = config.style_strength * 0.5 * std::sqrt(variance);
    style.bias.resize(d);
    for (double& x : style.bias) x = b_sd * rng::normal(g);
    return style;
}

double od_writer_variance(const CorpusConfig& config, int od_index) {
    if (config.od_writers <= 1) return 1.0;
    const double f = static_cast<double>(od_index) / (config.od_writers - 1);
    return kOdVarianceMin + (kOdVarianceMax - kOdVarianceMin) * f;
}

double meta_writer_variance(const CorpusConfig& config, int meta_index) {
    const int writers = std::max(config.od_writers, config.samples.meta_od / 4);
    if (writers <= 1) return 1.0;
    const double f = static_cast<double>(meta_index) / (writers - 1);
    return kMetaVarianceMin + (kMetaVarianceMax - kMetaVarianceMin) * f;
}

std::vector<std::string> sample_lexicon(const CorpusConfig& config, rng::Engine& rng) {
    std::set<std::string> words;
    const int span = config.word_max_len - config.word_min_len + 1;
    long attempts = 0;
    while (static_cast<int>(words.size()) < config.lexicon_size) {
        if (++attempts > 10000000L) {
            throw ConfigError("datagen: lexicon_size too large for the word length range");
        }
        const int len = config.word_min_len + static_cast<int>(rng::uniform_index(rng, span));
        std::string w;
        w.reserve(static_cast<std::size_t>(len));
        for (int i = 0; i < len; ++i) {
            w += kLetters[rng::uniform_index(rng, 26)];
        }
        words.insert(std::move(w));
    }
    return {words.begin(), words.end()};
}

std::vector<std::string> corpus_lexicon(const CorpusConfig& config) {
    auto g = rng::make_engine(rng::derive_seed(config.seed, kStreamLexicon));
    return sample_lexicon(config, g);
}

std::vector<double> render(const std::string& word, const WriterStyle& style,
                           const Codebook& codebook, rng::Engine& rng,
                           const CorpusConfig& config) {
    if (word.empty()) throw std::invalid_argument("render: empty word");
    const int d = config.feature_dim;
    const int n = static_cast<int>(word.size());

    std::vector<double> canonical(static_cast<std::size_t>(d), 0.0);
    for (int k = 0; k < n; ++k) {
        const int sym = codebook.symbol_index(word[static_cast<std::size_t>(k)]);
        if (sym < 0) continue;
        const auto& e = codebook.vectors[static_cast<std::size_t>(sym)];
        for (int i = 0; i < d; ++i) {
            canonical[static_cast<std::size_t>(i)] += positional(i, k, n) * e[static_cast<std::size_t>(i)];
        }
    }

    const double u = rng::uniform01(rng);
    const double noise_sd = config.noise_sigma * (1.0 + config.degradation * u);

    std::vector<double> out(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        double v = canonical[static_cast<std::size_t>(i)];
        if (style.strength != 0.0) {
            const double* row = style.transform.data() + static_cast<std::size_t>(i) * d;
            double acc = 0.0;
            for (int j = 0; j < d; ++j) acc += row[j] * canonical[static_cast<std::size_t>(j)];
            v += style.strength * acc;
        }
        if (!style.bias.empty()) v += style.bias[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(i)] = v + noise_sd * rng::normal(rng);
    }
    return out;
}

Corpus generate_corpus(const CorpusConfig& config) {
    config.validate();
    Corpus corpus;
    corpus.config = config;

    auto lex_engine = rng::make_engine(rng::derive_seed(config.seed, kStreamLexicon));
    const std::vector<std::string> lexicon = sample_lexicon(config, lex_engine);

    const Codebook base = make_codebook(config, Process::base);
    const Codebook surrogate = make_codebook(config, Process::surrogate);

    struct SplitPlan {
        Split split;
        int count;
        int writer_offset; // global index of the split's first writer
        int writer_count;
        const Codebook* book;
        bool od_continuum;   // false: ID writers at unit variance
        bool meta_continuum; // surrogate writer continuum
    };
    // Many surrogate writers with only a handful of samples each: the
    // off-distribution set stays diffuse instead of decomposing into
    // memorizable per-writer clusters.
    const int meta_writers = std::max(config.od_writers, config.samples.meta_od / 4);
    const SplitPlan plans[] = {
        {Split::train, config.samples.train, 0, config.id_writers, &base, false, false},
        {Split::id_test, config.samples.id_test, 0, config.id_writers, &base, false, false},
        {Split::od_test, config.samples.od_test, config.id_writers, config.od_writers, &base,
         true, false},
        {Split::meta_od, config.samples.meta_od, config.id_writers + config.od_writers,
         meta_writers, &surrogate, false, true},
    };

    for (std::size_t plan_idx = 0; plan_idx < 4; ++plan_idx) {
        const auto& plan = plans[plan_idx];
        auto engine =
            rng::make_engine(rng::derive_seed(config.seed, kStreamSplitBase + plan_idx));
        WriterStyle style;
        int current_writer = -1;
        for (int i = 0; i < plan.count; ++i) {
            // contiguous equal blocks so every writer of the split is used
            const int local_writer =
                std::min(static_cast<int>(static_cast<long>(i) * plan.writer_count / plan.count),
                         plan.writer_count - 1);
            const int global_writer = plan.writer_offset + local_writer;
            if (global_writer != current_writer) {
                double variance = 1.0;
                if (plan.od_continuum) variance = od_writer_variance(config, local_writer);
                if (plan.meta_continuum) variance = meta_writer_variance(config, local_writer);
                style = make_writer_style(config, global_writer, variance);
                current_writer = global_writer;
            }
            const std::string& word = lexicon[rng::uniform_index(engine, lexicon.size())];

            Sample s;
            char idbuf[40];
            std::snprintf(idbuf, sizeof(idbuf), "%s-%06d", split_name(plan.split), i);
            s.id = idbuf;
            s.split = plan.split;
            s.transcription = word;
            s.writer = global_writer;
            s.features = render(word, style, *plan.book, engine, config);
            corpus.samples.push_back(std::move(s));
        }
    }
    return corpus;
}

namespace {

void append_config_json(std::string& out, const CorpusConfig& c) {
    out += "{\"seed\":" + std::to_string(c.seed);
    out += ",\"feature_dim\":" + std::to_string(c.feature_dim);
    out += ",\"lexicon_size\":" + std::to_string(c.lexicon_size);
    out += ",\"word_length\":[" + std::to_string(c.word_min_len) + "," +
           std::to_string(c.word_max_len) + "]";
    out += ",\"id_writers\":" + std::to_string(c.id_writers);
    out += ",\"od_writers\":" + std::to_string(c.od_writers);
    out += ",\"samples\":{\"train\":" + std::to_string(c.samples.train);
    out += ",\"id_test\":" + std::to_string(c.samples.id_test);
    out += ",\"od_test\":" + std::to_string(c.samples.od_test);
    out += ",\"meta_od\":" + std::to_string(c.samples.meta_od) + "}";
    out += ",\"noise_sigma\":";
    io::append_real(out, c.noise_sigma);
    out += ",\"style_strength\":";
    io::append_real(out, c.style_strength);
    out += ",\"degradation\":";
    io::append_real(out, c.degradation);
    out += ",\"shared_codebooks\":";
    out += c.shared_codebooks ? "true" : "false";
    out += "}";
}

void check_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                const std::string& context) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw DataError(context + ": unknown key \"" + it.key() + "\"");
        }
    }
}

CorpusConfig config_from_header(const nlohmann::json& j) {
    check_keys(j, {"seed", "feature_dim", "lexicon_size", "word_length", "id_writers",
                   "od_writers", "samples", "noise_sigma", "style_strength", "degradation",
                   "shared_codebooks"},
               "corpus config");
    CorpusConfig c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.feature_dim = j.at("feature_dim").get<int>();
    c.lexicon_size = j.at("lexicon_size").get<int>();
    const auto wl = j.at("word_length");
    if (!wl.is_array() || wl.size() != 2) throw DataError("corpus config: bad word_length");
    c.word_min_len = wl[0].get<int>();
    c.word_max_len = wl[1].get<int>();
    c.id_writers = j.at("id_writers").get<int>();
    c.od_writers = j.at("od_writers").get<int>();
    const auto& sj = j.at("samples");
    check_keys(sj, {"train", "id_test", "od_test", "meta_od"}, "corpus config samples");
    c.samples.train = sj.at("train").get<int>();
    c.samples.id_test = sj.at("id_test").get<int>();
    c.samples.od_test = sj.at("od_test").get<int>();
    c.samples.meta_od = sj.at("meta_od").get<int>();
    c.noise_sigma = j.at("noise_sigma").get<double>();
    c.style_strength = j.at("style_strength").get<double>();
    c.degradation = j.at("degradation").get<double>();
    c.shared_codebooks = j.at("shared_codebooks").get<bool>();
    return c;
}

} // namespace

std::string to_jsonl(const Corpus& corpus) {
    std::string out;
    out.reserve(corpus.samples.size() * 64 +
                corpus.samples.size() * static_cast<std::size_t>(corpus.config.feature_dim) * 20);
    out += "{\"format\":\"corpus/1\",\"config\":";
    append_config_json(out, corpus.config);
    out += "}\n";
    for (const auto& s : corpus.samples) {
        out += "{\"id\":\"";
        out += io::json_escape(s.id);
        out += "\",\"split\":\"";
        out += split_name(s.split);
        out += "\",\"transcription\":\"";
        out += io::json_escape(s.transcription);
        out += "\",\"writer\":" + std::to_string(s.writer);
        out += ",\"features\":[";
        for (std::size_t i = 0; i < s.features.size(); ++i) {
            if (i) out += ',';
            io::append_real(out, s.features[i]);
        }
        out += "]}\n";
    }
    return out;
}

void save_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path.string());
    const std::string text = to_jsonl(corpus);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw DataError("write failed: " + path.string());
}

Corpus load_jsonl(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open corpus: " + path.string());

    Corpus corpus;
    std::string line;
    long line_no = 0;
    std::set<std::string> seen_ids;
    bool have_header = false;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("corpus line " + std::to_string(line_no) + ": invalid JSON: " +
                            e.what());
        }
        try {
            if (!have_header) {
                if (j.value("format", "") != "corpus/1") {
                    throw DataError("unsupported corpus format");
                }
                corpus.config = config_from_header(j.at("config"));
                have_header = true;
                continue;
            }
            check_keys(j, {"id", "split", "transcription", "writer", "features"}, "sample");
            Sample s;
            s.id = j.at("id").get<std::string>();
            s.split = split_from_name(j.at("split").get<std::string>());
            s.transcription = j.at("transcription").get<std::string>();
            s.writer = j.at("writer").get<int>();
            s.features = j.at("features").get<std::vector<double>>();
            if (s.id.empty()) throw DataError("empty sample id");
            if (!seen_ids.insert(s.id).second) throw DataError("duplicate sample id " + s.id);
            if (static_cast<int>(s.features.size()) != corpus.config.feature_dim) {
                throw DataError("feature length mismatch");
            }
            for (double v : s.features) {
                if (!std::isfinite(v)) throw DataError("non-finite feature");
            }
            corpus.samples.push_back(std::move(s));
        } catch (const DataError& e) {
            throw DataError("corpus line " + std::to_string(line_no) + ": " + e.what());
        } catch (const nlohmann::json::exception& e) {
            throw DataError("corpus line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_header) throw DataError("corpus is empty (missing header line)");
    return corpus;
}

} // namespace ws::datagen
