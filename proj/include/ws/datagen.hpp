#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ws/rng.hpp"

namespace ws::datagen {

enum class Split { train, id_test, od_test, meta_od };

const char* split_name(Split s);
Split split_from_name(const std::string& name); // throws DataError

struct SplitSizes {
    int train = 2000;
    int id_test = 500;
    int od_test = 500;
    int meta_od = 2000;
};

// Seeded generator of a heterogeneous word-feature corpus. The splits play
// fixed roles: train and id_test share writers and the base rendering
// process; od_test uses disjoint writers whose style distance from identity
// grows across the writer index; meta_od uses fresh writers and a distinct
// character codebook (the cheap surrogate off-distribution set). All splits
// draw words from one lexicon so every od word is queryable from ID strings.
struct CorpusConfig {
    std::uint64_t seed = 42;
    int feature_dim = 256;
    int lexicon_size = 50;
    int word_min_len = 2;
    int word_max_len = 8;
    int id_writers = 1;
    int od_writers = 50;
    SplitSizes samples;
    double noise_sigma = 0.05;
    double style_strength = 0.5;
    double degradation = 0.2;
    // When set, the surrogate process reuses the base codebook (used together
    // with style_strength = 0 as a null control where every split is
    // identically distributed).
    bool shared_codebooks = false;

    void validate() const; // throws ConfigError
};

struct Sample {
    std::string id;
    Split split = Split::train;
    std::string transcription; // normalized
    int writer = 0;
    std::vector<double> features;
};

struct Corpus {
    CorpusConfig config;
    std::vector<Sample> samples;

    std::vector<const Sample*> split_view(Split s) const;
};

enum class Process { base, surrogate };

// Per-writer style: features -> features + strength * (G * features) + bias.
struct WriterStyle {
    int writer = 0;
    double strength = 0.0;             // style_strength of the corpus
    std::vector<double> transform;     // G, feature_dim x feature_dim row-major
    std::vector<double> bias;
};

// Character codebook of one rendering process: one feature_dim vector per
// alphabet symbol.
struct Codebook {
    std::vector<std::vector<double>> vectors;
    int symbol_index(char c) const; // letters then digits, -1 otherwise
};

Codebook make_codebook(const CorpusConfig& config, Process process);

// Writer styles: ID writers sit at unit style variance; OD and surrogate
// writers sweep a variance continuum across their index.
WriterStyle make_writer_style(const CorpusConfig& config, int writer_index, double variance);
double od_writer_variance(const CorpusConfig& config, int od_index);
double meta_writer_variance(const CorpusConfig& config, int meta_index);

// lexicon_size distinct words over the lowercase letters, lengths uniform in
// [word_min_len, word_max_len].
std::vector<std::string> sample_lexicon(const CorpusConfig& config, rng::Engine& rng);

// The exact lexicon generate_corpus(config) draws from.
std::vector<std::string> corpus_lexicon(const CorpusConfig& config);

// features = style(S_w, sum_k pos(k, n) .* codebook[char_k]) + noise, where
// pos is a fixed sinusoidal positional modulation and the noise deviation is
// noise_sigma * (1 + degradation * u) with u uniform per sample.
std::vector<double> render(const std::string& word, const WriterStyle& style,
                           const Codebook& codebook, rng::Engine& rng,
                           const CorpusConfig& config);

Corpus generate_corpus(const CorpusConfig& config);

// JSON Lines: one header object (format version + config), then one sample
// object per line. Byte-identical for identical configs.
std::string to_jsonl(const Corpus& corpus);
void save_jsonl(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_jsonl(const std::filesystem::path& path); // DataError names bad lines

} // namespace ws::datagen
