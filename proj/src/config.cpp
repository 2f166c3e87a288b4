#include "ws/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "nlohmann/json.hpp"

#include "ws/errors.hpp"

namespace ws::config {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& context) {
    if (!obj.is_object()) throw ConfigError(context + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ConfigError(context + ": unknown key \"" + it.key() + "\"");
        }
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) {
        try {
            out = obj.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("bad value for \"") + key + "\": " + e.what());
        }
    }
}

void parse_phoc(const json& j, phoc::PhocConfig& cfg) {
    check_keys(j, {"alphabet", "levels", "overlap_threshold"}, "phoc");
    read(j, "alphabet", cfg.alphabet);
    read(j, "levels", cfg.levels);
    read(j, "overlap_threshold", cfg.overlap_threshold);
}

void parse_datagen(const json& j, datagen::CorpusConfig& cfg) {
    check_keys(j,
               {"feature_dim", "lexicon_size", "word_length", "id_writers", "od_writers",
                "samples", "noise_sigma", "style_strength", "degradation", "shared_codebooks"},
               "datagen");
    read(j, "feature_dim", cfg.feature_dim);
    read(j, "lexicon_size", cfg.lexicon_size);
    if (j.contains("word_length")) {
        const auto& wl = j.at("word_length");
        if (!wl.is_array() || wl.size() != 2) {
            throw ConfigError("datagen.word_length: expected [min, max]");
        }
        cfg.word_min_len = wl[0].get<int>();
        cfg.word_max_len = wl[1].get<int>();
    }
    read(j, "id_writers", cfg.id_writers);
    read(j, "od_writers", cfg.od_writers);
    if (j.contains("samples")) {
        const auto& s = j.at("samples");
        check_keys(s, {"train", "id_test", "od_test", "meta_od"}, "datagen.samples");
        read(s, "train", cfg.samples.train);
        read(s, "id_test", cfg.samples.id_test);
        read(s, "od_test", cfg.samples.od_test);
        read(s, "meta_od", cfg.samples.meta_od);
    }
    read(j, "noise_sigma", cfg.noise_sigma);
    read(j, "style_strength", cfg.style_strength);
    read(j, "degradation", cfg.degradation);
    read(j, "shared_codebooks", cfg.shared_codebooks);
}

void parse_train(const json& j, nnet::TrainConfig& cfg, const std::string& context) {
    check_keys(j,
               {"iterations", "batch_size", "lr", "lr_schedule", "adam_beta1", "adam_beta2",
                "weight_decay", "dropout_p", "input_jitter"},
               context);
    read(j, "iterations", cfg.iterations);
    read(j, "batch_size", cfg.batch_size);
    read(j, "lr", cfg.lr);
    read(j, "input_jitter", cfg.input_jitter);
    if (j.contains("lr_schedule")) {
        cfg.lr_schedule.clear();
        for (const auto& entry : j.at("lr_schedule")) {
            if (!entry.is_array() || entry.size() != 2) {
                throw ConfigError(context + ".lr_schedule: expected [iteration, divisor] pairs");
            }
            cfg.lr_schedule.emplace_back(entry[0].get<int>(), entry[1].get<double>());
        }
    }
    read(j, "adam_beta1", cfg.adam_beta1);
    read(j, "adam_beta2", cfg.adam_beta2);
    read(j, "weight_decay", cfg.weight_decay);
    read(j, "dropout_p", cfg.dropout_p);
}

json train_to_json(const nnet::TrainConfig& cfg) {
    json j;
    j["iterations"] = cfg.iterations;
    j["batch_size"] = cfg.batch_size;
    j["lr"] = cfg.lr;
    json sched = json::array();
    for (const auto& [it, div] : cfg.lr_schedule) sched.push_back({it, div});
    j["lr_schedule"] = sched;
    j["adam_beta1"] = cfg.adam_beta1;
    j["adam_beta2"] = cfg.adam_beta2;
    j["weight_decay"] = cfg.weight_decay;
    j["dropout_p"] = cfg.dropout_p;
    j["input_jitter"] = cfg.input_jitter;
    return j;
}

} // namespace

void EvalSettings::validate() const {
    if (bins <= 0) throw ConfigError("evaluation: bins must be positive");
    if (!(quantile >= 0.0 && quantile <= 1.0)) {
        throw ConfigError("evaluation: quantile must be in [0,1]");
    }
    if (dropout_passes < 2) throw ConfigError("evaluation: dropout_passes must be >= 2");
    if (portion_from <= 0 || portion_to > 100 || portion_from > portion_to ||
        portion_step <= 0) {
        throw ConfigError("evaluation: invalid wer_portions");
    }
}

void RunConfig::validate() const {
    phoc.validate();
    datagen.validate();
    est.validate();
    ti.validate();
    td.validate();
    evaluation.validate();
}

RunConfig default_run_config() {
    RunConfig cfg;
    cfg.ti.hidden = cfg.est.hidden;
    return cfg;
}

RunConfig run_config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(j, {"seed", "phoc", "datagen", "estimator", "meta", "evaluation"}, "config");

    RunConfig cfg = default_run_config();
    read(j, "seed", cfg.seed);
    if (j.contains("phoc")) parse_phoc(j.at("phoc"), cfg.phoc);
    if (j.contains("datagen")) parse_datagen(j.at("datagen"), cfg.datagen);

    bool meta_hidden_given = false;
    if (j.contains("estimator")) {
        const auto& e = j.at("estimator");
        check_keys(e, {"hidden", "tap_layers", "train"}, "estimator");
        read(e, "hidden", cfg.est.hidden);
        if (e.contains("tap_layers") && !e.at("tap_layers").is_null()) {
            cfg.est.tap_layers = e.at("tap_layers").get<std::vector<int>>();
        }
        if (e.contains("train")) parse_train(e.at("train"), cfg.est.train, "estimator.train");
    }
    if (j.contains("meta")) {
        const auto& m = j.at("meta");
        check_keys(m, {"hidden", "projection_width", "leaky_slope", "pool_levels", "train"},
                   "meta");
        if (m.contains("hidden")) {
            cfg.ti.hidden = m.at("hidden").get<std::vector<int>>();
            meta_hidden_given = true;
        }
        read(m, "projection_width", cfg.td.projection_width);
        read(m, "leaky_slope", cfg.td.leaky_slope);
        read(m, "pool_levels", cfg.td.pool_levels);
        if (m.contains("train")) {
            parse_train(m.at("train"), cfg.ti.train, "meta.train");
            cfg.td.train = cfg.ti.train;
        }
    }
    if (!meta_hidden_given) cfg.ti.hidden = cfg.est.hidden;

    if (j.contains("evaluation")) {
        const auto& ev = j.at("evaluation");
        check_keys(ev, {"bins", "quantile", "dropout_passes", "wer_portions"}, "evaluation");
        read(ev, "bins", cfg.evaluation.bins);
        read(ev, "quantile", cfg.evaluation.quantile);
        read(ev, "dropout_passes", cfg.evaluation.dropout_passes);
        if (ev.contains("wer_portions")) {
            const auto& wp = ev.at("wer_portions");
            check_keys(wp, {"from", "to", "step"}, "evaluation.wer_portions");
            read(wp, "from", cfg.evaluation.portion_from);
            read(wp, "to", cfg.evaluation.portion_to);
            read(wp, "step", cfg.evaluation.portion_step);
        }
    }

    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return run_config_from_json_text(ss.str());
}

std::string resolved_json(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["phoc"] = {{"alphabet", cfg.phoc.alphabet},
                 {"levels", cfg.phoc.levels},
                 {"overlap_threshold", cfg.phoc.overlap_threshold}};
    j["datagen"] = {{"feature_dim", cfg.datagen.feature_dim},
                    {"lexicon_size", cfg.datagen.lexicon_size},
                    {"word_length", {cfg.datagen.word_min_len, cfg.datagen.word_max_len}},
                    {"id_writers", cfg.datagen.id_writers},
                    {"od_writers", cfg.datagen.od_writers},
                    {"samples",
                     {{"train", cfg.datagen.samples.train},
                      {"id_test", cfg.datagen.samples.id_test},
                      {"od_test", cfg.datagen.samples.od_test},
                      {"meta_od", cfg.datagen.samples.meta_od}}},
                    {"noise_sigma", cfg.datagen.noise_sigma},
                    {"style_strength", cfg.datagen.style_strength},
                    {"degradation", cfg.datagen.degradation},
                    {"shared_codebooks", cfg.datagen.shared_codebooks}};
    j["estimator"] = {{"hidden", cfg.est.hidden},
                      {"tap_layers", cfg.est.resolved_taps()},
                      {"train", train_to_json(cfg.est.train)}};
    j["meta"] = {{"hidden", cfg.ti.hidden},
                 {"projection_width", cfg.td.projection_width},
                 {"leaky_slope", cfg.td.leaky_slope},
                 {"pool_levels", cfg.td.pool_levels},
                 {"train", train_to_json(cfg.ti.train)}};
    j["evaluation"] = {{"bins", cfg.evaluation.bins},
                       {"quantile", cfg.evaluation.quantile},
                       {"dropout_passes", cfg.evaluation.dropout_passes},
                       {"wer_portions",
                        {{"from", cfg.evaluation.portion_from},
                         {"to", cfg.evaluation.portion_to},
                         {"step", cfg.evaluation.portion_step}}}};
    return j.dump(2) + "\n";
}

std::uint64_t stage_seed(const RunConfig& cfg, Stage stage) {
    return rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(stage));
}

} // namespace ws::config
