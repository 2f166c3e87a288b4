// wordspot: seeded synthetic corpora, attribute-estimator training,
// metaclassifier training and the confidence/retrieval evaluation protocols,
// wired as gen | train | meta | eval.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 model-compatibility error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ws/config.hpp"
#include "ws/datagen.hpp"
#include "ws/errors.hpp"
#include "ws/experiment.hpp"
#include "ws/textio.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool force = false;
};

ws::config::RunConfig resolve_config(const CommonArgs& args) {
    ws::config::RunConfig cfg = args.config_path.empty()
                                    ? ws::config::default_run_config()
                                    : ws::config::load_run_config(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    cfg.validate();
    return cfg;
}

void require_fresh(const fs::path& out, bool force) {
    if (!force && fs::exists(out)) {
        throw ws::ConfigError("output already exists (use --force to overwrite): " +
                              out.string());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ws::DataError("cannot open for writing: " + path.string());
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw ws::DataError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ws::ConfigError("cannot open: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_resolved(const ws::config::RunConfig& cfg, const fs::path& next_to,
                    bool is_directory) {
    const fs::path target = is_directory ? next_to / "resolved_config.json"
                                         : fs::path(next_to.string() + ".config.json");
    write_text(target, ws::config::resolved_json(cfg));
}

int cmd_gen(const CommonArgs& args, const std::string& out) {
    ws::config::RunConfig cfg = resolve_config(args);
    require_fresh(out, args.force);
    ws::datagen::CorpusConfig gen_cfg = cfg.datagen;
    gen_cfg.seed = ws::config::stage_seed(cfg, ws::config::Stage::gen);
    const auto corpus = ws::datagen::generate_corpus(gen_cfg);
    ws::datagen::save_jsonl(corpus, out);
    write_resolved(cfg, out, false);
    std::fprintf(stderr, "gen: wrote %zu samples to %s\n", corpus.samples.size(), out.c_str());
    return 0;
}

int cmd_train(const CommonArgs& args, const std::string& corpus_path, const std::string& out,
              std::optional<int> iterations) {
    ws::config::RunConfig cfg = resolve_config(args);
    if (iterations) {
        cfg.est.train.iterations = *iterations;
        // drop schedule entries beyond the new horizon
        std::erase_if(cfg.est.train.lr_schedule,
                      [&](const auto& e) { return e.first > *iterations; });
    }
    require_fresh(out, args.force);
    const auto corpus = ws::datagen::load_jsonl(corpus_path);
    ws::nnet::TrainResult result;
    const auto est = ws::experiment::train_stage(corpus, cfg, &result);
    write_text(out, est.to_json());
    write_resolved(cfg, out, false);
    if (!result.loss_trace.empty()) {
        std::fprintf(stderr, "train: final mean loss %.6g over the last trace bucket\n",
                     result.loss_trace.back());
    }
    std::fprintf(stderr, "train: wrote %s (digest %s)\n", out.c_str(), est.digest().c_str());
    return 0;
}

int cmd_meta(const CommonArgs& args, const std::string& corpus_path, const std::string& measure,
             const std::string& estimator_path, const std::string& out) {
    ws::config::RunConfig cfg = resolve_config(args);
    require_fresh(out, args.force);
    const auto corpus = ws::datagen::load_jsonl(corpus_path);
    if (measure == "ti" || measure == "c3") {
        const auto meta = ws::experiment::ti_stage(corpus, cfg);
        write_text(out, meta.to_json());
    } else if (measure == "td" || measure == "c4") {
        if (estimator_path.empty()) {
            throw ws::CompatError("meta td: requires --estimator (the frozen attribute model)");
        }
        const auto est =
            ws::estimator::AttributeEstimator::from_json_text(read_text(estimator_path));
        const auto meta = ws::experiment::td_stage(corpus, est, cfg);
        write_text(out, meta.to_json());
    } else {
        throw ws::ConfigError("meta: --measure must be ti or td");
    }
    write_resolved(cfg, out, false);
    std::fprintf(stderr, "meta: wrote %s\n", out.c_str());
    return 0;
}

int cmd_eval(const CommonArgs& args, const std::string& corpus_path,
             const std::string& estimator_path, const std::string& ti_path,
             const std::string& td_path, const std::string& measures_csv,
             const std::string& out) {
    ws::config::RunConfig cfg = resolve_config(args);
    require_fresh(out, args.force);
    const auto corpus = ws::datagen::load_jsonl(corpus_path);
    const auto est =
        ws::estimator::AttributeEstimator::from_json_text(read_text(estimator_path));

    std::optional<ws::confidence::TiMetaClassifier> ti;
    if (!ti_path.empty()) {
        ti = ws::confidence::TiMetaClassifier::from_json_text(read_text(ti_path));
    }
    std::optional<ws::confidence::TdMetaClassifier> td;
    if (!td_path.empty()) {
        td = ws::confidence::TdMetaClassifier::from_json_text(read_text(td_path));
    }

    std::vector<ws::confidence::Measure> measures;
    if (measures_csv.empty()) {
        measures = {ws::confidence::Measure::activation, ws::confidence::Measure::test_dropout};
        if (ti) measures.push_back(ws::confidence::Measure::ti_meta);
        if (td) measures.push_back(ws::confidence::Measure::td_meta);
    } else {
        std::stringstream ss(measures_csv);
        std::string token;
        while (std::getline(ss, token, ',')) {
            if (!token.empty()) measures.push_back(ws::confidence::measure_from_cli(token));
        }
    }

    const auto result = ws::experiment::eval_stage(corpus, est, ti ? &*ti : nullptr,
                                                   td ? &*td : nullptr, measures, cfg, out);
    write_resolved(cfg, out, true);
    if (result.dropped_samples) {
        std::fprintf(stderr,
                     "eval: warning: %d samples dropped (empty normalized transcription)\n",
                     result.dropped_samples);
    }
    for (const auto& s : result.summaries) {
        std::fprintf(stderr, "eval: %-12s auroc=%.4f map_id=%.4f map@Tq1=%s coverage@Tq1=%.4f\n",
                     ws::confidence::measure_name(s.measure), s.auroc, s.map_id,
                     s.map_at_tq1 ? ws::io::format_real(*s.map_at_tq1).c_str() : "n/a",
                     s.coverage_at_tq1);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"confidence-aware word spotting toolkit"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string out, corpus, estimator_path, ti_path, td_path, measure, measures_csv;
    std::optional<int> iterations;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", common.config_path, "run configuration JSON file");
        cmd->add_option("--seed", common.seed, "master seed override");
        cmd->add_flag("--force", common.force, "overwrite existing outputs");
        cmd->add_option("--out", out, "output path")->required();
    };

    auto* gen = app.add_subcommand("gen", "generate a synthetic corpus (JSON Lines)");
    add_common(gen);

    auto* train = app.add_subcommand("train", "train the attribute estimator");
    add_common(train);
    train->add_option("--corpus", corpus, "corpus JSONL file")->required();
    train->add_option("--iterations", iterations, "override training iterations");

    auto* meta = app.add_subcommand("meta", "train a metaclassifier (ti or td)");
    add_common(meta);
    meta->add_option("--corpus", corpus, "corpus JSONL file")->required();
    meta->add_option("--measure", measure, "ti (task-independent) or td (task-dependent)")
        ->required();
    meta->add_option("--estimator", estimator_path, "estimator model (required for td)");

    auto* eval = app.add_subcommand("eval", "run the evaluation protocols, write CSV bundle");
    add_common(eval);
    eval->add_option("--corpus", corpus, "corpus JSONL file")->required();
    eval->add_option("--estimator", estimator_path, "estimator model JSON")->required();
    eval->add_option("--ti", ti_path, "task-independent metaclassifier model");
    eval->add_option("--td", td_path, "task-dependent metaclassifier model");
    eval->add_option("--measures", measures_csv,
                     "comma list of c1,c2,c3,c4 (default: all measures with models)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen(common, out);
        if (train->parsed()) return cmd_train(common, corpus, out, iterations);
        if (meta->parsed()) return cmd_meta(common, corpus, measure, estimator_path, out);
        if (eval->parsed()) {
            return cmd_eval(common, corpus, estimator_path, ti_path, td_path, measures_csv, out);
        }
    } catch (const ws::ConfigError& e) {
        std::fprintf(stderr, "error (config): %s\n", e.what());
        return 2;
    } catch (const ws::DataError& e) {
        std::fprintf(stderr, "error (data): %s\n", e.what());
        return 3;
    } catch (const ws::CompatError& e) {
        std::fprintf(stderr, "error (model compatibility): %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
