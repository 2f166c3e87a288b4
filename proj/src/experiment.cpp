#include "ws/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "ws/batch.hpp"
#include "ws/errors.hpp"
#include "ws/parallel.hpp"
#include "ws/retrieval.hpp"
#include "ws/textio.hpp"

namespace ws::experiment {

using confidence::Measure;

PreparedCorpus prepare(const datagen::Corpus& corpus, const phoc::PhocConfig& phoc_config) {
    PreparedCorpus prep;
    prep.normalized.resize(corpus.samples.size());
    for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
        const auto& s = corpus.samples[i];
        prep.normalized[i] = phoc::normalize_transcription(s.transcription, phoc_config);
        const bool empty = prep.normalized[i].empty();
        switch (s.split) {
        case datagen::Split::train:
        case datagen::Split::id_test:
        case datagen::Split::od_test:
            if (empty) {
                ++prep.dropped;
                continue;
            }
            break;
        case datagen::Split::meta_od:
            break; // transcription unused by metaclassifier training
        }
        switch (s.split) {
        case datagen::Split::train: prep.train.push_back(i); break;
        case datagen::Split::id_test: prep.id_test.push_back(i); break;
        case datagen::Split::od_test: prep.od_test.push_back(i); break;
        case datagen::Split::meta_od: prep.meta_od.push_back(i); break;
        }
    }
    return prep;
}

namespace {

std::vector<std::vector<double>> gather_features(const datagen::Corpus& corpus,
                                                 const std::vector<std::size_t>& indices) {
    std::vector<std::vector<double>> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(corpus.samples[i].features);
    return out;
}

void check_estimator_compat(const datagen::Corpus& corpus,
                            const estimator::AttributeEstimator& est,
                            const config::RunConfig& cfg) {
    if (est.input_dim() != corpus.config.feature_dim) {
        throw CompatError("estimator input_dim " + std::to_string(est.input_dim()) +
                          " does not match corpus feature_dim " +
                          std::to_string(corpus.config.feature_dim));
    }
    if (est.phoc_digest() != cfg.phoc.digest()) {
        throw CompatError("estimator was trained for a different phoc configuration");
    }
}

} // namespace

estimator::AttributeEstimator train_stage(const datagen::Corpus& corpus,
                                          const config::RunConfig& cfg,
                                          nnet::TrainResult* result) {
    const PreparedCorpus prep = prepare(corpus, cfg.phoc);
    if (prep.train.empty()) throw DataError("train stage: corpus has no usable train samples");
    std::vector<std::string> transcriptions;
    transcriptions.reserve(prep.train.size());
    for (std::size_t i : prep.train) transcriptions.push_back(prep.normalized[i]);

    estimator::EstimatorConfig est_cfg = cfg.est;
    est_cfg.train.seed = config::stage_seed(cfg, config::Stage::estimator_train);
    return estimator::train_estimator(gather_features(corpus, prep.train), transcriptions,
                                      cfg.phoc, est_cfg, result);
}

confidence::TiMetaClassifier ti_stage(const datagen::Corpus& corpus,
                                      const config::RunConfig& cfg,
                                      nnet::TrainResult* result) {
    const PreparedCorpus prep = prepare(corpus, cfg.phoc);
    if (prep.train.empty() || prep.meta_od.empty()) {
        throw DataError("ti stage: needs nonempty train and meta_od splits");
    }
    confidence::TiConfig ti_cfg = cfg.ti;
    ti_cfg.train.seed = config::stage_seed(cfg, config::Stage::ti_train);
    return confidence::train_ti_meta(gather_features(corpus, prep.train),
                                     gather_features(corpus, prep.meta_od), ti_cfg, result);
}

confidence::TdMetaClassifier td_stage(const datagen::Corpus& corpus,
                                      const estimator::AttributeEstimator& est,
                                      const config::RunConfig& cfg,
                                      nnet::TrainResult* result) {
    check_estimator_compat(corpus, est, cfg);
    const PreparedCorpus prep = prepare(corpus, cfg.phoc);
    if (prep.train.empty() || prep.meta_od.empty()) {
        throw DataError("td stage: needs nonempty train and meta_od splits");
    }
    confidence::TdConfig td_cfg = cfg.td;
    td_cfg.train.seed = config::stage_seed(cfg, config::Stage::td_train);
    return confidence::train_td_meta(est, gather_features(corpus, prep.train),
                                     gather_features(corpus, prep.meta_od), td_cfg, result);
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path.string());
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw DataError("write failed: " + path.string());
}

std::string real_cell(double v) { return io::format_real(v); }

} // namespace

EvalResult eval_stage(const datagen::Corpus& corpus, const estimator::AttributeEstimator& est,
                      const confidence::TiMetaClassifier* ti,
                      const confidence::TdMetaClassifier* td,
                      const std::vector<confidence::Measure>& measures,
                      const config::RunConfig& cfg, const std::filesystem::path& outdir) {
    cfg.validate();
    check_estimator_compat(corpus, est, cfg);

    // canonical measure order
    std::vector<Measure> wanted;
    for (Measure m : {Measure::activation, Measure::test_dropout, Measure::ti_meta,
                      Measure::td_meta}) {
        if (std::find(measures.begin(), measures.end(), m) != measures.end()) {
            wanted.push_back(m);
        }
    }
    if (wanted.empty()) throw ConfigError("eval: no measures requested");
    const bool want_c2 = std::find(wanted.begin(), wanted.end(), Measure::test_dropout) != wanted.end();
    const bool want_c3 = std::find(wanted.begin(), wanted.end(), Measure::ti_meta) != wanted.end();
    const bool want_c4 = std::find(wanted.begin(), wanted.end(), Measure::td_meta) != wanted.end();
    if (want_c3 && !ti) throw CompatError("eval: measure c3 requested without a ti model");
    if (want_c4 && !td) throw CompatError("eval: measure c4 requested without a td model");
    if (want_c4 && td->estimator_digest() != est.digest()) {
        throw CompatError("eval: td model was trained against a different estimator (digest "
                          "mismatch)");
    }
    if (ti && ti->input_dim() != corpus.config.feature_dim) {
        throw CompatError("eval: ti model input_dim does not match corpus feature_dim");
    }

    const PreparedCorpus prep = prepare(corpus, cfg.phoc);
    if (prep.id_test.empty() || prep.od_test.empty()) {
        throw DataError("eval: needs nonempty id_test and od_test splits");
    }
    if (prep.train.empty()) throw DataError("eval: needs a nonempty train split");

    // evaluation order: train, id_test, od_test (corpus file order inside)
    std::vector<std::size_t> all = prep.train;
    all.insert(all.end(), prep.id_test.begin(), prep.id_test.end());
    all.insert(all.end(), prep.od_test.begin(), prep.od_test.end());
    const std::size_t n_train = prep.train.size();
    const std::size_t n_id = prep.id_test.size();
    const std::size_t n_od = prep.od_test.size();

    const auto features = gather_features(corpus, all);

    // one forward pass per sample: estimates and (when needed) taps
    std::vector<retrieval::Estimate> estimates(all.size());
    std::vector<estimator::FeatureTaps> taps(want_c4 ? all.size() : 0);
    {
        std::vector<nnet::ActivationTrace> traces;
        batch::eval_traces(est.network(), features, traces);
        parallel_for(static_cast<std::int64_t>(all.size()), [&](std::int64_t i) {
            const auto k = static_cast<std::size_t>(i);
            estimates[k] = estimator::AttributeEstimator::estimate_from_trace(traces[k]);
            if (want_c4) taps[k] = est.taps_from_trace(traces[k]);
        });
    }

    // ground-truth qualities over id+od (measure independent)
    std::vector<double> log_quality(all.size(), 0.0);
    parallel_for(static_cast<std::int64_t>(all.size()), [&](std::int64_t i) {
        const auto k = static_cast<std::size_t>(i);
        if (k < n_train) return;
        const auto& word = prep.normalized[all[k]];
        log_quality[k] = retrieval::log_posterior(phoc::build_phoc(word, cfg.phoc), estimates[k]);
    });

    // composed test set and ID queries (measure independent)
    std::vector<eval::EvalSample> composed;
    composed.reserve(n_id + n_od);
    std::vector<eval::EvalSample> id_only;
    id_only.reserve(n_id);
    std::set<std::string> id_words;
    for (std::size_t k = n_train; k < all.size(); ++k) {
        eval::EvalSample s;
        s.id = corpus.samples[all[k]].id;
        s.transcription = prep.normalized[all[k]];
        s.estimate = estimates[k];
        composed.push_back(s);
        if (k < n_train + n_id) {
            id_only.push_back(s);
            id_words.insert(s.transcription);
        }
    }
    const std::vector<std::string> queries(id_words.begin(), id_words.end());
    const double map_id = eval::qbs_map(queries, id_only, cfg.phoc);

    // lexicon over all train + test transcriptions
    std::vector<std::string> lex_words;
    for (std::size_t k = 0; k < all.size(); ++k) lex_words.push_back(prep.normalized[all[k]]);
    const retrieval::Lexicon lexicon = retrieval::Lexicon::build(lex_words, cfg.phoc);

    std::vector<eval::WerSample> wer_samples;
    wer_samples.reserve(n_id);
    for (std::size_t k = n_train; k < n_train + n_id; ++k) {
        wer_samples.push_back(
            {corpus.samples[all[k]].id, prep.normalized[all[k]], estimates[k]});
    }

    // per-measure oriented confidences over train+id+od
    const std::uint64_t eval_seed = config::stage_seed(cfg, config::Stage::evaluate);
    std::vector<double> c2_variance;
    if (want_c2) {
        batch::stochastic_mean_variance(est.network(), features, cfg.evaluation.dropout_passes,
                                        eval_seed, c2_variance);
    }

    auto confidences_for = [&](Measure m) {
        std::vector<double> conf(all.size(), 0.0);
        switch (m) {
        case Measure::activation:
            parallel_for(static_cast<std::int64_t>(all.size()), [&](std::int64_t i) {
                conf[static_cast<std::size_t>(i)] =
                    confidence::conf_activation(estimates[static_cast<std::size_t>(i)]).oriented;
            });
            break;
        case Measure::test_dropout:
            for (std::size_t k = 0; k < all.size(); ++k) {
                conf[k] = confidence::oriented_score(m, c2_variance[k]).oriented;
            }
            break;
        case Measure::ti_meta:
            parallel_for(static_cast<std::int64_t>(all.size()), [&](std::int64_t i) {
                const auto k = static_cast<std::size_t>(i);
                conf[k] = ti->logit(features[k]);
            });
            break;
        case Measure::td_meta:
            parallel_for(static_cast<std::int64_t>(all.size()), [&](std::int64_t i) {
                const auto k = static_cast<std::size_t>(i);
                conf[k] = td->logit(taps[k]);
            });
            break;
        }
        return conf;
    };

    std::filesystem::create_directories(outdir);

    EvalResult result;
    result.dropped_samples = prep.dropped;
    std::string summary_csv = "measure,auroc,map_id,map_at_tq1,coverage_at_tq1,spearman_od\n";

    for (Measure m : wanted) {
        const std::vector<double> conf = confidences_for(m);
        std::unordered_map<std::string, double> conf_by_id;
        conf_by_id.reserve(all.size());
        for (std::size_t k = 0; k < all.size(); ++k) {
            conf_by_id[corpus.samples[all[k]].id] = conf[k];
        }
        const std::vector<double> train_conf(conf.begin(),
                                             conf.begin() + static_cast<std::ptrdiff_t>(n_train));
        const std::vector<double> id_conf(conf.begin() + static_cast<std::ptrdiff_t>(n_train),
                                          conf.begin() +
                                              static_cast<std::ptrdiff_t>(n_train + n_id));
        const std::vector<double> od_conf(conf.begin() +
                                              static_cast<std::ptrdiff_t>(n_train + n_id),
                                          conf.end());

        const std::filesystem::path mdir = outdir / confidence::measure_name(m);
        std::filesystem::create_directories(mdir);

        // histogram.csv
        {
            const auto hist = eval::histogram(train_conf, id_conf, od_conf, cfg.evaluation.bins);
            std::string csv = "bin_center,train_count,id_count,od_count\n";
            for (const auto& row : hist.rows) {
                csv += real_cell(row.bin_center) + "," + std::to_string(row.train_count) + "," +
                       std::to_string(row.id_count) + "," + std::to_string(row.od_count) + "\n";
            }
            write_file(mdir / "histogram.csv", csv);
        }

        // threshold_curve.csv
        {
            const auto rows = eval::threshold_sweep(composed, conf_by_id, queries, cfg.phoc);
            std::string csv = "T,map_at_t,mr_at_t,coverage\n";
            for (const auto& row : rows) {
                csv += real_cell(row.threshold) + ",";
                if (row.map_at_t) csv += real_cell(*row.map_at_t);
                csv += "," + real_cell(row.mr_at_t) + "," + real_cell(row.coverage) + "\n";
            }
            write_file(mdir / "threshold_curve.csv", csv);
        }

        // wer_curve.csv
        {
            const auto curve = eval::cumulative_wer(
                wer_samples, conf_by_id, lexicon, cfg.evaluation.portion_from,
                cfg.evaluation.portion_to, cfg.evaluation.portion_step);
            std::string csv = "portion,wer\n";
            for (const auto& pt : curve) {
                csv += std::to_string(pt.portion) + "," + real_cell(pt.wer) + "\n";
            }
            write_file(mdir / "wer_curve.csv", csv);
        }

        // quality_scatter.csv
        std::vector<double> od_log_quality;
        {
            std::string csv = "sample_id,split,confidence,neg_log_quality\n";
            for (std::size_t k = n_train; k < all.size(); ++k) {
                const auto& sample = corpus.samples[all[k]];
                csv += sample.id;
                csv += ",";
                csv += datagen::split_name(sample.split);
                csv += "," + real_cell(conf[k]) + "," + real_cell(-log_quality[k]) + "\n";
                if (k >= n_train + n_id) od_log_quality.push_back(log_quality[k]);
            }
            write_file(mdir / "quality_scatter.csv", csv);
        }

        // summary row
        MeasureSummary s;
        s.measure = m;
        s.auroc = eval::auroc(id_conf, od_conf);
        s.map_id = map_id;
        s.t_q1 = eval::quantile_threshold(train_conf, cfg.evaluation.quantile);
        const auto row =
            eval::evaluate_at_threshold(composed, conf_by_id, queries, cfg.phoc, s.t_q1);
        s.map_at_tq1 = row.map_at_t;
        s.coverage_at_tq1 = row.coverage;
        s.spearman_od = eval::spearman(od_conf, od_log_quality);
        result.summaries.push_back(s);

        summary_csv += std::string(confidence::measure_name(m)) + "," + real_cell(s.auroc) +
                       "," + real_cell(s.map_id) + ",";
        if (s.map_at_tq1) summary_csv += real_cell(*s.map_at_tq1);
        summary_csv += "," + real_cell(s.coverage_at_tq1) + "," + real_cell(s.spearman_od) + "\n";
    }

    write_file(outdir / "summary.csv", summary_csv);
    return result;
}

} // namespace ws::experiment
