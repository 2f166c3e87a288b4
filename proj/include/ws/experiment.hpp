#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "ws/config.hpp"
#include "ws/confidence.hpp"
#include "ws/datagen.hpp"
#include "ws/estimator.hpp"
#include "ws/evaluation.hpp"

namespace ws::experiment {

// Corpus indices with normalized transcriptions; train/id/od samples whose
// transcription normalizes to empty are excluded (counted in `dropped`).
struct PreparedCorpus {
    std::vector<std::size_t> train, id_test, od_test, meta_od;
    std::vector<std::string> normalized; // per corpus sample
    int dropped = 0;
};

PreparedCorpus prepare(const datagen::Corpus& corpus, const phoc::PhocConfig& phoc_config);

estimator::AttributeEstimator train_stage(const datagen::Corpus& corpus,
                                          const config::RunConfig& cfg,
                                          nnet::TrainResult* result = nullptr);

confidence::TiMetaClassifier ti_stage(const datagen::Corpus& corpus,
                                      const config::RunConfig& cfg,
                                      nnet::TrainResult* result = nullptr);

// Checks estimator/corpus/config compatibility (CompatError on mismatch).
confidence::TdMetaClassifier td_stage(const datagen::Corpus& corpus,
                                      const estimator::AttributeEstimator& est,
                                      const config::RunConfig& cfg,
                                      nnet::TrainResult* result = nullptr);

struct MeasureSummary {
    confidence::Measure measure = confidence::Measure::activation;
    double auroc = 0.0;
    double map_id = 0.0;
    std::optional<double> map_at_tq1;
    double coverage_at_tq1 = 0.0;
    double spearman_od = 0.0; // confidence vs log-quality over the OD split
    double t_q1 = 0.0;        // the threshold itself (not part of summary.csv)
};

struct EvalResult {
    std::vector<MeasureSummary> summaries;
    int dropped_samples = 0;
};

// Runs every requested protocol and writes, per measure, a directory
// <outdir>/<measure>/ with histogram.csv, threshold_curve.csv, wer_curve.csv
// and quality_scatter.csv, plus a shared <outdir>/summary.csv. Measures are
// processed in canonical order regardless of the requested order.
EvalResult eval_stage(const datagen::Corpus& corpus, const estimator::AttributeEstimator& est,
                      const confidence::TiMetaClassifier* ti,
                      const confidence::TdMetaClassifier* td,
                      const std::vector<confidence::Measure>& measures,
                      const config::RunConfig& cfg, const std::filesystem::path& outdir);

} // namespace ws::experiment
