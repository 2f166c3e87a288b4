#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ws/confidence.hpp"
#include "ws/datagen.hpp"
#include "ws/estimator.hpp"
#include "ws/phoc.hpp"

namespace ws::config {

struct EvalSettings {
    int bins = 100;
    double quantile = 0.01;
    int dropout_passes = 100;
    int portion_from = 10;
    int portion_to = 100;
    int portion_step = 1;

    void validate() const; // throws ConfigError
};

// The fully resolved run configuration. One master seed fans out to
// per-stage sub-seeds (see stage_seed), so rerunning one stage never
// perturbs another.
struct RunConfig {
    std::uint64_t seed = 42;
    phoc::PhocConfig phoc;
    datagen::CorpusConfig datagen;
    estimator::EstimatorConfig est;
    confidence::TiConfig ti;
    confidence::TdConfig td;
    EvalSettings evaluation;

    void validate() const;
};

RunConfig default_run_config();

// Strict parser: unknown keys anywhere are rejected. Absent keys keep their
// defaults; `meta.hidden` defaults to the estimator's hidden widths.
RunConfig run_config_from_json_text(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

// Stable JSON rendering of the resolved configuration.
std::string resolved_json(const RunConfig& cfg);

enum class Stage : std::uint64_t {
    gen = 1,
    estimator_train = 2,
    ti_train = 3,
    td_train = 4,
    evaluate = 5,
};

std::uint64_t stage_seed(const RunConfig& cfg, Stage stage);

} // namespace ws::config
