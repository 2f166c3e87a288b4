#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ws/nnet.hpp"
#include "ws/phoc.hpp"

namespace ws::estimator {

struct EstimatorConfig {
    std::vector<int> hidden = {512, 512};
    // Indices into the hidden layers; unset means every hidden layer.
    std::optional<std::vector<int>> tap_layers;
    nnet::TrainConfig train = nnet::estimator_train_defaults();

    std::vector<int> resolved_taps() const;
    void validate() const; // throws ConfigError
};

struct FeatureTaps {
    std::vector<std::vector<double>> taps;
    std::vector<double> penultimate; // last hidden layer activation
};

// The attribute estimator: features -> attribute probabilities, topology
// input -> hidden... (ReLU, dropout after each hidden) -> D (sigmoid).
class AttributeEstimator {
public:
    AttributeEstimator(nnet::DenseNetwork net, std::vector<int> tap_layers,
                       std::string phoc_digest);

    const nnet::DenseNetwork& network() const { return net_; }
    int input_dim() const { return net_.input_dim(); }
    int output_dim() const { return net_.output_dim(); }
    const std::vector<int>& tap_layers() const { return tap_layers_; }
    const std::string& phoc_digest() const { return phoc_digest_; }
    // Digest of the serialized model; binds task-dependent metaclassifiers
    // to the exact estimator they were trained against.
    const std::string& digest() const { return digest_; }

    // Deterministic eval-mode estimate, components clamped to
    // [1e-7, 1-1e-7].
    std::vector<double> estimate(std::span<const double> features) const;

    // `passes` forwards with dropout active on every hidden layer (never on
    // the output layer); throws std::invalid_argument when passes < 2.
    std::vector<std::vector<double>> estimate_stochastic(std::span<const double> features,
                                                         int passes, rng::Engine& rng) const;

    FeatureTaps hidden_taps(std::span<const double> features) const;
    // Same extraction from a precomputed eval trace (batch path).
    FeatureTaps taps_from_trace(const nnet::ActivationTrace& trace) const;
    static std::vector<double> estimate_from_trace(const nnet::ActivationTrace& trace);

    std::string to_json() const;
    static AttributeEstimator from_json_text(const std::string& text); // throws DataError

private:
    nnet::DenseNetwork net_;
    std::vector<int> tap_layers_;
    std::string phoc_digest_;
    std::string digest_;
};

// Trains the estimator on (features, PHOC(transcription)) pairs.
// Transcriptions must already be normalized and nonempty.
AttributeEstimator train_estimator(const std::vector<std::vector<double>>& features,
                                   const std::vector<std::string>& transcriptions,
                                   const phoc::PhocConfig& phoc_config,
                                   const EstimatorConfig& config,
                                   nnet::TrainResult* train_result = nullptr);

} // namespace ws::estimator
