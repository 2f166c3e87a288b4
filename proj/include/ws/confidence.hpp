#pragma once

#include <span>
#include <string>
#include <vector>

#include "ws/estimator.hpp"
#include "ws/nnet.hpp"

namespace ws::confidence {

enum class Measure { activation, test_dropout, ti_meta, td_meta };

const char* measure_name(Measure m);
Measure measure_from_name(const std::string& name); // throws ConfigError
// CLI aliases c1..c4.
Measure measure_from_cli(const std::string& token); // throws ConfigError

// Oriented so that larger always means more confident: the test-dropout
// variance flips sign, everything else passes through.
struct ConfidenceScore {
    Measure measure = Measure::activation;
    double raw = 0.0;
    double oriented = 0.0;
};

ConfidenceScore oriented_score(Measure m, double raw);

// c1: mean activation of the attributes with estimate > 0.5; zero when no
// attribute is active.
ConfidenceScore conf_activation(std::span<const double> estimate);

// c2: mean over attributes of the population variance across dropout-on
// passes; oriented negatively.
ConfidenceScore conf_test_dropout(const estimator::AttributeEstimator& est,
                                  std::span<const double> features, int passes,
                                  rng::Engine& rng);

struct TiConfig {
    std::vector<int> hidden = {512, 512};
    // Mirror the estimator's dropout placement (after each hidden layer)
    // during training; scoring always runs in eval mode.
    bool hidden_dropout = true;
    nnet::TrainConfig train = nnet::meta_train_defaults();

    void validate() const;
};

// Task-independent metaclassifier: the estimator's hidden topology with the
// output replaced by a single sigmoid neuron, trained to separate the
// training distribution from the surrogate set. Inputs pass through a
// per-dimension standardization fitted on the training mix (the feature-
// space analogue of image input normalization); the constants ride along
// with the model.
class TiMetaClassifier {
public:
    TiMetaClassifier(nnet::DenseNetwork net, std::vector<double> input_mean,
                     std::vector<double> input_scale);

    const nnet::DenseNetwork& network() const { return net_; }
    int input_dim() const { return net_.input_dim(); }

    // Pre-sigmoid input of the final neuron.
    double logit(std::span<const double> features) const;
    double probability(std::span<const double> features) const;

    std::string to_json() const;
    static TiMetaClassifier from_json_text(const std::string& text);

private:
    nnet::DenseNetwork net_;
    std::vector<double> input_mean_, input_scale_;

    std::vector<double> standardized(std::span<const double> features) const;
};

TiMetaClassifier train_ti_meta(const std::vector<std::vector<double>>& train_features,
                               const std::vector<std::vector<double>>& surrogate_features,
                               const TiConfig& config,
                               nnet::TrainResult* train_result = nullptr);

ConfidenceScore conf_ti(const TiMetaClassifier& meta, std::span<const double> features);

// Mean of each of `levels` contiguous near-equal segments (remainder to the
// leftmost segments), emitted level by level. Throws std::invalid_argument
// when the vector is shorter than the largest level.
std::vector<double> pyramid_pool_1d(std::span<const double> v,
                                    const std::vector<int>& levels = {1, 2, 4, 8});

struct TdConfig {
    int projection_width = 16;
    double leaky_slope = 0.01;
    std::vector<int> pool_levels = {1, 2, 4, 8};
    nnet::TrainConfig train = nnet::meta_train_defaults();

    void validate() const;
};

// Task-dependent metaclassifier: each estimator tap goes through a learned
// linear projection + leaky ReLU + 1-D pyramid pooling; pooled taps and the
// estimator's penultimate activation feed a single sigmoid neuron. Only the
// projections and the head are trained; the estimator stays frozen.
class TdMetaClassifier {
public:
    struct TapProjection {
        int in = 0;
        std::vector<double> weights; // projection_width x in, row-major
        std::vector<double> bias;    // projection_width
    };

    TdMetaClassifier() = default;

    double logit(const estimator::FeatureTaps& taps) const;
    double probability(const estimator::FeatureTaps& taps) const;

    const std::string& estimator_digest() const { return estimator_digest_; }
    const std::vector<TapProjection>& projections() const { return taps_; }
    int head_input_dim() const;

    std::string to_json() const;
    static TdMetaClassifier from_json_text(const std::string& text);

    friend TdMetaClassifier train_td_meta(const estimator::AttributeEstimator&,
                                          const std::vector<std::vector<double>>&,
                                          const std::vector<std::vector<double>>&,
                                          const TdConfig&, nnet::TrainResult*);

private:
    std::vector<TapProjection> taps_;
    std::vector<double> head_weights_;
    double head_bias_ = 0.0;
    int projection_width_ = 16;
    double leaky_slope_ = 0.01;
    std::vector<int> pool_levels_ = {1, 2, 4, 8};
    int penultimate_dim_ = 0;
    std::string estimator_digest_;

    std::vector<double> head_input(const estimator::FeatureTaps& taps) const;
};

TdMetaClassifier train_td_meta(const estimator::AttributeEstimator& frozen_estimator,
                               const std::vector<std::vector<double>>& train_features,
                               const std::vector<std::vector<double>>& surrogate_features,
                               const TdConfig& config,
                               nnet::TrainResult* train_result = nullptr);

ConfidenceScore conf_td(const estimator::AttributeEstimator& est, const TdMetaClassifier& meta,
                        std::span<const double> features);

} // namespace ws::confidence
