#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ws/rng.hpp"

namespace ws::nnet {

enum class Activation { identity, relu, leaky_relu, sigmoid };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name); // throws DataError

struct LayerSpec {
    int in = 0;
    int out = 0;
    Activation act = Activation::identity;
    double leaky_slope = 0.01;
    bool dropout_after = false;
};

// Dense feed-forward network with all parameters in one flat array
// (per layer: weights row-major, then bias). The flat layout is shared with
// the Adam state and the gradient buffers.
class DenseNetwork {
public:
    DenseNetwork() = default;
    DenseNetwork(std::vector<LayerSpec> layers, double dropout_p);

    // He-style initialization: weights from N(0, 2/fan_in), biases zero.
    static DenseNetwork seeded(std::vector<LayerSpec> layers, double dropout_p,
                               std::uint64_t seed);

    int input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
    int output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
    std::size_t layer_count() const { return layers_.size(); }
    const std::vector<LayerSpec>& layers() const { return layers_; }
    double dropout_p() const { return dropout_p_; }
    void set_dropout_p(double p) { dropout_p_ = p; }

    std::size_t param_count() const { return params_.size(); }
    std::span<const double> params() const { return params_; }
    std::span<double> mutable_params() { return params_; }

    std::span<const double> weights(std::size_t layer) const;
    std::span<double> mutable_weights(std::size_t layer);
    std::span<const double> bias(std::size_t layer) const;
    std::span<double> mutable_bias(std::size_t layer);
    std::size_t weight_offset(std::size_t layer) const { return w_off_[layer]; }
    std::size_t bias_offset(std::size_t layer) const { return b_off_[layer]; }

private:
    std::vector<LayerSpec> layers_;
    std::vector<double> params_;
    std::vector<std::size_t> w_off_;
    std::vector<std::size_t> b_off_;
    double dropout_p_ = 0.5;
};

// One inverted-dropout mask per flagged layer (scale 0 or 1/(1-p));
// empty vectors for layers without dropout.
using DropoutMasks = std::vector<std::vector<double>>;

DropoutMasks draw_dropout_masks(const DenseNetwork& net, rng::Engine& rng);

// Post-activation output of every layer, before dropout. The masks that were
// applied (train mode only) ride along so backward can reproduce the exact
// forward computation.
struct ActivationTrace {
    std::vector<std::vector<double>> act;
    DropoutMasks masks;
    const std::vector<double>& output() const { return act.back(); }
};

ActivationTrace forward_eval(const DenseNetwork& net, std::span<const double> input);
ActivationTrace forward_train(const DenseNetwork& net, std::span<const double> input,
                              rng::Engine& rng);
ActivationTrace forward_with_masks(const DenseNetwork& net, std::span<const double> input,
                                   const DropoutMasks& masks);

// Mean binary cross-entropy with predictions clamped to [1e-7, 1-1e-7]
// before the logarithm.
double bce_loss(std::span<const double> predictions, std::span<const double> targets);

constexpr double kProbClamp = 1e-7;

// Accumulates d(bce_loss)/d(params) into grad (size param_count) for one
// sample; returns the sample's loss. grad is += so batch callers can reuse
// buffers; zero it first.
double backward_bce(const DenseNetwork& net, std::span<const double> input,
                    const ActivationTrace& trace, std::span<const double> target,
                    std::span<double> grad);

// The per-sample half of the batched gradient: pre-activation deltas per
// layer (loss gradient chained through dropout and activations) and the
// exact input each layer consumed. dW_l = delta_l * input_l^T, db_l = delta_l.
struct BackwardDeltas {
    std::vector<std::vector<double>> delta;  // per layer, length out
    std::vector<std::vector<double>> input;  // per layer, length in (post-dropout)
    double loss = 0.0;
};

BackwardDeltas backward_deltas(const DenseNetwork& net, std::span<const double> input,
                               const ActivationTrace& trace, std::span<const double> target);

struct TrainConfig {
    int iterations = 0;
    int batch_size = 10;
    double lr = 1e-4;
    // (iteration, divisor): once `iteration` optimizer steps have been taken,
    // the learning rate is divided by `divisor` (divisors compound).
    std::vector<std::pair<int, double>> lr_schedule;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double weight_decay = 0.0;
    double dropout_p = 0.5;
    // Gaussian jitter added to every training input (the feature-space stand-in
    // for image augmentation); 0 disables it and draws nothing from the
    // generator.
    double input_jitter = 0.0;
    std::uint64_t seed = 0;

    void validate() const; // throws ConfigError
    double lr_at(int iteration) const;
};

TrainConfig estimator_train_defaults();
TrainConfig meta_train_defaults();

struct AdamState {
    std::vector<double> m, v;
    void reset(std::size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
    }
};

// One Adam step with coupled L2 weight decay (lambda*w added to the gradient
// before the moment update). `iteration` is the 0-based step index; bias
// correction uses iteration+1.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const TrainConfig& config, int iteration);

struct TrainResult {
    // Mean loss per 100 iterations (plus a final partial bucket if any).
    std::vector<double> loss_trace;
};

// Uniform minibatch SGD/Adam over (inputs, targets). Deterministic given
// (seed, data, config).
TrainResult train(DenseNetwork& net, const std::vector<std::vector<double>>& inputs,
                  const std::vector<std::vector<double>>& targets, const TrainConfig& config);

// Mean bce_loss over a sample set in eval mode.
double evaluate_loss(const DenseNetwork& net, const std::vector<std::vector<double>>& inputs,
                     const std::vector<std::vector<double>>& targets);

// Mean over components of the population variance (divisor N) across passes.
// Shifted two-pass moments: exactly zero when all passes agree.
double mean_attribute_variance(const std::vector<std::vector<double>>& passes);

// Compares the analytic gradient of bce_loss against central finite
// differences, in eval mode. Returns the maximum relative error
// |ga-gn| / max(|ga|,|gn|,1e-8) over all parameters.
double gradient_check(DenseNetwork& net, std::span<const double> input,
                      std::span<const double> target, double epsilon);

// Versioned JSON model format ("dense-net/1"); reals use the fixed
// 17-significant-digit encoding and round-trip bit-exactly.
std::string to_json(const DenseNetwork& net);
DenseNetwork network_from_json_text(const std::string& text); // throws DataError

} // namespace ws::nnet
