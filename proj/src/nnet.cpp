#include "ws/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "nlohmann/json.hpp"

#include "ws/batch.hpp"
#include "ws/errors.hpp"
#include "ws/parallel.hpp"
#include "ws/textio.hpp"

namespace ws::nnet {

namespace {

// Four-accumulator dot product: fixed summation order, breaks the dependency
// chain the naive loop would serialize on.
double dot(const double* a, const double* b, int n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    double s = (s0 + s1) + (s2 + s3);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void affine(const double* W, const double* b, const double* x, double* y, int rows,
            int cols) {
    for (int i = 0; i < rows; ++i) {
        y[i] = dot(W + static_cast<std::size_t>(i) * cols, x, cols) + b[i];
    }
}

void apply_activation(Activation act, double slope, std::vector<double>& v) {
    switch (act) {
    case Activation::identity:
        break;
    case Activation::relu:
        for (double& x : v) x = x > 0.0 ? x : 0.0;
        break;
    case Activation::leaky_relu:
        for (double& x : v) x = x > 0.0 ? x : slope * x;
        break;
    case Activation::sigmoid:
        for (double& x : v) x = 1.0 / (1.0 + std::exp(-x));
        break;
    }
}

// Derivative recovered from the post-activation value.
double activation_derivative(Activation act, double slope, double post) {
    switch (act) {
    case Activation::identity: return 1.0;
    case Activation::relu: return post > 0.0 ? 1.0 : 0.0;
    case Activation::leaky_relu: return post > 0.0 ? 1.0 : slope;
    case Activation::sigmoid: return post * (1.0 - post);
    }
    return 1.0;
}

} // namespace

const char* activation_name(Activation a) {
    switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::sigmoid: return "sigmoid";
    }
    return "identity";
}

Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "leaky_relu") return Activation::leaky_relu;
    if (name == "sigmoid") return Activation::sigmoid;
    throw DataError("unknown activation: " + name);
}

DenseNetwork::DenseNetwork(std::vector<LayerSpec> layers, double dropout_p)
    : layers_(std::move(layers)), dropout_p_(dropout_p) {
    if (layers_.empty()) throw ConfigError("network needs at least one layer");
    std::size_t total = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& spec = layers_[l];
        if (spec.in <= 0 || spec.out <= 0) throw ConfigError("layer dims must be positive");
        if (l > 0 && layers_[l - 1].out != spec.in) {
            throw ConfigError("layer shapes do not compose");
        }
        w_off_.push_back(total);
        total += static_cast<std::size_t>(spec.in) * spec.out;
        b_off_.push_back(total);
        total += static_cast<std::size_t>(spec.out);
    }
    if (!(dropout_p_ >= 0.0 && dropout_p_ < 1.0)) {
        throw ConfigError("dropout_p must be in [0,1)");
    }
    params_.assign(total, 0.0);
}

DenseNetwork DenseNetwork::seeded(std::vector<LayerSpec> layers, double dropout_p,
                                  std::uint64_t seed) {
    DenseNetwork net(std::move(layers), dropout_p);
    auto g = rng::make_engine(seed);
    for (std::size_t l = 0; l < net.layers_.size(); ++l) {
        const auto& spec = net.layers_[l];
        const double sd = std::sqrt(2.0 / spec.in);
        auto w = net.mutable_weights(l);
        for (double& x : w) x = sd * rng::normal(g);
        // biases stay zero
    }
    return net;
}

std::span<const double> DenseNetwork::weights(std::size_t layer) const {
    const auto& s = layers_[layer];
    return {params_.data() + w_off_[layer], static_cast<std::size_t>(s.in) * s.out};
}
std::span<double> DenseNetwork::mutable_weights(std::size_t layer) {
    const auto& s = layers_[layer];
    return {params_.data() + w_off_[layer], static_cast<std::size_t>(s.in) * s.out};
}
std::span<const double> DenseNetwork::bias(std::size_t layer) const {
    return {params_.data() + b_off_[layer], static_cast<std::size_t>(layers_[layer].out)};
}
std::span<double> DenseNetwork::mutable_bias(std::size_t layer) {
    return {params_.data() + b_off_[layer], static_cast<std::size_t>(layers_[layer].out)};
}

DropoutMasks draw_dropout_masks(const DenseNetwork& net, rng::Engine& rng) {
    DropoutMasks masks(net.layer_count());
    const double p = net.dropout_p();
    const double keep_scale = 1.0 / (1.0 - p);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        if (!net.layers()[l].dropout_after) continue;
        auto& m = masks[l];
        m.resize(static_cast<std::size_t>(net.layers()[l].out));
        for (double& x : m) x = rng::uniform01(rng) < p ? 0.0 : keep_scale;
    }
    return masks;
}

namespace {

ActivationTrace run_forward(const DenseNetwork& net, std::span<const double> input,
                            const DropoutMasks* masks) {
    if (static_cast<int>(input.size()) != net.input_dim()) {
        throw std::invalid_argument("forward: input length does not match first layer");
    }
    ActivationTrace trace;
    trace.act.resize(net.layer_count());
    if (masks) trace.masks = *masks;

    std::vector<double> cur(input.begin(), input.end());
    std::vector<double> next;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const auto& spec = net.layers()[l];
        next.resize(static_cast<std::size_t>(spec.out));
        affine(net.weights(l).data(), net.bias(l).data(), cur.data(), next.data(),
               spec.out, spec.in);
        apply_activation(spec.act, spec.leaky_slope, next);
        trace.act[l] = next;
        if (masks && !(*masks)[l].empty()) {
            const auto& m = (*masks)[l];
            for (std::size_t i = 0; i < next.size(); ++i) next[i] *= m[i];
        }
        cur.swap(next);
    }
    return trace;
}

} // namespace

ActivationTrace forward_eval(const DenseNetwork& net, std::span<const double> input) {
    return run_forward(net, input, nullptr);
}

ActivationTrace forward_train(const DenseNetwork& net, std::span<const double> input,
                              rng::Engine& rng) {
    const DropoutMasks masks = draw_dropout_masks(net, rng);
    return run_forward(net, input, &masks);
}

ActivationTrace forward_with_masks(const DenseNetwork& net, std::span<const double> input,
                                   const DropoutMasks& masks) {
    return run_forward(net, input, &masks);
}

double bce_loss(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size()) {
        throw std::invalid_argument("bce_loss: length mismatch");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double p = std::clamp(predictions[i], kProbClamp, 1.0 - kProbClamp);
        const double t = targets[i];
        sum += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
    }
    return sum / static_cast<double>(predictions.size());
}

BackwardDeltas backward_deltas(const DenseNetwork& net, std::span<const double> input,
                               const ActivationTrace& trace, std::span<const double> target) {
    const std::size_t L = net.layer_count();
    if (trace.act.size() != L) throw std::invalid_argument("backward: trace mismatch");

    const bool has_masks = !trace.masks.empty();
    auto dropped = [&](std::size_t l) {
        std::vector<double> v = trace.act[l];
        if (has_masks && !trace.masks[l].empty()) {
            const auto& m = trace.masks[l];
            for (std::size_t i = 0; i < v.size(); ++i) v[i] *= m[i];
        }
        return v;
    };

    BackwardDeltas out;
    out.delta.resize(L);
    out.input.resize(L);
    out.input[0].assign(input.begin(), input.end());
    for (std::size_t l = 1; l < L; ++l) out.input[l] = dropped(l - 1);

    const std::vector<double> final_out = dropped(L - 1);
    if (final_out.size() != target.size()) throw std::invalid_argument("backward: target size");
    out.loss = bce_loss(final_out, target);
    const double inv_d = 1.0 / static_cast<double>(final_out.size());

    // d(loss)/d(dropped output); zero where the clamp is active.
    std::vector<double> dl_dy(final_out.size());
    for (std::size_t i = 0; i < final_out.size(); ++i) {
        const double p = final_out[i];
        if (p < kProbClamp || p > 1.0 - kProbClamp) {
            dl_dy[i] = 0.0;
        } else {
            dl_dy[i] = (-target[i] / p + (1.0 - target[i]) / (1.0 - p)) * inv_d;
        }
    }

    for (std::size_t l = L; l-- > 0;) {
        const auto& spec = net.layers()[l];
        const auto& a = trace.act[l];
        auto& delta = out.delta[l];
        delta.resize(static_cast<std::size_t>(spec.out));
        // through dropout, then through the activation
        for (std::size_t i = 0; i < delta.size(); ++i) {
            double g = dl_dy[i];
            if (has_masks && !trace.masks[l].empty()) g *= trace.masks[l][i];
            delta[i] = g * activation_derivative(spec.act, spec.leaky_slope, a[i]);
        }
        if (l > 0) {
            std::vector<double> dprev(static_cast<std::size_t>(spec.in), 0.0);
            const double* W = net.weights(l).data();
            for (int i = 0; i < spec.out; ++i) {
                const double d = delta[static_cast<std::size_t>(i)];
                const double* row = W + static_cast<std::size_t>(i) * spec.in;
                for (int j = 0; j < spec.in; ++j) {
                    dprev[static_cast<std::size_t>(j)] += d * row[j];
                }
            }
            dl_dy.swap(dprev);
        }
    }
    return out;
}

double backward_bce(const DenseNetwork& net, std::span<const double> input,
                    const ActivationTrace& trace, std::span<const double> target,
                    std::span<double> grad) {
    if (grad.size() != net.param_count()) throw std::invalid_argument("backward: grad size");
    const BackwardDeltas d = backward_deltas(net, input, trace, target);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const auto& spec = net.layers()[l];
        double* dW = grad.data() + net.weight_offset(l);
        double* db = grad.data() + net.bias_offset(l);
        const double* x = d.input[l].data();
        for (int i = 0; i < spec.out; ++i) {
            const double di = d.delta[l][static_cast<std::size_t>(i)];
            double* row = dW + static_cast<std::size_t>(i) * spec.in;
            for (int j = 0; j < spec.in; ++j) row[j] += di * x[j];
            db[i] += di;
        }
    }
    return d.loss;
}

void TrainConfig::validate() const {
    if (iterations < 0) throw ConfigError("train: iterations must be >= 0");
    if (batch_size <= 0) throw ConfigError("train: batch_size must be positive");
    if (lr < 0.0) throw ConfigError("train: lr must be >= 0");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
        throw ConfigError("train: adam betas must be in (0,1)");
    }
    if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("train: dropout_p in [0,1)");
    if (input_jitter < 0.0) throw ConfigError("train: input_jitter must be >= 0");
    int prev = -1;
    for (const auto& [it, div] : lr_schedule) {
        if (it <= prev) throw ConfigError("train: lr_schedule iterations must increase");
        if (it > iterations) throw ConfigError("train: lr_schedule iteration beyond iterations");
        if (div <= 0.0) throw ConfigError("train: lr_schedule divisor must be positive");
        prev = it;
    }
}

double TrainConfig::lr_at(int iteration) const {
    double v = lr;
    for (const auto& [it, div] : lr_schedule) {
        if (iteration >= it) v /= div;
    }
    return v;
}

TrainConfig estimator_train_defaults() {
    TrainConfig c;
    c.iterations = 20000;
    c.batch_size = 10;
    c.lr = 1e-4;
    c.lr_schedule = {{14000, 10.0}}; // divide by 10 at 70% of iterations
    c.weight_decay = 5e-5;
    c.dropout_p = 0.5;
    return c;
}

TrainConfig meta_train_defaults() {
    TrainConfig c;
    c.iterations = 25000;
    c.batch_size = 10;
    c.lr = 1e-2;
    c.lr_schedule = {{10000, 10.0}, {15000, 10.0}, {20000, 10.0}};
    c.weight_decay = 5e-4;
    c.dropout_p = 0.5;
    return c;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const TrainConfig& config, int iteration) {
    const std::size_t n = params.size();
    if (grads.size() != n || state.m.size() != n || state.v.size() != n) {
        throw std::invalid_argument("adam_step: size mismatch");
    }
    const double alpha = config.lr_at(iteration);
    const double b1 = config.adam_beta1;
    const double b2 = config.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, iteration + 1);
    const double bc2 = 1.0 - std::pow(b2, iteration + 1);
    const double lambda = config.weight_decay;
    constexpr double eps = 1e-8;

    double* w = params.data();
    const double* g_in = grads.data();
    double* m = state.m.data();
    double* v = state.v.data();
    parallel_for(static_cast<std::int64_t>(n), [&](std::int64_t k) {
        const double g = g_in[k] + lambda * w[k];
        m[k] = b1 * m[k] + (1.0 - b1) * g;
        v[k] = b2 * v[k] + (1.0 - b2) * g * g;
        const double mhat = m[k] / bc1;
        const double vhat = v[k] / bc2;
        w[k] -= alpha * mhat / (std::sqrt(vhat) + eps);
    });
}

TrainResult train(DenseNetwork& net, const std::vector<std::vector<double>>& inputs,
                  const std::vector<std::vector<double>>& targets, const TrainConfig& config) {
    config.validate();
    if (inputs.empty()) throw DataError("train: empty dataset");
    if (inputs.size() != targets.size()) throw DataError("train: inputs/targets size mismatch");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (static_cast<int>(inputs[i].size()) != net.input_dim() ||
            static_cast<int>(targets[i].size()) != net.output_dim()) {
            throw DataError("train: sample shape mismatch at index " + std::to_string(i));
        }
    }

    net.set_dropout_p(config.dropout_p);
    auto g = rng::make_engine(config.seed);

    const std::size_t n = inputs.size();
    const int batch = config.batch_size;
    const std::size_t pc = net.param_count();

    AdamState state;
    state.reset(pc);
    std::vector<double> losses(static_cast<std::size_t>(batch), 0.0);
    std::vector<double> grad_mean(pc, 0.0);
    std::vector<const std::vector<double>*> bx(static_cast<std::size_t>(batch));
    std::vector<const std::vector<double>*> bt(static_cast<std::size_t>(batch));
    std::vector<DropoutMasks> masks(static_cast<std::size_t>(batch));
    std::vector<std::vector<double>> jittered(static_cast<std::size_t>(batch));

    TrainResult result;
    double bucket_sum = 0.0;
    int bucket_n = 0;

    for (int it = 0; it < config.iterations; ++it) {
        for (int s = 0; s < batch; ++s) {
            const std::size_t idx = rng::uniform_index(g, n);
            bx[static_cast<std::size_t>(s)] = &inputs[idx];
            bt[static_cast<std::size_t>(s)] = &targets[idx];
        }
        for (int s = 0; s < batch; ++s) {
            masks[static_cast<std::size_t>(s)] = draw_dropout_masks(net, g);
        }
        if (config.input_jitter > 0.0) {
            for (int s = 0; s < batch; ++s) {
                auto& jx = jittered[static_cast<std::size_t>(s)];
                jx = *bx[static_cast<std::size_t>(s)];
                for (double& v : jx) v += config.input_jitter * rng::normal(g);
                bx[static_cast<std::size_t>(s)] = &jx;
            }
        }

        batch::batch_gradient(net, bx, bt, masks, grad_mean, losses);
        adam_step(net.mutable_params(), grad_mean, state, config, it);

        double loss = 0.0;
        for (int s = 0; s < batch; ++s) loss += losses[static_cast<std::size_t>(s)];
        bucket_sum += loss / batch;
        if (++bucket_n == 100 || it + 1 == config.iterations) {
            result.loss_trace.push_back(bucket_sum / bucket_n);
            bucket_sum = 0.0;
            bucket_n = 0;
        }
    }
    return result;
}

double evaluate_loss(const DenseNetwork& net, const std::vector<std::vector<double>>& inputs,
                     const std::vector<std::vector<double>>& targets) {
    if (inputs.empty()) throw DataError("evaluate_loss: empty dataset");
    std::vector<std::vector<double>> outputs;
    batch::eval_outputs(net, inputs, outputs);
    double sum = 0.0;
    for (std::size_t i = 0; i < outputs.size(); ++i) sum += bce_loss(outputs[i], targets[i]);
    return sum / static_cast<double>(outputs.size());
}

double mean_attribute_variance(const std::vector<std::vector<double>>& passes) {
    if (passes.size() < 2) {
        throw std::invalid_argument("mean_attribute_variance: need at least two passes");
    }
    const std::size_t d = passes.front().size();
    for (const auto& p : passes) {
        if (p.size() != d) throw std::invalid_argument("mean_attribute_variance: ragged passes");
    }
    const double n = static_cast<double>(passes.size());
    double var_sum = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double ref = passes[0][i];
        double s = 0.0, s2 = 0.0;
        for (const auto& p : passes) {
            const double dev = p[i] - ref;
            s += dev;
            s2 += dev * dev;
        }
        const double mean_dev = s / n;
        var_sum += std::max(0.0, s2 / n - mean_dev * mean_dev);
    }
    return var_sum / static_cast<double>(d);
}

double gradient_check(DenseNetwork& net, std::span<const double> input,
                      std::span<const double> target, double epsilon) {
    const std::size_t pc = net.param_count();
    std::vector<double> analytic(pc, 0.0);
    {
        const auto trace = forward_eval(net, input);
        backward_bce(net, input, trace, target, analytic);
    }
    auto params = net.mutable_params();
    double max_rel = 0.0;
    for (std::size_t k = 0; k < pc; ++k) {
        const double orig = params[k];
        params[k] = orig + epsilon;
        const double lp = bce_loss(forward_eval(net, input).output(), target);
        params[k] = orig - epsilon;
        const double lm = bce_loss(forward_eval(net, input).output(), target);
        params[k] = orig;
        const double numeric = (lp - lm) / (2.0 * epsilon);
        const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-8});
        max_rel = std::max(max_rel, std::abs(analytic[k] - numeric) / denom);
    }
    return max_rel;
}

std::string to_json(const DenseNetwork& net) {
    std::string out = "{\"format\":\"dense-net/1\",\"dropout_p\":";
    io::append_real(out, net.dropout_p());
    out += ",\"layers\":[";
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const auto& spec = net.layers()[l];
        if (l) out += ',';
        out += "{\"in\":" + std::to_string(spec.in);
        out += ",\"out\":" + std::to_string(spec.out);
        out += ",\"activation\":\"";
        out += activation_name(spec.act);
        out += "\",\"leaky_slope\":";
        io::append_real(out, spec.leaky_slope);
        out += ",\"dropout_after\":";
        out += spec.dropout_after ? "true" : "false";
        out += ",\"weights\":[";
        const auto w = net.weights(l);
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (i) out += ',';
            io::append_real(out, w[i]);
        }
        out += "],\"bias\":[";
        const auto b = net.bias(l);
        for (std::size_t i = 0; i < b.size(); ++i) {
            if (i) out += ',';
            io::append_real(out, b[i]);
        }
        out += "]}";
    }
    out += "]}";
    return out;
}

DenseNetwork network_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("model: invalid JSON: ") + e.what());
    }
    if (!j.is_object() || j.value("format", "") != "dense-net/1") {
        throw DataError("model: unsupported format");
    }
    if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].empty()) {
        throw DataError("model: missing layers");
    }
    std::vector<LayerSpec> specs;
    std::vector<std::vector<double>> weights, biases;
    for (const auto& lj : j["layers"]) {
        LayerSpec s;
        s.in = lj.at("in").get<int>();
        s.out = lj.at("out").get<int>();
        s.act = activation_from_name(lj.at("activation").get<std::string>());
        s.leaky_slope = lj.at("leaky_slope").get<double>();
        s.dropout_after = lj.at("dropout_after").get<bool>();
        auto w = lj.at("weights").get<std::vector<double>>();
        auto b = lj.at("bias").get<std::vector<double>>();
        if (w.size() != static_cast<std::size_t>(s.in) * s.out ||
            b.size() != static_cast<std::size_t>(s.out)) {
            throw DataError("model: parameter array size mismatch");
        }
        specs.push_back(s);
        weights.push_back(std::move(w));
        biases.push_back(std::move(b));
    }
    DenseNetwork net(std::move(specs), j.at("dropout_p").get<double>());
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        std::copy(weights[l].begin(), weights[l].end(), net.mutable_weights(l).begin());
        std::copy(biases[l].begin(), biases[l].end(), net.mutable_bias(l).begin());
    }
    for (double p : net.params()) {
        if (!std::isfinite(p)) throw DataError("model: non-finite parameter");
    }
    return net;
}

} // namespace ws::nnet
