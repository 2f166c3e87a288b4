#include "ws/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nlohmann/json.hpp"

#include "ws/batch.hpp"
#include "ws/errors.hpp"
#include "ws/textio.hpp"

namespace ws::confidence {

const char* measure_name(Measure m) {
    switch (m) {
    case Measure::activation: return "activation";
    case Measure::test_dropout: return "test_dropout";
    case Measure::ti_meta: return "ti_meta";
    case Measure::td_meta: return "td_meta";
    }
    return "activation";
}

Measure measure_from_name(const std::string& name) {
    if (name == "activation") return Measure::activation;
    if (name == "test_dropout") return Measure::test_dropout;
    if (name == "ti_meta") return Measure::ti_meta;
    if (name == "td_meta") return Measure::td_meta;
    throw ConfigError("unknown confidence measure: " + name);
}

Measure measure_from_cli(const std::string& token) {
    if (token == "c1") return Measure::activation;
    if (token == "c2") return Measure::test_dropout;
    if (token == "c3") return Measure::ti_meta;
    if (token == "c4") return Measure::td_meta;
    return measure_from_name(token);
}

ConfidenceScore oriented_score(Measure m, double raw) {
    ConfidenceScore s;
    s.measure = m;
    s.raw = raw;
    s.oriented = (m == Measure::test_dropout) ? -raw : raw;
    return s;
}

ConfidenceScore conf_activation(std::span<const double> estimate) {
    double sum = 0.0;
    int active = 0;
    for (double v : estimate) {
        if (v > 0.5) {
            sum += v;
            ++active;
        }
    }
    const double raw = active ? sum / active : 0.0;
    return oriented_score(Measure::activation, raw);
}

ConfidenceScore conf_test_dropout(const estimator::AttributeEstimator& est,
                                  std::span<const double> features, int passes,
                                  rng::Engine& rng) {
    if (passes < 2) throw std::invalid_argument("conf_test_dropout: passes must be >= 2");
    const auto outs = est.estimate_stochastic(features, passes, rng);
    return oriented_score(Measure::test_dropout, nnet::mean_attribute_variance(outs));
}

namespace {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

// Pre-sigmoid input of a width-1 sigmoid output layer, from an eval-mode
// trace of the layers before it.
double final_neuron_logit(const nnet::DenseNetwork& net, std::span<const double> input) {
    const std::size_t last = net.layer_count() - 1;
    if (last == 0) {
        return dot(net.weights(0).data(), input.data(), input.size()) + net.bias(0)[0];
    }
    const auto trace = nnet::forward_eval(net, input);
    const auto& h = trace.act[last - 1];
    return dot(net.weights(last).data(), h.data(), h.size()) + net.bias(last)[0];
}

} // namespace

void TiConfig::validate() const {
    for (int w : hidden) {
        if (w <= 0) throw ConfigError("ti meta: hidden widths must be positive");
    }
    train.validate();
}

TiMetaClassifier::TiMetaClassifier(nnet::DenseNetwork net, std::vector<double> input_mean,
                                   std::vector<double> input_scale)
    : net_(std::move(net)), input_mean_(std::move(input_mean)),
      input_scale_(std::move(input_scale)) {
    if (net_.output_dim() != 1) throw ConfigError("ti meta: output layer width must be 1");
    if (net_.layers().back().act != nnet::Activation::sigmoid) {
        throw ConfigError("ti meta: output activation must be sigmoid");
    }
    if (input_mean_.size() != static_cast<std::size_t>(net_.input_dim()) ||
        input_scale_.size() != input_mean_.size()) {
        throw ConfigError("ti meta: normalization size mismatch");
    }
}

std::vector<double> TiMetaClassifier::standardized(std::span<const double> features) const {
    if (features.size() != input_mean_.size()) {
        throw std::invalid_argument("ti meta: feature length mismatch");
    }
    std::vector<double> z(features.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = (features[i] - input_mean_[i]) / input_scale_[i];
    }
    return z;
}

double TiMetaClassifier::logit(std::span<const double> features) const {
    return final_neuron_logit(net_, standardized(features));
}

double TiMetaClassifier::probability(std::span<const double> features) const {
    return 1.0 / (1.0 + std::exp(-logit(features)));
}

std::string TiMetaClassifier::to_json() const {
    std::string out = "{\"format\":\"meta-ti/1\",\"measure\":\"ti_meta\",\"input_mean\":[";
    for (std::size_t i = 0; i < input_mean_.size(); ++i) {
        if (i) out += ',';
        io::append_real(out, input_mean_[i]);
    }
    out += "],\"input_scale\":[";
    for (std::size_t i = 0; i < input_scale_.size(); ++i) {
        if (i) out += ',';
        io::append_real(out, input_scale_[i]);
    }
    out += "],\"network\":";
    out += nnet::to_json(net_);
    out += "}";
    return out;
}

TiMetaClassifier TiMetaClassifier::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("ti meta: invalid JSON: ") + e.what());
    }
    if (!j.is_object() || j.value("format", "") != "meta-ti/1") {
        throw DataError("ti meta: unsupported format");
    }
    if (j.value("measure", "") != "ti_meta") throw DataError("ti meta: wrong measure header");
    try {
        return TiMetaClassifier(nnet::network_from_json_text(j.at("network").dump()),
                                j.at("input_mean").get<std::vector<double>>(),
                                j.at("input_scale").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("ti meta: ") + e.what());
    } catch (const ConfigError& e) {
        throw DataError(std::string("ti meta: ") + e.what());
    }
}

TiMetaClassifier train_ti_meta(const std::vector<std::vector<double>>& train_features,
                               const std::vector<std::vector<double>>& surrogate_features,
                               const TiConfig& config, nnet::TrainResult* train_result) {
    config.validate();
    if (train_features.empty() || surrogate_features.empty()) {
        throw DataError("train_ti_meta: both feature sets must be nonempty");
    }
    const int input_dim = static_cast<int>(train_features.front().size());

    // per-dimension standardization fitted on the training mix
    std::vector<double> mean(static_cast<std::size_t>(input_dim), 0.0);
    std::vector<double> scale(static_cast<std::size_t>(input_dim), 0.0);
    const double n_all =
        static_cast<double>(train_features.size() + surrogate_features.size());
    for (const auto* set : {&train_features, &surrogate_features}) {
        for (const auto& f : *set) {
            for (int i = 0; i < input_dim; ++i) mean[static_cast<std::size_t>(i)] += f[static_cast<std::size_t>(i)];
        }
    }
    for (double& m : mean) m /= n_all;
    for (const auto* set : {&train_features, &surrogate_features}) {
        for (const auto& f : *set) {
            for (int i = 0; i < input_dim; ++i) {
                const double d = f[static_cast<std::size_t>(i)] - mean[static_cast<std::size_t>(i)];
                scale[static_cast<std::size_t>(i)] += d * d;
            }
        }
    }
    for (double& s : scale) s = std::max(std::sqrt(s / n_all), 1e-8);

    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> targets;
    inputs.reserve(train_features.size() + surrogate_features.size());
    targets.reserve(inputs.capacity());
    for (const auto* set : {&train_features, &surrogate_features}) {
        const double label = set == &train_features ? 1.0 : 0.0;
        for (const auto& f : *set) {
            std::vector<double> z(f.size());
            for (std::size_t i = 0; i < f.size(); ++i) z[i] = (f[i] - mean[i]) / scale[i];
            inputs.push_back(std::move(z));
            targets.push_back({label});
        }
    }

    std::vector<nnet::LayerSpec> layers;
    int in = input_dim;
    for (int width : config.hidden) {
        layers.push_back({in, width, nnet::Activation::relu, 0.01, config.hidden_dropout});
        in = width;
    }
    layers.push_back({in, 1, nnet::Activation::sigmoid, 0.01, false});

    nnet::TrainConfig tc = config.train;
    if (!config.hidden_dropout) tc.dropout_p = 0.0;
    auto net = nnet::DenseNetwork::seeded(std::move(layers), tc.dropout_p, config.train.seed);
    auto result = nnet::train(net, inputs, targets, tc);
    if (train_result) *train_result = std::move(result);
    return TiMetaClassifier(std::move(net), std::move(mean), std::move(scale));
}

ConfidenceScore conf_ti(const TiMetaClassifier& meta, std::span<const double> features) {
    return oriented_score(Measure::ti_meta, meta.logit(features));
}

std::vector<double> pyramid_pool_1d(std::span<const double> v, const std::vector<int>& levels) {
    if (levels.empty()) throw std::invalid_argument("pyramid_pool_1d: empty levels");
    int max_level = 0;
    for (int l : levels) {
        if (l <= 0) throw std::invalid_argument("pyramid_pool_1d: levels must be positive");
        max_level = std::max(max_level, l);
    }
    const int n = static_cast<int>(v.size());
    if (n < max_level) {
        throw std::invalid_argument("pyramid_pool_1d: vector shorter than the largest level");
    }
    std::vector<double> out;
    for (int level : levels) {
        const int base = n / level;
        const int extra = n % level; // leftmost segments get one more element
        int start = 0;
        for (int seg = 0; seg < level; ++seg) {
            const int len = base + (seg < extra ? 1 : 0);
            double s = 0.0;
            for (int i = start; i < start + len; ++i) s += v[static_cast<std::size_t>(i)];
            out.push_back(s / len);
            start += len;
        }
    }
    return out;
}

void TdConfig::validate() const {
    if (projection_width <= 0) throw ConfigError("td meta: projection_width must be positive");
    if (pool_levels.empty()) throw ConfigError("td meta: pool_levels must not be empty");
    int max_level = 0;
    for (int l : pool_levels) {
        if (l <= 0) throw ConfigError("td meta: pool levels must be positive");
        max_level = std::max(max_level, l);
    }
    if (projection_width < max_level) {
        throw ConfigError("td meta: projection_width must be >= the largest pool level");
    }
    train.validate();
}

int TdMetaClassifier::head_input_dim() const {
    int pooled = 0;
    for (int l : pool_levels_) pooled += l;
    return pooled * static_cast<int>(taps_.size()) + penultimate_dim_;
}

std::vector<double> TdMetaClassifier::head_input(const estimator::FeatureTaps& taps) const {
    if (taps.taps.size() != taps_.size()) {
        throw std::invalid_argument("td meta: tap count mismatch");
    }
    if (static_cast<int>(taps.penultimate.size()) != penultimate_dim_) {
        throw std::invalid_argument("td meta: penultimate width mismatch");
    }
    std::vector<double> cat;
    cat.reserve(static_cast<std::size_t>(head_input_dim()));
    std::vector<double> proj(static_cast<std::size_t>(projection_width_));
    for (std::size_t t = 0; t < taps_.size(); ++t) {
        const auto& p = taps_[t];
        const auto& x = taps.taps[t];
        if (static_cast<int>(x.size()) != p.in) {
            throw std::invalid_argument("td meta: tap width mismatch");
        }
        for (int i = 0; i < projection_width_; ++i) {
            double z = dot(p.weights.data() + static_cast<std::size_t>(i) * p.in, x.data(),
                           x.size()) +
                       p.bias[static_cast<std::size_t>(i)];
            proj[static_cast<std::size_t>(i)] = z > 0.0 ? z : leaky_slope_ * z;
        }
        for (double pooled : pyramid_pool_1d(proj, pool_levels_)) cat.push_back(pooled);
    }
    cat.insert(cat.end(), taps.penultimate.begin(), taps.penultimate.end());
    return cat;
}

double TdMetaClassifier::logit(const estimator::FeatureTaps& taps) const {
    const auto cat = head_input(taps);
    return dot(head_weights_.data(), cat.data(), cat.size()) + head_bias_;
}

double TdMetaClassifier::probability(const estimator::FeatureTaps& taps) const {
    return 1.0 / (1.0 + std::exp(-logit(taps)));
}

std::string TdMetaClassifier::to_json() const {
    std::string out = "{\"format\":\"meta-td/1\",\"measure\":\"td_meta\",\"estimator_digest\":\"";
    out += io::json_escape(estimator_digest_);
    out += "\",\"projection_width\":" + std::to_string(projection_width_);
    out += ",\"leaky_slope\":";
    io::append_real(out, leaky_slope_);
    out += ",\"pool_levels\":[";
    for (std::size_t i = 0; i < pool_levels_.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(pool_levels_[i]);
    }
    out += "],\"penultimate_dim\":" + std::to_string(penultimate_dim_);
    out += ",\"taps\":[";
    for (std::size_t t = 0; t < taps_.size(); ++t) {
        if (t) out += ',';
        out += "{\"in\":" + std::to_string(taps_[t].in);
        out += ",\"weights\":[";
        for (std::size_t i = 0; i < taps_[t].weights.size(); ++i) {
            if (i) out += ',';
            io::append_real(out, taps_[t].weights[i]);
        }
        out += "],\"bias\":[";
        for (std::size_t i = 0; i < taps_[t].bias.size(); ++i) {
            if (i) out += ',';
            io::append_real(out, taps_[t].bias[i]);
        }
        out += "]}";
    }
    out += "],\"head\":{\"weights\":[";
    for (std::size_t i = 0; i < head_weights_.size(); ++i) {
        if (i) out += ',';
        io::append_real(out, head_weights_[i]);
    }
    out += "],\"bias\":";
    io::append_real(out, head_bias_);
    out += "}}";
    return out;
}

TdMetaClassifier TdMetaClassifier::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("td meta: invalid JSON: ") + e.what());
    }
    if (!j.is_object() || j.value("format", "") != "meta-td/1") {
        throw DataError("td meta: unsupported format");
    }
    if (j.value("measure", "") != "td_meta") throw DataError("td meta: wrong measure header");

    TdMetaClassifier m;
    m.estimator_digest_ = j.at("estimator_digest").get<std::string>();
    m.projection_width_ = j.at("projection_width").get<int>();
    m.leaky_slope_ = j.at("leaky_slope").get<double>();
    m.pool_levels_ = j.at("pool_levels").get<std::vector<int>>();
    m.penultimate_dim_ = j.at("penultimate_dim").get<int>();
    for (const auto& tj : j.at("taps")) {
        TapProjection p;
        p.in = tj.at("in").get<int>();
        p.weights = tj.at("weights").get<std::vector<double>>();
        p.bias = tj.at("bias").get<std::vector<double>>();
        if (p.weights.size() != static_cast<std::size_t>(p.in) * m.projection_width_ ||
            p.bias.size() != static_cast<std::size_t>(m.projection_width_)) {
            throw DataError("td meta: projection size mismatch");
        }
        m.taps_.push_back(std::move(p));
    }
    m.head_weights_ = j.at("head").at("weights").get<std::vector<double>>();
    m.head_bias_ = j.at("head").at("bias").get<double>();
    if (m.head_weights_.size() != static_cast<std::size_t>(m.head_input_dim())) {
        throw DataError("td meta: head size mismatch");
    }
    return m;
}

namespace {

// Flat parameter layout of the task-dependent metaclassifier:
// per tap [P (width x in), c (width)], then head weights, then head bias.
struct TdLayout {
    std::vector<std::size_t> tap_w_off, tap_b_off;
    std::size_t head_w_off = 0, head_b_off = 0;
    std::size_t total = 0;
};

TdLayout td_layout(const std::vector<int>& tap_dims, int width, int head_in) {
    TdLayout lay;
    std::size_t off = 0;
    for (int in : tap_dims) {
        lay.tap_w_off.push_back(off);
        off += static_cast<std::size_t>(width) * in;
        lay.tap_b_off.push_back(off);
        off += static_cast<std::size_t>(width);
    }
    lay.head_w_off = off;
    off += static_cast<std::size_t>(head_in);
    lay.head_b_off = off;
    off += 1;
    lay.total = off;
    return lay;
}

} // namespace

TdMetaClassifier train_td_meta(const estimator::AttributeEstimator& frozen_estimator,
                               const std::vector<std::vector<double>>& train_features,
                               const std::vector<std::vector<double>>& surrogate_features,
                               const TdConfig& config, nnet::TrainResult* train_result) {
    config.validate();
    if (train_features.empty() || surrogate_features.empty()) {
        throw DataError("train_td_meta: both feature sets must be nonempty");
    }

    // Estimator is frozen: taps are constants, computed once.
    std::vector<std::vector<double>> all_features = train_features;
    all_features.insert(all_features.end(), surrogate_features.begin(),
                        surrogate_features.end());
    std::vector<nnet::ActivationTrace> traces;
    batch::eval_traces(frozen_estimator.network(), all_features, traces);
    std::vector<estimator::FeatureTaps> taps;
    taps.reserve(traces.size());
    for (const auto& tr : traces) taps.push_back(frozen_estimator.taps_from_trace(tr));
    traces.clear();
    traces.shrink_to_fit();

    const std::size_t n_train = train_features.size();
    const std::size_t n_total = taps.size();
    const int width = config.projection_width;
    const double slope = config.leaky_slope;
    const auto& levels = config.pool_levels;
    int pooled_per_tap = 0;
    for (int l : levels) pooled_per_tap += l;

    std::vector<int> tap_dims;
    for (const auto& t : taps.front().taps) tap_dims.push_back(static_cast<int>(t.size()));
    const int penult_dim = static_cast<int>(taps.front().penultimate.size());
    const int head_in = pooled_per_tap * static_cast<int>(tap_dims.size()) + penult_dim;

    const TdLayout lay = td_layout(tap_dims, width, head_in);
    std::vector<double> params(lay.total, 0.0);
    {
        auto g = rng::make_engine(config.train.seed);
        for (std::size_t t = 0; t < tap_dims.size(); ++t) {
            const double sd = std::sqrt(2.0 / tap_dims[t]);
            double* w = params.data() + lay.tap_w_off[t];
            for (std::size_t i = 0; i < static_cast<std::size_t>(width) * tap_dims[t]; ++i) {
                w[i] = sd * rng::normal(g);
            }
        }
        const double sd = std::sqrt(2.0 / head_in);
        double* w = params.data() + lay.head_w_off;
        for (int i = 0; i < head_in; ++i) w[i] = sd * rng::normal(g);
    }

    nnet::AdamState state;
    state.reset(lay.total);
    std::vector<double> grads(lay.total, 0.0);
    auto g = rng::make_engine(config.train.seed + 1);

    std::vector<double> proj_z(static_cast<std::size_t>(width));
    std::vector<double> cat(static_cast<std::size_t>(head_in));
    std::vector<double> dcat(static_cast<std::size_t>(head_in));
    std::vector<double> dz(static_cast<std::size_t>(width));

    nnet::TrainResult result;
    double bucket_sum = 0.0;
    int bucket_n = 0;
    const int batch = config.train.batch_size;

    for (int it = 0; it < config.train.iterations; ++it) {
        std::fill(grads.begin(), grads.end(), 0.0);
        double batch_loss = 0.0;
        for (int b = 0; b < batch; ++b) {
            const std::size_t idx = rng::uniform_index(g, n_total);
            const double target = idx < n_train ? 1.0 : 0.0;
            estimator::FeatureTaps jittered;
            const bool jitter = config.train.input_jitter > 0.0;
            if (jitter) {
                jittered = taps[idx];
                for (auto& t : jittered.taps) {
                    for (double& v : t) v += config.train.input_jitter * rng::normal(g);
                }
                for (double& v : jittered.penultimate) {
                    v += config.train.input_jitter * rng::normal(g);
                }
            }
            const auto& ft = jitter ? jittered : taps[idx];

            // forward
            std::size_t cat_pos = 0;
            std::vector<std::vector<double>> tap_proj(tap_dims.size());
            for (std::size_t t = 0; t < tap_dims.size(); ++t) {
                const double* W = params.data() + lay.tap_w_off[t];
                const double* c = params.data() + lay.tap_b_off[t];
                const auto& x = ft.taps[t];
                for (int i = 0; i < width; ++i) {
                    const double z =
                        dot(W + static_cast<std::size_t>(i) * tap_dims[t], x.data(), x.size()) +
                        c[i];
                    proj_z[static_cast<std::size_t>(i)] = z > 0.0 ? z : slope * z;
                }
                tap_proj[t] = proj_z;
                for (double v : pyramid_pool_1d(proj_z, levels)) cat[cat_pos++] = v;
            }
            for (double v : ft.penultimate) cat[cat_pos++] = v;

            const double* hw = params.data() + lay.head_w_off;
            const double z_head = dot(hw, cat.data(), cat.size()) + params[lay.head_b_off];
            const double p = 1.0 / (1.0 + std::exp(-z_head));
            const double pc = std::clamp(p, nnet::kProbClamp, 1.0 - nnet::kProbClamp);
            batch_loss += -(target * std::log(pc) + (1.0 - target) * std::log(1.0 - pc));

            // backward (loss gradient zero where the clamp is active)
            double dz_head = 0.0;
            if (p >= nnet::kProbClamp && p <= 1.0 - nnet::kProbClamp) {
                dz_head = (-target / p + (1.0 - target) / (1.0 - p)) * p * (1.0 - p);
            }
            double* ghw = grads.data() + lay.head_w_off;
            for (int i = 0; i < head_in; ++i) {
                ghw[i] += dz_head * cat[static_cast<std::size_t>(i)];
                dcat[static_cast<std::size_t>(i)] = dz_head * hw[i];
            }
            grads[lay.head_b_off] += dz_head;

            std::size_t dpos = 0;
            for (std::size_t t = 0; t < tap_dims.size(); ++t) {
                // pooled segments back to the projected vector
                std::fill(dz.begin(), dz.end(), 0.0);
                for (int level : levels) {
                    const int base = width / level;
                    const int extra = width % level;
                    int start = 0;
                    for (int seg = 0; seg < level; ++seg) {
                        const int len = base + (seg < extra ? 1 : 0);
                        const double dv = dcat[dpos++] / len;
                        for (int i = start; i < start + len; ++i) {
                            dz[static_cast<std::size_t>(i)] += dv;
                        }
                        start += len;
                    }
                }
                // through the leaky ReLU, into projection params
                const auto& u = tap_proj[t];
                const auto& x = ft.taps[t];
                double* gW = grads.data() + lay.tap_w_off[t];
                double* gc = grads.data() + lay.tap_b_off[t];
                for (int i = 0; i < width; ++i) {
                    const double deriv = u[static_cast<std::size_t>(i)] > 0.0 ? 1.0 : slope;
                    const double d = dz[static_cast<std::size_t>(i)] * deriv;
                    double* row = gW + static_cast<std::size_t>(i) * tap_dims[t];
                    for (int k = 0; k < tap_dims[t]; ++k) row[k] += d * x[static_cast<std::size_t>(k)];
                    gc[i] += d;
                }
            }
        }

        const double inv_b = 1.0 / batch;
        for (double& v : grads) v *= inv_b;
        nnet::adam_step(params, grads, state, config.train, it);

        bucket_sum += batch_loss * inv_b;
        if (++bucket_n == 100 || it + 1 == config.train.iterations) {
            result.loss_trace.push_back(bucket_sum / bucket_n);
            bucket_sum = 0.0;
            bucket_n = 0;
        }
    }
    if (train_result) *train_result = std::move(result);

    TdMetaClassifier meta;
    meta.projection_width_ = width;
    meta.leaky_slope_ = slope;
    meta.pool_levels_ = levels;
    meta.penultimate_dim_ = penult_dim;
    meta.estimator_digest_ = frozen_estimator.digest();
    for (std::size_t t = 0; t < tap_dims.size(); ++t) {
        TdMetaClassifier::TapProjection p;
        p.in = tap_dims[t];
        p.weights.assign(params.begin() + static_cast<std::ptrdiff_t>(lay.tap_w_off[t]),
                         params.begin() +
                             static_cast<std::ptrdiff_t>(lay.tap_w_off[t] +
                                                         static_cast<std::size_t>(width) *
                                                             tap_dims[t]));
        p.bias.assign(params.begin() + static_cast<std::ptrdiff_t>(lay.tap_b_off[t]),
                      params.begin() +
                          static_cast<std::ptrdiff_t>(lay.tap_b_off[t] + width));
        meta.taps_.push_back(std::move(p));
    }
    meta.head_weights_.assign(params.begin() + static_cast<std::ptrdiff_t>(lay.head_w_off),
                              params.begin() +
                                  static_cast<std::ptrdiff_t>(lay.head_w_off + head_in));
    meta.head_bias_ = params[lay.head_b_off];
    return meta;
}

ConfidenceScore conf_td(const estimator::AttributeEstimator& est, const TdMetaClassifier& meta,
                        std::span<const double> features) {
    return oriented_score(Measure::td_meta, meta.logit(est.hidden_taps(features)));
}

} // namespace ws::confidence
