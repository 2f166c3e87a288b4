#include "ws/estimator.hpp"

#include <algorithm>
#include <stdexcept>

#include "nlohmann/json.hpp"

#include "ws/errors.hpp"
#include "ws/textio.hpp"

namespace ws::estimator {

namespace {

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace

std::vector<int> EstimatorConfig::resolved_taps() const {
    if (tap_layers) return *tap_layers;
    std::vector<int> all(hidden.size());
    for (std::size_t i = 0; i < hidden.size(); ++i) all[i] = static_cast<int>(i);
    return all;
}

void EstimatorConfig::validate() const {
    if (hidden.empty()) throw ConfigError("estimator: needs at least one hidden layer");
    for (int w : hidden) {
        if (w <= 0) throw ConfigError("estimator: hidden widths must be positive");
    }
    for (int t : resolved_taps()) {
        if (t < 0 || t >= static_cast<int>(hidden.size())) {
            throw ConfigError("estimator: tap index out of range");
        }
    }
    train.validate();
}

AttributeEstimator::AttributeEstimator(nnet::DenseNetwork net, std::vector<int> tap_layers,
                                       std::string phoc_digest)
    : net_(std::move(net)), tap_layers_(std::move(tap_layers)),
      phoc_digest_(std::move(phoc_digest)) {
    if (net_.layer_count() < 2) {
        throw ConfigError("estimator: network needs a hidden layer and an output layer");
    }
    for (int t : tap_layers_) {
        if (t < 0 || t >= static_cast<int>(net_.layer_count()) - 1) {
            throw ConfigError("estimator: tap index out of range");
        }
    }
    digest_ = fnv1a_hex(to_json());
}

std::vector<double> AttributeEstimator::estimate(std::span<const double> features) const {
    return estimate_from_trace(nnet::forward_eval(net_, features));
}

std::vector<double> AttributeEstimator::estimate_from_trace(const nnet::ActivationTrace& trace) {
    std::vector<double> out = trace.output();
    for (double& v : out) v = std::clamp(v, nnet::kProbClamp, 1.0 - nnet::kProbClamp);
    return out;
}

std::vector<std::vector<double>>
AttributeEstimator::estimate_stochastic(std::span<const double> features, int passes,
                                        rng::Engine& rng) const {
    if (passes < 2) throw std::invalid_argument("estimate_stochastic: passes must be >= 2");
    std::vector<std::vector<double>> out;
    out.reserve(static_cast<std::size_t>(passes));
    for (int p = 0; p < passes; ++p) {
        const auto masks = nnet::draw_dropout_masks(net_, rng);
        auto est = nnet::forward_with_masks(net_, features, masks).output();
        for (double& v : est) v = std::clamp(v, nnet::kProbClamp, 1.0 - nnet::kProbClamp);
        out.push_back(std::move(est));
    }
    return out;
}

FeatureTaps AttributeEstimator::hidden_taps(std::span<const double> features) const {
    return taps_from_trace(nnet::forward_eval(net_, features));
}

FeatureTaps AttributeEstimator::taps_from_trace(const nnet::ActivationTrace& trace) const {
    FeatureTaps taps;
    taps.taps.reserve(tap_layers_.size());
    for (int t : tap_layers_) {
        taps.taps.push_back(trace.act[static_cast<std::size_t>(t)]);
    }
    taps.penultimate = trace.act[trace.act.size() - 2];
    return taps;
}

std::string AttributeEstimator::to_json() const {
    std::string out = "{\"format\":\"estimator/1\",\"phoc_digest\":\"";
    out += io::json_escape(phoc_digest_);
    out += "\",\"input_dim\":" + std::to_string(input_dim());
    out += ",\"tap_layers\":[";
    for (std::size_t i = 0; i < tap_layers_.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(tap_layers_[i]);
    }
    out += "],\"network\":";
    out += nnet::to_json(net_);
    out += "}";
    return out;
}

AttributeEstimator AttributeEstimator::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("estimator: invalid JSON: ") + e.what());
    }
    if (!j.is_object() || j.value("format", "") != "estimator/1") {
        throw DataError("estimator: unsupported format");
    }
    auto net = nnet::network_from_json_text(j.at("network").dump());
    auto taps = j.at("tap_layers").get<std::vector<int>>();
    auto phoc_digest = j.at("phoc_digest").get<std::string>();
    if (j.at("input_dim").get<int>() != net.input_dim()) {
        throw DataError("estimator: input_dim does not match network");
    }
    return AttributeEstimator(std::move(net), std::move(taps), std::move(phoc_digest));
}

AttributeEstimator train_estimator(const std::vector<std::vector<double>>& features,
                                   const std::vector<std::string>& transcriptions,
                                   const phoc::PhocConfig& phoc_config,
                                   const EstimatorConfig& config,
                                   nnet::TrainResult* train_result) {
    config.validate();
    phoc_config.validate();
    if (features.empty()) throw DataError("train_estimator: empty train split");
    if (features.size() != transcriptions.size()) {
        throw DataError("train_estimator: features/transcriptions size mismatch");
    }

    const int input_dim = static_cast<int>(features.front().size());
    const int d = phoc_config.dimension();

    std::vector<std::vector<double>> targets;
    targets.reserve(features.size());
    for (const auto& t : transcriptions) {
        if (t.empty()) throw DataError("train_estimator: empty transcription in train split");
        const auto bits = phoc::build_phoc(t, phoc_config);
        std::vector<double> target(bits.size());
        for (std::size_t i = 0; i < bits.size(); ++i) target[i] = bits[i] ? 1.0 : 0.0;
        targets.push_back(std::move(target));
    }

    std::vector<nnet::LayerSpec> layers;
    int in = input_dim;
    for (int width : config.hidden) {
        layers.push_back({in, width, nnet::Activation::relu, 0.01, true});
        in = width;
    }
    layers.push_back({in, d, nnet::Activation::sigmoid, 0.01, false});

    auto net = nnet::DenseNetwork::seeded(std::move(layers), config.train.dropout_p,
                                          config.train.seed);
    auto result = nnet::train(net, features, targets, config.train);
    if (train_result) *train_result = std::move(result);

    return AttributeEstimator(std::move(net), config.resolved_taps(), phoc_config.digest());
}

} // namespace ws::estimator
