#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "ws/errors.hpp"
#include "ws/nnet.hpp"
#include "ws/rng.hpp"

using namespace ws::nnet;

namespace {

DenseNetwork identity_net(int dim) {
    DenseNetwork net({{dim, dim, Activation::identity, 0.01, false}}, 0.0);
    auto w = net.mutable_weights(0);
    for (int i = 0; i < dim; ++i) w[static_cast<std::size_t>(i * dim + i)] = 1.0;
    return net;
}

// Random architecture over all supported activations; dropout off.
DenseNetwork random_net(ws::rng::Engine& g, int in_dim, int out_dim) {
    const Activation acts[] = {Activation::identity, Activation::relu, Activation::leaky_relu,
                               Activation::sigmoid};
    std::vector<LayerSpec> layers;
    const int hidden_layers = 1 + static_cast<int>(ws::rng::uniform_index(g, 2));
    int in = in_dim;
    for (int l = 0; l < hidden_layers; ++l) {
        const int width = 3 + static_cast<int>(ws::rng::uniform_index(g, 5));
        layers.push_back({in, width, acts[ws::rng::uniform_index(g, 4)], 0.2, false});
        in = width;
    }
    layers.push_back({in, out_dim, Activation::sigmoid, 0.2, false});
    return DenseNetwork::seeded(std::move(layers), 0.0, g());
}

} // namespace

TEST_CASE("forward: identity layer reproduces the input") {
    auto net = identity_net(2);
    const std::vector<double> x = {1.0, 2.0};
    const auto trace = forward_eval(net, x);
    CHECK(trace.output() == std::vector<double>{1.0, 2.0});
}

TEST_CASE("forward: zero-weight sigmoid neuron outputs 0.5") {
    DenseNetwork net({{2, 1, Activation::sigmoid, 0.01, false}}, 0.0);
    const std::vector<double> x = {3.0, -4.0};
    CHECK(forward_eval(net, x).output()[0] == doctest::Approx(0.5));
}

TEST_CASE("forward: inverted dropout scales survivors by 1/(1-p)") {
    DenseNetwork net({{1, 1, Activation::identity, 0.01, true}}, 0.5);
    net.mutable_weights(0)[0] = 1.0;
    const std::vector<double> x = {1.0};
    // draw until both outcomes observed
    auto g = ws::rng::make_engine(5);
    bool saw_zero = false, saw_scaled = false;
    for (int i = 0; i < 64 && !(saw_zero && saw_scaled); ++i) {
        const auto masks = draw_dropout_masks(net, g);
        const auto out = forward_with_masks(net, x, masks);
        const double dropped = out.output()[0] * masks[0][0];
        (void)dropped;
        const double value = out.act[0][0] * masks[0][0];
        if (value == 0.0) saw_zero = true;
        if (value == 2.0) saw_scaled = true;
    }
    CHECK(saw_zero);
    CHECK(saw_scaled);
}

TEST_CASE("forward: shape mismatch throws") {
    auto net = identity_net(2);
    const std::vector<double> bad = {1.0};
    CHECK_THROWS_AS(forward_eval(net, bad), std::invalid_argument);
}

TEST_CASE("bce_loss hand values") {
    CHECK(bce_loss(std::vector<double>{0.5}, std::vector<double>{1.0}) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bce_loss(std::vector<double>{1.0 - 1e-7}, std::vector<double>{1.0}) ==
          doctest::Approx(1e-7).epsilon(1e-3));
    CHECK(bce_loss(std::vector<double>{0.9, 0.1}, std::vector<double>{1.0, 0.0}) ==
          doctest::Approx(-std::log(0.9)).epsilon(1e-12));
    CHECK_THROWS_AS(bce_loss(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0}),
                    std::invalid_argument);
}

TEST_CASE("adam_step: zero gradient and zero decay leave parameters unchanged") {
    std::vector<double> params = {1.0, -2.0};
    std::vector<double> grads = {0.0, 0.0};
    AdamState state;
    state.reset(2);
    TrainConfig cfg;
    cfg.lr = 0.1;
    adam_step(params, grads, state, cfg, 0);
    CHECK(params == std::vector<double>{1.0, -2.0});
}

TEST_CASE("adam_step: weight decay alone moves parameters toward zero") {
    std::vector<double> params = {1.0};
    std::vector<double> grads = {0.0};
    AdamState state;
    state.reset(1);
    TrainConfig cfg;
    cfg.lr = 0.01;
    cfg.weight_decay = 0.1;
    adam_step(params, grads, state, cfg, 0);
    CHECK(params[0] < 1.0);
    CHECK(params[0] > 0.0);
    // second moment stays nonnegative
    CHECK(state.v[0] >= 0.0);
}

TEST_CASE("lr schedule divisors compound") {
    TrainConfig cfg;
    cfg.iterations = 25000;
    cfg.lr = 1e-2;
    cfg.lr_schedule = {{10000, 10.0}, {15000, 10.0}, {20000, 10.0}};
    CHECK(cfg.lr_at(0) == doctest::Approx(1e-2));
    CHECK(cfg.lr_at(9999) == doctest::Approx(1e-2));
    CHECK(cfg.lr_at(10000) == doctest::Approx(1e-3));
    CHECK(cfg.lr_at(19999) == doctest::Approx(1e-4));
    CHECK(cfg.lr_at(24000) == doctest::Approx(1e-5));
}

TEST_CASE("train: lr=0 leaves parameters at initialization; determinism is bit-exact") {
    auto g = ws::rng::make_engine(11);
    auto make = [&] {
        return DenseNetwork::seeded({{3, 4, Activation::relu, 0.01, true},
                                     {4, 2, Activation::sigmoid, 0.01, false}},
                                    0.5, 77);
    };
    std::vector<std::vector<double>> xs, ts;
    for (int i = 0; i < 8; ++i) {
        xs.push_back({ws::rng::normal(g), ws::rng::normal(g), ws::rng::normal(g)});
        ts.push_back({static_cast<double>(i % 2), 1.0});
    }

    TrainConfig cfg;
    cfg.iterations = 50;
    cfg.batch_size = 4;
    cfg.lr = 0.0;
    cfg.seed = 5;
    auto net = make();
    const std::vector<double> before(net.params().begin(), net.params().end());
    train(net, xs, ts, cfg);
    CHECK(std::vector<double>(net.params().begin(), net.params().end()) == before);

    cfg.lr = 0.05;
    auto a = make();
    auto b = make();
    const auto ra = train(a, xs, ts, cfg);
    const auto rb = train(b, xs, ts, cfg);
    CHECK(std::vector<double>(a.params().begin(), a.params().end()) ==
          std::vector<double>(b.params().begin(), b.params().end()));
    CHECK(ra.loss_trace == rb.loss_trace);
    for (double v : ra.loss_trace) CHECK(std::isfinite(v));

    CHECK_THROWS(train(a, {}, {}, cfg));
}

TEST_CASE("eval-mode forward is dropout-free and repeatable") {
    auto net = DenseNetwork::seeded({{3, 8, Activation::relu, 0.01, true},
                                     {8, 2, Activation::sigmoid, 0.01, false}},
                                    0.5, 3);
    const std::vector<double> x = {0.3, -1.0, 2.0};
    CHECK(forward_eval(net, x).output() == forward_eval(net, x).output());
}

TEST_CASE("gradient_check: max relative error < 1e-4 on 10 random architectures") {
    auto g = ws::rng::make_engine(2024);
    for (int i = 0; i < 10; ++i) {
        auto net = random_net(g, 4, 3);
        std::vector<double> x(4), t(3);
        for (double& v : x) v = ws::rng::normal(g);
        for (double& v : t) v = ws::rng::uniform01(g) < 0.5 ? 0.0 : 1.0;
        const double err = gradient_check(net, x, t, 1e-5);
        CAPTURE(i);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("gradient_check: linear identity net is near machine precision") {
    DenseNetwork net({{2, 2, Activation::identity, 0.01, false},
                      {2, 1, Activation::sigmoid, 0.01, false}},
                     0.0);
    auto w0 = net.mutable_weights(0);
    w0[0] = 0.7;
    w0[3] = -0.4;
    net.mutable_weights(1)[0] = 0.5;
    net.mutable_weights(1)[1] = 0.25;
    const std::vector<double> x = {0.2, -0.3};
    const std::vector<double> t = {1.0};
    CHECK(gradient_check(net, x, t, 1e-5) < 1e-7);
}

TEST_CASE("gradient_check: zero input still checks bias gradients") {
    auto g = ws::rng::make_engine(5150);
    auto net = random_net(g, 3, 2);
    const std::vector<double> x = {0.0, 0.0, 0.0};
    const std::vector<double> t = {1.0, 0.0};
    CHECK(gradient_check(net, x, t, 1e-5) < 1e-4);
}

TEST_CASE("mean_attribute_variance") {
    // two passes with one attribute: 0.2, 0.4 -> population variance 0.01
    CHECK(mean_attribute_variance({{0.2}, {0.4}}) == doctest::Approx(0.01).epsilon(1e-12));
    // identical passes -> exactly zero
    CHECK(mean_attribute_variance({{0.3, 0.7}, {0.3, 0.7}, {0.3, 0.7}}) == 0.0);
    CHECK_THROWS_AS(mean_attribute_variance({{0.1}}), std::invalid_argument);
}

TEST_CASE("model JSON round-trips bit-exactly") {
    auto g = ws::rng::make_engine(31);
    auto net = random_net(g, 5, 4);
    net.set_dropout_p(0.25);
    const std::string text = to_json(net);
    const auto loaded = network_from_json_text(text);
    CHECK(std::vector<double>(loaded.params().begin(), loaded.params().end()) ==
          std::vector<double>(net.params().begin(), net.params().end()));
    CHECK(loaded.dropout_p() == net.dropout_p());
    CHECK(loaded.layer_count() == net.layer_count());
    // serialized form itself is stable
    CHECK(to_json(loaded) == text);

    CHECK_THROWS_AS(network_from_json_text("{not json"), ws::DataError);
    CHECK_THROWS_AS(network_from_json_text("{\"format\":\"other\"}"), ws::DataError);
}
