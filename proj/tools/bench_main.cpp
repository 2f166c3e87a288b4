// Times the data-parallel kernels against their serial reference
// implementations on pipeline-shaped workloads and verifies that both
// produce identical bytes.

#include <chrono>
#include <cstdio>
#include <functional>

#include "ws/batch.hpp"
#include "ws/parallel.hpp"
#include "ws/rng.hpp"

using namespace ws;

namespace {

double time_of(const std::function<void()>& fn, int reps) {
    // one warmup, then best of reps
    fn();
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
}

void report(const char* name, double serial_s, double parallel_s, bool identical) {
    std::printf("%-26s serial %8.3f ms   parallel %8.3f ms   speedup %4.2fx   %s\n", name,
                serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s,
                identical ? "bit-identical" : "MISMATCH");
}

} // namespace

int main() {
    std::printf("threads: %d\n", hardware_threads());

    auto g = rng::make_engine(1);
    const auto net = nnet::DenseNetwork::seeded(
        {{256, 512, nnet::Activation::relu, 0.01, true},
         {512, 512, nnet::Activation::relu, 0.01, true},
         {512, 540, nnet::Activation::sigmoid, 0.01, false}},
        0.5, 7);

    std::vector<std::vector<double>> features(512, std::vector<double>(256));
    for (auto& f : features) {
        for (double& v : f) v = rng::normal(g);
    }

    // eval_outputs
    {
        std::vector<std::vector<double>> a, b;
        const double ts = time_of([&] { batch::eval_outputs_serial(net, features, a); }, 3);
        const double tp = time_of([&] { batch::eval_outputs(net, features, b); }, 3);
        report("eval_outputs", ts, tp, a == b);
    }

    // sample_gradients (one training minibatch, repeated)
    {
        const int batch_n = 10;
        std::vector<std::vector<double>> targets(batch_n, std::vector<double>(540));
        for (auto& t : targets) {
            for (double& v : t) v = rng::uniform01(g) < 0.5 ? 0.0 : 1.0;
        }
        std::vector<const std::vector<double>*> in, tg;
        std::vector<nnet::DropoutMasks> masks;
        for (int i = 0; i < batch_n; ++i) {
            in.push_back(&features[static_cast<std::size_t>(i)]);
            tg.push_back(&targets[static_cast<std::size_t>(i)]);
            masks.push_back(nnet::draw_dropout_masks(net, g));
        }
        std::vector<std::vector<double>> ga(batch_n, std::vector<double>(net.param_count(), 0.0));
        auto gb = ga;
        std::vector<double> la(batch_n, 0.0), lb(batch_n, 0.0);
        const double ts = time_of(
            [&] {
                for (int r = 0; r < 8; ++r) {
                    batch::sample_gradients_serial(net, in, tg, masks, ga, la);
                }
            },
            3);
        const double tp = time_of(
            [&] {
                for (int r = 0; r < 8; ++r) {
                    batch::sample_gradients(net, in, tg, masks, gb, lb);
                }
            },
            3);
        report("sample_gradients x8", ts, tp, ga == gb && la == lb);

        // fused batch mean gradient (the training inner loop)
        std::vector<double> ma(net.param_count(), 0.0), mb(net.param_count(), 0.0);
        const double ts2 = time_of(
            [&] {
                for (int r = 0; r < 8; ++r) {
                    batch::batch_gradient_serial(net, in, tg, masks, ma, la);
                }
            },
            3);
        const double tp2 = time_of(
            [&] {
                for (int r = 0; r < 8; ++r) {
                    batch::batch_gradient(net, in, tg, masks, mb, lb);
                }
            },
            3);
        report("batch_gradient x8", ts2, tp2, ma == mb && la == lb);
    }

    // stochastic_mean_variance (test-dropout confidence)
    {
        const std::vector<std::vector<double>> subset(features.begin(), features.begin() + 64);
        std::vector<double> a, b;
        const double ts =
            time_of([&] { batch::stochastic_mean_variance_serial(net, subset, 25, 99, a); }, 3);
        const double tp =
            time_of([&] { batch::stochastic_mean_variance(net, subset, 25, 99, b); }, 3);
        report("stochastic_variance", ts, tp, a == b);
    }

    // posterior_matrix (query-by-string scoring)
    {
        std::vector<phoc::PhocVector> queries(64, phoc::PhocVector(540));
        for (auto& q : queries) {
            for (auto& bit : q) bit = rng::uniform01(g) < 0.1 ? 1 : 0;
        }
        std::vector<std::vector<double>> estimates(1000, std::vector<double>(540));
        for (auto& e : estimates) {
            for (double& v : e) v = 0.02 + 0.96 * rng::uniform01(g);
        }
        std::vector<std::vector<double>> a, b;
        const double ts =
            time_of([&] { batch::posterior_matrix_serial(queries, estimates, a); }, 3);
        const double tp = time_of([&] { batch::posterior_matrix(queries, estimates, b); }, 3);
        report("posterior_matrix", ts, tp, a == b);
    }

    return 0;
}
