#include "ws/batch.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ws/parallel.hpp"
#include "ws/retrieval.hpp"

namespace ws::batch {

namespace {

void one_eval_output(const nnet::DenseNetwork& net, const std::vector<double>& x,
                     std::vector<double>& out) {
    out = nnet::forward_eval(net, x).output();
}

void one_sample_gradient(const nnet::DenseNetwork& net, const std::vector<double>& x,
                         const std::vector<double>& t, const nnet::DropoutMasks& masks,
                         std::vector<double>& grad, double& loss) {
    std::fill(grad.begin(), grad.end(), 0.0);
    const auto trace = nnet::forward_with_masks(net, x, masks);
    loss = nnet::backward_bce(net, x, trace, t, grad);
}

double one_stochastic_variance(const nnet::DenseNetwork& net, const std::vector<double>& x,
                               int passes, std::uint64_t sample_seed) {
    auto g = rng::make_engine(sample_seed);
    std::vector<std::vector<double>> outs;
    outs.reserve(static_cast<std::size_t>(passes));
    for (int p = 0; p < passes; ++p) {
        const auto masks = nnet::draw_dropout_masks(net, g);
        auto out = nnet::forward_with_masks(net, x, masks).output();
        for (double& v : out) v = std::clamp(v, nnet::kProbClamp, 1.0 - nnet::kProbClamp);
        outs.push_back(std::move(out));
    }
    return nnet::mean_attribute_variance(outs);
}

} // namespace

void eval_outputs(const nnet::DenseNetwork& net,
                  const std::vector<std::vector<double>>& features,
                  std::vector<std::vector<double>>& out) {
    out.resize(features.size());
    parallel_for(static_cast<std::int64_t>(features.size()), [&](std::int64_t i) {
        one_eval_output(net, features[static_cast<std::size_t>(i)],
                        out[static_cast<std::size_t>(i)]);
    });
}

void eval_outputs_serial(const nnet::DenseNetwork& net,
                         const std::vector<std::vector<double>>& features,
                         std::vector<std::vector<double>>& out) {
    out.resize(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        one_eval_output(net, features[i], out[i]);
    }
}

void eval_traces(const nnet::DenseNetwork& net,
                 const std::vector<std::vector<double>>& features,
                 std::vector<nnet::ActivationTrace>& out) {
    out.resize(features.size());
    parallel_for(static_cast<std::int64_t>(features.size()), [&](std::int64_t i) {
        out[static_cast<std::size_t>(i)] =
            nnet::forward_eval(net, features[static_cast<std::size_t>(i)]);
    });
}

void eval_traces_serial(const nnet::DenseNetwork& net,
                        const std::vector<std::vector<double>>& features,
                        std::vector<nnet::ActivationTrace>& out) {
    out.resize(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        out[i] = nnet::forward_eval(net, features[i]);
    }
}

void sample_gradients(const nnet::DenseNetwork& net,
                      const std::vector<const std::vector<double>*>& inputs,
                      const std::vector<const std::vector<double>*>& targets,
                      const std::vector<nnet::DropoutMasks>& masks,
                      std::vector<std::vector<double>>& grads, std::vector<double>& losses) {
    const std::size_t b = inputs.size();
    if (targets.size() != b || masks.size() != b || grads.size() != b || losses.size() != b) {
        throw std::invalid_argument("sample_gradients: batch size mismatch");
    }
    parallel_for(static_cast<std::int64_t>(b), [&](std::int64_t s) {
        const auto i = static_cast<std::size_t>(s);
        one_sample_gradient(net, *inputs[i], *targets[i], masks[i], grads[i], losses[i]);
    });
}

void sample_gradients_serial(const nnet::DenseNetwork& net,
                             const std::vector<const std::vector<double>*>& inputs,
                             const std::vector<const std::vector<double>*>& targets,
                             const std::vector<nnet::DropoutMasks>& masks,
                             std::vector<std::vector<double>>& grads,
                             std::vector<double>& losses) {
    const std::size_t b = inputs.size();
    if (targets.size() != b || masks.size() != b || grads.size() != b || losses.size() != b) {
        throw std::invalid_argument("sample_gradients: batch size mismatch");
    }
    for (std::size_t i = 0; i < b; ++i) {
        one_sample_gradient(net, *inputs[i], *targets[i], masks[i], grads[i], losses[i]);
    }
}

namespace {

template <bool Parallel>
void batch_gradient_impl(const nnet::DenseNetwork& net,
                         const std::vector<const std::vector<double>*>& inputs,
                         const std::vector<const std::vector<double>*>& targets,
                         const std::vector<nnet::DropoutMasks>& masks, std::span<double> grad,
                         std::vector<double>& losses) {
    const std::size_t b = inputs.size();
    if (targets.size() != b || masks.size() != b || losses.size() != b) {
        throw std::invalid_argument("batch_gradient: batch size mismatch");
    }
    if (grad.size() != net.param_count()) {
        throw std::invalid_argument("batch_gradient: grad size mismatch");
    }

    std::vector<nnet::BackwardDeltas> deltas(b);
    auto per_sample = [&](std::int64_t s) {
        const auto i = static_cast<std::size_t>(s);
        const auto trace = nnet::forward_with_masks(net, *inputs[i], masks[i]);
        deltas[i] = nnet::backward_deltas(net, *inputs[i], trace, *targets[i]);
        losses[i] = deltas[i].loss;
    };
    if constexpr (Parallel) {
        parallel_for(static_cast<std::int64_t>(b), per_sample);
    } else {
        for (std::size_t i = 0; i < b; ++i) per_sample(static_cast<std::int64_t>(i));
    }

    const double inv_b = 1.0 / static_cast<double>(b);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const auto& spec = net.layers()[l];
        double* dW = grad.data() + net.weight_offset(l);
        double* db = grad.data() + net.bias_offset(l);
        auto row_accumulate = [&](std::int64_t i) {
            double* row = dW + static_cast<std::size_t>(i) * spec.in;
            std::fill(row, row + spec.in, 0.0);
            double bias_acc = 0.0;
            for (std::size_t s = 0; s < b; ++s) {
                const double d = deltas[s].delta[l][static_cast<std::size_t>(i)];
                const double* x = deltas[s].input[l].data();
                for (int j = 0; j < spec.in; ++j) row[j] += d * x[j];
                bias_acc += d;
            }
            for (int j = 0; j < spec.in; ++j) row[j] *= inv_b;
            db[i] = bias_acc * inv_b;
        };
        if constexpr (Parallel) {
            parallel_for(spec.out, row_accumulate);
        } else {
            for (int i = 0; i < spec.out; ++i) row_accumulate(i);
        }
    }
}

} // namespace

void batch_gradient(const nnet::DenseNetwork& net,
                    const std::vector<const std::vector<double>*>& inputs,
                    const std::vector<const std::vector<double>*>& targets,
                    const std::vector<nnet::DropoutMasks>& masks, std::span<double> grad,
                    std::vector<double>& losses) {
    batch_gradient_impl<true>(net, inputs, targets, masks, grad, losses);
}

void batch_gradient_serial(const nnet::DenseNetwork& net,
                           const std::vector<const std::vector<double>*>& inputs,
                           const std::vector<const std::vector<double>*>& targets,
                           const std::vector<nnet::DropoutMasks>& masks, std::span<double> grad,
                           std::vector<double>& losses) {
    batch_gradient_impl<false>(net, inputs, targets, masks, grad, losses);
}

void stochastic_mean_variance(const nnet::DenseNetwork& net,
                              const std::vector<std::vector<double>>& features, int passes,
                              std::uint64_t seed, std::vector<double>& out) {
    if (passes < 2) throw std::invalid_argument("stochastic_mean_variance: passes < 2");
    out.resize(features.size());
    parallel_for(static_cast<std::int64_t>(features.size()), [&](std::int64_t i) {
        const auto k = static_cast<std::size_t>(i);
        out[k] = one_stochastic_variance(net, features[k], passes,
                                         rng::derive_seed(seed, static_cast<std::uint64_t>(i)));
    });
}

void stochastic_mean_variance_serial(const nnet::DenseNetwork& net,
                                     const std::vector<std::vector<double>>& features,
                                     int passes, std::uint64_t seed,
                                     std::vector<double>& out) {
    if (passes < 2) throw std::invalid_argument("stochastic_mean_variance: passes < 2");
    out.resize(features.size());
    for (std::size_t k = 0; k < features.size(); ++k) {
        out[k] = one_stochastic_variance(net, features[k], passes,
                                         rng::derive_seed(seed, static_cast<std::uint64_t>(k)));
    }
}

void posterior_matrix(const std::vector<phoc::PhocVector>& queries,
                      const std::vector<std::vector<double>>& estimates,
                      std::vector<std::vector<double>>& scores) {
    scores.assign(queries.size(), std::vector<double>(estimates.size(), 0.0));
    parallel_for(static_cast<std::int64_t>(queries.size() * estimates.size()),
                 [&](std::int64_t flat) {
                     const std::size_t q = static_cast<std::size_t>(flat) / estimates.size();
                     const std::size_t s = static_cast<std::size_t>(flat) % estimates.size();
                     scores[q][s] = retrieval::log_posterior(queries[q], estimates[s]);
                 });
}

void posterior_matrix_serial(const std::vector<phoc::PhocVector>& queries,
                             const std::vector<std::vector<double>>& estimates,
                             std::vector<std::vector<double>>& scores) {
    scores.assign(queries.size(), std::vector<double>(estimates.size(), 0.0));
    for (std::size_t q = 0; q < queries.size(); ++q) {
        for (std::size_t s = 0; s < estimates.size(); ++s) {
            scores[q][s] = retrieval::log_posterior(queries[q], estimates[s]);
        }
    }
}

} // namespace ws::batch
