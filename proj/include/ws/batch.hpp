#pragma once

#include <cstdint>
#include <vector>

#include "ws/nnet.hpp"
#include "ws/phoc.hpp"

// Data-parallel kernels for the hot loops: each parallel worker writes only
// its own output slot, so every kernel is bit-identical to its *_serial
// reference for any thread count. The serial references are kept for the
// test suite and the benchmark target.
namespace ws::batch {

// Eval-mode network outputs for a set of samples.
void eval_outputs(const nnet::DenseNetwork& net,
                  const std::vector<std::vector<double>>& features,
                  std::vector<std::vector<double>>& out);
void eval_outputs_serial(const nnet::DenseNetwork& net,
                         const std::vector<std::vector<double>>& features,
                         std::vector<std::vector<double>>& out);

// Eval-mode full activation traces (consumed by the tap-based confidence
// measure). One trace per sample.
void eval_traces(const nnet::DenseNetwork& net,
                 const std::vector<std::vector<double>>& features,
                 std::vector<nnet::ActivationTrace>& out);
void eval_traces_serial(const nnet::DenseNetwork& net,
                        const std::vector<std::vector<double>>& features,
                        std::vector<nnet::ActivationTrace>& out);

// Per-sample losses and parameter gradients for one minibatch. Dropout masks
// are drawn by the caller (serially) so the kernel itself is generator-free.
// grads[s] must be zeroed, size net.param_count().
void sample_gradients(const nnet::DenseNetwork& net,
                      const std::vector<const std::vector<double>*>& inputs,
                      const std::vector<const std::vector<double>*>& targets,
                      const std::vector<nnet::DropoutMasks>& masks,
                      std::vector<std::vector<double>>& grads, std::vector<double>& losses);
void sample_gradients_serial(const nnet::DenseNetwork& net,
                             const std::vector<const std::vector<double>*>& inputs,
                             const std::vector<const std::vector<double>*>& targets,
                             const std::vector<nnet::DropoutMasks>& masks,
                             std::vector<std::vector<double>>& grads,
                             std::vector<double>& losses);

// Mean gradient of one minibatch, written straight into grad (size
// param_count): per-sample deltas in parallel, then row-parallel
// accumulation in fixed sample order. Bit-identical to averaging the
// sample_gradients output, with a fraction of the memory traffic.
void batch_gradient(const nnet::DenseNetwork& net,
                    const std::vector<const std::vector<double>*>& inputs,
                    const std::vector<const std::vector<double>*>& targets,
                    const std::vector<nnet::DropoutMasks>& masks, std::span<double> grad,
                    std::vector<double>& losses);
void batch_gradient_serial(const nnet::DenseNetwork& net,
                           const std::vector<const std::vector<double>*>& inputs,
                           const std::vector<const std::vector<double>*>& targets,
                           const std::vector<nnet::DropoutMasks>& masks, std::span<double> grad,
                           std::vector<double>& losses);

// For each sample: `passes` dropout-on forwards, outputs clamped like
// attribute estimates, then the mean over output components of the
// population variance across passes. Sample i uses an engine seeded with
// derive_seed(seed, i), so the result is independent of scheduling.
void stochastic_mean_variance(const nnet::DenseNetwork& net,
                              const std::vector<std::vector<double>>& features, int passes,
                              std::uint64_t seed, std::vector<double>& out);
void stochastic_mean_variance_serial(const nnet::DenseNetwork& net,
                                     const std::vector<std::vector<double>>& features,
                                     int passes, std::uint64_t seed,
                                     std::vector<double>& out);

// scores[q][s] = log-posterior of query q's attribute vector under sample
// s's estimate.
void posterior_matrix(const std::vector<phoc::PhocVector>& queries,
                      const std::vector<std::vector<double>>& estimates,
                      std::vector<std::vector<double>>& scores);
void posterior_matrix_serial(const std::vector<phoc::PhocVector>& queries,
                             const std::vector<std::vector<double>>& estimates,
                             std::vector<std::vector<double>>& scores);

} // namespace ws::batch
