#pragma once

// Dense numeric kernel for the temporal convolutional network: forward and
// backward passes for every layer type the network uses, the losses, L2
// regularization, Adam and a finite-difference gradient checker.
//
// Conventions: a sequence is a rank-2 tensor [time x channels]; conv kernels
// are [filters x width x channels]; dense weights are [out x in]. Convolutions
// use stride 1 and no padding.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "selfhar/rng.hpp"
#include "selfhar/tensor.hpp"

namespace selfhar::nd {

inline constexpr double kProbabilityFloor = 1e-12;

struct LayerGradients {
  Tensor weights;
  Tensor bias;
  Tensor input;  // empty when the caller did not ask for it
};

Tensor conv1d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias);
LayerGradients conv1d_backward(const Tensor& input, const Tensor& kernels,
                               const Tensor& upstream, bool want_input_grad = true);
// Adds this sample's contribution into existing gradient buffers. Any buffer
// may be null: frozen layers skip parameter gradients, the first layer skips
// the input gradient.
void conv1d_backward_accumulate(const Tensor& input, const Tensor& kernels,
                                const Tensor& upstream, Tensor* kernel_grad,
                                Tensor* bias_grad, Tensor* input_grad);

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);
LayerGradients dense_backward(const Tensor& input, const Tensor& weights,
                              const Tensor& upstream, bool want_input_grad = true);
void dense_backward_accumulate(const Tensor& input, const Tensor& weights,
                               const Tensor& upstream, Tensor& weight_grad,
                               Tensor& bias_grad, Tensor* input_grad);

Tensor relu(const Tensor& input);
// Gradient routed where the forward input was strictly positive.
Tensor relu_backward(const Tensor& input, const Tensor& upstream);

double sigmoid(double x);
Tensor sigmoid(const Tensor& input);
Tensor sigmoid_backward(const Tensor& output, const Tensor& upstream);

// Max-subtracted softmax over a rank-1 tensor.
Tensor softmax(const Tensor& logits);

struct PooledFeatures {
  Tensor values;                    // [filters]
  std::vector<std::size_t> argmax;  // time index per filter, lowest index on ties
};

PooledFeatures global_max_pool(const Tensor& input);
Tensor global_max_pool_backward(const PooledFeatures& pooled, std::size_t time,
                                const Tensor& upstream);

// Inverted dropout. `scale` holds the per-element multiplier (0 or
// 1/(1-rate)); it is empty when the pass was an identity.
struct DropoutResult {
  Tensor output;
  std::vector<double> scale;
};

DropoutResult dropout(const Tensor& input, double rate, Rng& rng, bool training);
Tensor dropout_backward(const DropoutResult& forward, const Tensor& upstream);

// -sum_a target[a] * log(max(predicted[a], 1e-12)).
double categorical_cross_entropy(const Tensor& predicted, const Tensor& target);
// d CE(softmax(z), target) / dz for a target that sums to one.
Tensor softmax_cross_entropy_grad(const Tensor& probabilities, const Tensor& target);

double binary_cross_entropy(double predicted, double target);
// binary_cross_entropy(sigmoid(logit), target) with the same clamp, computed
// from the logit so a saturated sigmoid keeps full precision.
double binary_cross_entropy_logit(double logit, double target);
// True when the clamp above is active for this logit.
bool logit_clamped(double logit);

struct RegularizationConfig {
  double l2_factor = 1e-4;
};

// Non-owning view of one trainable tensor and its gradient buffer.
struct ParamRef {
  std::string name;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
  bool frozen = false;
  bool is_weight = true;  // false for biases, which are not L2-penalized
};

// beta * sum of squared non-frozen weights.
double l2_penalty_value(std::span<const ParamRef> params, const RegularizationConfig& config);
// Returns the penalty and adds 2*beta*w into each non-frozen weight gradient.
double apply_l2_penalty(std::span<const ParamRef> params, const RegularizationConfig& config);

struct AdamState {
  std::uint64_t step = 0;
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

// One bias-corrected Adam update over `params`, in order. Moments are created
// lazily on the first call and bound to parameter positions afterwards.
// Frozen parameters are skipped entirely.
void adam_step(std::span<const ParamRef> params, AdamState& state);

struct LossProbe {
  double loss = 0.0;
  // Hash of the piecewise-linear regime (ReLU masks, pooling argmax). A
  // change under perturbation means the difference quotient straddles a kink.
  std::uint64_t signature = 0;
  // Optional additive parts of `loss`. When present they are differenced one
  // by one, so large terms that barely move do not swamp small changes.
  std::vector<double> terms;
};

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_at_kinks = 0;
  std::string worst_parameter;
};

inline constexpr double kGradientCheckFloor = 1e-6;

// Compares the analytic gradients already stored in each ParamRef::grad with
// central differences of `probe().loss`. Relative error per coordinate is
// |analytic - numeric| / max(|analytic|, |numeric|, kGradientCheckFloor).
GradientCheckReport finite_difference_check(std::span<const ParamRef> params,
                                            const std::function<LossProbe()>& probe,
                                            double h = 1e-5);

}  // namespace selfhar::nd
