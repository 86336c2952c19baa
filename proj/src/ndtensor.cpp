#include "selfhar/ndtensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "selfhar/errors.hpp"

namespace selfhar::nd {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMat>;
using ConstRowMap = Eigen::Map<const RowMat>;
using ConstStridedMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;
using StridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

struct ConvDims {
  std::size_t time, channels, filters, width, out_time;
};

ConvDims check_conv(const Tensor& input, const Tensor& kernels) {
  require_rank(input, 2, "conv1d input");
  require_rank(kernels, 3, "conv1d kernels");
  ConvDims d{input.dim(0), input.dim(1), kernels.dim(0), kernels.dim(1), 0};
  if (kernels.dim(2) != d.channels) {
    throw DimensionError("conv1d: channel axis mismatch, input has " +
                         std::to_string(d.channels) + " channels, kernels expect " +
                         std::to_string(kernels.dim(2)));
  }
  if (d.time < d.width) {
    throw DimensionError("conv1d: time axis " + std::to_string(d.time) +
                         " shorter than kernel width " + std::to_string(d.width));
  }
  d.out_time = d.time - d.width + 1;
  return d;
}

// Row t of the patch matrix is input rows t..t+width-1 flattened; in
// row-major storage those rows are contiguous, so the patch matrix is a
// strided view with overlapping rows.
ConstStridedMap patches_of(const Tensor& input, const ConvDims& d) {
  return ConstStridedMap(input.data(), static_cast<Eigen::Index>(d.out_time),
                         static_cast<Eigen::Index>(d.width * d.channels),
                         Eigen::OuterStride<>(static_cast<Eigen::Index>(d.channels)));
}

}  // namespace

Tensor conv1d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  const ConvDims d = check_conv(input, kernels);
  require_rank(bias, 1, "conv1d bias");
  if (bias.dim(0) != d.filters) throw DimensionError("conv1d: bias length != filter count");

  Tensor out({d.out_time, d.filters});
  RowMap y(out.data(), d.out_time, d.filters);
  ConstRowMap k(kernels.data(), d.filters, d.width * d.channels);
  y.noalias() = patches_of(input, d) * k.transpose();
  y.rowwise() += ConstVecMap(bias.data(), d.filters).transpose();
  return out;
}

void conv1d_backward_accumulate(const Tensor& input, const Tensor& kernels,
                                const Tensor& upstream, Tensor* kernel_grad,
                                Tensor* bias_grad, Tensor* input_grad) {
  const ConvDims d = check_conv(input, kernels);
  if (upstream.shape() != std::vector<std::size_t>{d.out_time, d.filters}) {
    throw DimensionError("conv1d_backward: upstream gradient shape " +
                         shape_string(upstream.shape()) + " does not match output " +
                         shape_string({d.out_time, d.filters}));
  }
  ConstRowMap dy(upstream.data(), d.out_time, d.filters);
  if (kernel_grad != nullptr) {
    require_same_shape(*kernel_grad, kernels, "conv1d_backward kernel grad");
    RowMap dk(kernel_grad->data(), d.filters, d.width * d.channels);
    dk.noalias() += dy.transpose() * patches_of(input, d);
  }
  if (bias_grad != nullptr) {
    if (bias_grad->shape() != std::vector<std::size_t>{d.filters}) {
      throw DimensionError("conv1d_backward: bias gradient length mismatch");
    }
    VecMap(bias_grad->data(), d.filters) += dy.colwise().sum().transpose();
  }

  if (input_grad != nullptr) {
    require_same_shape(*input_grad, input, "conv1d_backward input grad");
    for (std::size_t w = 0; w < d.width; ++w) {
      ConstStridedMap k_w(kernels.data() + w * d.channels, d.filters, d.channels,
                          Eigen::OuterStride<>(d.width * d.channels));
      RowMap dx(input_grad->data() + w * d.channels, d.out_time, d.channels);
      dx.noalias() += dy * k_w;
    }
  }
}

LayerGradients conv1d_backward(const Tensor& input, const Tensor& kernels,
                               const Tensor& upstream, bool want_input_grad) {
  LayerGradients g{Tensor(kernels.shape()), Tensor({kernels.rank() == 3 ? kernels.dim(0) : 1}),
                   Tensor()};
  if (want_input_grad) g.input = Tensor(input.shape());
  conv1d_backward_accumulate(input, kernels, upstream, &g.weights, &g.bias,
                             want_input_grad ? &g.input : nullptr);
  return g;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require_rank(input, 1, "dense input");
  require_rank(weights, 2, "dense weights");
  require_rank(bias, 1, "dense bias");
  const std::size_t m = weights.dim(0), n = weights.dim(1);
  if (input.dim(0) != n) {
    throw DimensionError("dense: input length " + std::to_string(input.dim(0)) +
                         " does not match weight columns " + std::to_string(n));
  }
  if (bias.dim(0) != m) throw DimensionError("dense: bias length != output rows");
  Tensor out({m});
  VecMap y(out.data(), m);
  y.noalias() = ConstRowMap(weights.data(), m, n) * ConstVecMap(input.data(), n);
  y += ConstVecMap(bias.data(), m);
  return out;
}

void dense_backward_accumulate(const Tensor& input, const Tensor& weights,
                               const Tensor& upstream, Tensor& weight_grad,
                               Tensor& bias_grad, Tensor* input_grad) {
  require_rank(weights, 2, "dense weights");
  const std::size_t m = weights.dim(0), n = weights.dim(1);
  if (input.shape() != std::vector<std::size_t>{n}) {
    throw DimensionError("dense_backward: input length mismatch");
  }
  if (upstream.shape() != std::vector<std::size_t>{m}) {
    throw DimensionError("dense_backward: upstream gradient length " +
                         shape_string(upstream.shape()) + " != output length " +
                         std::to_string(m));
  }
  require_same_shape(weight_grad, weights, "dense_backward weight grad");
  if (bias_grad.shape() != std::vector<std::size_t>{m}) {
    throw DimensionError("dense_backward: bias gradient length mismatch");
  }
  ConstVecMap dy(upstream.data(), m);
  RowMap(weight_grad.data(), m, n).noalias() += dy * ConstVecMap(input.data(), n).transpose();
  VecMap(bias_grad.data(), m) += dy;
  if (input_grad != nullptr) {
    require_same_shape(*input_grad, input, "dense_backward input grad");
    VecMap(input_grad->data(), n).noalias() +=
        ConstRowMap(weights.data(), m, n).transpose() * dy;
  }
}

LayerGradients dense_backward(const Tensor& input, const Tensor& weights,
                              const Tensor& upstream, bool want_input_grad) {
  require_rank(weights, 2, "dense weights");
  LayerGradients g{Tensor(weights.shape()), Tensor({weights.dim(0)}), Tensor()};
  if (want_input_grad) g.input = Tensor(input.shape());
  dense_backward_accumulate(input, weights, upstream, g.weights, g.bias,
                            want_input_grad ? &g.input : nullptr);
  return g;
}

Tensor relu(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& upstream) {
  require_same_shape(input, upstream, "relu_backward");
  Tensor out = upstream;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(input[i] > 0.0)) out[i] = 0.0;
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.values()) v = sigmoid(v);
  return out;
}

Tensor sigmoid_backward(const Tensor& output, const Tensor& upstream) {
  require_same_shape(output, upstream, "sigmoid_backward");
  Tensor out = upstream;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= output[i] * (1.0 - output[i]);
  return out;
}

Tensor softmax(const Tensor& logits) {
  if (logits.empty()) throw DimensionError("softmax: empty input");
  require_rank(logits, 1, "softmax");
  const double peak = *std::max_element(logits.values().begin(), logits.values().end());
  Tensor out = logits;
  double total = 0.0;
  for (double& v : out.values()) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : out.values()) v /= total;
  return out;
}

PooledFeatures global_max_pool(const Tensor& input) {
  require_rank(input, 2, "global_max_pool");
  const std::size_t time = input.dim(0), filters = input.dim(1);
  PooledFeatures out{Tensor({filters}), std::vector<std::size_t>(filters, 0)};
  for (std::size_t f = 0; f < filters; ++f) out.values[f] = input.at(0, f);
  for (std::size_t t = 1; t < time; ++t) {
    const double* row = input.data() + t * filters;
    for (std::size_t f = 0; f < filters; ++f) {
      if (row[f] > out.values[f]) {
        out.values[f] = row[f];
        out.argmax[f] = t;
      }
    }
  }
  return out;
}

Tensor global_max_pool_backward(const PooledFeatures& pooled, std::size_t time,
                                const Tensor& upstream) {
  const std::size_t filters = pooled.argmax.size();
  if (upstream.shape() != std::vector<std::size_t>{filters}) {
    throw DimensionError("global_max_pool_backward: upstream length mismatch");
  }
  Tensor grad({time, filters});
  for (std::size_t f = 0; f < filters; ++f) grad.at(pooled.argmax[f], f) = upstream[f];
  return grad;
}

DropoutResult dropout(const Tensor& input, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0) || rate >= 1.0) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  DropoutResult result{input, {}};
  if (!training || rate == 0.0) return result;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  result.scale.resize(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) {
    result.scale[i] = u(rng) < rate ? 0.0 : keep_scale;
    result.output[i] *= result.scale[i];
  }
  return result;
}

Tensor dropout_backward(const DropoutResult& forward, const Tensor& upstream) {
  require_same_shape(forward.output, upstream, "dropout_backward");
  Tensor out = upstream;
  if (forward.scale.empty()) return out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= forward.scale[i];
  return out;
}

double categorical_cross_entropy(const Tensor& predicted, const Tensor& target) {
  require_same_shape(predicted, target, "categorical_cross_entropy");
  double loss = 0.0;
  for (std::size_t a = 0; a < predicted.size(); ++a) {
    if (target[a] == 0.0) continue;
    loss -= target[a] * std::log(std::clamp(predicted[a], kProbabilityFloor, 1.0));
  }
  return loss;
}

Tensor softmax_cross_entropy_grad(const Tensor& probabilities, const Tensor& target) {
  require_same_shape(probabilities, target, "softmax_cross_entropy_grad");
  Tensor grad = probabilities;
  for (std::size_t a = 0; a < grad.size(); ++a) grad[a] -= target[a];
  return grad;
}

double binary_cross_entropy(double predicted, double target) {
  const double p = std::clamp(predicted, kProbabilityFloor, 1.0 - kProbabilityFloor);
  return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

namespace {

const double kLogitBound = std::log((1.0 - kProbabilityFloor) / kProbabilityFloor);

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

double binary_cross_entropy_logit(double logit, double target) {
  const double z = std::clamp(logit, -kLogitBound, kLogitBound);
  return target * softplus(-z) + (1.0 - target) * softplus(z);
}

bool logit_clamped(double logit) { return std::abs(logit) > kLogitBound; }

double l2_penalty_value(std::span<const ParamRef> params, const RegularizationConfig& config) {
  double sum = 0.0;
  for (const ParamRef& p : params) {
    if (p.frozen || !p.is_weight) continue;
    for (double v : p.value->values()) sum += v * v;
  }
  return config.l2_factor * sum;
}

double apply_l2_penalty(std::span<const ParamRef> params, const RegularizationConfig& config) {
  const double two_beta = 2.0 * config.l2_factor;
  for (const ParamRef& p : params) {
    if (p.frozen || !p.is_weight || p.grad == nullptr) continue;
    require_same_shape(*p.value, *p.grad, "l2 gradient");
    for (std::size_t i = 0; i < p.value->size(); ++i) (*p.grad)[i] += two_beta * (*p.value)[i];
  }
  return l2_penalty_value(params, config);
}

void adam_step(std::span<const ParamRef> params, AdamState& state) {
  if (state.first_moment.empty()) {
    for (const ParamRef& p : params) {
      state.first_moment.emplace_back(p.value->shape());
      state.second_moment.emplace_back(p.value->shape());
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state tracks " +
                         std::to_string(state.first_moment.size()) + " parameters, got " +
                         std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamRef& p = params[i];
    if (!p.value->same_shape(*p.grad) || !p.value->same_shape(state.first_moment[i])) {
      throw DimensionError("adam_step: shape mismatch for parameter " + p.name);
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(state.beta1, t);
  const double bias2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamRef& p = params[i];
    if (p.frozen) continue;
    double* w = p.value->data();
    const double* g = p.grad->data();
    double* m = state.first_moment[i].data();
    double* v = state.second_moment[i].data();
    for (std::size_t j = 0; j < p.value->size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      w[j] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

GradientCheckReport finite_difference_check(std::span<const ParamRef> params,
                                            const std::function<LossProbe()>& probe,
                                            double h) {
  GradientCheckReport report;
  const std::uint64_t base_signature = probe().signature;
  for (const ParamRef& p : params) {
    if (p.frozen) continue;
    for (std::size_t j = 0; j < p.value->size(); ++j) {
      double& w = (*p.value)[j];
      const double original = w;
      w = original + h;
      const LossProbe plus = probe();
      w = original - h;
      const LossProbe minus = probe();
      w = original;
      if (plus.signature != base_signature || minus.signature != base_signature) {
        ++report.skipped_at_kinks;
        continue;
      }
      double delta = plus.loss - minus.loss;
      if (!plus.terms.empty()) {
        if (plus.terms.size() != minus.terms.size()) {
          throw DimensionError("loss probe term count changed under perturbation");
        }
        delta = 0.0;
        for (std::size_t k = 0; k < plus.terms.size(); ++k) delta += plus.terms[k] - minus.terms[k];
      }
      const double numeric = delta / (2.0 * h);
      const double analytic = (*p.grad)[j];
      const double scale =
          std::max({std::abs(analytic), std::abs(numeric), kGradientCheckFloor});
      const double rel = std::abs(analytic - numeric) / scale;
      ++report.checked;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_parameter = p.name + "[" + std::to_string(j) + "]";
      }
    }
  }
  return report;
}

}  // namespace selfhar::nd
