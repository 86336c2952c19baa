#pragma once

// The TPN network: a three-layer temporal convolution core with global max
// pooling, plus the task heads attached to it (activity recognition,
// transformation discrimination, linear evaluation).

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "selfhar/ndtensor.hpp"
#include "selfhar/rng.hpp"
#include "selfhar/tensor.hpp"

namespace selfhar {

inline constexpr std::size_t kTransformTaskCount = 8;
using TransformLabels = std::array<std::uint8_t, kTransformTaskCount>;

struct ConvSpec {
  std::size_t filters = 0;
  std::size_t width = 0;
  bool operator==(const ConvSpec&) const = default;
};

struct Architecture {
  std::array<ConvSpec, 3> conv{{{32, 24}, {64, 16}, {96, 8}}};
  std::size_t input_channels = 3;
  std::size_t har_hidden = 1024;
  std::size_t td_hidden = 256;
  double dropout_rate = 0.1;
  // One 256-unit layer shared by all eight discrimination outputs instead of
  // one per task.
  bool shared_td_hidden = false;

  std::size_t feature_length() const { return conv[2].filters; }
  // Shortest input the valid-padding core accepts.
  std::size_t min_input_length() const;
  bool operator==(const Architecture&) const = default;
};

enum class InitScheme { Gaussian, FanIn };

struct InitConfig {
  InitScheme scheme = InitScheme::Gaussian;
  double stddev = 0.01;  // Gaussian scheme only
};

struct ConvLayer {
  Tensor kernels;  // [filters x width x channels]
  Tensor bias;     // [filters]
  bool frozen = false;
};

struct DenseLayer {
  Tensor weights;  // [out x in]
  Tensor bias;     // [out]
  bool frozen = false;
};

struct HarHead {
  DenseLayer hidden;
  DenseLayer output;
};

struct TdHeads {
  std::vector<DenseLayer> hidden;  // 8 entries, or 1 when shared
  std::vector<DenseLayer> output;  // 8 entries, one unit each
};

struct LinearHead {
  DenseLayer output;
};

struct TpnModel {
  Architecture arch;
  std::size_t num_classes = 0;
  std::array<ConvLayer, 3> core;
  std::optional<HarHead> har;
  std::optional<TdHeads> td;
  std::optional<LinearHead> linear;

  std::size_t parameter_count() const;
};

TpnModel build_har_model(std::size_t num_classes, std::uint64_t seed,
                         const Architecture& arch = {}, const InitConfig& init = {});
TpnModel build_multitask_model(std::size_t num_classes, std::uint64_t seed,
                               const Architecture& arch = {}, const InitConfig& init = {},
                               bool with_har_head = true);

// Head surgery. Each attach draws fresh weights from `seed`.
void attach_har_head(TpnModel& model, std::uint64_t seed, const InitConfig& init = {});
// Linear head weights are always Gaussian(0, 0.01^2) with zero bias.
void attach_linear_head(TpnModel& model, std::uint64_t seed);
void detach_td_heads(TpnModel& model);
void detach_har_head(TpnModel& model);

// Copies the three convolution layers (values and frozen flags) from `from`.
void transfer_core(const TpnModel& from, TpnModel& to);

// Conv layers 1-2 frozen; conv 3 and every head trainable.
void freeze_for_finetune(TpnModel& model);
// Entire core frozen, and every head except the linear head.
void freeze_core_full(TpnModel& model);

// Same structure as `model` with all tensors zero. Used as a gradient buffer.
TpnModel zeros_like(const TpnModel& model);
void zero_out(TpnModel& model);

// Parameters in declaration order: core, HAR head, TD heads, linear head.
std::vector<nd::ParamRef> parameter_refs(TpnModel& model, TpnModel& grads);
std::vector<nd::ParamRef> parameter_refs(TpnModel& model);

// Which heads participate in a forward pass and the loss.
enum class Objective {
  Har,        // categorical cross-entropy on the activity head
  Linear,     // categorical cross-entropy on the linear head
  Transform,  // sum of the eight binary cross-entropies
  Multitask,  // activity + transformation losses
};

struct Example {
  const Tensor* window = nullptr;
  const Tensor* har_target = nullptr;          // probability vector
  const TransformLabels* td_labels = nullptr;  // 0/1 per task
};

struct ForwardTrace {
  std::array<Tensor, 3> conv_input;
  std::array<Tensor, 3> conv_pre;
  std::array<nd::DropoutResult, 2> dropped;
  Tensor core_activation;
  nd::PooledFeatures pooled;
  Tensor har_hidden_pre, har_hidden_post, har_probs;
  std::vector<Tensor> td_hidden_pre, td_hidden_post;
  std::array<double, kTransformTaskCount> td_logits{};
  std::array<double, kTransformTaskCount> td_probs{};
  Tensor linear_probs;
};

struct TaskLosses {
  double har = 0.0;        // classification loss of the activity or linear head
  double transform = 0.0;  // summed over the eight tasks
  double total() const { return har + transform; }
};

// `dropout_rng` null means evaluation mode.
TaskLosses forward_loss(const TpnModel& model, const Example& example, Objective objective,
                        Rng* dropout_rng, ForwardTrace& trace);
// Adds d(loss)/d(params) for one example into `grads`. Frozen layers are
// skipped; backpropagation stops below the lowest trainable layer.
void backward(const TpnModel& model, const ForwardTrace& trace, const Example& example,
              Objective objective, TpnModel& grads);

std::uint64_t regime_signature(const ForwardTrace& trace);

// Mean data loss over `batch`; grads hold the mean gradient afterwards.
TaskLosses batch_gradients(const TpnModel& model, std::span<const Example> batch,
                           Objective objective, Rng* dropout_rng, TpnModel& grads);

// Evaluation-mode inference.
Tensor core_features(const TpnModel& model, const Tensor& window);
Tensor predict_activity(const TpnModel& model, const Tensor& window);  // HAR head
Tensor predict_linear(const TpnModel& model, const Tensor& window);
std::array<double, kTransformTaskCount> predict_transforms(const TpnModel& model,
                                                           const Tensor& window);

// Versioned little-endian binary weight file.
inline constexpr std::uint32_t kWeightFormatVersion = 1;
void save_weights(const TpnModel& model, const std::filesystem::path& path);
TpnModel load_weights(const std::filesystem::path& path);

nlohmann::json architecture_json(const Architecture& arch);
Architecture architecture_from_json(const nlohmann::json& j);

}  // namespace selfhar
