#pragma once

// The eight signal transformations used for transformation discrimination and
// the nine-way augmented multi-task dataset built from selected windows.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "selfhar/datakit.hpp"
#include "selfhar/model.hpp"
#include "selfhar/rng.hpp"
#include "selfhar/tensor.hpp"

namespace selfhar {

// Ordinal is the transform label index.
enum class TransformKind : std::uint8_t {
  Noise = 0,
  Scale = 1,
  Rotate3D = 2,
  Invert = 3,
  TimeReverse = 4,
  Scramble = 5,
  TimeWarp = 6,
  ChannelShuffle = 7,
};

inline constexpr std::array<TransformKind, kTransformTaskCount> kAllTransforms{
    TransformKind::Noise,       TransformKind::Scale,    TransformKind::Rotate3D,
    TransformKind::Invert,      TransformKind::TimeReverse, TransformKind::Scramble,
    TransformKind::TimeWarp,    TransformKind::ChannelShuffle};

std::string_view transform_name(TransformKind kind);

struct TransformParams {
  double noise_sigma = 0.05;
  double scale_low = 0.9;
  double scale_high = 1.1;
  std::size_t scramble_segments = 4;
  std::size_t warp_knots = 4;
  double warp_sigma = 0.2;
  std::uint64_t seed = 0;

  void validate() const;  // ConfigError on a violated invariant
};

// Same-shape output. Rotate3D and ChannelShuffle need 3 channels.
Tensor apply_transform(const Tensor& window, TransformKind kind, const TransformParams& params,
                       Rng& rng);

// Uniform over SO(3) via a unit quaternion. Row-major 3x3.
std::array<double, 9> random_rotation(Rng& rng);

// Random permutation of 0..n-1 that is not the identity (n >= 2).
std::vector<std::size_t> non_identity_permutation(std::size_t n, Rng& rng);

// Sample positions (in [0, time-1], nondecreasing, endpoints fixed) at which
// the warped signal reads the source.
std::vector<double> warp_positions(std::size_t time, std::size_t knots, double sigma, Rng& rng);

struct TransformRecord {
  Tensor window;
  TransformLabels transform_labels{};  // at most one flag set
  Tensor har_soft_label;               // empty for transform-only datasets
  std::size_t source_index = 0;
};

// Nine records per source window: the original (all flags zero) followed by
// one record per kind in ordinal order. Each source window draws from its own
// stream derived from (params.seed, window index).
std::vector<TransformRecord> build_multitask_dataset(const Dataset& selected,
                                                     const TransformParams& params);
// Same layout without HAR labels, for transformation-discrimination-only
// pretraining on label-free data.
std::vector<TransformRecord> build_transform_dataset(const Dataset& windows,
                                                     const TransformParams& params);

// DataError when a record has more than one flag set.
void validate_records(const std::vector<TransformRecord>& records, bool require_har_label);

}  // namespace selfhar
