#include "selfhar/signals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "selfhar/errors.hpp"

namespace selfhar {

std::string_view transform_name(TransformKind kind) {
  switch (kind) {
    case TransformKind::Noise: return "noise";
    case TransformKind::Scale: return "scale";
    case TransformKind::Rotate3D: return "rotate";
    case TransformKind::Invert: return "invert";
    case TransformKind::TimeReverse: return "time_reverse";
    case TransformKind::Scramble: return "scramble";
    case TransformKind::TimeWarp: return "time_warp";
    case TransformKind::ChannelShuffle: return "channel_shuffle";
  }
  return "unknown";
}

void TransformParams::validate() const {
  if (!(noise_sigma > 0.0)) throw ConfigError("transforms.noise_sigma must be positive");
  if (!(scale_low < scale_high)) throw ConfigError("transforms.scale_low must be below scale_high");
  if (scramble_segments < 2) throw ConfigError("transforms.scramble_segments must be at least 2");
  if (warp_knots < 2) throw ConfigError("transforms.warp_knots must be at least 2");
  if (!(warp_sigma >= 0.0)) throw ConfigError("transforms.warp_sigma must be nonnegative");
}

std::array<double, 9> random_rotation(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double u1 = u(rng), u2 = u(rng), u3 = u(rng);
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const double tau = 2.0 * std::numbers::pi;
  const double x = a * std::sin(tau * u2), y = a * std::cos(tau * u2);
  const double z = b * std::sin(tau * u3), w = b * std::cos(tau * u3);
  return {1 - 2 * (y * y + z * z), 2 * (x * y - z * w),     2 * (x * z + y * w),
          2 * (x * y + z * w),     1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
          2 * (x * z - y * w),     2 * (y * z + x * w),     1 - 2 * (x * x + y * y)};
}

std::vector<std::size_t> non_identity_permutation(std::size_t n, Rng& rng) {
  if (n < 2) throw ConfigError("a non-identity permutation needs at least 2 elements");
  std::vector<std::size_t> perm(n);
  while (true) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < n; ++i) {
      if (perm[i] != i) return perm;
    }
  }
}

std::vector<double> warp_positions(std::size_t time, std::size_t knots, double sigma, Rng& rng) {
  if (knots < 2) throw ConfigError("time warp needs at least 2 knots");
  std::normal_distribution<double> g(1.0, sigma);
  // Speed multipliers at evenly spaced knots, linearly interpolated in time,
  // then integrated. Clamping keeps the curve strictly increasing.
  std::vector<double> speed_knots(knots);
  for (auto& s : speed_knots) s = std::max(g(rng), 0.1);
  std::vector<double> pos(time, 0.0);
  if (time == 1) return pos;
  const double span = static_cast<double>(time - 1);
  double acc = 0.0;
  for (std::size_t t = 1; t < time; ++t) {
    const double x = (static_cast<double>(t) - 0.5) / span * static_cast<double>(knots - 1);
    const auto k = std::min(static_cast<std::size_t>(x), knots - 2);
    const double frac = x - static_cast<double>(k);
    acc += speed_knots[k] * (1.0 - frac) + speed_knots[k + 1] * frac;
    pos[t] = acc;
  }
  for (auto& p : pos) p = p / acc * span;
  pos.back() = span;
  return pos;
}

namespace {

void require_finite(const Tensor& window) {
  if (window.rank() != 2) {
    throw DimensionError("transform input must be [time x channels], got " +
                         shape_string(window.shape()));
  }
  if (!window.all_finite()) throw DataError("transform input contains non-finite values");
}

}  // namespace

Tensor apply_transform(const Tensor& window, TransformKind kind, const TransformParams& params,
                       Rng& rng) {
  require_finite(window);
  const std::size_t T = window.dim(0), C = window.dim(1);
  Tensor out = window;
  switch (kind) {
    case TransformKind::Noise: {
      std::normal_distribution<double> g(0.0, params.noise_sigma);
      for (auto& v : out.storage()) v += g(rng);
      break;
    }
    case TransformKind::Scale: {
      const double s = std::uniform_real_distribution<double>(params.scale_low, params.scale_high)(rng);
      for (auto& v : out.storage()) v *= s;
      break;
    }
    case TransformKind::Rotate3D: {
      if (C != 3) throw DimensionError("Rotate3D needs 3 channels, got " + std::to_string(C));
      const auto R = random_rotation(rng);
      for (std::size_t t = 0; t < T; ++t) {
        const double x = window.at(t, 0), y = window.at(t, 1), z = window.at(t, 2);
        out.at(t, 0) = R[0] * x + R[1] * y + R[2] * z;
        out.at(t, 1) = R[3] * x + R[4] * y + R[5] * z;
        out.at(t, 2) = R[6] * x + R[7] * y + R[8] * z;
      }
      break;
    }
    case TransformKind::Invert:
      for (auto& v : out.storage()) v = -v;
      break;
    case TransformKind::TimeReverse:
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t c = 0; c < C; ++c) out.at(t, c) = window.at(T - 1 - t, c);
      }
      break;
    case TransformKind::Scramble: {
      const std::size_t segs = params.scramble_segments;
      if (T < segs) throw DimensionError("window shorter than the scramble segment count");
      // Equal chunks; the last one absorbs any remainder.
      std::vector<std::size_t> starts(segs + 1);
      for (std::size_t k = 0; k < segs; ++k) starts[k] = k * (T / segs);
      starts[segs] = T;
      const auto perm = non_identity_permutation(segs, rng);
      std::size_t dst = 0;
      for (auto k : perm) {
        for (std::size_t t = starts[k]; t < starts[k + 1]; ++t, ++dst) {
          for (std::size_t c = 0; c < C; ++c) out.at(dst, c) = window.at(t, c);
        }
      }
      break;
    }
    case TransformKind::TimeWarp: {
      const auto pos = warp_positions(T, params.warp_knots, params.warp_sigma, rng);
      for (std::size_t t = 0; t < T; ++t) {
        const auto lo = std::min(static_cast<std::size_t>(pos[t]), T - 1);
        const std::size_t hi = std::min(lo + 1, T - 1);
        const double frac = pos[t] - static_cast<double>(lo);
        for (std::size_t c = 0; c < C; ++c) {
          out.at(t, c) = window.at(lo, c) * (1.0 - frac) + window.at(hi, c) * frac;
        }
      }
      break;
    }
    case TransformKind::ChannelShuffle: {
      if (C < 2) throw DimensionError("ChannelShuffle needs at least 2 channels");
      const auto perm = non_identity_permutation(C, rng);
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t c = 0; c < C; ++c) out.at(t, c) = window.at(t, perm[c]);
      }
      break;
    }
  }
  return out;
}

namespace {

std::vector<TransformRecord> augment(const Dataset& source, const TransformParams& params,
                                     bool with_har) {
  params.validate();
  std::vector<TransformRecord> out;
  out.reserve(source.size() * (kTransformTaskCount + 1));
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Window& w = source.windows[i];
    Tensor soft;
    if (with_har) {
      if (!w.soft_label) {
        throw DataError("selected window " + std::to_string(i) + " has no soft HAR label");
      }
      soft = *w.soft_label;
    }
    Rng rng = make_rng(params.seed, i);
    out.push_back({w.values, TransformLabels{}, soft, i});
    for (auto kind : kAllTransforms) {
      TransformRecord rec{apply_transform(w.values, kind, params, rng), TransformLabels{}, soft, i};
      rec.transform_labels[static_cast<std::size_t>(kind)] = 1;
      out.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace

std::vector<TransformRecord> build_multitask_dataset(const Dataset& selected,
                                                     const TransformParams& params) {
  return augment(selected, params, true);
}

std::vector<TransformRecord> build_transform_dataset(const Dataset& windows,
                                                     const TransformParams& params) {
  return augment(windows, params, false);
}

void validate_records(const std::vector<TransformRecord>& records, bool require_har_label) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    int flags = 0;
    for (auto f : r.transform_labels) {
      if (f > 1) throw DataError("record " + std::to_string(i) + " has a non-binary transform flag");
      flags += f;
    }
    if (flags > 1) {
      throw DataError("record " + std::to_string(i) + " has " + std::to_string(flags) +
                      " transform flags set");
    }
    if (require_har_label && r.har_soft_label.empty()) {
      throw DataError("record " + std::to_string(i) + " has no HAR label");
    }
  }
}

}  // namespace selfhar
