#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "selfhar/errors.hpp"
#include "selfhar/signals.hpp"

using namespace selfhar;

namespace {

Tensor random_window(Rng& rng, std::size_t time = kWindowLength) {
  return Tensor::gaussian({time, 3}, 1.0, rng);
}

std::vector<double> sorted_values(const Tensor& t) {
  std::vector<double> v(t.values().begin(), t.values().end());
  std::sort(v.begin(), v.end());
  return v;
}

Dataset small_selected(std::size_t n, std::size_t classes, Rng& rng) {
  Dataset ds;
  ds.role = DatasetRole::Selected;
  ds.label_vocabulary = synthetic_vocabulary(classes);
  for (std::size_t i = 0; i < n; ++i) {
    Window w;
    w.values = random_window(rng, 60);
    w.user_id = "u";
    Tensor soft({classes}, 1.0 / static_cast<double>(classes));
    w.soft_label = soft;
    ds.windows.push_back(std::move(w));
  }
  return ds;
}

}  // namespace

TEST(Transforms, NamesAreDistinct) {
  std::vector<std::string_view> names;
  for (auto k : kAllTransforms) names.push_back(transform_name(k));
  std::sort(names.begin(), names.end());
  EXPECT_EQ(std::unique(names.begin(), names.end()), names.end());
}

TEST(Transforms, ShapePreservedForAllKinds) {
  Rng rng = make_rng(1, 0);
  const TransformParams params;
  const Tensor w = random_window(rng);
  for (auto k : kAllTransforms) {
    const Tensor out = apply_transform(w, k, params, rng);
    EXPECT_EQ(out.shape(), w.shape()) << transform_name(k);
    EXPECT_TRUE(out.all_finite());
  }
}

TEST(Transforms, InvertAndTimeReverseAreInvolutions) {
  Rng rng = make_rng(2, 0);
  const TransformParams params;
  const Tensor w = random_window(rng);
  for (auto k : {TransformKind::Invert, TransformKind::TimeReverse}) {
    const Tensor once = apply_transform(w, k, params, rng);
    EXPECT_FALSE(once == w);
    EXPECT_EQ(apply_transform(once, k, params, rng), w);
  }
}

TEST(Transforms, RotationPreservesNorms) {
  Rng rng = make_rng(3, 0);
  const Tensor w = random_window(rng);
  const Tensor r = apply_transform(w, TransformKind::Rotate3D, {}, rng);
  for (std::size_t t = 0; t < w.dim(0); ++t) {
    const double a = std::hypot(w.at(t, 0), w.at(t, 1), w.at(t, 2));
    const double b = std::hypot(r.at(t, 0), r.at(t, 1), r.at(t, 2));
    EXPECT_NEAR(a, b, 1e-9);
  }
}

TEST(Transforms, RandomRotationIsProperOrthogonal) {
  Rng rng = make_rng(4, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto R = random_rotation(rng);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double dot = 0.0;
        for (int k = 0; k < 3; ++k) dot += R[3 * i + k] * R[3 * j + k];
        EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-12);
      }
    }
    const double det = R[0] * (R[4] * R[8] - R[5] * R[7]) - R[1] * (R[3] * R[8] - R[5] * R[6]) +
                       R[2] * (R[3] * R[7] - R[4] * R[6]);
    EXPECT_NEAR(det, 1.0, 1e-12);
  }
}

TEST(Transforms, PermutationsKeepTheMultiset) {
  Rng rng = make_rng(5, 0);
  const Tensor w = random_window(rng);
  for (auto k : {TransformKind::Scramble, TransformKind::ChannelShuffle}) {
    const Tensor out = apply_transform(w, k, {}, rng);
    EXPECT_EQ(sorted_values(out), sorted_values(w));
    EXPECT_FALSE(out == w) << transform_name(k);
  }
}

TEST(Transforms, ScrambleMovesWholeSegments) {
  Rng rng = make_rng(6, 0);
  Tensor w({10, 3});
  for (std::size_t t = 0; t < 10; ++t) {
    for (std::size_t c = 0; c < 3; ++c) w.at(t, c) = static_cast<double>(t);
  }
  TransformParams params;
  params.scramble_segments = 3;  // chunks of 3, 3 and 4 samples
  const Tensor out = apply_transform(w, TransformKind::Scramble, params, rng);
  std::size_t breaks = 0;
  for (std::size_t t = 1; t < 10; ++t) breaks += out.at(t, 0) != out.at(t - 1, 0) + 1 ? 1 : 0;
  EXPECT_GE(breaks, 1u);
  EXPECT_LE(breaks, 2u);
}

TEST(Transforms, NonIdentityPermutation) {
  Rng rng = make_rng(7, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = non_identity_permutation(2 + trial % 4, rng);
    std::vector<std::size_t> id(p.size());
    for (std::size_t i = 0; i < id.size(); ++i) id[i] = i;
    EXPECT_NE(p, id);
    EXPECT_TRUE(std::is_permutation(p.begin(), p.end(), id.begin()));
  }
  EXPECT_THROW(non_identity_permutation(1, rng), ConfigError);
}

TEST(Transforms, WarpPositionsAreMonotoneWithFixedEnds) {
  Rng rng = make_rng(8, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pos = warp_positions(400, 4, 0.2, rng);
    ASSERT_EQ(pos.size(), 400u);
    EXPECT_NEAR(pos.front(), 0.0, 1e-12);
    EXPECT_NEAR(pos.back(), 399.0, 1e-9);
    for (std::size_t t = 1; t < pos.size(); ++t) EXPECT_GE(pos[t], pos[t - 1]);
  }
  const auto flat = warp_positions(50, 4, 0.0, rng);
  for (std::size_t t = 0; t < 50; ++t) EXPECT_NEAR(flat[t], static_cast<double>(t), 1e-9);
}

TEST(Transforms, ScaleStaysInRangeAndNoiseHasRequestedSpread) {
  Rng rng = make_rng(9, 0);
  Tensor ones({400, 3}, 1.0);
  TransformParams params;
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor s = apply_transform(ones, TransformKind::Scale, params, rng);
    EXPECT_GE(s[0], params.scale_low);
    EXPECT_LE(s[0], params.scale_high);
    EXPECT_EQ(s[0], s[1199]);
  }
  const Tensor n = apply_transform(ones, TransformKind::Noise, params, rng);
  double sq = 0.0;
  for (double v : n.values()) sq += (v - 1.0) * (v - 1.0);
  EXPECT_NEAR(std::sqrt(sq / 1200.0), params.noise_sigma, 0.006);
}

TEST(Transforms, RejectsBadInput) {
  Rng rng = make_rng(10, 0);
  Tensor w = random_window(rng, 50);
  w.at(3, 1) = std::nan("");
  EXPECT_THROW(apply_transform(w, TransformKind::Invert, {}, rng), DataError);
  EXPECT_THROW(apply_transform(Tensor({50, 2}, 1.0), TransformKind::Rotate3D, {}, rng), DimensionError);
  TransformParams bad;
  bad.scale_low = 1.2;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(MultitaskDataset, NineRecordsPerWindowWithOneFlag) {
  Rng rng = make_rng(11, 0);
  const Dataset s = small_selected(7, 4, rng);
  TransformParams params;
  params.seed = 3;
  const auto records = build_multitask_dataset(s, params);
  ASSERT_EQ(records.size(), 9u * s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& orig = records[9 * i];
    EXPECT_EQ(orig.window, s.windows[i].values);
    EXPECT_EQ(std::count(orig.transform_labels.begin(), orig.transform_labels.end(), 1), 0);
    for (std::size_t k = 0; k < kTransformTaskCount; ++k) {
      const auto& r = records[9 * i + 1 + k];
      EXPECT_EQ(std::count(r.transform_labels.begin(), r.transform_labels.end(), 1), 1);
      EXPECT_EQ(r.transform_labels[k], 1);
      EXPECT_EQ(r.har_soft_label, *s.windows[i].soft_label);
      EXPECT_EQ(r.source_index, i);
    }
  }
  EXPECT_NO_THROW(validate_records(records, true));
  const auto again = build_multitask_dataset(s, params);
  for (std::size_t i = 0; i < records.size(); ++i) EXPECT_EQ(records[i].window, again[i].window);
}

TEST(MultitaskDataset, RejectsMissingSoftLabelsAndMixedFlags) {
  Rng rng = make_rng(12, 0);
  Dataset s = small_selected(2, 3, rng);
  s.windows[1].soft_label.reset();
  EXPECT_THROW(build_multitask_dataset(s, {}), DataError);
  auto records = build_transform_dataset(s, {});
  EXPECT_EQ(records.size(), 18u);
  EXPECT_TRUE(records[0].har_soft_label.empty());
  EXPECT_NO_THROW(validate_records(records, false));
  EXPECT_THROW(validate_records(records, true), DataError);
  records[3].transform_labels[5] = 1;
  EXPECT_THROW(validate_records(records, false), DataError);
}
