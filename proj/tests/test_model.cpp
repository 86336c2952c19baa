#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "gradcheck.hpp"
#include "selfhar/errors.hpp"
#include "selfhar/model.hpp"

using namespace selfhar;

namespace {

bool same_tensors(const TpnModel& a, const TpnModel& b) {
  TpnModel ca = a, cb = b;
  const auto pa = parameter_refs(ca), pb = parameter_refs(cb);
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (!(*pa[i].value == *pb[i].value) || pa[i].frozen != pb[i].frozen) return false;
  }
  return true;
}

}  // namespace

TEST(Model, FullArchitectureParameterCount) {
  // conv: 24*3*32+32, 16*32*64+64, 8*64*96+96; head: 96*1024+1024, 1024*6+6
  const std::size_t expected = 2336 + 32832 + 49248 + 99328 + 6150;
  EXPECT_EQ(build_har_model(6, 0).parameter_count(), expected);
}

TEST(Model, PredictionsAreDistributions) {
  const TpnModel m = build_multitask_model(4, 3, gradcheck::scaled_architecture());
  Rng rng = make_rng(3, 1);
  const Tensor w = Tensor::gaussian({50, 3}, 1.0, rng);
  const Tensor p = predict_activity(m, w);
  double s = 0.0;
  for (double v : p.values()) s += v;
  EXPECT_NEAR(s, 1.0, 1e-12);
  for (double q : predict_transforms(m, w)) {
    EXPECT_GT(q, 0.0);
    EXPECT_LT(q, 1.0);
  }
  EXPECT_EQ(core_features(m, w).dim(0), 8u);
  EXPECT_THROW(predict_activity(m, Tensor::gaussian({10, 3}, 1.0, rng)), DimensionError);
}

TEST(Model, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (Objective obj : {Objective::Har, Objective::Transform, Objective::Multitask, Objective::Linear}) {
      const auto report = gradcheck::check_tpn(seed, obj);
      EXPECT_LT(report.max_relative_error, 1e-4) << "seed " << seed << " worst " << report.worst_parameter;
      EXPECT_GT(report.checked, 0u);
    }
  }
}

TEST(Model, SharedTransformHiddenLayer) {
  Architecture a = gradcheck::scaled_architecture();
  a.shared_td_hidden = true;
  const TpnModel m = build_multitask_model(3, 1, a);
  ASSERT_TRUE(m.td.has_value());
  EXPECT_EQ(m.td->hidden.size(), 1u);
  EXPECT_EQ(m.td->output.size(), kTransformTaskCount);
  EXPECT_EQ(build_multitask_model(3, 1, gradcheck::scaled_architecture()).td->hidden.size(),
            kTransformTaskCount);
}

TEST(Model, HeadSurgeryAndFreezing) {
  TpnModel m = build_multitask_model(3, 5, gradcheck::scaled_architecture());
  const TpnModel before = m;
  detach_td_heads(m);
  EXPECT_FALSE(m.td.has_value());
  freeze_for_finetune(m);
  EXPECT_TRUE(m.core[0].frozen);
  EXPECT_TRUE(m.core[1].frozen);
  EXPECT_FALSE(m.core[2].frozen);
  EXPECT_FALSE(m.har->hidden.frozen);
  attach_linear_head(m, 9);
  freeze_core_full(m);
  for (const auto& c : m.core) EXPECT_TRUE(c.frozen);
  EXPECT_TRUE(m.har->output.frozen);
  EXPECT_FALSE(m.linear->output.frozen);
  for (double b : m.linear->output.bias.values()) EXPECT_EQ(b, 0.0);
  EXPECT_EQ(m.core[0].kernels, before.core[0].kernels);
}

TEST(Model, TransferCoreCopiesValuesAndFlags) {
  TpnModel a = build_har_model(3, 1, gradcheck::scaled_architecture());
  TpnModel b = build_har_model(3, 2, gradcheck::scaled_architecture());
  freeze_for_finetune(a);
  transfer_core(a, b);
  EXPECT_EQ(a.core[2].kernels, b.core[2].kernels);
  EXPECT_TRUE(b.core[1].frozen);
  EXPECT_FALSE(a.har->output.weights == b.har->output.weights);
}

TEST(Model, InitializationIsSeeded) {
  const auto arch = gradcheck::scaled_architecture();
  EXPECT_TRUE(same_tensors(build_multitask_model(3, 4, arch), build_multitask_model(3, 4, arch)));
  EXPECT_FALSE(same_tensors(build_multitask_model(3, 4, arch), build_multitask_model(3, 5, arch)));
}

TEST(Model, GaussianInitHasRequestedSpread) {
  const TpnModel m = build_har_model(6, 11);
  const auto& k = m.core[1].kernels;
  double sq = 0.0;
  for (double v : k.values()) sq += v * v;
  EXPECT_NEAR(std::sqrt(sq / static_cast<double>(k.size())), 0.01, 0.0005);
}

TEST(Model, WeightsRoundTripExactly) {
  TpnModel m = build_multitask_model(3, 8, gradcheck::scaled_architecture());
  freeze_for_finetune(m);
  const auto path = std::filesystem::temp_directory_path() / "selfhar_model_roundtrip.weights";
  save_weights(m, path);
  const TpnModel back = load_weights(path);
  EXPECT_TRUE(same_tensors(m, back));
  EXPECT_EQ(back.arch, m.arch);
  EXPECT_EQ(back.num_classes, 3u);
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << "garbage";
  }
  EXPECT_THROW(load_weights(path), FormatError);
  std::filesystem::remove(path);
}

TEST(Model, ArchitectureJsonRoundTrip) {
  Architecture a = gradcheck::scaled_architecture();
  a.shared_td_hidden = true;
  EXPECT_EQ(architecture_from_json(architecture_json(a)), a);
}
