#include <gtest/gtest.h>

#include <algorithm>

#include "gradcheck.hpp"
#include "selfhar/errors.hpp"
#include "selfhar/training.hpp"

using namespace selfhar;

namespace {

// Two classes separated by the sign of a constant offset on channel 0.
Dataset toy_dataset(std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  Dataset ds;
  ds.label_vocabulary = {"neg", "pos"};
  for (std::size_t i = 0; i < n; ++i) {
    Window w;
    w.values = Tensor::gaussian({40, 3}, 0.3, rng);
    const std::size_t label = i % 2;
    for (std::size_t t = 0; t < 40; ++t) w.values.at(t, 0) += label == 1 ? 1.0 : -1.0;
    w.label = label;
    w.user_id = "u";
    ds.windows.push_back(std::move(w));
  }
  return ds;
}

TrainingSchedule quick_schedule() {
  TrainingSchedule s;
  s.batch_size = 8;
  s.learning_rate = 3e-3;
  s.patience = 0;
  return s;
}

}  // namespace

TEST(Schedule, ValidatesFields) {
  TrainingSchedule s;
  EXPECT_NO_THROW(s.validate());
  s.batch_size = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = {};
  s.learning_rate = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Examples, OneHotAndSoftTargets) {
  const Dataset ds = toy_dataset(4, 1);
  const ExampleSet set = labeled_examples(ds);
  ASSERT_EQ(set.examples.size(), 4u);
  EXPECT_EQ((*set.examples[1].har_target)[1], 1.0);
  EXPECT_EQ((*set.examples[1].har_target)[0], 0.0);
  EXPECT_THROW(soft_examples(ds), DataError);
  Dataset unl = ds;
  unl.windows[2].label.reset();
  EXPECT_THROW(labeled_examples(unl), DataError);
}

TEST(Training, LearnsSeparableToyProblemAndKeepsBestSnapshot) {
  const Dataset train = toy_dataset(32, 2), val = toy_dataset(16, 3);
  const auto tr = labeled_examples(train), va = labeled_examples(val);
  const TpnModel init = build_har_model(2, 7, gradcheck::scaled_architecture(), {InitScheme::FanIn, 0.0});
  const nd::RegularizationConfig reg{1e-4};
  TrainSpec spec{Objective::Har, 15, "toy", 4};
  const TrainResult r = train_model(init, tr.examples, va.examples, spec, quick_schedule(), reg);
  ASSERT_EQ(r.history.size(), 15u);
  EXPECT_EQ(r.history.front().stage, "toy");
  EXPECT_LT(r.history.back().train_loss, r.history.front().train_loss);
  EXPECT_NEAR(r.initial_validation_loss, evaluation_loss(init, va.examples, Objective::Har, reg), 1e-12);
  double best = r.history.front().validation_loss;
  std::size_t best_epoch = 1;
  for (const auto& h : r.history) {
    if (h.validation_loss < best) {
      best = h.validation_loss;
      best_epoch = h.epoch;
    }
  }
  EXPECT_EQ(r.best_epoch, best_epoch);
  EXPECT_DOUBLE_EQ(r.best_validation_loss, best);
  EXPECT_NEAR(evaluation_loss(r.model, va.examples, Objective::Har, reg), best, 1e-12);
  EXPECT_LT(best, 0.2);
}

TEST(Training, DeterministicForFixedSeed) {
  const Dataset train = toy_dataset(16, 5), val = toy_dataset(8, 6);
  const auto tr = labeled_examples(train), va = labeled_examples(val);
  const TpnModel init = build_har_model(2, 1, gradcheck::scaled_architecture());
  TrainSpec spec{Objective::Har, 3, "det", 9};
  const auto a = train_model(init, tr.examples, va.examples, spec, quick_schedule(), {});
  const auto b = train_model(init, tr.examples, va.examples, spec, quick_schedule(), {});
  EXPECT_EQ(a.model.har->output.weights, b.model.har->output.weights);
  EXPECT_EQ(a.history.back().train_loss, b.history.back().train_loss);
}

TEST(Training, EarlyStoppingHonoursPatience) {
  const Dataset train = toy_dataset(16, 7), val = toy_dataset(8, 8);
  const auto tr = labeled_examples(train), va = labeled_examples(val);
  TrainingSchedule s = quick_schedule();
  s.patience = 2;
  s.learning_rate = 0.05;  // noisy enough to stall
  const TrainResult r = train_model(build_har_model(2, 2, gradcheck::scaled_architecture()), tr.examples,
                                    va.examples, {Objective::Har, 40, "es", 1}, s, {});
  EXPECT_LE(r.history.size(), r.best_epoch + 2);
}

TEST(Training, FrozenLayersStayBitwiseIdentical) {
  const Dataset train = toy_dataset(16, 9), val = toy_dataset(8, 10);
  const auto tr = labeled_examples(train), va = labeled_examples(val);
  TpnModel m = build_har_model(2, 3, gradcheck::scaled_architecture());
  freeze_for_finetune(m);
  TrainingSchedule s = quick_schedule();
  s.max_batches_per_epoch = 1;
  const TrainResult r = train_model(m, tr.examples, va.examples, {Objective::Har, 10, "fz", 1}, s, {1e-2});
  EXPECT_EQ(r.model.core[0].kernels, m.core[0].kernels);
  EXPECT_EQ(r.model.core[1].bias, m.core[1].bias);
  EXPECT_FALSE(r.model.core[2].kernels == m.core[2].kernels);
}

TEST(Training, RejectsEmptyValidation) {
  const Dataset train = toy_dataset(4, 11);
  const auto tr = labeled_examples(train);
  EXPECT_THROW(train_model(build_har_model(2, 1, gradcheck::scaled_architecture()), tr.examples, {},
                           {Objective::Har, 1, "x", 0}, quick_schedule(), {}),
               Error);
}
