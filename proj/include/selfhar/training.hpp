#pragma once

// Minibatch Adam training with per-epoch validation and best-snapshot
// selection. Shared by the pipeline stages and linear evaluation.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "selfhar/datakit.hpp"
#include "selfhar/model.hpp"
#include "selfhar/ndtensor.hpp"

namespace selfhar {

struct TrainingSchedule {
  std::size_t teacher_epochs = 30;
  std::size_t pretrain_epochs = 30;
  std::size_t finetune_epochs = 30;
  std::size_t batch_size = 64;
  std::size_t patience = 5;               // 0 disables early stopping
  std::size_t max_batches_per_epoch = 0;  // 0 means a full pass
  double learning_rate = 3e-4;

  void validate() const;
};

struct EpochRecord {
  std::string stage;
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct TrainResult {
  TpnModel model;  // snapshot with the lowest validation loss
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_validation_loss = 0.0;
  double initial_validation_loss = 0.0;  // before the first update
};

struct TrainSpec {
  Objective objective = Objective::Har;
  std::size_t epochs = 30;
  std::string stage;
  std::uint64_t seed = 0;
};

// Mean data loss over `examples` in evaluation mode plus the L2 penalty of the
// model's trainable weights.
double evaluation_loss(const TpnModel& model, std::span<const Example> examples,
                       Objective objective, const nd::RegularizationConfig& regularization);

TrainResult train_model(TpnModel model, std::span<const Example> train,
                        std::span<const Example> validation, const TrainSpec& spec,
                        const TrainingSchedule& schedule,
                        const nd::RegularizationConfig& regularization);

// Owning storage for one-hot or soft targets so Examples can point into it.
struct ExampleSet {
  std::vector<Tensor> targets;
  std::vector<Example> examples;
};

// One-hot targets from ground-truth labels. DataError on an unlabeled window.
ExampleSet labeled_examples(const Dataset& dataset);
// Soft-label targets. DataError when a window lacks one.
ExampleSet soft_examples(const Dataset& dataset);

}  // namespace selfhar
