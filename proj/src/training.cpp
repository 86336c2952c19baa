#include "selfhar/training.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "selfhar/errors.hpp"
#include "selfhar/rng.hpp"

namespace selfhar {

void TrainingSchedule::validate() const {
  if (teacher_epochs < 1 || pretrain_epochs < 1 || finetune_epochs < 1) {
    throw ConfigError("schedule epochs must be at least 1");
  }
  if (batch_size < 1) throw ConfigError("schedule.batch_size must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("schedule.learning_rate must be positive");
}

double evaluation_loss(const TpnModel& model, std::span<const Example> examples,
                       Objective objective, const nd::RegularizationConfig& regularization) {
  if (examples.empty()) throw ConfigError("evaluation loss over an empty set");
  ForwardTrace trace;
  double sum = 0.0;
  for (const Example& ex : examples) sum += forward_loss(model, ex, objective, nullptr, trace).total();
  // parameter_refs needs mutable access but l2_penalty_value only reads.
  auto refs = parameter_refs(const_cast<TpnModel&>(model));
  return sum / static_cast<double>(examples.size()) +
         nd::l2_penalty_value(refs, regularization);
}

TrainResult train_model(TpnModel model, std::span<const Example> train,
                        std::span<const Example> validation, const TrainSpec& spec,
                        const TrainingSchedule& schedule,
                        const nd::RegularizationConfig& regularization) {
  schedule.validate();
  if (spec.epochs < 1) throw ConfigError(spec.stage + ": epochs must be at least 1");
  if (train.empty()) throw ConfigError(spec.stage + ": empty training partition");
  if (validation.empty()) throw ConfigError(spec.stage + ": empty validation partition");

  TrainResult result;
  TpnModel grads = zeros_like(model);
  const auto refs = parameter_refs(model, grads);
  nd::AdamState adam;
  adam.learning_rate = schedule.learning_rate;
  Rng dropout_rng = make_rng(spec.seed, 0);

  result.initial_validation_loss = evaluation_loss(model, validation, spec.objective, regularization);
  result.best_validation_loss = std::numeric_limits<double>::infinity();
  result.model = model;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Example> batch;
  batch.reserve(schedule.batch_size);
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= spec.epochs; ++epoch) {
    Rng shuffle_rng = make_rng(spec.seed, epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    std::size_t batches = (order.size() + schedule.batch_size - 1) / schedule.batch_size;
    if (schedule.max_batches_per_epoch > 0) {
      batches = std::min(batches, schedule.max_batches_per_epoch);
    }
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      batch.clear();
      const std::size_t begin = b * schedule.batch_size;
      const std::size_t end = std::min(begin + schedule.batch_size, order.size());
      for (std::size_t i = begin; i < end; ++i) batch.push_back(train[order[i]]);
      const TaskLosses losses = batch_gradients(model, batch, spec.objective, &dropout_rng, grads);
      const double l2 = nd::apply_l2_penalty(refs, regularization);
      nd::adam_step(refs, adam);
      loss_sum += losses.total() + l2;
    }
    EpochRecord rec;
    rec.stage = spec.stage;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    rec.validation_loss = evaluation_loss(model, validation, spec.objective, regularization);
    result.history.push_back(rec);
    if (rec.validation_loss < result.best_validation_loss) {
      result.best_validation_loss = rec.validation_loss;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else if (schedule.patience > 0 && ++since_best >= schedule.patience) {
      break;
    }
  }
  return result;
}

namespace {

Tensor one_hot(std::size_t label, std::size_t classes) {
  Tensor t({classes});
  t[label] = 1.0;
  return t;
}

}  // namespace

ExampleSet labeled_examples(const Dataset& dataset) {
  ExampleSet set;
  set.targets.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Window& w = dataset.windows[i];
    if (!w.label) throw DataError("window " + std::to_string(i) + " has no activity label");
    if (*w.label >= dataset.num_classes()) throw DataError("label outside the vocabulary");
    set.targets.push_back(one_hot(*w.label, dataset.num_classes()));
  }
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    set.examples.push_back({&dataset.windows[i].values, &set.targets[i], nullptr});
  }
  return set;
}

ExampleSet soft_examples(const Dataset& dataset) {
  ExampleSet set;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Window& w = dataset.windows[i];
    if (!w.soft_label) throw DataError("window " + std::to_string(i) + " has no soft label");
    set.examples.push_back({&w.values, &*w.soft_label, nullptr});
  }
  return set;
}

}  // namespace selfhar
