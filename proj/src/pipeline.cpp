#include "selfhar/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <thread>

#include "selfhar/errors.hpp"
#include "selfhar/rng.hpp"

namespace selfhar {

namespace {

// Stream indices for derive_seed(config.seed, ...). Each stage draws from its
// own stream so that reusing one stage's output elsewhere is exact.
enum Stream : std::uint64_t {
  kTeacherInit = 1,
  kTeacherTrain,
  kStudentInit,
  kStudentPretrain,
  kFinetune,
  kTransformsTrain,
  kTransformsValidation,
  kPretrainSplit,
  kTdInit,
  kTdPretrain,
  kTdFinetune,
  kTdSplit,
};

struct NameEntry {
  Configuration c;
  std::string_view name;
};

constexpr NameEntry kNames[] = {
    {Configuration::FullySupervised, "fully_supervised"},
    {Configuration::TransformationDiscrimination, "transformation_discrimination"},
    {Configuration::SelfTraining, "self_training"},
    {Configuration::TransformationKnowledgeDistillation, "transformation_knowledge_distillation"},
    {Configuration::SelfHAR, "selfhar"},
};

}  // namespace

std::string_view configuration_name(Configuration c) {
  for (const auto& e : kNames) {
    if (e.c == c) return e.name;
  }
  return "unknown";
}

Configuration configuration_from_name(std::string_view name) {
  for (const auto& e : kNames) {
    if (e.name == name) return e.c;
  }
  throw ConfigError("unknown configuration '" + std::string(name) + "'");
}

std::vector<int> components(Configuration c) {
  switch (c) {
    case Configuration::FullySupervised: return {1};
    case Configuration::TransformationDiscrimination: return {0, 1};
    case Configuration::SelfTraining: return {1, 2, 4};
    case Configuration::TransformationKnowledgeDistillation: return {0, 1, 2, 4};
    case Configuration::SelfHAR: return {1, 2, 3, 4};
  }
  return {};
}

bool needs_unlabeled(Configuration c) { return c != Configuration::FullySupervised; }

void SelectionPolicy::validate() const {
  if (!(confidence_threshold > 0.0 && confidence_threshold <= 1.0)) {
    throw ConfigError("selection.confidence_threshold must lie in (0, 1]");
  }
  if (per_class_cap < 1) throw ConfigError("selection.per_class_cap must be at least 1");
}

void PipelineConfig::validate() const {
  selection.validate();
  schedule.validate();
  transforms.validate();
  if (!(regularization.l2_factor >= 0.0)) throw ConfigError("regularization.l2_factor must be nonnegative");
  if (!(pretrain_validation_fraction > 0.0 && pretrain_validation_fraction < 1.0)) {
    throw ConfigError("pretrain_validation_fraction must lie in (0, 1)");
  }
  if (n_resamples < 1) throw ConfigError("n_resamples must be at least 1");
  if (!(architecture.dropout_rate >= 0.0 && architecture.dropout_rate < 1.0)) {
    throw ConfigError("architecture.dropout must lie in [0, 1)");
  }
}

// ---- selection ----------------------------------------------------------

SelectionResult select_confident(std::span<const Tensor> probabilities, std::size_t num_classes,
                                 const SelectionPolicy& policy) {
  policy.validate();
  std::vector<std::vector<std::size_t>> candidates(num_classes);
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const Tensor& p = probabilities[i];
    if (p.size() != num_classes) {
      throw DimensionError("teacher output " + std::to_string(i) + " has length " +
                           std::to_string(p.size()) + ", expected " + std::to_string(num_classes));
    }
    if (policy.allow_multiclass_selection) {
      for (std::size_t a = 0; a < num_classes; ++a) {
        if (p[a] >= policy.confidence_threshold) candidates[a].push_back(i);
      }
    } else {
      std::size_t best = 0;
      for (std::size_t a = 1; a < num_classes; ++a) {
        if (p[a] > p[best]) best = a;
      }
      if (p[best] >= policy.confidence_threshold) candidates[best].push_back(i);
    }
  }
  SelectionResult out;
  for (std::size_t a = 0; a < num_classes; ++a) {
    auto& c = candidates[a];
    std::stable_sort(c.begin(), c.end(), [&](std::size_t x, std::size_t y) {
      return probabilities[x][a] > probabilities[y][a];
    });
    const std::size_t keep = std::min(c.size(), policy.per_class_cap);
    for (std::size_t k = 0; k < keep; ++k) {
      out.indices.push_back(c[k]);
      out.assigned_class.push_back(a);
      out.confidence.push_back(probabilities[c[k]][a]);
    }
  }
  return out;
}

SelectedData self_label_and_select(const TpnModel& teacher, const Dataset& mixed,
                                   const SelectionPolicy& policy) {
  if (!teacher.har) throw ConfigError("self-labeling needs a teacher with an activity head");
  const std::size_t classes = mixed.num_classes() > 0 ? mixed.num_classes() : teacher.num_classes;
  std::vector<Tensor> probs;
  probs.reserve(mixed.size());
  for (const auto& w : mixed.windows) probs.push_back(predict_activity(teacher, w.values));
  if (!probs.empty() && probs.front().size() != classes) {
    throw DimensionError("teacher predicts " + std::to_string(probs.front().size()) +
                         " classes but the vocabulary has " + std::to_string(classes));
  }
  SelectedData out;
  out.selection = select_confident(probs, classes, policy);
  out.dataset.role = DatasetRole::Selected;
  out.dataset.label_vocabulary = mixed.label_vocabulary;
  for (auto i : out.selection.indices) {
    Window w;
    w.values = mixed.windows[i].values;
    w.user_id = mixed.windows[i].user_id;
    w.soft_label = probs[i];
    out.dataset.windows.push_back(std::move(w));
  }
  return out;
}

std::vector<SelectionClassStats> selection_stats(const SelectionResult& selection,
                                                 std::size_t num_classes) {
  std::vector<std::vector<double>> conf(num_classes);
  for (std::size_t k = 0; k < selection.indices.size(); ++k) {
    conf.at(selection.assigned_class[k]).push_back(selection.confidence[k]);
  }
  std::vector<SelectionClassStats> out(num_classes);
  for (std::size_t a = 0; a < num_classes; ++a) {
    auto& s = out[a];
    s.selected = conf[a].size();
    if (conf[a].empty()) continue;
    s.min = percentile(conf[a], 0.0);
    s.q25 = percentile(conf[a], 0.25);
    s.median = percentile(conf[a], 0.5);
    s.q75 = percentile(conf[a], 0.75);
    s.max = percentile(conf[a], 1.0);
  }
  return out;
}

// ---- stages -------------------------------------------------------------

TrainResult train_supervised(TpnModel model, const Dataset& train, const Dataset& validation,
                             const TrainingSchedule& schedule, std::uint64_t seed,
                             const nd::RegularizationConfig& regularization,
                             const std::string& stage) {
  if (train.empty() || validation.empty()) {
    throw ConfigError(stage + ": training and validation partitions must be non-empty");
  }
  const ExampleSet tr = labeled_examples(train);
  const ExampleSet va = labeled_examples(validation);
  const TrainSpec spec{Objective::Har, schedule.teacher_epochs, stage, seed};
  return train_model(std::move(model), tr.examples, va.examples, spec, schedule, regularization);
}

namespace {

std::vector<Example> record_examples(const std::vector<TransformRecord>& records,
                                     Objective objective) {
  std::vector<Example> out;
  out.reserve(records.size());
  const bool har = objective != Objective::Transform;
  for (const auto& r : records) {
    out.push_back({&r.window, har ? &r.har_soft_label : nullptr, &r.transform_labels});
  }
  return out;
}

// Untransformed records carrying the teacher's soft labels.
std::vector<TransformRecord> plain_records(const Dataset& selected) {
  std::vector<TransformRecord> out;
  out.reserve(selected.size());
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const Window& w = selected.windows[i];
    if (!w.soft_label) throw DataError("selected window " + std::to_string(i) + " has no soft label");
    out.push_back({w.values, TransformLabels{}, *w.soft_label, i});
  }
  return out;
}

}  // namespace

TrainResult pretrain_student(TpnModel student, const std::vector<TransformRecord>& train,
                             const std::vector<TransformRecord>& validation, Objective objective,
                             const TrainingSchedule& schedule, std::uint64_t seed,
                             const nd::RegularizationConfig& regularization) {
  if (objective == Objective::Linear) throw ConfigError("pretraining cannot use the linear objective");
  if (train.empty() || validation.empty()) {
    throw ConfigError("student pretraining needs non-empty train and validation records");
  }
  const bool har = objective != Objective::Transform;
  validate_records(train, har);
  validate_records(validation, har);
  const auto tr = record_examples(train, objective);
  const auto va = record_examples(validation, objective);
  const TrainSpec spec{objective, schedule.pretrain_epochs, "student_pretrain", seed};
  return train_model(std::move(student), tr, va, spec, schedule, regularization);
}

TrainResult finetune_student(TpnModel student, const Dataset& train, const Dataset& validation,
                             const TrainingSchedule& schedule, std::uint64_t seed,
                             bool reinit_har_head, const InitConfig& init,
                             const nd::RegularizationConfig& regularization) {
  detach_td_heads(student);
  student.linear.reset();
  if (!student.har || reinit_har_head) attach_har_head(student, derive_seed(seed, 1), init);
  freeze_for_finetune(student);
  const ExampleSet tr = labeled_examples(train);
  const ExampleSet va = labeled_examples(validation);
  if (tr.examples.empty() || va.examples.empty()) {
    throw ConfigError("finetune: training and validation partitions must be non-empty");
  }
  const TrainSpec spec{Objective::Har, schedule.finetune_epochs, "finetune", derive_seed(seed, 2)};
  return train_model(std::move(student), tr.examples, va.examples, spec, schedule, regularization);
}

PretrainSplit pretrain_split(const Dataset& source, double validation_fraction,
                             std::size_t max_windows, std::uint64_t seed) {
  if (source.empty()) throw DataError("no windows available for pretraining");
  std::vector<std::size_t> order(source.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, 0);
  std::shuffle(order.begin(), order.end(), rng);
  if (max_windows > 0 && order.size() > max_windows) order.resize(max_windows);
  const std::size_t n = order.size();
  std::size_t n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
  n_val = std::clamp<std::size_t>(n_val, 1, n > 1 ? n - 1 : 1);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> tr(order.begin() + static_cast<std::ptrdiff_t>(n > 1 ? n_val : 0), order.end());
  std::sort(val.begin(), val.end());
  std::sort(tr.begin(), tr.end());
  PretrainSplit out;
  for (Dataset* d : {&out.train, &out.validation}) {
    d->label_vocabulary = source.label_vocabulary;
    d->role = source.role;
  }
  for (auto i : tr) out.train.windows.push_back(source.windows[i]);
  for (auto i : val) out.validation.windows.push_back(source.windows[i]);
  return out;
}

// ---- configurations -----------------------------------------------------

TrainResult train_teacher(const PipelineConfig& config, const Dataset& train,
                          const Dataset& validation) {
  TpnModel model = build_har_model(train.num_classes(), derive_seed(config.seed, kTeacherInit),
                                   config.architecture, config.init);
  return train_supervised(std::move(model), train, validation, config.schedule,
                          derive_seed(config.seed, kTeacherTrain), config.regularization, "teacher");
}

namespace {

void append_history(std::vector<EpochRecord>& dst, const std::vector<EpochRecord>& src,
                    const std::string& stage) {
  for (auto r : src) {
    r.stage = stage;
    dst.push_back(std::move(r));
  }
}

struct TdResult {
  TpnModel pretrained;
  TpnModel finetuned;
};

// Transformation-discrimination pretraining on label-free W, then a fresh
// activity head fine-tuned on labeled data with conv layers 1-2 frozen.
TdResult td_pretrain_and_finetune(const PipelineConfig& config, const Dataset& mixed,
                                  const Dataset& train, const Dataset& validation,
                                  std::vector<EpochRecord>& history, const std::string& prefix) {
  const auto split = pretrain_split(mixed, config.pretrain_validation_fraction,
                                    config.max_pretrain_windows, derive_seed(config.seed, kTdSplit));
  TransformParams tp = config.transforms;
  tp.seed = derive_seed(config.seed, kTransformsTrain);
  const auto records = build_transform_dataset(split.train, tp);
  tp.seed = derive_seed(config.seed, kTransformsValidation);
  const auto val_records = build_transform_dataset(split.validation, tp);
  TpnModel model = build_multitask_model(train.num_classes(), derive_seed(config.seed, kTdInit),
                                         config.architecture, config.init, false);
  TrainResult pre = pretrain_student(std::move(model), records, val_records, Objective::Transform,
                                     config.schedule, derive_seed(config.seed, kTdPretrain),
                                     config.regularization);
  append_history(history, pre.history, prefix + "td_pretrain");
  TrainResult fine = finetune_student(pre.model, train, validation, config.schedule,
                                      derive_seed(config.seed, kTdFinetune), true, config.init,
                                      config.regularization);
  append_history(history, fine.history, prefix + "finetune");
  return {std::move(pre.model), std::move(fine.model)};
}

}  // namespace

RunOutcome run_configuration(const PipelineConfig& config, const RunInputs& inputs) {
  config.validate();
  if (!inputs.train || !inputs.validation || !inputs.test) {
    throw ConfigError("run needs training, validation and test partitions");
  }
  const Dataset& train = *inputs.train;
  const Dataset& validation = *inputs.validation;
  if (train.num_classes() < 2) throw ConfigError("labeled data needs at least 2 classes");
  if (needs_unlabeled(config.configuration) && inputs.unlabeled == nullptr) {
    throw ConfigError("unlabeled: required for configuration " +
                      std::string(configuration_name(config.configuration)));
  }
  const Dataset& pool = inputs.label_pool ? *inputs.label_pool : train;

  RunOutcome out;
  out.configuration = config.configuration;

  auto supervised_teacher = [&]() {
    if (inputs.supervised_teacher != nullptr) {
      append_history(out.history, inputs.supervised_teacher->history, "teacher");
      return inputs.supervised_teacher->model;
    }
    TrainResult t = train_teacher(config, train, validation);
    append_history(out.history, t.history, "teacher");
    return std::move(t.model);
  };

  switch (config.configuration) {
    case Configuration::FullySupervised: {
      out.final_model = supervised_teacher();
      out.representation = out.final_model;
      break;
    }
    case Configuration::TransformationDiscrimination: {
      const Dataset mixed = mix_unlabeled(pool, *inputs.unlabeled);
      TdResult td = td_pretrain_and_finetune(config, mixed, train, validation, out.history, "");
      out.student = td.pretrained;
      out.representation = std::move(td.pretrained);
      out.final_model = std::move(td.finetuned);
      break;
    }
    case Configuration::SelfTraining:
    case Configuration::TransformationKnowledgeDistillation:
    case Configuration::SelfHAR: {
      const Dataset mixed = mix_unlabeled(pool, *inputs.unlabeled);
      TpnModel teacher;
      if (config.configuration == Configuration::TransformationKnowledgeDistillation) {
        teacher = td_pretrain_and_finetune(config, mixed, train, validation, out.history, "teacher_")
                      .finetuned;
      } else {
        teacher = supervised_teacher();
      }
      SelectedData selected = self_label_and_select(teacher, mixed, config.selection);
      out.selection = selection_stats(selected.selection, train.num_classes());
      out.selected_windows = selected.dataset.size();
      out.teacher = std::move(teacher);
      if (selected.dataset.empty()) {
        throw DataError("the teacher selected no windows at confidence " +
                        std::to_string(config.selection.confidence_threshold));
      }
      const auto split = pretrain_split(selected.dataset, config.pretrain_validation_fraction,
                                        config.max_pretrain_windows,
                                        derive_seed(config.seed, kPretrainSplit));
      const std::uint64_t init_seed = derive_seed(config.seed, kStudentInit);
      TpnModel student;
      std::vector<TransformRecord> tr, va;
      Objective objective = Objective::Har;
      if (config.configuration == Configuration::SelfHAR) {
        TransformParams tp = config.transforms;
        tp.seed = derive_seed(config.seed, kTransformsTrain);
        tr = build_multitask_dataset(split.train, tp);
        tp.seed = derive_seed(config.seed, kTransformsValidation);
        va = build_multitask_dataset(split.validation, tp);
        student = build_multitask_model(train.num_classes(), init_seed, config.architecture, config.init);
        objective = Objective::Multitask;
      } else {
        tr = plain_records(split.train);
        va = plain_records(split.validation);
        student = build_har_model(train.num_classes(), init_seed, config.architecture, config.init);
      }
      TrainResult pre = pretrain_student(std::move(student), tr, va, objective, config.schedule,
                                         derive_seed(config.seed, kStudentPretrain),
                                         config.regularization);
      append_history(out.history, pre.history, "student_pretrain");
      TrainResult fine = finetune_student(pre.model, train, validation, config.schedule,
                                          derive_seed(config.seed, kFinetune),
                                          config.reinit_har_head, config.init, config.regularization);
      append_history(out.history, fine.history, "finetune");
      out.student = pre.model;
      out.representation = std::move(pre.model);
      out.final_model = std::move(fine.model);
      break;
    }
  }

  const auto truth = true_labels(*inputs.test);
  const auto pred = predict_labels(out.final_model, *inputs.test);
  out.report = evaluate_predictions(truth, pred, train.num_classes(), config.n_resamples, config.seed);
  return out;
}

void write_run_artifacts(const RunOutcome& outcome, const std::vector<std::string>& vocabulary,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  if (outcome.teacher) save_weights(*outcome.teacher, dir / "teacher.weights");
  if (outcome.student) save_weights(*outcome.student, dir / "student.weights");
  save_weights(outcome.final_model, dir / "final.weights");

  char buf[256];
  {
    std::ofstream f(dir / "selection_stats.csv");
    f << "class,label,selected,conf_min,conf_q25,conf_median,conf_q75,conf_max\n";
    for (std::size_t a = 0; a < outcome.selection.size(); ++a) {
      const auto& s = outcome.selection[a];
      std::snprintf(buf, sizeof(buf), "%zu,%s,%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", a,
                    a < vocabulary.size() ? vocabulary[a].c_str() : "", s.selected, s.min, s.q25,
                    s.median, s.q75, s.max);
      f << buf;
    }
    if (!f) throw Error("write failed for selection_stats.csv");
  }
  {
    std::ofstream f(dir / "history.csv");
    f << "stage,epoch,train_loss,validation_loss\n";
    for (const auto& r : outcome.history) {
      std::snprintf(buf, sizeof(buf), ",%zu,%.17g,%.17g\n", r.epoch, r.train_loss, r.validation_loss);
      f << r.stage << buf;
    }
    if (!f) throw Error("write failed for history.csv");
  }
  {
    std::ofstream f(dir / "report.json");
    f << report_to_json(outcome.report).dump(2) << '\n';
    if (!f) throw Error("write failed for report.json");
  }
}

// ---- limited-label sweep ------------------------------------------------

Dataset limited_validation(const Dataset& validation, std::size_t n_per_class, std::uint64_t seed) {
  const auto want = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(n_per_class))));
  std::vector<std::vector<std::size_t>> by_class(validation.num_classes());
  for (std::size_t i = 0; i < validation.size(); ++i) {
    const auto& l = validation.windows[i].label;
    if (l) by_class.at(*l).push_back(i);
  }
  std::vector<std::size_t> chosen;
  for (std::size_t a = 0; a < by_class.size(); ++a) {
    auto& idx = by_class[a];
    Rng rng = make_rng(seed, a);
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t take = std::min(want, idx.size());
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
  }
  if (chosen.empty()) throw ConfigError("validation partition holds no labeled windows");
  std::sort(chosen.begin(), chosen.end());
  Dataset out;
  out.label_vocabulary = validation.label_vocabulary;
  out.role = validation.role;
  for (auto i : chosen) out.windows.push_back(validation.windows[i]);
  return out;
}

double sample_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = sample_mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::vector<SweepCell> limited_data_sweep(const PipelineConfig& config_template,
                                          const Partitions& labeled, const Dataset& unlabeled,
                                          const SweepOptions& options) {
  config_template.validate();
  if (options.n_per_class.empty() || options.seeds.empty() || options.configurations.empty()) {
    throw ConfigError("sweep needs label budgets, seeds and configurations");
  }
  // Fail before any training when a budget is infeasible.
  const auto counts = class_counts(labeled.train);
  for (auto n : options.n_per_class) {
    for (std::size_t a = 0; a < counts.size(); ++a) {
      if (counts[a] < n) {
        throw DataError("class '" + labeled.train.label_vocabulary[a] + "' has " +
                        std::to_string(counts[a]) + " training windows, fewer than " +
                        std::to_string(n));
      }
    }
  }

  const std::size_t n_tasks = options.n_per_class.size() * options.seeds.size();
  const std::size_t n_cfg = options.configurations.size();
  std::vector<double> scores(n_tasks * n_cfg, 0.0);
  std::vector<std::exception_ptr> errors(n_tasks);

  auto run_task = [&](std::size_t task) {
    const std::size_t ni = task / options.seeds.size();
    const std::size_t si = task % options.seeds.size();
    const std::size_t n = options.n_per_class[ni];
    const std::uint64_t seed = options.seeds[si];
    const Dataset train = subsample_labeled(labeled.train, n, derive_seed(seed, n));
    const Dataset validation = limited_validation(labeled.validation, n, derive_seed(seed, 1000 + n));
    PipelineConfig cfg = config_template;
    cfg.seed = seed;
    std::optional<TrainResult> teacher;
    for (std::size_t ci = 0; ci < n_cfg; ++ci) {
      cfg.configuration = options.configurations[ci];
      const bool supervised_teacher = cfg.configuration == Configuration::FullySupervised ||
                                      cfg.configuration == Configuration::SelfTraining ||
                                      cfg.configuration == Configuration::SelfHAR;
      if (supervised_teacher && !teacher) teacher = train_teacher(cfg, train, validation);
      RunInputs in{&train, &validation, &labeled.test, &unlabeled, &labeled.train,
                   supervised_teacher ? &*teacher : nullptr};
      scores[task * n_cfg + ci] = run_configuration(cfg, in).report.weighted_f1.point;
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, n_tasks));
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t t = next++; t < n_tasks; t = next++) {
      try {
        run_task(t);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<SweepCell> cells;
  for (std::size_t ni = 0; ni < options.n_per_class.size(); ++ni) {
    for (std::size_t ci = 0; ci < n_cfg; ++ci) {
      SweepCell cell;
      cell.n_per_class = options.n_per_class[ni];
      cell.configuration = options.configurations[ci];
      cell.seeds = options.seeds;
      for (std::size_t si = 0; si < options.seeds.size(); ++si) {
        cell.scores.push_back(scores[(ni * options.seeds.size() + si) * n_cfg + ci]);
      }
      cell.mean = sample_mean(cell.scores);
      cell.stddev = sample_stddev(cell.scores);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace selfhar
