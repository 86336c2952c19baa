#pragma once

// Teacher training, confidence-filtered self-labeling, student pretraining,
// frozen-core fine-tuning, the five pipeline configurations and the
// limited-label sweep.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "selfhar/datakit.hpp"
#include "selfhar/evalkit.hpp"
#include "selfhar/model.hpp"
#include "selfhar/signals.hpp"
#include "selfhar/training.hpp"

namespace selfhar {

enum class Configuration {
  FullySupervised,
  TransformationDiscrimination,
  SelfTraining,
  TransformationKnowledgeDistillation,
  SelfHAR,
};

inline constexpr std::array<Configuration, 5> kAllConfigurations{
    Configuration::FullySupervised, Configuration::TransformationDiscrimination,
    Configuration::SelfTraining, Configuration::TransformationKnowledgeDistillation,
    Configuration::SelfHAR};

std::string_view configuration_name(Configuration c);
Configuration configuration_from_name(std::string_view name);  // ConfigError if unknown

// Pipeline components: 0 transformation-discrimination pretraining of the
// teacher, 1 supervised training on labeled data, 2 self-labeling, 3
// augmentation with transformation labels, 4 student training.
std::vector<int> components(Configuration c);
bool needs_unlabeled(Configuration c);

struct SelectionPolicy {
  double confidence_threshold = 0.5;
  std::size_t per_class_cap = 10000;
  // Rank every class independently; a window may then enter several classes.
  bool allow_multiclass_selection = false;

  void validate() const;
};

struct PipelineConfig {
  Configuration configuration = Configuration::SelfHAR;
  SelectionPolicy selection;
  TrainingSchedule schedule;
  TransformParams transforms;
  Architecture architecture;
  InitConfig init;
  nd::RegularizationConfig regularization;
  bool reinit_har_head = false;
  // Fraction of pretraining source windows held out for early stopping.
  double pretrain_validation_fraction = 0.1;
  // Cap on source windows fed to augmentation (0 keeps all).
  std::size_t max_pretrain_windows = 0;
  std::size_t n_resamples = kDefaultResamples;
  std::uint64_t seed = 0;

  void validate() const;
};

// ---- selection ----------------------------------------------------------

struct SelectionResult {
  std::vector<std::size_t> indices;         // into the scored set, grouped by class
  std::vector<std::size_t> assigned_class;  // parallel to indices
  std::vector<double> confidence;           // assigned-class probability
};

// Pure selection over precomputed probability vectors.
SelectionResult select_confident(std::span<const Tensor> probabilities, std::size_t num_classes,
                                 const SelectionPolicy& policy);

struct SelectedData {
  Dataset dataset;  // role Selected, soft labels attached, no ground truth
  SelectionResult selection;
};

SelectedData self_label_and_select(const TpnModel& teacher, const Dataset& mixed,
                                   const SelectionPolicy& policy);

struct SelectionClassStats {
  std::size_t selected = 0;
  double min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0;
};

std::vector<SelectionClassStats> selection_stats(const SelectionResult& selection,
                                                 std::size_t num_classes);

// ---- stages -------------------------------------------------------------

// Categorical cross-entropy on ground-truth labels for schedule.teacher_epochs.
TrainResult train_supervised(TpnModel model, const Dataset& train, const Dataset& validation,
                             const TrainingSchedule& schedule, std::uint64_t seed,
                             const nd::RegularizationConfig& regularization = {},
                             const std::string& stage = "supervised");

// Objective Multitask for 9-task students, Transform for transformation-only
// models, Har for HAR-only students on teacher labels. DataError when a record
// has more than one transform flag.
TrainResult pretrain_student(TpnModel student, const std::vector<TransformRecord>& train,
                             const std::vector<TransformRecord>& validation, Objective objective,
                             const TrainingSchedule& schedule, std::uint64_t seed,
                             const nd::RegularizationConfig& regularization = {});

// Detaches the TD heads, attaches a fresh HAR head when none is present (or
// when `reinit_har_head`), freezes conv layers 1-2 and trains on labels.
TrainResult finetune_student(TpnModel student, const Dataset& train, const Dataset& validation,
                             const TrainingSchedule& schedule, std::uint64_t seed,
                             bool reinit_har_head = false, const InitConfig& init = {},
                             const nd::RegularizationConfig& regularization = {});

// Splits source windows into pretraining train/validation parts (by window,
// before augmentation) and optionally caps their number.
struct PretrainSplit {
  Dataset train;
  Dataset validation;
};
PretrainSplit pretrain_split(const Dataset& source, double validation_fraction,
                             std::size_t max_windows, std::uint64_t seed);

// ---- configurations -----------------------------------------------------

struct RunInputs {
  const Dataset* train = nullptr;       // labeled training windows (D)
  const Dataset* validation = nullptr;  // labeled, for early stopping
  const Dataset* test = nullptr;        // held-out users
  const Dataset* unlabeled = nullptr;   // U
  // Windows whose labels are stripped into W alongside U. Defaults to train.
  const Dataset* label_pool = nullptr;
  // Reuse of a teacher already trained with the same config and seed.
  const TrainResult* supervised_teacher = nullptr;
};

struct RunOutcome {
  Configuration configuration = Configuration::FullySupervised;
  TpnModel final_model;
  std::optional<TpnModel> teacher;
  std::optional<TpnModel> student;  // after pretraining, before fine-tuning
  TpnModel representation;          // core used by linear evaluation
  std::vector<EpochRecord> history;
  std::vector<SelectionClassStats> selection;
  std::size_t selected_windows = 0;
  MetricsReport report;
};

RunOutcome run_configuration(const PipelineConfig& config, const RunInputs& inputs);

// The supervised teacher exactly as run_configuration trains it for `config`.
TrainResult train_teacher(const PipelineConfig& config, const Dataset& train,
                          const Dataset& validation);

// Writes teacher.weights, student.weights, final.weights (when present),
// selection_stats.csv, history.csv and report.json into `dir`.
void write_run_artifacts(const RunOutcome& outcome, const std::vector<std::string>& vocabulary,
                         const std::filesystem::path& dir);

// ---- limited-label sweep ------------------------------------------------

struct SweepOptions {
  std::vector<std::size_t> n_per_class{2, 5, 10, 50, 100};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<Configuration> configurations{Configuration::FullySupervised,
                                            Configuration::TransformationDiscrimination,
                                            Configuration::SelfHAR};
  std::size_t jobs = 1;
};

struct SweepCell {
  std::size_t n_per_class = 0;
  Configuration configuration = Configuration::FullySupervised;
  std::vector<std::uint64_t> seeds;
  std::vector<double> scores;  // weighted F1 per seed
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single seed
};

// Validation windows for a label budget: max(1, ceil(0.1 n)) per class drawn
// from `validation`, capped by availability.
Dataset limited_validation(const Dataset& validation, std::size_t n_per_class, std::uint64_t seed);

std::vector<SweepCell> limited_data_sweep(const PipelineConfig& config_template,
                                          const Partitions& labeled, const Dataset& unlabeled,
                                          const SweepOptions& options);

double sample_mean(std::span<const double> values);
double sample_stddev(std::span<const double> values);

}  // namespace selfhar
