#pragma once

// Classification metrics, percentile bootstrap intervals, confusion matrices,
// the frozen-core linear evaluation protocol and embedding export.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "selfhar/datakit.hpp"
#include "selfhar/model.hpp"
#include "selfhar/training.hpp"

namespace selfhar {

struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::int64_t> counts;  // row = true class, column = predicted

  std::int64_t at(std::size_t truth, std::size_t predicted) const {
    return counts[truth * classes + predicted];
  }
  std::int64_t total() const;
  bool diagonal() const;
};

ConfusionMatrix confusion_matrix(std::span<const std::size_t> truth,
                                 std::span<const std::size_t> predicted, std::size_t classes);

// Per-class F1 with 0/0 taken as 0.
double weighted_f1(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                   std::size_t classes);
// Unweighted mean over classes that occur in `truth`.
double macro_f1(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                std::size_t classes);
// 0 when chance agreement is 1.
double cohens_kappa(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                    std::size_t classes);

double weighted_f1(const ConfusionMatrix& cm);
double macro_f1(const ConfusionMatrix& cm);
double cohens_kappa(const ConfusionMatrix& cm);

enum class Metric { WeightedF1, MacroF1, CohensKappa };
double compute_metric(Metric metric, const ConfusionMatrix& cm);

// Linear interpolation between order statistics at position q * (n - 1).
double percentile(std::vector<double> values, double q);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

inline constexpr std::size_t kDefaultResamples = 1000;

// Resample r draws n indices with replacement from its own stream derived
// from (seed, r).
std::vector<std::size_t> bootstrap_resample_indices(std::size_t n, std::uint64_t seed,
                                                    std::size_t resample);

Interval bootstrap_ci(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                      std::size_t classes, Metric metric,
                      std::size_t n_resamples = kDefaultResamples, double level = 0.95,
                      std::uint64_t seed = 0,
                      std::vector<std::vector<std::size_t>>* index_log = nullptr);

struct MetricEstimate {
  double point = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct MetricsReport {
  MetricEstimate weighted_f1;
  MetricEstimate macro_f1;
  MetricEstimate kappa;
  ConfusionMatrix confusion;
  std::size_t n_test = 0;
  std::size_t n_resamples = 0;
  std::uint64_t seed = 0;
};

// Point estimates plus intervals for all three metrics from one shared set of
// resamples.
MetricsReport evaluate_predictions(std::span<const std::size_t> truth,
                                   std::span<const std::size_t> predicted, std::size_t classes,
                                   std::size_t n_resamples = kDefaultResamples,
                                   std::uint64_t seed = 0, double level = 0.95);

nlohmann::json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);
// FormatError naming the first violation of the report.json schema.
void validate_report_json(const nlohmann::json& j);

// Element-wise mean over runs; all matrices must share a class count.
struct SignedMatrix {
  std::size_t classes = 0;
  std::vector<double> values;
  double at(std::size_t r, std::size_t c) const { return values[r * classes + c]; }
};

SignedMatrix average_confusion(std::span<const ConfusionMatrix> runs);
SignedMatrix delta_confusion(const SignedMatrix& a, const SignedMatrix& b);
SignedMatrix delta_confusion(const ConfusionMatrix& a, const ConfusionMatrix& b);

enum class Head { Activity, Linear };

std::vector<std::size_t> predict_labels(const TpnModel& model, const Dataset& dataset,
                                        Head head = Head::Activity);
std::vector<std::size_t> true_labels(const Dataset& dataset);

struct LinearEvalResult {
  TpnModel model;  // the frozen core with its trained linear head
  TrainResult training;
  MetricsReport report;
};

// Copies the core of `pretrained`, freezes it, attaches a fresh linear head and
// trains only that head.
LinearEvalResult linear_evaluate(const TpnModel& pretrained, const Dataset& train,
                                 const Dataset& validation, const Dataset& test,
                                 const TrainingSchedule& schedule, std::uint64_t seed,
                                 const nd::RegularizationConfig& regularization = {},
                                 std::size_t n_resamples = kDefaultResamples);

// Rows: user_id, label name or blank, then the pooled core features.
void export_embeddings(const TpnModel& model, const Dataset& dataset,
                       const std::filesystem::path& path);

}  // namespace selfhar
