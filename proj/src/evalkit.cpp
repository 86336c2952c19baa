#include "selfhar/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "selfhar/errors.hpp"
#include "selfhar/rng.hpp"

namespace selfhar {

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

bool ConfusionMatrix::diagonal() const {
  for (std::size_t r = 0; r < classes; ++r) {
    for (std::size_t c = 0; c < classes; ++c) {
      if (r != c && at(r, c) != 0) return false;
    }
  }
  return true;
}

ConfusionMatrix confusion_matrix(std::span<const std::size_t> truth,
                                 std::span<const std::size_t> predicted, std::size_t classes) {
  if (truth.size() != predicted.size()) {
    throw DimensionError("label lists differ in length: " + std::to_string(truth.size()) +
                         " vs " + std::to_string(predicted.size()));
  }
  if (classes == 0) throw ConfigError("confusion matrix needs at least one class");
  ConfusionMatrix cm{classes, std::vector<std::int64_t>(classes * classes, 0)};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= classes || predicted[i] >= classes) {
      throw DataError("label " + std::to_string(std::max(truth[i], predicted[i])) +
                      " outside " + std::to_string(classes) + " classes");
    }
    ++cm.counts[truth[i] * classes + predicted[i]];
  }
  return cm;
}

namespace {

struct ClassCounts {
  std::vector<double> tp, row, col;
  double total = 0.0;
};

ClassCounts tally(const ConfusionMatrix& cm) {
  ClassCounts k{std::vector<double>(cm.classes, 0.0), std::vector<double>(cm.classes, 0.0),
                std::vector<double>(cm.classes, 0.0), 0.0};
  for (std::size_t r = 0; r < cm.classes; ++r) {
    for (std::size_t c = 0; c < cm.classes; ++c) {
      const auto v = static_cast<double>(cm.at(r, c));
      k.row[r] += v;
      k.col[c] += v;
      if (r == c) k.tp[r] = v;
      k.total += v;
    }
  }
  if (k.total == 0.0) throw DataError("metrics need at least one evaluated window");
  return k;
}

double class_f1(const ClassCounts& k, std::size_t a) {
  const double precision = k.col[a] > 0.0 ? k.tp[a] / k.col[a] : 0.0;
  const double recall = k.row[a] > 0.0 ? k.tp[a] / k.row[a] : 0.0;
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

}  // namespace

double weighted_f1(const ConfusionMatrix& cm) {
  const ClassCounts k = tally(cm);
  double sum = 0.0;
  for (std::size_t a = 0; a < cm.classes; ++a) sum += k.row[a] * class_f1(k, a);
  return sum / k.total;
}

double macro_f1(const ConfusionMatrix& cm) {
  const ClassCounts k = tally(cm);
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t a = 0; a < cm.classes; ++a) {
    if (k.row[a] > 0.0) {
      sum += class_f1(k, a);
      ++present;
    }
  }
  return sum / static_cast<double>(present);
}

double cohens_kappa(const ConfusionMatrix& cm) {
  const ClassCounts k = tally(cm);
  double agree = 0.0, chance = 0.0;
  for (std::size_t a = 0; a < cm.classes; ++a) {
    agree += k.tp[a];
    chance += k.row[a] * k.col[a];
  }
  const double p_o = agree / k.total;
  const double p_e = chance / (k.total * k.total);
  if (p_e == 1.0) return 0.0;
  return (p_o - p_e) / (1.0 - p_e);
}

double weighted_f1(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                   std::size_t classes) {
  return weighted_f1(confusion_matrix(truth, predicted, classes));
}

double macro_f1(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                std::size_t classes) {
  return macro_f1(confusion_matrix(truth, predicted, classes));
}

double cohens_kappa(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                    std::size_t classes) {
  return cohens_kappa(confusion_matrix(truth, predicted, classes));
}

double compute_metric(Metric metric, const ConfusionMatrix& cm) {
  switch (metric) {
    case Metric::WeightedF1: return weighted_f1(cm);
    case Metric::MacroF1: return macro_f1(cm);
    case Metric::CohensKappa: return cohens_kappa(cm);
  }
  return 0.0;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("percentile rank must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<std::size_t> bootstrap_resample_indices(std::size_t n, std::uint64_t seed,
                                                    std::size_t resample) {
  if (n == 0) throw DataError("bootstrap over an empty test set");
  Rng rng = make_rng(seed, resample);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

namespace {

void check_bootstrap_args(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                          std::size_t n_resamples, double level) {
  if (truth.size() != predicted.size()) throw DimensionError("label lists differ in length");
  if (truth.empty()) throw DataError("bootstrap over an empty test set");
  if (n_resamples == 0) throw ConfigError("n_resamples must be at least 1");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0, 1)");
}

ConfusionMatrix resampled_confusion(std::span<const std::size_t> truth,
                                    std::span<const std::size_t> predicted, std::size_t classes,
                                    const std::vector<std::size_t>& idx) {
  ConfusionMatrix cm{classes, std::vector<std::int64_t>(classes * classes, 0)};
  for (auto i : idx) ++cm.counts[truth[i] * classes + predicted[i]];
  return cm;
}

}  // namespace

Interval bootstrap_ci(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                      std::size_t classes, Metric metric, std::size_t n_resamples, double level,
                      std::uint64_t seed, std::vector<std::vector<std::size_t>>* index_log) {
  check_bootstrap_args(truth, predicted, n_resamples, level);
  confusion_matrix(truth, predicted, classes);  // validates labels
  if (index_log != nullptr) index_log->clear();
  std::vector<double> scores;
  scores.reserve(n_resamples);
  for (std::size_t r = 0; r < n_resamples; ++r) {
    auto idx = bootstrap_resample_indices(truth.size(), seed, r);
    scores.push_back(compute_metric(metric, resampled_confusion(truth, predicted, classes, idx)));
    if (index_log != nullptr) index_log->push_back(std::move(idx));
  }
  const double tail = (1.0 - level) / 2.0;
  return {percentile(scores, tail), percentile(scores, 1.0 - tail)};
}

MetricsReport evaluate_predictions(std::span<const std::size_t> truth,
                                   std::span<const std::size_t> predicted, std::size_t classes,
                                   std::size_t n_resamples, std::uint64_t seed, double level) {
  check_bootstrap_args(truth, predicted, n_resamples, level);
  MetricsReport report;
  report.confusion = confusion_matrix(truth, predicted, classes);
  report.n_test = truth.size();
  report.n_resamples = n_resamples;
  report.seed = seed;
  std::vector<double> wf1, mf1, kap;
  for (std::size_t r = 0; r < n_resamples; ++r) {
    const auto cm =
        resampled_confusion(truth, predicted, classes, bootstrap_resample_indices(truth.size(), seed, r));
    wf1.push_back(weighted_f1(cm));
    mf1.push_back(macro_f1(cm));
    kap.push_back(cohens_kappa(cm));
  }
  const double tail = (1.0 - level) / 2.0;
  auto fill = [&](MetricEstimate& e, double point, const std::vector<double>& s) {
    e.point = point;
    e.ci_lo = percentile(s, tail);
    e.ci_hi = percentile(s, 1.0 - tail);
  };
  fill(report.weighted_f1, weighted_f1(report.confusion), wf1);
  fill(report.macro_f1, macro_f1(report.confusion), mf1);
  fill(report.kappa, cohens_kappa(report.confusion), kap);
  return report;
}

// ---- report.json --------------------------------------------------------

namespace {

nlohmann::json estimate_json(const MetricEstimate& e) {
  return {{"point", e.point}, {"ci_lo", e.ci_lo}, {"ci_hi", e.ci_hi}};
}

MetricEstimate estimate_from(const nlohmann::json& j) {
  return {j.at("point").get<double>(), j.at("ci_lo").get<double>(), j.at("ci_hi").get<double>()};
}

const char* const kMetricKeys[] = {"weighted_f1", "macro_f1", "kappa"};

}  // namespace

nlohmann::json report_to_json(const MetricsReport& r) {
  nlohmann::json confusion = nlohmann::json::array();
  for (std::size_t t = 0; t < r.confusion.classes; ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t p = 0; p < r.confusion.classes; ++p) row.push_back(r.confusion.at(t, p));
    confusion.push_back(std::move(row));
  }
  return {{"weighted_f1", estimate_json(r.weighted_f1)},
          {"macro_f1", estimate_json(r.macro_f1)},
          {"kappa", estimate_json(r.kappa)},
          {"confusion", std::move(confusion)},
          {"n_test", r.n_test},
          {"n_resamples", r.n_resamples},
          {"seed", r.seed}};
}

namespace {

bool is_count(const nlohmann::json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

}  // namespace

void validate_report_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("report must be a JSON object");
  for (const char* key : kMetricKeys) {
    if (!j.contains(key) || !j[key].is_object()) throw FormatError(std::string("report lacks ") + key);
    for (const char* field : {"point", "ci_lo", "ci_hi"}) {
      if (!j[key].contains(field) || !j[key][field].is_number()) {
        throw FormatError(std::string("report.") + key + "." + field + " must be a number");
      }
    }
    const double lo = j[key]["ci_lo"], hi = j[key]["ci_hi"];
    if (lo > hi) throw FormatError(std::string("report.") + key + " has ci_lo above ci_hi");
  }
  for (const char* key : {"n_test", "n_resamples", "seed"}) {
    if (!j.contains(key) || !is_count(j[key])) {
      throw FormatError(std::string("report.") + key + " must be a nonnegative integer");
    }
  }
  if (!j.contains("confusion") || !j["confusion"].is_array()) {
    throw FormatError("report.confusion must be a nested array");
  }
  const auto& cm = j["confusion"];
  std::uint64_t total = 0;
  for (const auto& row : cm) {
    if (!row.is_array() || row.size() != cm.size()) {
      throw FormatError("report.confusion must be square");
    }
    for (const auto& v : row) {
      if (!is_count(v)) throw FormatError("report.confusion holds a non-count entry");
      total += v.get<std::uint64_t>();
    }
  }
  if (total != j["n_test"].get<std::uint64_t>()) {
    throw FormatError("report.confusion total differs from n_test");
  }
}

MetricsReport report_from_json(const nlohmann::json& j) {
  validate_report_json(j);
  MetricsReport r;
  r.weighted_f1 = estimate_from(j.at("weighted_f1"));
  r.macro_f1 = estimate_from(j.at("macro_f1"));
  r.kappa = estimate_from(j.at("kappa"));
  r.n_test = j.at("n_test").get<std::size_t>();
  r.n_resamples = j.at("n_resamples").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  const auto& cm = j.at("confusion");
  r.confusion.classes = cm.size();
  for (const auto& row : cm) {
    for (const auto& v : row) r.confusion.counts.push_back(v.get<std::int64_t>());
  }
  return r;
}

// ---- confusion deltas ---------------------------------------------------

SignedMatrix average_confusion(std::span<const ConfusionMatrix> runs) {
  if (runs.empty()) throw DataError("averaging needs at least one confusion matrix");
  SignedMatrix out{runs[0].classes, std::vector<double>(runs[0].counts.size(), 0.0)};
  for (const auto& cm : runs) {
    if (cm.classes != out.classes) throw DimensionError("confusion matrices differ in class count");
    for (std::size_t i = 0; i < cm.counts.size(); ++i) out.values[i] += static_cast<double>(cm.counts[i]);
  }
  for (auto& v : out.values) v /= static_cast<double>(runs.size());
  return out;
}

SignedMatrix delta_confusion(const SignedMatrix& a, const SignedMatrix& b) {
  if (a.classes != b.classes || a.values.size() != b.values.size()) {
    throw DimensionError("confusion matrices differ in shape: " + std::to_string(a.classes) +
                         " vs " + std::to_string(b.classes));
  }
  SignedMatrix out{a.classes, std::vector<double>(a.values.size())};
  for (std::size_t i = 0; i < a.values.size(); ++i) out.values[i] = a.values[i] - b.values[i];
  return out;
}

SignedMatrix delta_confusion(const ConfusionMatrix& a, const ConfusionMatrix& b) {
  return delta_confusion(average_confusion(std::span(&a, 1)), average_confusion(std::span(&b, 1)));
}

// ---- model evaluation ---------------------------------------------------

namespace {

std::size_t argmax(const Tensor& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

}  // namespace

std::vector<std::size_t> predict_labels(const TpnModel& model, const Dataset& dataset, Head head) {
  std::vector<std::size_t> out;
  out.reserve(dataset.size());
  for (const auto& w : dataset.windows) {
    out.push_back(argmax(head == Head::Activity ? predict_activity(model, w.values)
                                                : predict_linear(model, w.values)));
  }
  return out;
}

std::vector<std::size_t> true_labels(const Dataset& dataset) {
  std::vector<std::size_t> out;
  out.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& l = dataset.windows[i].label;
    if (!l) throw DataError("evaluation window " + std::to_string(i) + " has no label");
    out.push_back(*l);
  }
  return out;
}

LinearEvalResult linear_evaluate(const TpnModel& pretrained, const Dataset& train,
                                 const Dataset& validation, const Dataset& test,
                                 const TrainingSchedule& schedule, std::uint64_t seed,
                                 const nd::RegularizationConfig& regularization,
                                 std::size_t n_resamples) {
  if (train.num_classes() < 2) throw ConfigError("linear evaluation needs at least 2 classes");
  TpnModel model = pretrained;
  model.num_classes = train.num_classes();
  detach_har_head(model);
  detach_td_heads(model);
  attach_linear_head(model, derive_seed(seed, 1));
  freeze_core_full(model);

  const ExampleSet tr = labeled_examples(train);
  const ExampleSet va = labeled_examples(validation);
  TrainSpec spec{Objective::Linear, schedule.finetune_epochs, "linear", derive_seed(seed, 2)};
  LinearEvalResult result;
  result.training = train_model(model, tr.examples, va.examples, spec, schedule, regularization);
  result.model = result.training.model;
  const auto truth = true_labels(test);
  const auto pred = predict_labels(result.model, test, Head::Linear);
  result.report = evaluate_predictions(truth, pred, train.num_classes(), n_resamples, seed);
  return result;
}

void export_embeddings(const TpnModel& model, const Dataset& dataset,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  const std::size_t width = model.arch.feature_length();
  out << "user_id,label";
  for (std::size_t f = 0; f < width; ++f) out << ",f" << f;
  out << '\n';
  char buf[40];
  for (const auto& w : dataset.windows) {
    const Tensor features = core_features(model, w.values);
    out << w.user_id << ',';
    if (w.label) out << dataset.label_vocabulary.at(*w.label);
    for (double v : features.values()) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace selfhar
