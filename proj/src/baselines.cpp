#include "selfhar/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "selfhar/errors.hpp"
#include "selfhar/rng.hpp"

namespace selfhar::baselines {

namespace {

constexpr std::size_t kStats = 7;  // mean, iqr, mad, rms, std, var, energy

double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace

FeatureVector extract_features(const Tensor& window) {
  if (window.rank() != 2 || window.dim(1) != kChannels) {
    throw DimensionError("feature extraction needs a [time x 3] window, got " +
                         shape_string(window.shape()));
  }
  if (!window.all_finite()) throw DataError("feature extraction input contains non-finite values");
  const std::size_t n = window.dim(0);
  const double nd = static_cast<double>(n);
  FeatureVector f{};
  std::array<double, kChannels> mean{}, stddev{};
  std::array<std::vector<double>, kChannels> centered;
  for (std::size_t c = 0; c < kChannels; ++c) {
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) x[t] = window.at(t, c);
    double sum = 0.0, sq = 0.0;
    for (double v : x) {
      sum += v;
      sq += v * v;
    }
    mean[c] = sum / nd;
    double var = 0.0, mad = 0.0;
    centered[c].resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      const double d = x[t] - mean[c];
      centered[c][t] = d;
      var += d * d;
      mad += std::abs(d);
    }
    var /= nd;
    stddev[c] = std::sqrt(var);
    std::sort(x.begin(), x.end());
    f[0 * kChannels + c] = mean[c];
    f[1 * kChannels + c] = quantile_sorted(x, 0.75) - quantile_sorted(x, 0.25);
    f[2 * kChannels + c] = mad / nd;
    f[3 * kChannels + c] = std::sqrt(sq / nd);
    f[4 * kChannels + c] = stddev[c];
    f[5 * kChannels + c] = var;
    // Parseval: the non-DC DFT power equals n times the centered sum of squares.
    f[6 * kChannels + c] = var * nd;
  }
  const std::array<std::pair<std::size_t, std::size_t>, 3> pairs{{{0, 1}, {0, 2}, {1, 2}}};
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [a, b] = pairs[k];
    double r = 0.0;
    if (stddev[a] > 0.0 && stddev[b] > 0.0) {
      double cov = 0.0;
      for (std::size_t t = 0; t < n; ++t) cov += centered[a][t] * centered[b][t];
      r = std::clamp(cov / nd / (stddev[a] * stddev[b]), -1.0, 1.0);
    }
    f[kStats * kChannels + k] = r;
  }
  return f;
}

std::vector<std::string> feature_names() {
  const char* stats[kStats] = {"mean", "iqr", "mad", "rms", "std", "var", "energy"};
  const char* axes[kChannels] = {"x", "y", "z"};
  std::vector<std::string> names;
  for (auto s : stats) {
    for (auto a : axes) names.push_back(std::string(s) + "_" + a);
  }
  names.insert(names.end(), {"corr_xy", "corr_xz", "corr_yz", "reserved_0", "reserved_1", "reserved_2"});
  return names;
}

std::vector<FeatureVector> extract_all(const Dataset& dataset) {
  std::vector<FeatureVector> out;
  out.reserve(dataset.size());
  for (const auto& w : dataset.windows) out.push_back(extract_features(w.values));
  return out;
}

void export_features_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "user_id,label";
  for (const auto& n : feature_names()) out << ',' << n;
  out << '\n';
  char buf[40];
  for (const auto& w : dataset.windows) {
    out << w.user_id << ',';
    if (w.label) out << dataset.label_vocabulary.at(*w.label);
    for (double v : extract_features(w.values)) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      out << buf;
    }
    out << '\n';
  }
}

// ---- classifiers --------------------------------------------------------

namespace {

void check_training_set(const std::vector<FeatureVector>& x, const std::vector<std::size_t>& y,
                        std::size_t classes) {
  if (x.size() != y.size()) throw DimensionError("feature and label counts differ");
  if (x.empty()) throw DataError("classifier training set is empty");
  if (classes == 0) throw ConfigError("classifier needs at least one class");
  for (auto l : y) {
    if (l >= classes) throw DataError("training label outside the class range");
  }
}

double gini(const std::vector<double>& counts, double total) {
  if (total <= 0.0) return 0.0;
  double s = 1.0;
  for (double c : counts) s -= (c / total) * (c / total);
  return s;
}

}  // namespace

std::size_t argmax(const Posterior& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

void DecisionTree::fit(const std::vector<FeatureVector>& x, const std::vector<std::size_t>& y,
                       std::size_t classes, const TreeConfig& config) {
  check_training_set(x, y, classes);
  if (config.min_leaf < 1) throw ConfigError("tree min_leaf must be at least 1");
  classes_ = classes;
  nodes_.clear();
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  grow(x, y, idx, 0, config);
}

std::size_t DecisionTree::grow(const std::vector<FeatureVector>& x,
                               const std::vector<std::size_t>& y, std::vector<std::size_t>& idx,
                               std::size_t level, const TreeConfig& config) {
  const std::size_t id = nodes_.size();
  nodes_.push_back({});
  std::vector<double> counts(classes_, 0.0);
  for (auto i : idx) counts[y[i]] += 1.0;
  const double n = static_cast<double>(idx.size());
  Posterior dist(classes_);
  for (std::size_t a = 0; a < classes_; ++a) dist[a] = counts[a] / n;
  nodes_[id].distribution = dist;
  nodes_[id].level = level;

  const double parent = gini(counts, n);
  if (level >= config.max_depth || parent == 0.0 || idx.size() < 2 * config.min_leaf) return id;

  double best_score = parent - 1e-12;
  int best_feature = -1;
  double best_threshold = 0.0;
  std::vector<std::size_t> order = idx;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return x[a][f] < x[b][f] || (x[a][f] == x[b][f] && a < b);
    });
    std::vector<double> left(classes_, 0.0), right = counts;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      left[y[order[k]]] += 1.0;
      right[y[order[k]]] -= 1.0;
      const double lo = x[order[k]][f], hi = x[order[k + 1]][f];
      if (lo == hi) continue;
      const std::size_t nl = k + 1, nr = order.size() - nl;
      if (nl < config.min_leaf || nr < config.min_leaf) continue;
      const double score = (static_cast<double>(nl) * gini(left, static_cast<double>(nl)) +
                            static_cast<double>(nr) * gini(right, static_cast<double>(nr))) /
                           n;
      if (score < best_score) {
        best_score = score;
        best_feature = static_cast<int>(f);
        best_threshold = lo + (hi - lo) / 2.0;
      }
    }
  }
  if (best_feature < 0) return id;

  std::vector<std::size_t> li, ri;
  for (auto i : idx) {
    (x[i][static_cast<std::size_t>(best_feature)] <= best_threshold ? li : ri).push_back(i);
  }
  nodes_[id].feature = best_feature;
  nodes_[id].threshold = best_threshold;
  const std::size_t l = grow(x, y, li, level + 1, config);
  const std::size_t r = grow(x, y, ri, level + 1, config);
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

Posterior DecisionTree::predict_proba(const FeatureVector& x) const {
  if (nodes_.empty()) throw ConfigError("decision tree is not fitted");
  std::size_t id = 0;
  while (nodes_[id].feature >= 0) {
    const Node& node = nodes_[id];
    id = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes_[id].distribution;
}

std::size_t DecisionTree::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.level);
  return d;
}

void GaussianNaiveBayes::fit(const std::vector<FeatureVector>& x,
                             const std::vector<std::size_t>& y, std::size_t classes) {
  check_training_set(x, y, classes);
  classes_ = classes;
  std::vector<double> count(classes, 0.0);
  mean_.assign(classes, FeatureVector{});
  var_.assign(classes, FeatureVector{});
  for (std::size_t i = 0; i < x.size(); ++i) {
    count[y[i]] += 1.0;
    for (std::size_t f = 0; f < kFeatureCount; ++f) mean_[y[i]][f] += x[i][f];
  }
  for (std::size_t a = 0; a < classes; ++a) {
    if (count[a] > 0.0) {
      for (auto& m : mean_[a]) m /= count[a];
    }
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      const double d = x[i][f] - mean_[y[i]][f];
      var_[y[i]][f] += d * d;
    }
  }
  log_prior_.assign(classes, -std::numeric_limits<double>::infinity());
  for (std::size_t a = 0; a < classes; ++a) {
    for (auto& v : var_[a]) v = std::max(count[a] > 0.0 ? v / count[a] : 0.0, floor_);
    if (count[a] > 0.0) log_prior_[a] = std::log(count[a] / static_cast<double>(x.size()));
  }
}

Posterior GaussianNaiveBayes::predict_proba(const FeatureVector& x) const {
  if (classes_ == 0) throw ConfigError("naive Bayes model is not fitted");
  std::vector<double> logp(classes_);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < classes_; ++a) {
    double lp = log_prior_[a];
    if (std::isfinite(lp)) {
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        const double d = x[f] - mean_[a][f];
        lp -= 0.5 * (std::log(2.0 * M_PI * var_[a][f]) + d * d / var_[a][f]);
      }
    }
    logp[a] = lp;
    best = std::max(best, lp);
  }
  Posterior p(classes_, 0.0);
  double sum = 0.0;
  for (std::size_t a = 0; a < classes_; ++a) {
    p[a] = std::isfinite(logp[a]) ? std::exp(logp[a] - best) : 0.0;
    sum += p[a];
  }
  for (auto& v : p) v /= sum;
  return p;
}

void NearestNeighbors::fit(const std::vector<FeatureVector>& x, const std::vector<std::size_t>& y,
                           std::size_t classes) {
  check_training_set(x, y, classes);
  if (k_ < 1) throw ConfigError("k must be at least 1");
  classes_ = classes;
  const double n = static_cast<double>(x.size());
  mean_.fill(0.0);
  scale_.fill(0.0);
  for (const auto& v : x) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) mean_[f] += v[f] / n;
  }
  for (const auto& v : x) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) scale_[f] += (v[f] - mean_[f]) * (v[f] - mean_[f]);
  }
  for (auto& s : scale_) {
    s = std::sqrt(s / n);
    if (!(s > 1e-12)) s = 1.0;
  }
  points_.clear();
  for (const auto& v : x) {
    FeatureVector z;
    for (std::size_t f = 0; f < kFeatureCount; ++f) z[f] = (v[f] - mean_[f]) / scale_[f];
    points_.push_back(z);
  }
  labels_ = y;
}

Posterior NearestNeighbors::predict_proba(const FeatureVector& x) const {
  if (points_.empty()) throw ConfigError("nearest-neighbour model is not fitted");
  FeatureVector z;
  for (std::size_t f = 0; f < kFeatureCount; ++f) z[f] = (x[f] - mean_[f]) / scale_[f];
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    double d = 0.0;
    for (std::size_t f = 0; f < kFeatureCount; ++f) d += (z[f] - points_[i][f]) * (z[f] - points_[i][f]);
    dist.emplace_back(d, i);
  }
  const std::size_t k = std::min(k_, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  Posterior p(classes_, 0.0);
  for (std::size_t j = 0; j < k; ++j) p[labels_[dist[j].second]] += 1.0 / static_cast<double>(k);
  return p;
}

std::size_t majority_vote(const std::array<Posterior, 3>& posteriors) {
  const std::size_t classes = posteriors[0].size();
  std::vector<std::size_t> votes(classes, 0);
  for (const auto& p : posteriors) {
    if (p.size() != classes) throw DimensionError("posteriors differ in length");
    ++votes[argmax(p)];
  }
  for (std::size_t a = 0; a < classes; ++a) {
    if (votes[a] >= 2) return a;
  }
  Posterior sum(classes, 0.0);
  for (const auto& p : posteriors) {
    for (std::size_t a = 0; a < classes; ++a) sum[a] += p[a];
  }
  return argmax(sum);
}

Ensemble::Ensemble(const EnsembleConfig& config)
    : nb_(config.nb_variance_floor), knn_(config.neighbors), tree_config_(config.tree) {}

void Ensemble::fit(const std::vector<FeatureVector>& x, const std::vector<std::size_t>& y,
                   std::size_t classes) {
  tree_.fit(x, y, classes, tree_config_);
  nb_.fit(x, y, classes);
  knn_.fit(x, y, classes);
  classes_ = classes;
}

std::array<Posterior, 3> Ensemble::posteriors(const FeatureVector& x) const {
  return {tree_.predict_proba(x), nb_.predict_proba(x), knn_.predict_proba(x)};
}

std::size_t Ensemble::predict(const FeatureVector& x) const { return majority_vote(posteriors(x)); }

// ---- co-training --------------------------------------------------------

void EnCoConfig::validate() const {
  if (iterations < 1) throw ConfigError("en_co.iterations must be at least 1");
  if (!(pool_fraction > 0.0 && pool_fraction <= 1.0)) {
    throw ConfigError("en_co.pool_fraction must lie in (0, 1]");
  }
}

EnCoResult en_co_train(const std::vector<FeatureVector>& labeled_x,
                       const std::vector<std::size_t>& labeled_y, std::size_t classes,
                       const std::vector<FeatureVector>& unlabeled_x, const EnCoConfig& config) {
  config.validate();
  check_training_set(labeled_x, labeled_y, classes);
  std::vector<bool> present(classes, false);
  for (auto l : labeled_y) present[l] = true;
  for (std::size_t a = 0; a < classes; ++a) {
    if (!present[a]) throw ConfigError("class " + std::to_string(a) + " missing from labeled data");
  }

  EnCoResult result{Ensemble(config.ensemble), {}, {}, 0, labeled_x, labeled_y};
  std::vector<std::size_t> remaining(unlabeled_x.size());
  std::iota(remaining.begin(), remaining.end(), 0);
  const auto pool_size = std::max<std::size_t>(
      1, static_cast<std::size_t>(config.pool_fraction * static_cast<double>(unlabeled_x.size())));
  const std::size_t cap = config.transfer_cap > 0 ? config.transfer_cap : pool_size;
  Rng rng = make_rng(config.seed, 0);

  for (std::size_t it = 0; it < config.iterations && !remaining.empty(); ++it) {
    result.ensemble.fit(result.pool_x, result.pool_y, classes);
    std::shuffle(remaining.begin(), remaining.end(), rng);
    const std::size_t draw = std::min(pool_size, remaining.size());
    std::vector<std::size_t> keep(remaining.begin() + static_cast<std::ptrdiff_t>(draw), remaining.end());
    std::size_t moved = 0;
    for (std::size_t k = 0; k < draw; ++k) {
      const std::size_t i = remaining[k];
      const auto post = result.ensemble.posteriors(unlabeled_x[i]);
      const std::size_t a = argmax(post[0]);
      if (moved < cap && argmax(post[1]) == a && argmax(post[2]) == a) {
        result.pool_x.push_back(unlabeled_x[i]);
        result.pool_y.push_back(a);
        ++moved;
      } else {
        keep.push_back(i);
      }
    }
    std::sort(keep.begin(), keep.end());
    remaining = std::move(keep);
    result.transferred.push_back(moved);
    result.labeled_pool_sizes.push_back(result.pool_x.size());
    ++result.iterations_run;
  }
  result.ensemble.fit(result.pool_x, result.pool_y, classes);
  return result;
}

EnCoResult en_co_train(const Dataset& labeled, const Dataset& unlabeled, const EnCoConfig& config) {
  std::vector<std::size_t> y;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    const auto& l = labeled.windows[i].label;
    if (!l) throw DataError("labeled window " + std::to_string(i) + " has no label");
    y.push_back(*l);
  }
  return en_co_train(extract_all(labeled), y, labeled.num_classes(), extract_all(unlabeled), config);
}

std::vector<std::size_t> predict_all(const Ensemble& ensemble, const std::vector<FeatureVector>& x) {
  std::vector<std::size_t> out;
  out.reserve(x.size());
  for (const auto& v : x) out.push_back(ensemble.predict(v));
  return out;
}

}  // namespace selfhar::baselines
