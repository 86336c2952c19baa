#pragma once

// En-Co-Training: agreement-based co-training of a decision tree, a Gaussian
// naive Bayes model and a 3-nearest-neighbour classifier on hand-crafted
// statistical window features.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "selfhar/datakit.hpp"
#include "selfhar/tensor.hpp"

namespace selfhar::baselines {

inline constexpr std::size_t kFeatureCount = 27;
using FeatureVector = std::array<double, kFeatureCount>;

// Layout: for each statistic in [mean, iqr, mad, rms, std, var, energy], the
// x, y and z values; then corr_xy, corr_xz, corr_yz; then 3 reserved zeros.
// std and var are population moments. mad is the mean absolute deviation
// from the mean. energy is the sum of squared DFT magnitudes without the DC
// bin, divided by the window length.
FeatureVector extract_features(const Tensor& window);
std::vector<std::string> feature_names();

std::vector<FeatureVector> extract_all(const Dataset& dataset);
void export_features_csv(const Dataset& dataset, const std::filesystem::path& path);

using Posterior = std::vector<double>;

struct TreeConfig {
  std::size_t max_depth = 10;
  std::size_t min_leaf = 2;
};

// CART with Gini impurity. Leaves store class frequencies.
class DecisionTree {
 public:
  void fit(const std::vector<FeatureVector>& x, const std::vector<std::size_t>& y,
           std::size_t classes, const TreeConfig& config = {});
  Posterior predict_proba(const FeatureVector& x) const;
  std::size_t depth() const;
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::size_t left = 0, right = 0;
    std::size_t level = 0;
    Posterior distribution;
  };
  std::size_t grow(const std::vector<FeatureVector>& x, const std::vector<std::size_t>& y,
                   std::vector<std::size_t>& idx, std::size_t level, const TreeConfig& config);
  std::vector<Node> nodes_;
  std::size_t classes_ = 0;
};

class GaussianNaiveBayes {
 public:
  explicit GaussianNaiveBayes(double variance_floor = 1e-9) : floor_(variance_floor) {}
  void fit(const std::vector<FeatureVector>& x, const std::vector<std::size_t>& y,
           std::size_t classes);
  Posterior predict_proba(const FeatureVector& x) const;

 private:
  double floor_;
  std::size_t classes_ = 0;
  std::vector<double> log_prior_;
  std::vector<FeatureVector> mean_, var_;
};

// Euclidean distance on features z-scored with the training statistics.
// Posterior is the vote fraction among the k nearest (ties by index).
class NearestNeighbors {
 public:
  explicit NearestNeighbors(std::size_t k = 3) : k_(k) {}
  void fit(const std::vector<FeatureVector>& x, const std::vector<std::size_t>& y,
           std::size_t classes);
  Posterior predict_proba(const FeatureVector& x) const;

 private:
  std::size_t k_;
  std::size_t classes_ = 0;
  FeatureVector mean_{}, scale_{};
  std::vector<FeatureVector> points_;
  std::vector<std::size_t> labels_;
};

std::size_t argmax(const Posterior& p);  // lowest index on ties

// Two or three agreeing votes win; otherwise the largest summed posterior,
// then the lowest class index.
std::size_t majority_vote(const std::array<Posterior, 3>& posteriors);

struct EnsembleConfig {
  TreeConfig tree;
  double nb_variance_floor = 1e-9;
  std::size_t neighbors = 3;
};

class Ensemble {
 public:
  explicit Ensemble(const EnsembleConfig& config = {});
  void fit(const std::vector<FeatureVector>& x, const std::vector<std::size_t>& y,
           std::size_t classes);
  std::array<Posterior, 3> posteriors(const FeatureVector& x) const;
  std::size_t predict(const FeatureVector& x) const;
  std::size_t classes() const { return classes_; }

 private:
  DecisionTree tree_;
  GaussianNaiveBayes nb_;
  NearestNeighbors knn_;
  TreeConfig tree_config_;
  std::size_t classes_ = 0;
};

struct EnCoConfig {
  double pool_fraction = 0.1;  // working pool size relative to |U|
  std::size_t iterations = 20;
  std::size_t transfer_cap = 0;  // per iteration; 0 means the pool size
  EnsembleConfig ensemble;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EnCoResult {
  Ensemble ensemble;
  std::vector<std::size_t> labeled_pool_sizes;  // after each iteration
  std::vector<std::size_t> transferred;         // per iteration
  std::size_t iterations_run = 0;
  // Final labeled pool; the first |D| entries are the original labels.
  std::vector<FeatureVector> pool_x;
  std::vector<std::size_t> pool_y;
};

EnCoResult en_co_train(const std::vector<FeatureVector>& labeled_x,
                       const std::vector<std::size_t>& labeled_y, std::size_t classes,
                       const std::vector<FeatureVector>& unlabeled_x, const EnCoConfig& config);
EnCoResult en_co_train(const Dataset& labeled, const Dataset& unlabeled, const EnCoConfig& config);

std::vector<std::size_t> predict_all(const Ensemble& ensemble, const std::vector<FeatureVector>& x);

}  // namespace selfhar::baselines
