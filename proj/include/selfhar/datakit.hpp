#pragma once

// Accelerometer data handling: CSV ingestion, sliding-window segmentation,
// z-normalization, user-held-out splits, label subsampling, intensity-based
// subsets and a synthetic activity generator.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "selfhar/tensor.hpp"

namespace selfhar {

inline constexpr std::size_t kWindowLength = 400;
inline constexpr std::size_t kChannels = 3;

struct RawRecording {
  std::string user_id;
  std::vector<std::int64_t> timestamps_ms;          // strictly increasing
  std::vector<std::array<double, kChannels>> samples;
  std::vector<std::string> labels;                  // empty vector: unlabeled; "" marks a gap
  double sampling_rate_hz = 0.0;                    // nominal, from the median timestamp step

  bool labeled() const { return !labels.empty(); }
  std::size_t size() const { return samples.size(); }
};

struct Window {
  Tensor values;  // [time x 3]
  std::string user_id;
  std::optional<std::size_t> label;  // index into the dataset vocabulary
  std::optional<Tensor> soft_label;  // probability vector over the vocabulary
};

// D labeled, U unlabeled, W label-stripped mix, S teacher-selected.
enum class DatasetRole { Labeled, Unlabeled, Mixed, Selected };

struct Dataset {
  std::vector<Window> windows;
  std::vector<std::string> label_vocabulary;
  DatasetRole role = DatasetRole::Labeled;

  std::size_t size() const { return windows.size(); }
  std::size_t num_classes() const { return label_vocabulary.size(); }
  bool empty() const { return windows.empty(); }
  // Throws DataError when a label is out of range or a labeled role has no
  // vocabulary.
  void validate() const;
};

// True when any window still carries a ground-truth activity label.
bool has_ground_truth(const Dataset& dataset);

// ---- ingestion -----------------------------------------------------------

// Columns `user_id,timestamp_ms,x,y,z[,label]`, header required.
std::vector<RawRecording> ingest_csv(const std::filesystem::path& path);
void export_csv(const std::vector<RawRecording>& recordings, const std::filesystem::path& path);

// ---- segmentation --------------------------------------------------------

// Windows start every window_len * (1 - overlap) samples; the trailing
// partial window is discarded. Labeled windows take the strict-majority
// per-sample label and are dropped when no label covers more than half.
std::vector<Window> segment(const RawRecording& recording,
                            const std::vector<std::string>& vocabulary,
                            std::size_t window_len = kWindowLength, double overlap = 0.5);

// Vocabulary is the sorted set of label names found in the recordings.
Dataset build_dataset(const std::vector<RawRecording>& recordings,
                      std::size_t window_len = kWindowLength, double overlap = 0.5);
Dataset build_dataset(const std::vector<RawRecording>& recordings,
                      const std::vector<std::string>& vocabulary,
                      std::size_t window_len = kWindowLength, double overlap = 0.5);

// ---- normalization -------------------------------------------------------

inline constexpr double kStdFloor = 1e-8;

struct ChannelStats {
  std::array<double, kChannels> mean{};
  std::array<double, kChannels> stddev{};  // population, floored at kStdFloor
};

ChannelStats channel_stats(const Dataset& training);
Dataset znormalize(const Dataset& dataset, const ChannelStats& stats);

// ---- splits and subsets --------------------------------------------------

struct SplitSpec {
  double test_user_fraction = 0.2;   // within [0.20, 0.25]
  double validation_fraction = 0.1;  // of training windows, drawn per user
  std::uint64_t seed = 0;
};

struct Partitions {
  Dataset train;
  Dataset validation;
  Dataset test;
  std::vector<std::string> test_users;
};

Partitions split_by_users(const Dataset& dataset, const SplitSpec& spec);

// Exactly n_per_class windows per class, uniformly without replacement,
// returned in dataset order.
Dataset subsample_labeled(const Dataset& train, std::size_t n_per_class, std::uint64_t seed);

// Per-class window counts of a labeled dataset.
std::vector<std::size_t> class_counts(const Dataset& dataset);

enum class IntensityMode { Inactive, Balanced, Active };

// Mean over time of the per-sample Euclidean norm.
double intensity_proxy(const Window& window);

// Terciles by (proxy, index) rank. Inactive samples target_size windows from
// the lowest tercile, active from the highest, balanced equally from all
// three (remainder assigned from the lowest tercile up).
Dataset subset_by_intensity(const Dataset& unlabeled, IntensityMode mode, std::size_t target_size,
                            std::uint64_t seed);

// Label-free copy of `labeled` windows concatenated with `unlabeled`.
Dataset mix_unlabeled(const Dataset& labeled, const Dataset& unlabeled);

// ---- synthetic data ------------------------------------------------------

struct SynthConfig {
  std::size_t classes = 6;
  std::size_t users = 13;                       // labeled users
  std::size_t windows_per_user_per_class = 20;  // labeled
  std::size_t unlabeled_users = 10;
  std::size_t unlabeled_windows_per_user = 500;
  double sampling_rate_hz = 50.0;
  double noise_sigma = 0.15;
  // Spread of class frequencies and postures; smaller is harder.
  double class_separation = 1.0;
  // Per-user variation: device tilt (radians) and relative tempo.
  double orientation_jitter = 1.0;
  double tempo_jitter = 0.25;
  std::uint64_t seed = 7;
};

struct SyntheticRecordings {
  std::vector<RawRecording> labeled;
  std::vector<RawRecording> unlabeled;
};

struct SyntheticData {
  Dataset labeled;
  Dataset unlabeled;
};

SyntheticRecordings synthesize_recordings(const SynthConfig& config);
SyntheticData synthesize(const SynthConfig& config);

std::vector<std::string> synthetic_vocabulary(std::size_t classes);

}  // namespace selfhar
