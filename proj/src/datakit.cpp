#include "selfhar/datakit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "selfhar/errors.hpp"
#include "selfhar/rng.hpp"

namespace selfhar {

void Dataset::validate() const {
  const bool needs_vocab = role == DatasetRole::Labeled || role == DatasetRole::Selected;
  if (needs_vocab && label_vocabulary.empty()) {
    throw DataError("labeled dataset has an empty label vocabulary");
  }
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const Window& w = windows[i];
    if (w.label && *w.label >= label_vocabulary.size()) {
      throw DataError("window " + std::to_string(i) + " has label " + std::to_string(*w.label) +
                      " outside a vocabulary of " + std::to_string(label_vocabulary.size()));
    }
    if (w.soft_label && w.soft_label->size() != label_vocabulary.size()) {
      throw DataError("window " + std::to_string(i) + " soft label length mismatch");
    }
  }
}

bool has_ground_truth(const Dataset& dataset) {
  return std::any_of(dataset.windows.begin(), dataset.windows.end(),
                     [](const Window& w) { return w.label.has_value(); });
}

// ---- CSV ----------------------------------------------------------------

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view text, const char* column, std::size_t line) {
  text = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ParseError(std::string("cannot parse ") + column + " from '" + std::string(text) + "'",
                     line);
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) {
      throw ParseError(std::string("non-finite ") + column, line);
    }
  }
  return value;
}

double nominal_rate(const std::vector<std::int64_t>& ts) {
  if (ts.size() < 2) return 0.0;
  std::vector<std::int64_t> steps(ts.size() - 1);
  for (std::size_t i = 1; i < ts.size(); ++i) steps[i - 1] = ts[i] - ts[i - 1];
  auto mid = steps.begin() + static_cast<std::ptrdiff_t>(steps.size() / 2);
  std::nth_element(steps.begin(), mid, steps.end());
  return *mid > 0 ? 1000.0 / static_cast<double>(*mid) : 0.0;
}

}  // namespace

std::vector<RawRecording> ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  std::vector<std::string> header;
  for (auto f : split_fields(line)) header.emplace_back(trim(f));
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
  const std::vector<std::string> base{"user_id", "timestamp_ms", "x", "y", "z"};
  const bool with_label = header.size() == 6 && header[5] == "label";
  if (!(header.size() == 5 || with_label) ||
      !std::equal(base.begin(), base.end(), header.begin())) {
    throw ParseError("header must be user_id,timestamp_ms,x,y,z[,label]", 1);
  }

  std::vector<RawRecording> recordings;
  std::unordered_map<std::string, std::size_t> by_user;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    const std::string user(trim(fields[0]));
    if (user.empty()) throw ParseError("empty user_id", line_no);
    const auto ts = parse_number<std::int64_t>(fields[1], "timestamp_ms", line_no);
    const std::array<double, kChannels> xyz{parse_number<double>(fields[2], "x", line_no),
                                            parse_number<double>(fields[3], "y", line_no),
                                            parse_number<double>(fields[4], "z", line_no)};
    auto [it, inserted] = by_user.try_emplace(user, recordings.size());
    if (inserted) {
      recordings.emplace_back();
      recordings.back().user_id = user;
    }
    RawRecording& rec = recordings[it->second];
    if (!rec.timestamps_ms.empty() && ts <= rec.timestamps_ms.back()) {
      throw DataError("line " + std::to_string(line_no) + ": timestamps for user '" + user +
                      "' are not strictly increasing");
    }
    rec.timestamps_ms.push_back(ts);
    rec.samples.push_back(xyz);
    if (with_label) rec.labels.emplace_back(trim(fields[5]));
  }
  for (auto& rec : recordings) rec.sampling_rate_hz = nominal_rate(rec.timestamps_ms);
  return recordings;
}

void export_csv(const std::vector<RawRecording>& recordings, const std::filesystem::path& path) {
  const bool any_labeled = std::any_of(recordings.begin(), recordings.end(),
                                       [](const RawRecording& r) { return r.labeled(); });
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "user_id,timestamp_ms,x,y,z" << (any_labeled ? ",label" : "") << '\n';
  char buf[160];
  for (const auto& rec : recordings) {
    if (rec.timestamps_ms.size() != rec.samples.size()) {
      throw DataError("recording for '" + rec.user_id + "' has mismatched timestamps");
    }
    for (std::size_t i = 0; i < rec.samples.size(); ++i) {
      const auto& s = rec.samples[i];
      std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9g,%.9g",
                    static_cast<long long>(rec.timestamps_ms[i]), s[0], s[1], s[2]);
      out << rec.user_id << ',' << buf;
      if (any_labeled) out << ',' << (rec.labeled() ? rec.labels[i] : std::string());
      out << '\n';
    }
  }
  if (!out) throw Error("write failed for " + path.string());
}

// ---- segmentation -------------------------------------------------------

std::vector<Window> segment(const RawRecording& recording,
                            const std::vector<std::string>& vocabulary, std::size_t window_len,
                            double overlap) {
  if (window_len == 0) throw ConfigError("window_len must be at least 1");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw ConfigError("overlap must be in [0, 1)");
  if (recording.labeled() && recording.labels.size() != recording.samples.size()) {
    throw DataError("recording for '" + recording.user_id + "' has mismatched label count");
  }
  const auto step = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(window_len) * (1.0 - overlap))));

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < vocabulary.size(); ++i) index.emplace(vocabulary[i], i);

  std::vector<Window> out;
  const std::size_t n = recording.samples.size();
  for (std::size_t start = 0; start + window_len <= n; start += step) {
    Window w;
    w.user_id = recording.user_id;
    if (recording.labeled()) {
      std::map<std::string_view, std::size_t> votes;
      for (std::size_t t = start; t < start + window_len; ++t) {
        if (!recording.labels[t].empty()) ++votes[recording.labels[t]];
      }
      const std::string_view* winner = nullptr;
      for (const auto& [name, count] : votes) {
        if (2 * count > window_len) winner = &name;
      }
      if (winner == nullptr) continue;
      const auto it = index.find(std::string(*winner));
      if (it == index.end()) {
        throw DataError("label '" + std::string(*winner) + "' missing from the vocabulary");
      }
      w.label = it->second;
    }
    w.values = Tensor({window_len, kChannels});
    for (std::size_t t = 0; t < window_len; ++t) {
      for (std::size_t c = 0; c < kChannels; ++c) {
        const double v = recording.samples[start + t][c];
        if (!std::isfinite(v)) {
          throw DataError("non-finite sample in recording for '" + recording.user_id + "'");
        }
        w.values.at(t, c) = v;
      }
    }
    out.push_back(std::move(w));
  }
  return out;
}

Dataset build_dataset(const std::vector<RawRecording>& recordings, std::size_t window_len,
                      double overlap) {
  std::set<std::string> names;
  for (const auto& rec : recordings) {
    for (const auto& l : rec.labels) {
      if (!l.empty()) names.insert(l);
    }
  }
  return build_dataset(recordings, std::vector<std::string>(names.begin(), names.end()),
                       window_len, overlap);
}

Dataset build_dataset(const std::vector<RawRecording>& recordings,
                      const std::vector<std::string>& vocabulary, std::size_t window_len,
                      double overlap) {
  Dataset ds;
  ds.label_vocabulary = vocabulary;
  const bool labeled = std::any_of(recordings.begin(), recordings.end(),
                                   [](const RawRecording& r) { return r.labeled(); });
  ds.role = labeled ? DatasetRole::Labeled : DatasetRole::Unlabeled;
  for (const auto& rec : recordings) {
    auto windows = segment(rec, vocabulary, window_len, overlap);
    std::move(windows.begin(), windows.end(), std::back_inserter(ds.windows));
  }
  if (labeled) ds.validate();
  return ds;
}

// ---- normalization ------------------------------------------------------

ChannelStats channel_stats(const Dataset& training) {
  if (training.empty()) throw ConfigError("normalization statistics need a non-empty training partition");
  std::array<double, kChannels> sum{};
  std::size_t count = 0;
  for (const auto& w : training.windows) {
    if (w.values.rank() != 2 || w.values.dim(1) != kChannels) {
      throw DimensionError("window values must be [time x 3], got " + shape_string(w.values.shape()));
    }
    for (std::size_t t = 0; t < w.values.dim(0); ++t) {
      for (std::size_t c = 0; c < kChannels; ++c) sum[c] += w.values.at(t, c);
    }
    count += w.values.dim(0);
  }
  ChannelStats stats;
  for (std::size_t c = 0; c < kChannels; ++c) stats.mean[c] = sum[c] / static_cast<double>(count);
  std::array<double, kChannels> sq{};
  for (const auto& w : training.windows) {
    for (std::size_t t = 0; t < w.values.dim(0); ++t) {
      for (std::size_t c = 0; c < kChannels; ++c) {
        const double d = w.values.at(t, c) - stats.mean[c];
        sq[c] += d * d;
      }
    }
  }
  for (std::size_t c = 0; c < kChannels; ++c) {
    stats.stddev[c] = std::max(std::sqrt(sq[c] / static_cast<double>(count)), kStdFloor);
  }
  return stats;
}

Dataset znormalize(const Dataset& dataset, const ChannelStats& stats) {
  Dataset out = dataset;
  for (auto& w : out.windows) {
    if (w.values.rank() != 2 || w.values.dim(1) != kChannels) {
      throw DimensionError("window values must be [time x 3], got " + shape_string(w.values.shape()));
    }
    for (std::size_t t = 0; t < w.values.dim(0); ++t) {
      for (std::size_t c = 0; c < kChannels; ++c) {
        w.values.at(t, c) = (w.values.at(t, c) - stats.mean[c]) / stats.stddev[c];
      }
    }
  }
  return out;
}

// ---- splits -------------------------------------------------------------

namespace {

Dataset empty_like(const Dataset& d) {
  Dataset out;
  out.label_vocabulary = d.label_vocabulary;
  out.role = d.role;
  return out;
}

}  // namespace

Partitions split_by_users(const Dataset& dataset, const SplitSpec& spec) {
  if (!(spec.test_user_fraction >= 0.20 - 1e-12 && spec.test_user_fraction <= 0.25 + 1e-12)) {
    throw ConfigError("test_user_fraction must lie in [0.20, 0.25]");
  }
  if (!(spec.validation_fraction > 0.0 && spec.validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must lie in (0, 1)");
  }
  std::set<std::string> user_set;
  for (const auto& w : dataset.windows) user_set.insert(w.user_id);
  if (user_set.size() < 3) {
    throw ConfigError("split_by_users needs at least 3 distinct users, found " +
                      std::to_string(user_set.size()));
  }
  std::vector<std::string> users(user_set.begin(), user_set.end());
  Rng rng = make_rng(spec.seed, 0);
  std::shuffle(users.begin(), users.end(), rng);
  const auto n_test = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::llround(spec.test_user_fraction * static_cast<double>(users.size()))));
  std::set<std::string> test_users(users.begin(), users.begin() + static_cast<std::ptrdiff_t>(n_test));

  Partitions p{empty_like(dataset), empty_like(dataset), empty_like(dataset), {}};
  p.test_users.assign(test_users.begin(), test_users.end());

  // Per training user: shuffle that user's window indices and hold out a
  // rounded fraction for validation.
  std::map<std::string, std::vector<std::size_t>> per_user;
  for (std::size_t i = 0; i < dataset.windows.size(); ++i) {
    const auto& u = dataset.windows[i].user_id;
    if (!test_users.count(u)) per_user[u].push_back(i);
  }
  std::vector<char> is_validation(dataset.windows.size(), 0);
  std::size_t n_val = 0, n_train_total = 0;
  Rng vrng = make_rng(spec.seed, 1);
  for (auto& [user, idx] : per_user) {
    n_train_total += idx.size();
    std::shuffle(idx.begin(), idx.end(), vrng);
    const auto take = static_cast<std::size_t>(
        std::llround(spec.validation_fraction * static_cast<double>(idx.size())));
    for (std::size_t k = 0; k < take && k + 1 < idx.size(); ++k) {
      is_validation[idx[k]] = 1;
      ++n_val;
    }
  }
  if (n_val == 0 && n_train_total >= 2) {
    // Too few windows per user for rounding to reach one; take one overall.
    for (auto& [user, idx] : per_user) {
      if (idx.size() >= 2) {
        is_validation[idx[0]] = 1;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < dataset.windows.size(); ++i) {
    const Window& w = dataset.windows[i];
    if (test_users.count(w.user_id)) {
      p.test.windows.push_back(w);
    } else if (is_validation[i]) {
      p.validation.windows.push_back(w);
    } else {
      p.train.windows.push_back(w);
    }
  }
  return p;
}

std::vector<std::size_t> class_counts(const Dataset& dataset) {
  std::vector<std::size_t> counts(dataset.num_classes(), 0);
  for (const auto& w : dataset.windows) {
    if (w.label) {
      if (*w.label >= counts.size()) throw DataError("label outside the vocabulary");
      ++counts[*w.label];
    }
  }
  return counts;
}

Dataset subsample_labeled(const Dataset& train, std::size_t n_per_class, std::uint64_t seed) {
  if (n_per_class == 0) throw ConfigError("n_per_class must be at least 1");
  if (train.num_classes() == 0) throw DataError("subsample_labeled needs a labeled vocabulary");
  std::vector<std::vector<std::size_t>> by_class(train.num_classes());
  for (std::size_t i = 0; i < train.windows.size(); ++i) {
    const auto& l = train.windows[i].label;
    if (l) by_class.at(*l).push_back(i);
  }
  std::vector<std::size_t> chosen;
  for (std::size_t a = 0; a < by_class.size(); ++a) {
    auto& idx = by_class[a];
    if (idx.size() < n_per_class) {
      throw DataError("class '" + train.label_vocabulary[a] + "' has " +
                      std::to_string(idx.size()) + " windows, fewer than the " +
                      std::to_string(n_per_class) + " requested");
    }
    Rng rng = make_rng(seed, a);
    std::shuffle(idx.begin(), idx.end(), rng);
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_per_class));
  }
  std::sort(chosen.begin(), chosen.end());
  Dataset out = empty_like(train);
  for (auto i : chosen) out.windows.push_back(train.windows[i]);
  return out;
}

// ---- intensity ----------------------------------------------------------

double intensity_proxy(const Window& window) {
  const Tensor& v = window.values;
  if (v.rank() != 2 || v.dim(1) != kChannels) {
    throw DimensionError("window values must be [time x 3], got " + shape_string(v.shape()));
  }
  double total = 0.0;
  for (std::size_t t = 0; t < v.dim(0); ++t) {
    total += std::sqrt(v.at(t, 0) * v.at(t, 0) + v.at(t, 1) * v.at(t, 1) + v.at(t, 2) * v.at(t, 2));
  }
  return total / static_cast<double>(v.dim(0));
}

Dataset subset_by_intensity(const Dataset& unlabeled, IntensityMode mode, std::size_t target_size,
                            std::uint64_t seed) {
  if (unlabeled.empty()) throw DataError("intensity subsetting needs a non-empty dataset");
  const std::size_t n = unlabeled.size();
  std::vector<double> proxy(n);
  for (std::size_t i = 0; i < n; ++i) proxy[i] = intensity_proxy(unlabeled.windows[i]);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return proxy[a] < proxy[b]; });

  // Rank-based terciles; the first n % 3 terciles take one extra window.
  std::array<std::vector<std::size_t>, 3> terciles;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const std::size_t size = n / 3 + (k < n % 3 ? 1 : 0);
    terciles[k].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                       order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }

  std::array<std::size_t, 3> want{};
  switch (mode) {
    case IntensityMode::Inactive: want = {target_size, 0, 0}; break;
    case IntensityMode::Active: want = {0, 0, target_size}; break;
    case IntensityMode::Balanced:
      for (std::size_t k = 0; k < 3; ++k) want[k] = target_size / 3 + (k < target_size % 3 ? 1 : 0);
      break;
  }
  std::vector<std::size_t> chosen;
  for (std::size_t k = 0; k < 3; ++k) {
    if (want[k] == 0) continue;
    auto pool = terciles[k];
    if (want[k] > pool.size()) {
      throw DataError("intensity tercile " + std::to_string(k) + " holds " +
                      std::to_string(pool.size()) + " windows, fewer than the " +
                      std::to_string(want[k]) + " requested");
    }
    Rng rng = make_rng(seed, k);
    std::shuffle(pool.begin(), pool.end(), rng);
    chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(want[k]));
  }
  std::sort(chosen.begin(), chosen.end());
  Dataset out = empty_like(unlabeled);
  for (auto i : chosen) out.windows.push_back(unlabeled.windows[i]);
  return out;
}

Dataset mix_unlabeled(const Dataset& labeled, const Dataset& unlabeled) {
  Dataset out;
  out.role = DatasetRole::Mixed;
  out.label_vocabulary = labeled.label_vocabulary.empty() ? unlabeled.label_vocabulary
                                                          : labeled.label_vocabulary;
  out.windows.reserve(labeled.size() + unlabeled.size());
  for (const Dataset* src : {&labeled, &unlabeled}) {
    for (const auto& w : src->windows) {
      Window copy;
      copy.values = w.values;
      copy.user_id = w.user_id;
      out.windows.push_back(std::move(copy));
    }
  }
  return out;
}

// ---- synthetic generator ------------------------------------------------

std::vector<std::string> synthetic_vocabulary(std::size_t classes) {
  std::vector<std::string> names;
  char buf[32];
  for (std::size_t c = 0; c < classes; ++c) {
    std::snprintf(buf, sizeof(buf), "activity_%02zu", c);
    names.emplace_back(buf);
  }
  return names;
}

namespace {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

Mat3 rotation_about(const Vec3& axis, double angle) {
  const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  const double x = axis[0], y = axis[1], z = axis[2];
  return {{{t * x * x + c, t * x * y - s * z, t * x * z + s * y},
           {t * x * y + s * z, t * y * y + c, t * y * z - s * x},
           {t * x * z - s * y, t * y * z + s * x, t * z * z + c}}};
}

Vec3 rotate_vec(const Mat3& m, const Vec3& v) {
  return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
          m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
          m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

Vec3 random_unit(Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec3 v{g(rng), g(rng), g(rng)};
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

// Class-level signal shape. Cues are frequency, harmonic content, intensity
// and the angle between the motion axis and gravity, so they survive a change
// of device orientation. Intensity rises with the class index.
struct ClassProfile {
  double frequency_hz;
  double harmonic;   // relative amplitude of the second harmonic
  double intensity;
  double tilt;       // motion axis angle from gravity
  double secondary;  // relative amplitude on the orthogonal axis
};

std::vector<ClassProfile> class_profiles(std::size_t classes, double separation, std::uint64_t seed) {
  std::vector<ClassProfile> out;
  const double span = static_cast<double>(classes - 1);
  for (std::size_t c = 0; c < classes; ++c) {
    Rng rng = make_rng(seed, 1000 + c);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double level = static_cast<double>(c) / span;
    // Interleaved orders keep neighbouring intensities apart on the other cues.
    const double tilt_rank = static_cast<double>((3 * c) % classes) / span;
    const double harmonic_rank = static_cast<double>((2 * c + 1) % classes) / span;
    ClassProfile p;
    p.frequency_hz = 0.9 * std::exp(separation * 1.5 * level) * (0.95 + 0.1 * u(rng));
    p.harmonic = 0.1 + separation * 0.7 * std::min(harmonic_rank, 1.0);
    p.intensity = 0.15 + 1.0 * level;
    p.tilt = 0.5 * std::numbers::pi * std::min(separation * tilt_rank, 1.0);
    p.secondary = 0.15 + 0.4 * u(rng);
    out.push_back(p);
  }
  return out;
}

struct UserProfile {
  double gain;
  double tempo;
  Mat3 orientation;
};

UserProfile user_profile(const SynthConfig& config, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  UserProfile p;
  p.gain = 0.8 + 0.4 * u(rng);
  p.tempo = 1.0 + config.tempo_jitter * (2.0 * u(rng) - 1.0);
  p.orientation = rotation_about(random_unit(rng), config.orientation_jitter * u(rng));
  return p;
}

// Appends `length` samples of class `c` to the recording.
void emit_block(RawRecording& rec, const ClassProfile& cls, const UserProfile& user,
                std::size_t length, bool labeled, const std::string& label, double rate,
                double noise_sigma, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, noise_sigma);
  Vec3 phase1, phase2;
  for (std::size_t k = 0; k < 3; ++k) {
    phase1[k] = 2.0 * std::numbers::pi * u(rng);
    phase2[k] = 2.0 * std::numbers::pi * u(rng);
  }
  const double block_gain = user.gain * cls.intensity * (0.9 + 0.2 * u(rng));
  const double f = cls.frequency_hz * user.tempo * (0.95 + 0.1 * u(rng));
  // Motion axis at the class tilt from gravity (z) with a random azimuth.
  const double az = 2.0 * std::numbers::pi * u(rng);
  const Vec3 axis{std::sin(cls.tilt) * std::cos(az), std::sin(cls.tilt) * std::sin(az), std::cos(cls.tilt)};
  const Vec3 ortho{std::cos(cls.tilt) * std::cos(az), std::cos(cls.tilt) * std::sin(az), -std::sin(cls.tilt)};
  const std::int64_t step_ms = std::llround(1000.0 / rate);
  for (std::size_t i = 0; i < length; ++i) {
    const std::size_t n = rec.samples.size();
    const double t = static_cast<double>(n) / rate;
    const double w = 2.0 * std::numbers::pi * f * t;
    const double a = std::sin(w + phase1[0]) + cls.harmonic * std::sin(2.0 * w + phase2[0]);
    const double b = cls.secondary * std::sin(w + phase1[1]);
    Vec3 v;
    for (std::size_t k = 0; k < 3; ++k) {
      v[k] = (k == 2 ? 1.0 : 0.0) + block_gain * (a * axis[k] + b * ortho[k]);
    }
    v = rotate_vec(user.orientation, v);
    for (auto& x : v) x += noise(rng);
    rec.timestamps_ms.push_back(static_cast<std::int64_t>(n) * step_ms);
    rec.samples.push_back(v);
    if (labeled) rec.labels.push_back(label);
  }
}

}  // namespace

SyntheticRecordings synthesize_recordings(const SynthConfig& config) {
  if (config.classes < 2) throw ConfigError("synthetic data needs at least 2 classes");
  if (config.users < 3) throw ConfigError("synthetic data needs at least 3 labeled users");
  if (!(config.sampling_rate_hz > 0.0)) throw ConfigError("sampling rate must be positive");
  if (!(config.noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be nonnegative");
  const auto classes = class_profiles(config.classes, config.class_separation, config.seed);
  const auto names = synthetic_vocabulary(config.classes);
  const std::size_t step = kWindowLength / 2;

  SyntheticRecordings out;
  char buf[32];
  for (std::size_t u = 0; u < config.users; ++u) {
    Rng rng = make_rng(config.seed, 2000 + u);
    const UserProfile user = user_profile(config, rng);
    RawRecording rec;
    std::snprintf(buf, sizeof(buf), "user_%03zu", u);
    rec.user_id = buf;
    rec.sampling_rate_hz = config.sampling_rate_hz;
    std::vector<std::size_t> order(config.classes);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    // Block of m windows spans step * (m + 1) samples; windows straddling two
    // blocks split 50/50 and are dropped by the majority rule.
    for (auto c : order) {
      emit_block(rec, classes[c], user, step * (config.windows_per_user_per_class + 1), true,
                 names[c], config.sampling_rate_hz, config.noise_sigma, rng);
    }
    if (config.windows_per_user_per_class == 0) rec.labels.clear();
    out.labeled.push_back(std::move(rec));
  }

  std::uniform_int_distribution<std::size_t> pick(0, config.classes - 1);
  std::uniform_int_distribution<std::size_t> block_windows(4, 40);
  for (std::size_t u = 0; u < config.unlabeled_users; ++u) {
    if (config.unlabeled_windows_per_user == 0) break;
    Rng rng = make_rng(config.seed, 3000 + u);
    const UserProfile user = user_profile(config, rng);
    RawRecording rec;
    std::snprintf(buf, sizeof(buf), "extra_%03zu", u);
    rec.user_id = buf;
    rec.sampling_rate_hz = config.sampling_rate_hz;
    const std::size_t total = kWindowLength + step * (config.unlabeled_windows_per_user - 1);
    while (rec.samples.size() < total) {
      const std::size_t len = std::min(step * block_windows(rng), total - rec.samples.size());
      const std::size_t c = pick(rng);
      emit_block(rec, classes[c], user, len, false, {}, config.sampling_rate_hz,
                 config.noise_sigma, rng);
    }
    out.unlabeled.push_back(std::move(rec));
  }
  return out;
}

SyntheticData synthesize(const SynthConfig& config) {
  const auto recs = synthesize_recordings(config);
  const auto vocab = synthetic_vocabulary(config.classes);
  SyntheticData data;
  data.labeled = build_dataset(recs.labeled, vocab);
  data.labeled.role = DatasetRole::Labeled;
  data.unlabeled = build_dataset(recs.unlabeled, vocab);
  data.unlabeled.role = DatasetRole::Unlabeled;
  return data;
}

}  // namespace selfhar
