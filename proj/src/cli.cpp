#include "selfhar/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "selfhar/baselines.hpp"
#include "selfhar/errors.hpp"
#include "selfhar/model.hpp"
#include "selfhar/rng.hpp"

namespace selfhar::cli {

using nlohmann::json;
namespace fs = std::filesystem;

// ---- names and logging --------------------------------------------------

std::string_view protocol_name(Protocol p) {
  switch (p) {
    case Protocol::Standard: return "standard";
    case Protocol::Linear: return "linear";
    case Protocol::Both: return "both";
  }
  return "";
}

Protocol protocol_from_name(std::string_view name) {
  for (Protocol p : {Protocol::Standard, Protocol::Linear, Protocol::Both}) {
    if (protocol_name(p) == name) return p;
  }
  throw ConfigError("protocol: expected standard, linear or both, got '" + std::string(name) + "'");
}

namespace {

std::atomic<LogLevel> g_level{LogLevel::Info};
std::mutex g_log_mutex;

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Timestamped progress lines kept apart from the deterministic artifacts.
class RunLog {
 public:
  explicit RunLog(const fs::path& path) : out_(path, std::ios::app) {}
  void write(const std::string& message) {
    std::lock_guard lock(mutex_);
    out_ << timestamp() << ' ' << message << '\n';
    out_.flush();
    log(LogLevel::Info, message);
  }

 private:
  std::ofstream out_;
  std::mutex mutex_;
};

}  // namespace

LogLevel log_level_from_env() {
  const char* v = std::getenv("SELFHAR_LOG");
  if (v == nullptr || *v == '\0') return LogLevel::Info;
  const std::string s(v);
  if (s == "error") return LogLevel::Error;
  if (s == "info") return LogLevel::Info;
  if (s == "debug") return LogLevel::Debug;
  throw ConfigError("SELFHAR_LOG: expected error, info or debug, got '" + s + "'");
}

void set_log_level(LogLevel level) { g_level = level; }

void log(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) > static_cast<int>(g_level.load())) return;
  static constexpr const char* kTags[] = {"error", "info", "debug"};
  std::lock_guard lock(g_log_mutex);
  std::cerr << '[' << kTags[static_cast<int>(level)] << "] " << message << '\n';
}

// ---- sources ------------------------------------------------------------

bool is_synthetic(std::string_view source) { return source.rfind("synthetic:", 0) == 0; }

SynthConfig parse_synthetic_spec(std::string_view source) {
  if (!is_synthetic(source)) throw ConfigError("not a synthetic source: '" + std::string(source) + "'");
  SynthConfig c;
  std::string rest(source.substr(std::string_view("synthetic:").size()));
  std::stringstream ss(rest);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("synthetic source: expected key=value, got '" + item + "'");
    std::string key = item.substr(0, eq);
    std::replace(key.begin(), key.end(), '-', '_');
    const std::string value = item.substr(eq + 1);
    auto as_size = [&]() -> std::size_t {
      std::size_t pos = 0;
      unsigned long long v = 0;
      try {
        v = std::stoull(value, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != value.size() || value.empty() || value[0] == '-') {
        throw ConfigError("synthetic source: " + key + " expects a non-negative integer, got '" + value + "'");
      }
      return static_cast<std::size_t>(v);
    };
    auto as_double = [&]() -> double {
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(value, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != value.size() || value.empty()) {
        throw ConfigError("synthetic source: " + key + " expects a number, got '" + value + "'");
      }
      return v;
    };
    if (key == "classes") c.classes = as_size();
    else if (key == "users") c.users = as_size();
    else if (key == "windows_per_class") c.windows_per_user_per_class = as_size();
    else if (key == "unlabeled_users") c.unlabeled_users = as_size();
    else if (key == "unlabeled_windows") c.unlabeled_windows_per_user = as_size();
    else if (key == "rate") c.sampling_rate_hz = as_double();
    else if (key == "noise") c.noise_sigma = as_double();
    else if (key == "separation") c.class_separation = as_double();
    else if (key == "orientation_jitter") c.orientation_jitter = as_double();
    else if (key == "tempo_jitter") c.tempo_jitter = as_double();
    else if (key == "seed") c.seed = as_size();
    else throw ConfigError("synthetic source: unknown key '" + key + "'");
  }
  return c;
}

// ---- config parsing -----------------------------------------------------

namespace {

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  throw ConfigError("config field '" + path + "': " + what);
}

template <std::unsigned_integral T>
void read_value(const json& v, const std::string& path, T& out) {
  if (v.is_number_unsigned()) {
    out = v.get<T>();
  } else if (v.is_number_integer() && v.get<long long>() >= 0) {
    out = static_cast<T>(v.get<long long>());
  } else {
    field_error(path, "expected a non-negative integer");
  }
}

void read_value(const json& v, const std::string& path, double& out) {
  if (!v.is_number()) field_error(path, "expected a number");
  out = v.get<double>();
}

void read_value(const json& v, const std::string& path, bool& out) {
  if (!v.is_boolean()) field_error(path, "expected true or false");
  out = v.get<bool>();
}

void read_value(const json& v, const std::string& path, std::string& out) {
  if (!v.is_string()) field_error(path, "expected a string");
  out = v.get<std::string>();
}

template <class T>
void read_value(const json& v, const std::string& path, std::vector<T>& out) {
  if (!v.is_array()) field_error(path, "expected an array");
  out.clear();
  for (std::size_t i = 0; i < v.size(); ++i) {
    T item{};
    read_value(v[i], path + "[" + std::to_string(i) + "]", item);
    out.push_back(item);
  }
}

// Object reader that records consumed keys and rejects the rest.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) field_error(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.push_back(key);
    if (auto it = j_.find(key); it != j_.end()) read_value(*it, child(key), out);
  }

  template <class F>
  void get_with(const std::string& key, F&& convert) {
    seen_.push_back(key);
    if (auto it = j_.find(key); it != j_.end()) {
      std::string s;
      read_value(*it, child(key), s);
      try {
        convert(s);
      } catch (const ConfigError& e) {
        field_error(child(key), e.what());
      }
    }
  }

  const json* object(const std::string& key) {
    seen_.push_back(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end()) {
        field_error(child(it.key()), "unknown field");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

std::string_view init_scheme_name(InitScheme s) {
  return s == InitScheme::FanIn ? "fan_in" : "gaussian";
}

InitScheme init_scheme_from_name(const std::string& s) {
  if (s == "gaussian") return InitScheme::Gaussian;
  if (s == "fan_in") return InitScheme::FanIn;
  throw ConfigError("expected gaussian or fan_in, got '" + s + "'");
}

void read_pipeline(const json& j, PipelineConfig& p) {
  Fields f(j, "pipeline");
  f.get_with("configuration", [&](const std::string& s) { p.configuration = configuration_from_name(s); });
  f.get("seed", p.seed);
  f.get("reinit_har_head", p.reinit_har_head);
  f.get("pretrain_validation_fraction", p.pretrain_validation_fraction);
  f.get("max_pretrain_windows", p.max_pretrain_windows);
  f.get("n_resamples", p.n_resamples);
  if (const json* s = f.object("selection")) {
    Fields g(*s, "pipeline.selection");
    g.get("confidence_threshold", p.selection.confidence_threshold);
    g.get("per_class_cap", p.selection.per_class_cap);
    g.get("allow_multiclass_selection", p.selection.allow_multiclass_selection);
    g.finish();
  }
  if (const json* s = f.object("schedule")) {
    Fields g(*s, "pipeline.schedule");
    g.get("teacher_epochs", p.schedule.teacher_epochs);
    g.get("pretrain_epochs", p.schedule.pretrain_epochs);
    g.get("finetune_epochs", p.schedule.finetune_epochs);
    g.get("batch_size", p.schedule.batch_size);
    g.get("patience", p.schedule.patience);
    g.get("max_batches_per_epoch", p.schedule.max_batches_per_epoch);
    g.get("learning_rate", p.schedule.learning_rate);
    g.finish();
  }
  if (const json* s = f.object("transforms")) {
    Fields g(*s, "pipeline.transforms");
    g.get("noise_sigma", p.transforms.noise_sigma);
    g.get("scale_low", p.transforms.scale_low);
    g.get("scale_high", p.transforms.scale_high);
    g.get("scramble_segments", p.transforms.scramble_segments);
    g.get("warp_knots", p.transforms.warp_knots);
    g.get("warp_sigma", p.transforms.warp_sigma);
    g.finish();
  }
  if (const json* s = f.object("architecture")) {
    Fields g(*s, "pipeline.architecture");
    if (const json* conv = g.object("conv")) {
      if (!conv->is_array() || conv->size() != 3) {
        field_error("pipeline.architecture.conv", "expected an array of 3 layers");
      }
      for (std::size_t l = 0; l < 3; ++l) {
        Fields c((*conv)[l], "pipeline.architecture.conv[" + std::to_string(l) + "]");
        c.get("filters", p.architecture.conv[l].filters);
        c.get("width", p.architecture.conv[l].width);
        c.finish();
      }
    }
    g.get("input_channels", p.architecture.input_channels);
    g.get("har_hidden", p.architecture.har_hidden);
    g.get("td_hidden", p.architecture.td_hidden);
    g.get("dropout_rate", p.architecture.dropout_rate);
    g.get("shared_td_hidden", p.architecture.shared_td_hidden);
    g.finish();
  }
  if (const json* s = f.object("init")) {
    Fields g(*s, "pipeline.init");
    g.get_with("scheme", [&](const std::string& v) { p.init.scheme = init_scheme_from_name(v); });
    g.get("stddev", p.init.stddev);
    g.finish();
  }
  if (const json* s = f.object("regularization")) {
    Fields g(*s, "pipeline.regularization");
    g.get("l2_factor", p.regularization.l2_factor);
    g.finish();
  }
  f.finish();
}

json pipeline_json(const PipelineConfig& p) {
  return {
      {"configuration", configuration_name(p.configuration)},
      {"seed", p.seed},
      {"reinit_har_head", p.reinit_har_head},
      {"pretrain_validation_fraction", p.pretrain_validation_fraction},
      {"max_pretrain_windows", p.max_pretrain_windows},
      {"n_resamples", p.n_resamples},
      {"selection",
       {{"confidence_threshold", p.selection.confidence_threshold},
        {"per_class_cap", p.selection.per_class_cap},
        {"allow_multiclass_selection", p.selection.allow_multiclass_selection}}},
      {"schedule",
       {{"teacher_epochs", p.schedule.teacher_epochs},
        {"pretrain_epochs", p.schedule.pretrain_epochs},
        {"finetune_epochs", p.schedule.finetune_epochs},
        {"batch_size", p.schedule.batch_size},
        {"patience", p.schedule.patience},
        {"max_batches_per_epoch", p.schedule.max_batches_per_epoch},
        {"learning_rate", p.schedule.learning_rate}}},
      {"transforms",
       {{"noise_sigma", p.transforms.noise_sigma},
        {"scale_low", p.transforms.scale_low},
        {"scale_high", p.transforms.scale_high},
        {"scramble_segments", p.transforms.scramble_segments},
        {"warp_knots", p.transforms.warp_knots},
        {"warp_sigma", p.transforms.warp_sigma}}},
      {"architecture", architecture_json(p.architecture)},
      {"init", {{"scheme", init_scheme_name(p.init.scheme)}, {"stddev", p.init.stddev}}},
      {"regularization", {{"l2_factor", p.regularization.l2_factor}}},
  };
}

}  // namespace

RunConfig config_from_json(const json& j) {
  RunConfig c;
  Fields f(j, "");
  f.get("labeled", c.labeled);
  f.get("unlabeled", c.unlabeled);
  std::string out = c.out.string();
  f.get("out", out);
  c.out = out;
  f.get_with("protocol", [&](const std::string& s) { c.protocol = protocol_from_name(s); });
  f.get("labels_per_class", c.labels_per_class);
  f.get("seeds", c.seeds);
  f.get("jobs", c.jobs);
  if (const json* s = f.object("split")) {
    Fields g(*s, "split");
    g.get("test_user_fraction", c.split.test_user_fraction);
    g.get("validation_fraction", c.split.validation_fraction);
    g.get("seed", c.split.seed);
    g.finish();
  }
  if (const json* s = f.object("limited")) {
    Fields g(*s, "limited");
    g.get("n_per_class", c.limited_n_per_class);
    if (const json* names = g.object("configurations")) {
      std::vector<std::string> v;
      read_value(*names, "limited.configurations", v);
      c.limited_configurations.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        try {
          c.limited_configurations.push_back(configuration_from_name(v[i]));
        } catch (const ConfigError& e) {
          field_error("limited.configurations[" + std::to_string(i) + "]", e.what());
        }
      }
    }
    g.finish();
  }
  if (const json* s = f.object("intensity")) {
    Fields g(*s, "intensity");
    g.get("target_size", c.intensity_target_size);
    g.finish();
  }
  if (const json* s = f.object("pipeline")) read_pipeline(*s, c.pipeline);
  f.finish();
  return c;
}

json config_to_json(const RunConfig& c) {
  json limited_cfgs = json::array();
  for (auto cfg : c.limited_configurations) limited_cfgs.push_back(configuration_name(cfg));
  return {
      {"labeled", c.labeled},
      {"unlabeled", c.unlabeled},
      {"out", c.out.string()},
      {"protocol", protocol_name(c.protocol)},
      {"labels_per_class", c.labels_per_class},
      {"seeds", c.seeds},
      {"jobs", c.jobs},
      {"split",
       {{"test_user_fraction", c.split.test_user_fraction},
        {"validation_fraction", c.split.validation_fraction},
        {"seed", c.split.seed}}},
      {"limited", {{"n_per_class", c.limited_n_per_class}, {"configurations", limited_cfgs}}},
      {"intensity", {{"target_size", c.intensity_target_size}}},
      {"pipeline", pipeline_json(c.pipeline)},
  };
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void RunConfig::validate(bool needs_u) const {
  if (labeled.empty()) field_error("labeled", "a labeled source is required");
  if (needs_u && unlabeled.empty()) {
    field_error("unlabeled", "an unlabeled source is required for this command or configuration");
  }
  if (is_synthetic(labeled)) parse_synthetic_spec(labeled);
  if (!unlabeled.empty() && is_synthetic(unlabeled)) parse_synthetic_spec(unlabeled);
  if (jobs < 1) field_error("jobs", "must be at least 1");
  if (seeds.empty()) field_error("seeds", "needs at least one seed");
  if (limited_n_per_class.empty() ||
      std::find(limited_n_per_class.begin(), limited_n_per_class.end(), 0u) != limited_n_per_class.end()) {
    field_error("limited.n_per_class", "needs positive label budgets");
  }
  if (limited_configurations.empty()) field_error("limited.configurations", "needs at least one entry");
  if (!(split.test_user_fraction >= 0.2 && split.test_user_fraction <= 0.25)) {
    field_error("split.test_user_fraction", "must lie in [0.2, 0.25]");
  }
  if (!(split.validation_fraction > 0.0 && split.validation_fraction < 1.0)) {
    field_error("split.validation_fraction", "must lie in (0, 1)");
  }
  try {
    pipeline.validate();
    if (pipeline.architecture.input_channels != kChannels) {
      throw ConfigError("architecture.input_channels must be 3");
    }
    if (pipeline.architecture.min_input_length() > kWindowLength) {
      throw ConfigError("architecture: conv widths exceed the window length");
    }
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config field 'pipeline.") + e.what());
  }
}

std::string config_hash(const RunConfig& config) {
  json j = config_to_json(config);
  j.erase("out");
  j.erase("jobs");
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---- data ---------------------------------------------------------------

namespace {

std::vector<RawRecording> load_recordings(const std::string& source, bool labeled_part) {
  if (is_synthetic(source)) {
    auto recs = synthesize_recordings(parse_synthetic_spec(source));
    return labeled_part ? std::move(recs.labeled) : std::move(recs.unlabeled);
  }
  return ingest_csv(source);
}

Dataset strip_labels(Dataset ds) {
  for (auto& w : ds.windows) {
    w.label.reset();
    w.soft_label.reset();
  }
  ds.role = DatasetRole::Unlabeled;
  return ds;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  f << j.dump(2) << '\n';
  if (!f) throw Error("write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + " is not valid JSON: " + e.what());
  }
}

json stats_json(const ChannelStats& s) {
  return {{"mean", s.mean}, {"stddev", s.stddev}};
}

ChannelStats stats_from_json(const json& j) {
  ChannelStats s;
  s.mean = j.at("mean").get<std::array<double, kChannels>>();
  s.stddev = j.at("stddev").get<std::array<double, kChannels>>();
  return s;
}

std::string join(const std::vector<std::uint64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + std::to_string(v[i]);
  return s;
}

// Runs fn(0..n-1) on up to `jobs` threads; the first exception is rethrown.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

MetricEstimate mean_estimate(const std::vector<MetricEstimate>& runs) {
  MetricEstimate m;
  for (const auto& r : runs) {
    m.point += r.point;
    m.ci_lo += r.ci_lo;
    m.ci_hi += r.ci_hi;
  }
  const double n = static_cast<double>(runs.size());
  m.point /= n;
  m.ci_lo /= n;
  m.ci_hi /= n;
  return m;
}

json estimate_json(const MetricEstimate& e) {
  return {{"point", e.point}, {"ci_lo", e.ci_lo}, {"ci_hi", e.ci_hi}};
}

fs::path make_dir(const fs::path& dir) {
  fs::create_directories(dir);
  return dir;
}

bool reuses_supervised_teacher(Configuration c) {
  return c == Configuration::FullySupervised || c == Configuration::SelfTraining ||
         c == Configuration::SelfHAR;
}

}  // namespace

PreparedData prepare_data(const RunConfig& config, bool load_unlabeled) {
  PreparedData out;
  const auto recs = load_recordings(config.labeled, true);
  for (const auto& r : recs) {
    if (!r.labeled()) throw DataError("labeled source " + config.labeled + " has no label column");
  }
  Dataset labeled = build_dataset(recs);
  out.vocabulary = labeled.label_vocabulary;
  Partitions parts = split_by_users(labeled, config.split);
  out.stats = channel_stats(parts.train);
  out.partitions.train = znormalize(parts.train, out.stats);
  out.partitions.validation = znormalize(parts.validation, out.stats);
  out.partitions.test = znormalize(parts.test, out.stats);
  out.partitions.test_users = parts.test_users;
  if (load_unlabeled && !config.unlabeled.empty()) {
    out.unlabeled_raw = strip_labels(build_dataset(load_recordings(config.unlabeled, false), out.vocabulary));
    out.unlabeled = znormalize(out.unlabeled_raw, out.stats);
  }
  log(LogLevel::Debug, "data: train " + std::to_string(out.partitions.train.size()) + ", validation " +
                           std::to_string(out.partitions.validation.size()) + ", test " +
                           std::to_string(out.partitions.test.size()) + ", unlabeled " +
                           std::to_string(out.unlabeled.size()));
  return out;
}

void apply_label_budget(const RunConfig& config, std::uint64_t seed, Dataset& train,
                        Dataset& validation) {
  const std::size_t n = config.labels_per_class;
  if (n == 0) return;
  train = subsample_labeled(train, n, derive_seed(seed, n));
  validation = limited_validation(validation, n, derive_seed(seed, 1000 + n));
}

// ---- synth-gen ----------------------------------------------------------

SynthGenResult cmd_synth_gen(const SynthConfig& config, const fs::path& out_dir) {
  const auto recs = synthesize_recordings(config);
  make_dir(out_dir);
  SynthGenResult r{out_dir / "labeled.csv", out_dir / "unlabeled.csv"};
  export_csv(recs.labeled, r.labeled_csv);
  export_csv(recs.unlabeled, r.unlabeled_csv);
  log(LogLevel::Info, "wrote " + r.labeled_csv.string() + " and " + r.unlabeled_csv.string());
  return r;
}

// ---- run ----------------------------------------------------------------

fs::path cmd_run(const RunConfig& config) {
  const Configuration cfg = config.pipeline.configuration;
  config.validate(needs_unlabeled(cfg));
  const fs::path dir = make_dir(config.out / ("run-" + config_hash(config)));
  RunLog runlog(dir / "run.log");
  runlog.write("run " + std::string(configuration_name(cfg)) + " in " + dir.string());

  PreparedData data = prepare_data(config, needs_unlabeled(cfg));
  Dataset train = data.partitions.train;
  Dataset validation = data.partitions.validation;
  apply_label_budget(config, config.pipeline.seed, train, validation);

  RunInputs inputs;
  inputs.train = &train;
  inputs.validation = &validation;
  inputs.test = &data.partitions.test;
  inputs.unlabeled = needs_unlabeled(cfg) ? &data.unlabeled : nullptr;
  inputs.label_pool = &data.partitions.train;
  RunOutcome outcome = run_configuration(config.pipeline, inputs);
  runlog.write("training finished");

  write_json(dir / "config.json", config_to_json(config));
  write_json(dir / "descriptor.json",
             {{"configuration", configuration_name(cfg)},
              {"protocol", protocol_name(config.protocol)},
              {"config_hash", config_hash(config)},
              {"architecture", architecture_json(config.pipeline.architecture)},
              {"labels", data.vocabulary},
              {"normalization", stats_json(data.stats)},
              {"window_length", kWindowLength},
              {"test_users", data.partitions.test_users},
              {"parameter_count", outcome.final_model.parameter_count()},
              {"selected_windows", outcome.selected_windows}});
  write_run_artifacts(outcome, data.vocabulary, dir);
  save_weights(outcome.representation, dir / "representation.weights");

  if (config.protocol != Protocol::Standard) {
    runlog.write("linear evaluation");
    const auto linear =
        linear_evaluate(outcome.representation, train, validation, data.partitions.test,
                        config.pipeline.schedule, config.pipeline.seed,
                        config.pipeline.regularization, config.pipeline.n_resamples);
    save_weights(linear.model, dir / "linear.weights");
    const fs::path name = config.protocol == Protocol::Linear ? "report.json" : "linear_report.json";
    write_json(dir / name, report_to_json(linear.report));
  }
  runlog.write("done");
  return dir;
}

// ---- ablate -------------------------------------------------------------

AblationTable cmd_ablate(const RunConfig& config) {
  config.validate(true);
  AblationTable table;
  table.dir = make_dir(config.out / ("ablate-" + config_hash(config)));
  RunLog runlog(table.dir / "run.log");
  const PreparedData data = prepare_data(config, true);

  struct SeedResult {
    std::array<MetricEstimate, kAllConfigurations.size()> standard, linear;
    std::array<std::size_t, kAllConfigurations.size()> params{};
  };
  std::vector<SeedResult> results(config.seeds.size());

  parallel_for(config.seeds.size(), config.jobs, [&](std::size_t s) {
    const std::uint64_t seed = config.seeds[s];
    PipelineConfig pc = config.pipeline;
    pc.seed = seed;
    Dataset train = data.partitions.train;
    Dataset validation = data.partitions.validation;
    apply_label_budget(config, seed, train, validation);
    const TrainResult teacher = train_teacher(pc, train, validation);
    for (std::size_t c = 0; c < kAllConfigurations.size(); ++c) {
      pc.configuration = kAllConfigurations[c];
      const std::string name(configuration_name(pc.configuration));
      runlog.write("seed " + std::to_string(seed) + ": " + name);
      RunInputs inputs{&train, &validation, &data.partitions.test, &data.unlabeled,
                       &data.partitions.train,
                       reuses_supervised_teacher(pc.configuration) ? &teacher : nullptr};
      const RunOutcome outcome = run_configuration(pc, inputs);
      const auto linear = linear_evaluate(outcome.representation, train, validation,
                                          data.partitions.test, pc.schedule, seed,
                                          pc.regularization, pc.n_resamples);
      const fs::path cell = make_dir(table.dir / name / ("seed-" + std::to_string(seed)));
      write_json(cell / "report.json", report_to_json(outcome.report));
      write_json(cell / "linear_report.json", report_to_json(linear.report));
      results[s].standard[c] = outcome.report.weighted_f1;
      results[s].linear[c] = linear.report.weighted_f1;
      results[s].params[c] = outcome.final_model.parameter_count();
    }
  });

  for (std::size_t c = 0; c < kAllConfigurations.size(); ++c) {
    for (Protocol p : {Protocol::Standard, Protocol::Linear}) {
      AblationCell cell;
      cell.configuration = kAllConfigurations[c];
      cell.protocol = p;
      cell.seeds = config.seeds;
      for (const auto& r : results) cell.runs.push_back(p == Protocol::Standard ? r.standard[c] : r.linear[c]);
      cell.mean = mean_estimate(cell.runs);
      cell.parameter_count = results.front().params[c];
      for (const auto& r : results) {
        if (r.params[c] != cell.parameter_count) throw Error("parameter count differs across seeds");
      }
      table.cells.push_back(std::move(cell));
    }
  }

  std::ofstream csv(table.dir / "ablation.csv");
  csv << "configuration,protocol,seeds,weighted_f1_mean,ci_lo_mean,ci_hi_mean,parameter_count\n";
  json cells = json::array();
  char buf[128];
  for (const auto& cell : table.cells) {
    std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%.17g,%zu\n", cell.mean.point, cell.mean.ci_lo,
                  cell.mean.ci_hi, cell.parameter_count);
    csv << configuration_name(cell.configuration) << ',' << protocol_name(cell.protocol) << ','
        << join(cell.seeds) << buf;
    json runs = json::array();
    for (std::size_t i = 0; i < cell.runs.size(); ++i) {
      json r = estimate_json(cell.runs[i]);
      r["seed"] = cell.seeds[i];
      runs.push_back(r);
    }
    cells.push_back({{"configuration", configuration_name(cell.configuration)},
                     {"protocol", protocol_name(cell.protocol)},
                     {"metric", "weighted_f1"},
                     {"seeds", cell.seeds},
                     {"runs", runs},
                     {"mean", estimate_json(cell.mean)},
                     {"parameter_count", cell.parameter_count}});
  }
  if (!csv) throw Error("write failed for ablation.csv");
  write_json(table.dir / "ablation.json",
             {{"cells", cells}, {"test_users", data.partitions.test_users}, {"config_hash", config_hash(config)}});
  runlog.write("done");
  return table;
}

// ---- limited ------------------------------------------------------------

LimitedTable cmd_limited(const RunConfig& config) {
  const bool needs_u = std::any_of(config.limited_configurations.begin(),
                                   config.limited_configurations.end(), needs_unlabeled);
  config.validate(needs_u);
  LimitedTable table;
  table.dir = make_dir(config.out / ("limited-" + config_hash(config)));
  RunLog runlog(table.dir / "run.log");
  const PreparedData data = prepare_data(config, needs_u);
  table.test_users = data.partitions.test_users;

  SweepOptions options;
  options.n_per_class = config.limited_n_per_class;
  options.seeds = config.seeds;
  options.configurations = config.limited_configurations;
  options.jobs = config.jobs;
  runlog.write("sweep over " + std::to_string(options.n_per_class.size()) + " label budgets");
  table.cells = limited_data_sweep(config.pipeline, data.partitions, data.unlabeled, options);

  std::ofstream csv(table.dir / "limited.csv");
  csv << "n_per_class,configuration,seeds,mean,stddev,scores\n";
  json cells = json::array();
  char buf[64];
  for (const auto& c : table.cells) {
    std::string scores;
    for (std::size_t i = 0; i < c.scores.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s%.17g", i ? ";" : "", c.scores[i]);
      scores += buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,", c.mean, c.stddev);
    csv << c.n_per_class << ',' << configuration_name(c.configuration) << ',' << join(c.seeds) << buf
        << scores << '\n';
    cells.push_back({{"n_per_class", c.n_per_class},
                     {"configuration", configuration_name(c.configuration)},
                     {"seeds", c.seeds},
                     {"scores", c.scores},
                     {"mean", c.mean},
                     {"stddev", c.stddev}});
  }
  if (!csv) throw Error("write failed for limited.csv");
  write_json(table.dir / "limited.json",
             {{"metric", "weighted_f1"}, {"cells", cells}, {"test_users", table.test_users}});
  runlog.write("done");
  return table;
}

// ---- intensity study ----------------------------------------------------

IntensityTable cmd_intensity_study(const RunConfig& config) {
  config.validate(true);
  IntensityTable table;
  table.dir = make_dir(config.out / ("intensity-" + config_hash(config)));
  RunLog runlog(table.dir / "run.log");
  const PreparedData data = prepare_data(config, true);

  const std::size_t n = data.unlabeled_raw.size();
  std::size_t target = config.intensity_target_size;
  if (target == 0) target = n / 3 - (n / 3) % 3;
  if (target < 3) throw DataError("intensity study needs at least 9 unlabeled windows");

  // Upper proxy bound of the two lower terciles, for reporting subset make-up.
  std::vector<double> proxies;
  for (const auto& w : data.unlabeled_raw.windows) proxies.push_back(intensity_proxy(w));
  std::vector<double> sorted = proxies;
  std::sort(sorted.begin(), sorted.end());
  const double cut0 = sorted[n / 3 + (n % 3 > 0 ? 1 : 0) - 1];
  const double cut1 = sorted[2 * (n / 3) + std::min<std::size_t>(n % 3, 2) - 1];

  static constexpr std::array<IntensityMode, 3> kModes{IntensityMode::Inactive, IntensityMode::Balanced,
                                                      IntensityMode::Active};
  static constexpr std::array<const char*, 4> kNames{"fully_supervised", "inactive", "balanced", "active"};
  table.columns.resize(4);
  for (std::size_t k = 0; k < 4; ++k) {
    table.columns[k].name = kNames[k];
    table.columns[k].runs.resize(config.seeds.size());
  }

  std::mutex column_mutex;
  parallel_for(config.seeds.size(), config.jobs, [&](std::size_t s) {
    const std::uint64_t seed = config.seeds[s];
    PipelineConfig pc = config.pipeline;
    pc.seed = seed;
    Dataset train = data.partitions.train;
    Dataset validation = data.partitions.validation;
    apply_label_budget(config, seed, train, validation);
    const TrainResult teacher = train_teacher(pc, train, validation);

    pc.configuration = Configuration::FullySupervised;
    RunInputs fs_inputs{&train, &validation, &data.partitions.test, nullptr, nullptr, &teacher};
    runlog.write("seed " + std::to_string(seed) + ": fully_supervised");
    table.columns[0].runs[s] = run_configuration(pc, fs_inputs).report;

    pc.configuration = Configuration::SelfHAR;
    for (std::size_t m = 0; m < kModes.size(); ++m) {
      const Dataset raw = subset_by_intensity(data.unlabeled_raw, kModes[m], target, derive_seed(seed, 300 + m));
      std::vector<std::size_t> terciles(3, 0);
      for (const auto& w : raw.windows) {
        const double p = intensity_proxy(w);
        ++terciles[p <= cut0 ? 0 : (p <= cut1 ? 1 : 2)];
      }
      {
        std::lock_guard lock(column_mutex);
        table.columns[m + 1].unlabeled_windows = raw.size();
        table.columns[m + 1].tercile_counts = terciles;
      }
      const Dataset subset = znormalize(raw, data.stats);
      RunInputs inputs{&train, &validation, &data.partitions.test, &subset, &data.partitions.train, &teacher};
      runlog.write("seed " + std::to_string(seed) + ": selfhar on " + kNames[m + 1] + " subset");
      table.columns[m + 1].runs[s] = run_configuration(pc, inputs).report;
    }
  });

  std::vector<std::size_t> fs_counts{0, 0, 0};
  table.columns[0].tercile_counts = fs_counts;
  json columns = json::array();
  for (auto& col : table.columns) {
    std::vector<MetricEstimate> w, m, k;
    for (const auto& r : col.runs) {
      w.push_back(r.weighted_f1);
      m.push_back(r.macro_f1);
      k.push_back(r.kappa);
    }
    col.weighted_f1 = mean_estimate(w);
    col.macro_f1 = mean_estimate(m);
    col.kappa = mean_estimate(k);
    json runs = json::array();
    for (std::size_t i = 0; i < col.runs.size(); ++i) {
      json r = report_to_json(col.runs[i]);
      r["run_seed"] = config.seeds[i];
      runs.push_back(r);
    }
    columns.push_back({{"name", col.name},
                       {"unlabeled_windows", col.unlabeled_windows},
                       {"tercile_counts", col.tercile_counts},
                       {"weighted_f1", estimate_json(col.weighted_f1)},
                       {"macro_f1", estimate_json(col.macro_f1)},
                       {"kappa", estimate_json(col.kappa)},
                       {"runs", runs}});
  }

  std::ofstream csv(table.dir / "intensity.csv");
  csv << "metric,statistic";
  for (const auto& col : table.columns) csv << ',' << col.name;
  csv << '\n';
  const std::array<std::pair<const char*, MetricEstimate IntensityColumn::*>, 3> metrics{
      {{"weighted_f1", &IntensityColumn::weighted_f1},
       {"macro_f1", &IntensityColumn::macro_f1},
       {"kappa", &IntensityColumn::kappa}}};
  char buf[40];
  for (const auto& [name, member] : metrics) {
    for (const char* stat : {"point", "ci_lo", "ci_hi"}) {
      csv << name << ',' << stat;
      for (const auto& col : table.columns) {
        const MetricEstimate& e = col.*member;
        const double v = stat[0] == 'p' ? e.point : (stat[3] == 'l' ? e.ci_lo : e.ci_hi);
        std::snprintf(buf, sizeof(buf), ",%.17g", v);
        csv << buf;
      }
      csv << '\n';
    }
  }
  if (!csv) throw Error("write failed for intensity.csv");
  write_json(table.dir / "intensity.json",
             {{"columns", columns}, {"seeds", config.seeds}, {"target_size", target},
              {"test_users", data.partitions.test_users}});
  runlog.write("done");
  return table;
}

// ---- saved runs ---------------------------------------------------------

namespace {

struct SavedRun {
  json descriptor;
  RunConfig config;
  std::vector<std::string> vocabulary;
  ChannelStats stats;
};

SavedRun open_run(const fs::path& run_dir) {
  SavedRun r;
  r.descriptor = read_json(run_dir / "descriptor.json");
  r.config = config_from_json(read_json(run_dir / "config.json"));
  try {
    r.vocabulary = r.descriptor.at("labels").get<std::vector<std::string>>();
    r.stats = stats_from_json(r.descriptor.at("normalization"));
  } catch (const json::exception& e) {
    throw FormatError("descriptor.json: " + std::string(e.what()));
  }
  return r;
}

Dataset load_for_run(const SavedRun& run, const std::string& source) {
  auto recs = load_recordings(source, true);
  return znormalize(build_dataset(recs, run.vocabulary), run.stats);
}

}  // namespace

fs::path cmd_export_embeddings(const fs::path& run_dir, const std::string& data_source,
                               const std::string& model, const fs::path& out_path) {
  static const std::vector<std::string> kModels{"final", "teacher", "student", "representation", "linear"};
  if (std::find(kModels.begin(), kModels.end(), model) == kModels.end()) {
    throw ConfigError("model: expected final, teacher, student, representation or linear, got '" + model + "'");
  }
  const SavedRun run = open_run(run_dir);
  const fs::path weights = run_dir / (model + ".weights");
  if (!fs::exists(weights)) throw ConfigError("run has no " + weights.filename().string());
  const TpnModel m = load_weights(weights);
  const Dataset ds = load_for_run(run, data_source.empty() ? run.config.labeled : data_source);
  const fs::path out = out_path.empty() ? run_dir / ("embeddings-" + model + ".csv") : out_path;
  if (out.has_parent_path()) make_dir(out.parent_path());
  export_embeddings(m, ds, out);
  log(LogLevel::Info, "wrote " + std::to_string(ds.size()) + " embeddings to " + out.string());
  return out;
}

MetricsReport cmd_eval(const fs::path& run_dir, const std::string& data_source, Head head,
                       bool test_users_only, const fs::path& out_dir) {
  const SavedRun run = open_run(run_dir);
  const fs::path weights = run_dir / (head == Head::Linear ? "linear.weights" : "final.weights");
  if (!fs::exists(weights)) throw ConfigError("run has no " + weights.filename().string());
  const TpnModel model = load_weights(weights);
  Dataset ds = load_for_run(run, data_source.empty() ? run.config.labeled : data_source);
  if (test_users_only) {
    const auto users = run.descriptor.at("test_users").get<std::vector<std::string>>();
    std::erase_if(ds.windows, [&](const Window& w) {
      return std::find(users.begin(), users.end(), w.user_id) == users.end();
    });
  }
  if (ds.empty()) throw DataError("evaluation data holds no windows");
  if (!has_ground_truth(ds)) throw DataError("evaluation data has no labels");
  const auto truth = true_labels(ds);
  const auto pred = predict_labels(model, ds, head);
  const MetricsReport report = evaluate_predictions(truth, pred, ds.num_classes(),
                                                    run.config.pipeline.n_resamples,
                                                    run.config.pipeline.seed);
  const fs::path dir = make_dir(out_dir.empty() ? run_dir / "eval" : out_dir);
  write_json(dir / "report.json", report_to_json(report));
  return report;
}

// ---- argument handling --------------------------------------------------

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> out;
  std::optional<std::string> labeled, unlabeled, configuration, protocol;
  std::optional<std::size_t> labels_per_class;
  bool print_config = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Pipeline seed (overrides the config)");
  cmd->add_option("--jobs", f.jobs, "Parallel cells");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--labeled", f.labeled, "Labeled CSV or synthetic: spec");
  cmd->add_option("--unlabeled", f.unlabeled, "Unlabeled CSV or synthetic: spec");
  cmd->add_option("--configuration", f.configuration, "Pipeline configuration name");
  cmd->add_option("--protocol", f.protocol, "standard, linear or both");
  cmd->add_option("--labels-per-class", f.labels_per_class, "Label budget per class (0 keeps all)");
  cmd->add_flag("--print-config", f.print_config, "Print the resolved config and exit");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig c = f.config_path.empty() ? RunConfig{} : load_config(f.config_path);
  if (f.seed) c.pipeline.seed = *f.seed;
  if (f.jobs) c.jobs = *f.jobs;
  if (f.out) c.out = *f.out;
  if (f.labeled) c.labeled = *f.labeled;
  if (f.unlabeled) c.unlabeled = *f.unlabeled;
  if (f.labels_per_class) c.labels_per_class = *f.labels_per_class;
  if (f.configuration) {
    try {
      c.pipeline.configuration = configuration_from_name(*f.configuration);
    } catch (const ConfigError& e) {
      field_error("pipeline.configuration", e.what());
    }
  }
  if (f.protocol) c.protocol = protocol_from_name(*f.protocol);
  return c;
}

json synth_json(const SynthConfig& s) {
  return {{"classes", s.classes},
          {"users", s.users},
          {"windows_per_class", s.windows_per_user_per_class},
          {"unlabeled_users", s.unlabeled_users},
          {"unlabeled_windows", s.unlabeled_windows_per_user},
          {"rate", s.sampling_rate_hz},
          {"noise", s.noise_sigma},
          {"separation", s.class_separation},
          {"orientation_jitter", s.orientation_jitter},
          {"tempo_jitter", s.tempo_jitter},
          {"seed", s.seed}};
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"SelfHAR semi-supervised activity recognition pipeline"};
  app.require_subcommand(1);

  SynthConfig synth;
  std::string synth_out = ".";
  bool synth_print = false;
  auto* gen = app.add_subcommand("synth-gen", "Write synthetic labeled and unlabeled CSVs");
  gen->add_option("--classes", synth.classes);
  gen->add_option("--users", synth.users, "Labeled users");
  gen->add_option("--windows-per-class", synth.windows_per_user_per_class, "Per user and class");
  gen->add_option("--unlabeled-users", synth.unlabeled_users);
  gen->add_option("--unlabeled-windows", synth.unlabeled_windows_per_user, "Per unlabeled user");
  gen->add_option("--rate", synth.sampling_rate_hz, "Sampling rate in Hz");
  gen->add_option("--noise", synth.noise_sigma);
  gen->add_option("--separation", synth.class_separation);
  gen->add_option("--orientation-jitter", synth.orientation_jitter);
  gen->add_option("--tempo-jitter", synth.tempo_jitter);
  gen->add_option("--seed", synth.seed);
  gen->add_option("--out", synth_out, "Output directory");
  gen->add_flag("--print-config", synth_print);

  CommonFlags run_flags, ablate_flags, limited_flags, intensity_flags;
  auto* run = app.add_subcommand("run", "Train one configuration and write a run directory");
  add_common(run, run_flags);
  auto* ablate = app.add_subcommand("ablate", "All five configurations under both protocols");
  add_common(ablate, ablate_flags);
  auto* limited = app.add_subcommand("limited", "Label-budget sweep");
  add_common(limited, limited_flags);
  auto* intensity = app.add_subcommand("intensity-study", "Unlabeled-data intensity study");
  add_common(intensity, intensity_flags);

  std::string run_dir, data_source, model_name = "final", head_name = "activity", target;
  bool test_users_only = false;
  auto* emb = app.add_subcommand("export-embeddings", "Write pooled core features of a saved model");
  emb->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  emb->add_option("--data", data_source, "CSV or synthetic: spec (default: the run's labeled source)");
  emb->add_option("--model", model_name, "final, teacher, student, representation or linear");
  emb->add_option("--out", target, "Output CSV");
  auto* eval = app.add_subcommand("eval", "Score a saved model on labeled data");
  eval->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--data", data_source, "CSV or synthetic: spec (default: the run's labeled source)");
  eval->add_option("--head", head_name, "activity or linear");
  eval->add_flag("--test-users-only", test_users_only, "Keep only the run's held-out users");
  eval->add_option("--out", target, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    set_log_level(log_level_from_env());
    if (gen->parsed()) {
      if (synth_print) {
        out << synth_json(synth).dump(2) << '\n';
        return 0;
      }
      cmd_synth_gen(synth, synth_out);
      return 0;
    }
    const std::array<std::pair<CLI::App*, CommonFlags*>, 4> config_cmds{
        {{run, &run_flags}, {ablate, &ablate_flags}, {limited, &limited_flags}, {intensity, &intensity_flags}}};
    for (const auto& [cmd, flags] : config_cmds) {
      if (!cmd->parsed()) continue;
      const RunConfig config = resolve(*flags);
      if (flags->print_config) {
        out << config_to_json(config).dump(2) << '\n';
        return 0;
      }
      if (cmd == run) {
        out << cmd_run(config).string() << '\n';
      } else if (cmd == ablate) {
        out << cmd_ablate(config).dir.string() << '\n';
      } else if (cmd == limited) {
        out << cmd_limited(config).dir.string() << '\n';
      } else {
        out << cmd_intensity_study(config).dir.string() << '\n';
      }
      return 0;
    }
    if (emb->parsed()) {
      out << cmd_export_embeddings(run_dir, data_source, model_name, target).string() << '\n';
      return 0;
    }
    if (eval->parsed()) {
      Head head = Head::Activity;
      if (head_name == "linear") head = Head::Linear;
      else if (head_name != "activity") throw ConfigError("head: expected activity or linear, got '" + head_name + "'");
      const auto report = cmd_eval(run_dir, data_source, head, test_users_only, target);
      out << report_to_json(report).dump(2) << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace selfhar::cli
