#pragma once

// Config-driven orchestration behind the `selfhar` executable. Every command
// is also callable as a function so tests can drive it without a process.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "selfhar/datakit.hpp"
#include "selfhar/evalkit.hpp"
#include "selfhar/pipeline.hpp"

namespace selfhar::cli {

enum class Protocol { Standard, Linear, Both };
std::string_view protocol_name(Protocol p);
Protocol protocol_from_name(std::string_view name);

enum class LogLevel { Error, Info, Debug };
// Reads SELFHAR_LOG; unset means info. ConfigError on any other value.
LogLevel log_level_from_env();
void set_log_level(LogLevel level);
void log(LogLevel level, const std::string& message);

// A data source is a CSV path or `synthetic:` followed by comma-separated
// key=value generator settings, e.g. `synthetic:classes=6,users=13,seed=7`.
// Keys match the synth-gen flags without dashes (underscores allowed).
bool is_synthetic(std::string_view source);
SynthConfig parse_synthetic_spec(std::string_view source);

struct RunConfig {
  std::string labeled;    // required
  std::string unlabeled;  // required when a configuration uses U
  std::filesystem::path out = "runs";
  Protocol protocol = Protocol::Standard;
  SplitSpec split;
  // Label budget per class for run/ablate/intensity-study; 0 keeps all.
  std::size_t labels_per_class = 0;
  PipelineConfig pipeline;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};  // ablate, limited, intensity-study
  std::vector<std::size_t> limited_n_per_class{2, 5, 10, 50, 100};
  std::vector<Configuration> limited_configurations{Configuration::FullySupervised,
                                                    Configuration::TransformationDiscrimination,
                                                    Configuration::SelfHAR};
  // Unlabeled windows per intensity subset; 0 picks the largest size every
  // mode can supply that is divisible by 3.
  std::size_t intensity_target_size = 0;
  std::size_t jobs = 1;

  // ConfigError naming the offending field. `needs_u` adds the unlabeled
  // source requirement.
  void validate(bool needs_u) const;
};

// Unknown keys and type mismatches raise ConfigError with the dotted field path.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

// Hex FNV-1a over the resolved config, excluding `out` and `jobs`.
std::string config_hash(const RunConfig& config);

// Normalized partitions with statistics from the training users.
struct PreparedData {
  std::vector<std::string> vocabulary;
  ChannelStats stats;
  Partitions partitions;
  Dataset unlabeled;      // normalized, empty when not requested
  Dataset unlabeled_raw;  // before normalization, for intensity ranking
};

PreparedData prepare_data(const RunConfig& config, bool load_unlabeled);

// Applies labels_per_class to the training and validation partitions.
void apply_label_budget(const RunConfig& config, std::uint64_t seed, Dataset& train,
                        Dataset& validation);

// ---- commands -----------------------------------------------------------

struct SynthGenResult {
  std::filesystem::path labeled_csv;
  std::filesystem::path unlabeled_csv;
};
SynthGenResult cmd_synth_gen(const SynthConfig& config, const std::filesystem::path& out_dir);

// Returns the content-addressed run directory holding config.json,
// descriptor.json, weights, history.csv, selection_stats.csv, report.json and
// (for protocol both) linear_report.json.
std::filesystem::path cmd_run(const RunConfig& config);

struct AblationCell {
  Configuration configuration = Configuration::FullySupervised;
  Protocol protocol = Protocol::Standard;
  std::vector<std::uint64_t> seeds;
  std::vector<MetricEstimate> runs;  // weighted F1 per seed
  MetricEstimate mean;               // mean point and mean interval endpoints
  std::size_t parameter_count = 0;   // of the final models
};

struct AblationTable {
  std::filesystem::path dir;
  std::vector<AblationCell> cells;  // configuration-major, standard then linear
};
AblationTable cmd_ablate(const RunConfig& config);

struct LimitedTable {
  std::filesystem::path dir;
  std::vector<SweepCell> cells;
  std::vector<std::string> test_users;
};
LimitedTable cmd_limited(const RunConfig& config);

struct IntensityColumn {
  std::string name;  // fully_supervised, inactive, balanced, active
  std::size_t unlabeled_windows = 0;
  std::vector<std::size_t> tercile_counts;  // windows drawn from each tercile
  std::vector<MetricsReport> runs;          // per seed
  MetricEstimate weighted_f1, macro_f1, kappa;  // means over seeds
};

struct IntensityTable {
  std::filesystem::path dir;
  std::vector<IntensityColumn> columns;
};
IntensityTable cmd_intensity_study(const RunConfig& config);

// `model` names a weights file in the run directory: final, teacher, student,
// representation or linear.
std::filesystem::path cmd_export_embeddings(const std::filesystem::path& run_dir,
                                            const std::string& data_source,
                                            const std::string& model,
                                            const std::filesystem::path& out_path);

// Scores a saved model on a labeled source. `test_users_only` keeps the run's
// held-out users.
MetricsReport cmd_eval(const std::filesystem::path& run_dir, const std::string& data_source,
                       Head head, bool test_users_only, const std::filesystem::path& out_dir);

// Parses argv and dispatches. Returns the process exit code; errors are
// printed to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace selfhar::cli
