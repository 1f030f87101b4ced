#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "radt/augment.hpp"
#include "radt/classifiers.hpp"
#include "radt/rcsl.hpp"
#include "radt/shift.hpp"

namespace radt {

/// Invalid or missing configuration; the message starts with the key path.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& key, const std::string& message)
      : std::invalid_argument(key.empty() ? message : key + ": " + message), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Raw "section.key" -> value entries of a config file, with source lines.
class ConfigFile {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static ConfigFile parse(const std::string& text, const std::string& origin = "<string>");
  static ConfigFile load(const std::filesystem::path& path);

  /// Applies "section.key=value"; later assignments win.
  void set(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, Entry>& entries() const { return entries_; }
  const std::string& origin() const { return origin_; }

 private:
  std::string origin_;
  std::map<std::string, Entry> entries_;
};

struct EnvConfig {
  std::string name = "chainwalk";
  std::map<std::string, std::string> params;
};

struct DataConfig {
  std::size_t n_target_small = 50;
  std::size_t n_target_large = 500;
  std::size_t n_source = 500;
  std::string behavior = "uniform";  // uniform | epsilon_greedy
  double epsilon = 0.1;
};

struct AugmentConfig {
  double eta = 0.1;
  ClipConfig clip;
  Estimator estimator = Estimator::FittedValue;
  int n_action_samples = 10;
  double temperature = 1.0;
  double delta_r_clamp = kDefaultDeltaRClamp;
  ClassifierConfig classifier;
};

struct LearnerConfig {
  std::string kind = "tabular";  // tabular | neural
  double bin_width = 1.0;
  double smoothing = 0.0;
  bool time_indexed = true;
  NeuralConfig neural;
};

struct EvalConfig {
  /// Empty means "auto": the {0.5, 0.9, 1.0} quantiles of the target
  /// behavior return law.
  std::vector<double> f_grid;
  std::size_t n_rollouts = 200;
  bool exact = true;
};

struct RunConfig {
  std::uint64_t root_seed = 0;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir = "radt_out";
  std::vector<std::string> cells;  // empty means every cell
  bool save_artifacts = false;
};

struct RateConfig {
  std::vector<std::size_t> n_grid{200, 800, 3200, 12800};
  /// Source trajectories per target trajectory.
  std::size_t source_ratio = 10;
};

struct ExperimentConfig {
  EnvConfig env;
  ShiftSpec shift;
  DataConfig data;
  AugmentConfig augment;
  LearnerConfig learner;
  EvalConfig eval;
  RunConfig run;
  RateConfig rate;

  /// Range checks; throws ConfigError naming the offending key.
  void validate() const;
};

/// Environment variable that overrides run.root_seed.
inline constexpr const char* kSeedEnvVar = "RADT_LAB_SEED";

/// Builds a typed config from raw entries. Unknown keys are errors. The
/// RADT_LAB_SEED environment variable, when set, overrides run.root_seed.
ExperimentConfig experiment_config(const ConfigFile& file, bool use_environment = true);
ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        const std::vector<std::string>& overrides = {},
                                        bool use_environment = true);

/// Every field with its effective value, keys sorted.
nlohmann::json to_json(const ExperimentConfig& cfg);
/// Round-trips to the same typed config.
std::string to_config_text(const ExperimentConfig& cfg);
/// FNV-1a of the canonical JSON form (output location excluded), 16 hex chars.
std::string config_hash(const ExperimentConfig& cfg);

/// Parses "a, b, c" and "lo..hi" (inclusive, integers only) lists.
std::vector<double> parse_number_list(const std::string& text, const std::string& key);
std::vector<std::uint64_t> parse_seed_list(const std::string& text, const std::string& key);

}  // namespace radt
