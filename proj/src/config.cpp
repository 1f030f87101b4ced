#include "radt/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "radt/envs.hpp"
#include "radt/mdp.hpp"

namespace radt {

namespace {

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return text.substr(first, last - first + 1);
}

// Trailing comments need a preceding space so values like "a#b" survive.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '"') quoted = !quoted;
    if (quoted) continue;
    if ((c == '#' || c == ';') && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
      return line.substr(0, i);
    }
  }
  return line;
}

std::string unquote(const std::string& value) {
  if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
    return value.substr(1, value.size() - 2);
  }
  return value;
}

double to_double(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(value)) {
    throw ConfigError(key, "expected a finite number, got '" + text + "'");
  }
  return value;
}

std::int64_t to_int(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  long long value = 0;
  try {
    value = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw ConfigError(key, "expected an integer, got '" + text + "'");
  return value;
}

std::uint64_t to_seed(const std::string& text, const std::string& key) {
  if (!text.empty() && text.front() == '-') throw ConfigError(key, "seeds must be non-negative");
  std::size_t used = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw ConfigError(key, "expected a seed, got '" + text + "'");
  return value;
}

std::size_t to_count(const std::string& text, const std::string& key) {
  const auto value = to_int(text, key);
  if (value < 0) throw ConfigError(key, "must be non-negative");
  return static_cast<std::size_t>(value);
}

bool to_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "yes" || text == "1" || text == "on") return true;
  if (text == "false" || text == "no" || text == "0" || text == "off") return false;
  throw ConfigError(key, "expected true or false, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& value, const std::string& key)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"env.name", [](auto& c, const auto& v, const auto&) { c.env.name = v; }},

      {"shift.kind",
       [](auto& c, const auto& v, const auto& k) {
         try {
           c.shift.kind = shift_kind_from_string(v);
         } catch (const std::exception& e) {
           throw ConfigError(k, e.what());
         }
       }},
      {"shift.magnitude", [](auto& c, const auto& v, const auto& k) { c.shift.magnitude = to_double(v, k); }},
      {"shift.seed", [](auto& c, const auto& v, const auto& k) { c.shift.seed = to_seed(v, k); }},

      {"data.n_target_small",
       [](auto& c, const auto& v, const auto& k) { c.data.n_target_small = to_count(v, k); }},
      {"data.n_target_large",
       [](auto& c, const auto& v, const auto& k) { c.data.n_target_large = to_count(v, k); }},
      {"data.n_source", [](auto& c, const auto& v, const auto& k) { c.data.n_source = to_count(v, k); }},
      {"data.behavior", [](auto& c, const auto& v, const auto&) { c.data.behavior = v; }},
      {"data.epsilon", [](auto& c, const auto& v, const auto& k) { c.data.epsilon = to_double(v, k); }},

      {"augment.eta", [](auto& c, const auto& v, const auto& k) { c.augment.eta = to_double(v, k); }},
      {"augment.clip_lo",
       [](auto& c, const auto& v, const auto& k) { c.augment.clip.theta_lo = to_double(v, k); }},
      {"augment.clip_hi",
       [](auto& c, const auto& v, const auto& k) { c.augment.clip.theta_hi = to_double(v, k); }},
      {"augment.sigma_floor",
       [](auto& c, const auto& v, const auto& k) { c.augment.clip.sigma_floor = to_double(v, k); }},
      {"augment.estimator",
       [](auto& c, const auto& v, const auto& k) {
         try {
           c.augment.estimator = estimator_from_string(v);
         } catch (const std::exception& e) {
           throw ConfigError(k, e.what());
         }
       }},
      {"augment.n_action_samples",
       [](auto& c, const auto& v, const auto& k) { c.augment.n_action_samples = static_cast<int>(to_int(v, k)); }},
      {"augment.temperature",
       [](auto& c, const auto& v, const auto& k) { c.augment.temperature = to_double(v, k); }},
      {"augment.delta_r_clamp",
       [](auto& c, const auto& v, const auto& k) { c.augment.delta_r_clamp = to_double(v, k); }},
      {"augment.classifier_lr",
       [](auto& c, const auto& v, const auto& k) { c.augment.classifier.lr = to_double(v, k); }},
      {"augment.classifier_epochs",
       [](auto& c, const auto& v, const auto& k) { c.augment.classifier.epochs = static_cast<int>(to_int(v, k)); }},
      {"augment.classifier_batch",
       [](auto& c, const auto& v, const auto& k) { c.augment.classifier.batch = to_count(v, k); }},
      {"augment.classifier_l2",
       [](auto& c, const auto& v, const auto& k) { c.augment.classifier.l2 = to_double(v, k); }},

      {"learner.kind", [](auto& c, const auto& v, const auto&) { c.learner.kind = v; }},
      {"learner.bin_width", [](auto& c, const auto& v, const auto& k) { c.learner.bin_width = to_double(v, k); }},
      {"learner.smoothing", [](auto& c, const auto& v, const auto& k) { c.learner.smoothing = to_double(v, k); }},
      {"learner.time_indexed",
       [](auto& c, const auto& v, const auto& k) {
         c.learner.time_indexed = to_bool(v, k);
         c.learner.neural.time_indexed = c.learner.time_indexed;
       }},
      {"learner.hidden",
       [](auto& c, const auto& v, const auto& k) { c.learner.neural.hidden = static_cast<int>(to_int(v, k)); }},
      {"learner.lr", [](auto& c, const auto& v, const auto& k) { c.learner.neural.lr = to_double(v, k); }},
      {"learner.epochs",
       [](auto& c, const auto& v, const auto& k) { c.learner.neural.epochs = static_cast<int>(to_int(v, k)); }},
      {"learner.batch", [](auto& c, const auto& v, const auto& k) { c.learner.neural.batch = to_count(v, k); }},

      {"eval.f_grid",
       [](auto& c, const auto& v, const auto& k) {
         c.eval.f_grid = v == "auto" ? std::vector<double>{} : parse_number_list(v, k);
       }},
      {"eval.n_rollouts", [](auto& c, const auto& v, const auto& k) { c.eval.n_rollouts = to_count(v, k); }},
      {"eval.exact", [](auto& c, const auto& v, const auto& k) { c.eval.exact = to_bool(v, k); }},

      {"run.root_seed", [](auto& c, const auto& v, const auto& k) { c.run.root_seed = to_seed(v, k); }},
      {"run.seeds", [](auto& c, const auto& v, const auto& k) { c.run.seeds = parse_seed_list(v, k); }},
      {"run.output_dir", [](auto& c, const auto& v, const auto&) { c.run.output_dir = v; }},
      {"run.cells", [](auto& c, const auto& v, const auto&) { c.run.cells = v == "all" ? std::vector<std::string>{} : split_list(v); }},
      {"run.save_artifacts",
       [](auto& c, const auto& v, const auto& k) { c.run.save_artifacts = to_bool(v, k); }},

      {"rate.n_grid",
       [](auto& c, const auto& v, const auto& k) {
         c.rate.n_grid.clear();
         for (double x : parse_number_list(v, k)) {
           if (x < 1 || x != std::floor(x)) throw ConfigError(k, "sizes must be positive integers");
           c.rate.n_grid.push_back(static_cast<std::size_t>(x));
         }
       }},
      {"rate.source_ratio",
       [](auto& c, const auto& v, const auto& k) { c.rate.source_ratio = to_count(v, k); }},
  };
  return table;
}

const std::vector<std::string> kCellNames = {"1T",       "10T",         "1T10S-Identity", "RADT-DARA",
                                             "RADT-MV",  "RADT-MV-empirical", "RADT-ExactCDF"};

std::string format_number(double x) {
  std::ostringstream out;
  out.precision(17);
  out << x;
  return out.str();
}

template <class T>
std::string join(const std::vector<T>& values) {
  std::ostringstream out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ", ";
    if constexpr (std::is_floating_point_v<T>) {
      out << format_number(values[i]);
    } else {
      out << values[i];
    }
  }
  return out.str();
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text, const std::string& key) {
  std::vector<double> values;
  for (const auto& item : split_list(text)) {
    const auto dots = item.find("..");
    if (dots != std::string::npos) {
      const auto lo = to_int(trim(item.substr(0, dots)), key);
      const auto hi = to_int(trim(item.substr(dots + 2)), key);
      if (hi < lo) throw ConfigError(key, "empty range '" + item + "'");
      if (hi - lo > 1000000) throw ConfigError(key, "range '" + item + "' is too long");
      for (auto v = lo; v <= hi; ++v) values.push_back(static_cast<double>(v));
    } else {
      values.push_back(to_double(item, key));
    }
  }
  if (values.empty()) throw ConfigError(key, "empty list");
  return values;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text, const std::string& key) {
  std::vector<std::uint64_t> seeds;
  for (double v : parse_number_list(text, key)) {
    if (v < 0 || v != std::floor(v)) throw ConfigError(key, "seeds must be non-negative integers");
    seeds.push_back(static_cast<std::uint64_t>(v));
  }
  return seeds;
}

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
  ConfigFile file;
  file.origin_ = origin;
  std::stringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("", where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("", where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("", where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("", where + ": missing key");
    if (section.empty()) throw ConfigError(key, where + ": key outside of any [section]");
    const std::string path = section + "." + key;
    if (file.entries_.count(path)) throw ConfigError(path, where + ": duplicate key");
    file.entries_[path] = Entry{unquote(trim(line.substr(eq + 1))), line_no};
  }
  return file;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

void ConfigFile::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("", "override '" + assignment + "' is not key=value");
  set(trim(assignment.substr(0, eq)), unquote(trim(assignment.substr(eq + 1))));
}

void ConfigFile::set(const std::string& key, const std::string& value) {
  if (key.find('.') == std::string::npos) throw ConfigError(key, "override keys look like section.key");
  entries_[key] = Entry{value, 0};
}

ExperimentConfig experiment_config(const ConfigFile& file, bool use_environment) {
  ExperimentConfig cfg;
  cfg.run.seeds = {0};
  for (const auto& [key, entry] : file.entries()) {
    if (key.rfind("env.", 0) == 0 && key != "env.name") {
      cfg.env.params[key.substr(4)] = entry.value;
      continue;
    }
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(key, "unknown key");
    it->second(cfg, entry.value, key);
  }
  if (use_environment) {
    if (const char* seed = std::getenv(kSeedEnvVar); seed && *seed) {
      cfg.run.root_seed = to_seed(seed, std::string(kSeedEnvVar));
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        const std::vector<std::string>& overrides, bool use_environment) {
  auto file = ConfigFile::load(path);
  for (const auto& o : overrides) file.set(o);
  return experiment_config(file, use_environment);
}

void ExperimentConfig::validate() const {
  try {
    make_builtin(env.name, env.params);
  } catch (const std::exception& e) {
    throw ConfigError("env", e.what());
  }
  if (!(shift.magnitude >= 0.0 && shift.magnitude <= 1.0)) {
    throw ConfigError("shift.magnitude", "must lie in [0, 1]");
  }
  if (data.n_target_small < 1) throw ConfigError("data.n_target_small", "must be at least 1");
  if (data.n_target_large < data.n_target_small) {
    throw ConfigError("data.n_target_large", "must be at least data.n_target_small");
  }
  if (data.n_source < 1) throw ConfigError("data.n_source", "must be at least 1");
  if (data.behavior != "uniform" && data.behavior != "epsilon_greedy") {
    throw ConfigError("data.behavior", "expected uniform or epsilon_greedy");
  }
  if (!(data.epsilon >= 0.0 && data.epsilon <= 1.0)) throw ConfigError("data.epsilon", "must lie in [0, 1]");
  if (augment.eta < 0.0) throw ConfigError("augment.eta", "must be non-negative");
  try {
    augment.clip.validate();
  } catch (const std::exception& e) {
    throw ConfigError("augment.clip_lo", e.what());
  }
  if (augment.n_action_samples < 1) throw ConfigError("augment.n_action_samples", "must be at least 1");
  if (!(augment.temperature > 0.0)) throw ConfigError("augment.temperature", "must be positive");
  if (augment.delta_r_clamp < 0.0) throw ConfigError("augment.delta_r_clamp", "must be non-negative");
  if (!(augment.classifier.lr > 0.0)) throw ConfigError("augment.classifier_lr", "must be positive");
  if (augment.classifier.epochs < 1) throw ConfigError("augment.classifier_epochs", "must be at least 1");
  if (augment.classifier.batch < 1) throw ConfigError("augment.classifier_batch", "must be at least 1");
  if (augment.classifier.l2 < 0.0) throw ConfigError("augment.classifier_l2", "must be non-negative");
  if (learner.kind != "tabular" && learner.kind != "neural") {
    throw ConfigError("learner.kind", "expected tabular or neural");
  }
  if (!(learner.bin_width > 0.0)) throw ConfigError("learner.bin_width", "must be positive");
  if (learner.smoothing < 0.0) throw ConfigError("learner.smoothing", "must be non-negative");
  if (learner.neural.hidden < 1) throw ConfigError("learner.hidden", "must be at least 1");
  if (!(learner.neural.lr > 0.0)) throw ConfigError("learner.lr", "must be positive");
  if (learner.neural.epochs < 1) throw ConfigError("learner.epochs", "must be at least 1");
  if (learner.neural.batch < 1) throw ConfigError("learner.batch", "must be at least 1");
  if (eval.n_rollouts < 1) throw ConfigError("eval.n_rollouts", "must be at least 1");
  if (run.seeds.empty()) throw ConfigError("run.seeds", "need at least one seed");
  for (const auto& cell : run.cells) {
    if (std::find(kCellNames.begin(), kCellNames.end(), cell) == kCellNames.end()) {
      throw ConfigError("run.cells", "unknown cell '" + cell + "'");
    }
  }
  if (rate.n_grid.size() < 3) throw ConfigError("rate.n_grid", "need at least 3 sizes");
  for (std::size_t i = 1; i < rate.n_grid.size(); ++i) {
    if (rate.n_grid[i] <= rate.n_grid[i - 1]) throw ConfigError("rate.n_grid", "must be strictly increasing");
  }
  if (rate.source_ratio < 1) throw ConfigError("rate.source_ratio", "must be at least 1");
  if (rate.n_grid.front() < rate.source_ratio + 1) {
    throw ConfigError("rate.n_grid", "smallest size leaves no target trajectories");
  }
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json env_params = nlohmann::json::object();
  for (const auto& [k, v] : cfg.env.params) env_params[k] = v;
  return {
      {"env", {{"name", cfg.env.name}, {"params", env_params}}},
      {"shift",
       {{"kind", to_string(cfg.shift.kind)}, {"magnitude", cfg.shift.magnitude}, {"seed", cfg.shift.seed}}},
      {"data",
       {{"n_target_small", cfg.data.n_target_small},
        {"n_target_large", cfg.data.n_target_large},
        {"n_source", cfg.data.n_source},
        {"behavior", cfg.data.behavior},
        {"epsilon", cfg.data.epsilon}}},
      {"augment",
       {{"eta", cfg.augment.eta},
        {"clip_lo", cfg.augment.clip.theta_lo},
        {"clip_hi", cfg.augment.clip.theta_hi},
        {"sigma_floor", cfg.augment.clip.sigma_floor},
        {"estimator", to_string(cfg.augment.estimator)},
        {"n_action_samples", cfg.augment.n_action_samples},
        {"temperature", cfg.augment.temperature},
        {"delta_r_clamp", cfg.augment.delta_r_clamp},
        {"classifier_lr", cfg.augment.classifier.lr},
        {"classifier_epochs", cfg.augment.classifier.epochs},
        {"classifier_batch", cfg.augment.classifier.batch},
        {"classifier_l2", cfg.augment.classifier.l2}}},
      {"learner",
       {{"kind", cfg.learner.kind},
        {"bin_width", cfg.learner.bin_width},
        {"smoothing", cfg.learner.smoothing},
        {"time_indexed", cfg.learner.time_indexed},
        {"hidden", cfg.learner.neural.hidden},
        {"lr", cfg.learner.neural.lr},
        {"epochs", cfg.learner.neural.epochs},
        {"batch", cfg.learner.neural.batch}}},
      {"eval",
       {{"f_grid", cfg.eval.f_grid}, {"n_rollouts", cfg.eval.n_rollouts}, {"exact", cfg.eval.exact}}},
      {"run",
       {{"root_seed", cfg.run.root_seed},
        {"seeds", cfg.run.seeds},
        {"output_dir", cfg.run.output_dir.generic_string()},
        {"cells", cfg.run.cells},
        {"save_artifacts", cfg.run.save_artifacts}}},
      {"rate", {{"n_grid", cfg.rate.n_grid}, {"source_ratio", cfg.rate.source_ratio}}},
  };
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  auto b = [](bool v) { return v ? "true" : "false"; };
  out << "[env]\nname = " << cfg.env.name << "\n";
  for (const auto& [k, v] : cfg.env.params) out << k << " = " << v << "\n";
  out << "\n[shift]\nkind = " << to_string(cfg.shift.kind) << "\nmagnitude = " << format_number(cfg.shift.magnitude)
      << "\nseed = " << cfg.shift.seed << "\n";
  out << "\n[data]\nn_target_small = " << cfg.data.n_target_small << "\nn_target_large = " << cfg.data.n_target_large
      << "\nn_source = " << cfg.data.n_source << "\nbehavior = " << cfg.data.behavior
      << "\nepsilon = " << format_number(cfg.data.epsilon) << "\n";
  out << "\n[augment]\neta = " << format_number(cfg.augment.eta)
      << "\nclip_lo = " << format_number(cfg.augment.clip.theta_lo)
      << "\nclip_hi = " << format_number(cfg.augment.clip.theta_hi)
      << "\nsigma_floor = " << format_number(cfg.augment.clip.sigma_floor)
      << "\nestimator = " << to_string(cfg.augment.estimator) << "\nn_action_samples = " << cfg.augment.n_action_samples
      << "\ntemperature = " << format_number(cfg.augment.temperature)
      << "\ndelta_r_clamp = " << format_number(cfg.augment.delta_r_clamp)
      << "\nclassifier_lr = " << format_number(cfg.augment.classifier.lr)
      << "\nclassifier_epochs = " << cfg.augment.classifier.epochs
      << "\nclassifier_batch = " << cfg.augment.classifier.batch
      << "\nclassifier_l2 = " << format_number(cfg.augment.classifier.l2) << "\n";
  out << "\n[learner]\nkind = " << cfg.learner.kind << "\nbin_width = " << format_number(cfg.learner.bin_width)
      << "\nsmoothing = " << format_number(cfg.learner.smoothing) << "\ntime_indexed = " << b(cfg.learner.time_indexed)
      << "\nhidden = " << cfg.learner.neural.hidden << "\nlr = " << format_number(cfg.learner.neural.lr)
      << "\nepochs = " << cfg.learner.neural.epochs << "\nbatch = " << cfg.learner.neural.batch << "\n";
  out << "\n[eval]\nf_grid = " << (cfg.eval.f_grid.empty() ? std::string("auto") : join(cfg.eval.f_grid))
      << "\nn_rollouts = " << cfg.eval.n_rollouts << "\nexact = " << b(cfg.eval.exact) << "\n";
  out << "\n[run]\nroot_seed = " << cfg.run.root_seed << "\nseeds = " << join(cfg.run.seeds)
      << "\noutput_dir = " << cfg.run.output_dir.generic_string()
      << "\ncells = " << (cfg.run.cells.empty() ? std::string("all") : join(cfg.run.cells))
      << "\nsave_artifacts = " << b(cfg.run.save_artifacts) << "\n";
  out << "\n[rate]\nn_grid = " << join(cfg.rate.n_grid) << "\nsource_ratio = " << cfg.rate.source_ratio << "\n";
  return out.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
  // Where results are written does not change them.
  auto doc = to_json(cfg);
  doc["run"].erase("output_dir");
  doc["run"].erase("save_artifacts");
  return hex16(fnv1a64(doc.dump()));
}

}  // namespace radt
