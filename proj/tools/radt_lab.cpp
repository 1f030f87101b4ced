// radt-lab: command-line front end for the off-dynamics return-conditioning lab.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "radt/augment.hpp"
#include "radt/classifiers.hpp"
#include "radt/config.hpp"
#include "radt/data.hpp"
#include "radt/eval.hpp"
#include "radt/experiment.hpp"
#include "radt/mdp.hpp"
#include "radt/parallel.hpp"
#include "radt/rcsl.hpp"
#include "radt/shift.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace radt;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

// Options shared by every subcommand.
struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::string>> mirrored;
  int jobs = default_jobs();
};

void add_common(CLI::App* sub, Common& common) {
  sub->add_option("-c,--config", common.config, "Config file; flags override its values");
  sub->add_option("--set", common.sets, "Override a config key, section.key=value (repeatable)");
  sub->add_option("-j,--jobs", common.jobs, "Maximum worker threads")->check(CLI::PositiveNumber);
}

// A flag that overrides the config key `key`.
void mirror(CLI::App* sub, Common& common, const std::string& flag, const std::string& key,
            const std::string& help) {
  sub->add_option_function<std::string>(
      flag, [&common, key](const std::string& value) { common.mirrored.emplace_back(key, value); },
      help + " [" + key + "]");
}

ExperimentConfig effective_config(const Common& common) {
  auto file = common.config.empty() ? ConfigFile::parse("", "<defaults>") : ConfigFile::load(common.config);
  for (const auto& [key, value] : common.mirrored) file.set(key, value);
  for (const auto& assignment : common.sets) file.set(assignment);
  return experiment_config(file);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << doc.dump(1) << "\n";
}

void write_dataset(const fs::path& path, const Dataset& ds) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_dataset(ds, path);
}

std::uint64_t pick_seed(const std::optional<std::uint64_t>& flag, const ExperimentConfig& cfg) {
  return flag ? *flag : cfg.run.root_seed;
}

Environment load_env(const fs::path& path) {
  const auto doc = read_json(path);
  if (doc.value("format", "") != "radt-env") {
    throw std::runtime_error("'" + path.string() + "' is not an environment file (run make-env)");
  }
  auto target = mdp_from_json(doc.at("target"));
  auto source = mdp_from_json(doc.at("source"));
  auto behavior = policy_from_json(doc.at("behavior"));
  auto optimal = value_iteration(target);
  return {std::move(target), std::move(source), std::move(behavior), doc.at("behavior_id").get<std::string>(),
          std::move(optimal)};
}

std::unique_ptr<ReturnConditionedPolicy> load_policy(const fs::path& path) {
  const auto doc = read_json(path);
  const auto kind = doc.value("kind", "");
  if (kind == "tabular") return std::make_unique<TabularRcslPolicy>(tabular_policy_from_json(doc));
  if (kind == "neural") return std::make_unique<NeuralRcslPolicy>(neural_policy_from_json(doc));
  throw std::runtime_error("'" + path.string() + "' is not a policy file");
}

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

// ---- subcommands ----

struct MakeEnvArgs {
  std::vector<std::string> params;
  std::string out;
};

int cmd_make_env(Common& common, const MakeEnvArgs& args) {
  for (const auto& p : args.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw ConfigError("env", "--param expects name=value, got '" + p + "'");
    common.mirrored.emplace_back("env." + p.substr(0, eq), p.substr(eq + 1));
  }
  const auto cfg = effective_config(common);
  const auto env = build_environment(cfg);
  const auto gap = dynamics_gap(env.source, env.target);
  json doc = {{"format", "radt-env"},
              {"version", 1},
              {"provenance", provenance(config_hash(cfg), cfg.shift.seed)},
              {"env", {{"name", cfg.env.name}, {"params", cfg.env.params}}},
              {"shift",
               {{"kind", to_string(cfg.shift.kind)}, {"magnitude", cfg.shift.magnitude}, {"seed", cfg.shift.seed}}},
              {"target", to_json(env.target)},
              {"source", to_json(env.source)},
              {"target_fingerprint", fingerprint(env.target)},
              {"source_fingerprint", fingerprint(env.source)},
              {"behavior", to_json(env.behavior)},
              {"behavior_id", env.behavior_id},
              {"optimal_value", env.optimal.value},
              {"behavior_value", policy_value(env.target, env.behavior)},
              {"dynamics_gap",
               {{"max_total_variation", gap.max_tv()}, {"support_mismatch", gap.support_mismatch}}}};
  write_json(args.out, doc);
  std::cout << "wrote " << args.out << ": " << cfg.env.name << " target " << fingerprint(env.target) << ", source "
            << fingerprint(env.source) << ", J* = " << fmt(env.optimal.value) << "\n";
  return kExitOk;
}

struct CollectArgs {
  std::string env;
  std::string domain = "target";
  long long n = -1;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_collect(Common& common, const CollectArgs& args) {
  const auto cfg = effective_config(common);
  if (args.n < 1) throw ConfigError("n", "number of trajectories must be at least 1");
  Domain domain;
  try {
    domain = domain_from_string(args.domain);
  } catch (const std::exception& e) {
    throw ConfigError("domain", e.what());
  }
  const auto env = load_env(args.env);
  const auto seed = pick_seed(args.seed, cfg);
  const auto& mdp = domain == Domain::Target ? env.target : env.source;
  auto ds = collect(mdp, env.behavior, static_cast<std::size_t>(args.n), seed, domain, env.behavior_id, common.jobs);
  ds.metadata["provenance"] = provenance(config_hash(cfg), seed);
  write_dataset(args.out, ds);
  std::cout << "wrote " << args.out << ": " << ds.size() << " " << args.domain << " trajectories\n";
  return kExitOk;
}

struct ClassifierArgs {
  std::string source;
  std::string target;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_train_classifiers(Common& common, const ClassifierArgs& args) {
  const auto cfg = effective_config(common);
  const auto source = load_dataset(args.source);
  const auto target = load_dataset(args.target);
  auto ccfg = cfg.augment.classifier;
  ccfg.seed = pick_seed(args.seed, cfg);
  const auto pair = train_classifiers(source, target, ccfg);
  const auto table = delta_r(pair, cfg.augment.delta_r_clamp);
  json doc = {{"format", "radt-classifiers"},
              {"version", 1},
              {"provenance", provenance(config_hash(cfg), ccfg.seed)},
              {"sas", to_json(pair.sas)},
              {"sa", to_json(pair.sa)},
              {"sas_loss", pair.sas_loss},
              {"sa_loss", pair.sa_loss},
              {"delta_r", to_json(table)}};
  write_json(args.out, doc);
  std::cout << "wrote " << args.out << ": SAS loss " << fmt(pair.sas_loss.front()) << " -> "
            << fmt(pair.sas_loss.back()) << ", SA loss " << fmt(pair.sa_loss.front()) << " -> "
            << fmt(pair.sa_loss.back()) << "\n";
  return kExitOk;
}

struct AugmentArgs {
  std::string kind;
  std::string in;
  std::string target_data;
  std::string env;
  std::string delta_r;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_augment(Common& common, const AugmentArgs& args) {
  const auto cfg = effective_config(common);
  PsiKind kind;
  try {
    kind = psi_kind_from_string(args.kind);
  } catch (const std::exception& e) {
    throw ConfigError("kind", e.what());
  }
  const auto ds = load_dataset(args.in);
  const auto seed = pick_seed(args.seed, cfg);
  AugmentInputs inputs;
  inputs.eta = cfg.augment.eta;
  inputs.clip = cfg.augment.clip;
  inputs.seed = seed;

  std::optional<Environment> env;
  if (!args.env.empty()) env = load_env(args.env);
  std::optional<DeltaRTable> table;
  std::optional<ReturnStats> src_stats, tgt_stats;
  std::optional<ReturnTable> src_returns, tgt_returns;

  switch (kind) {
    case PsiKind::Identity:
      break;
    case PsiKind::Dara: {
      if (args.delta_r.empty()) throw ConfigError("delta-r", "dara needs --delta-r (from train-classifiers)");
      table = delta_r_from_json(read_json(args.delta_r).at("delta_r"));
      inputs.delta_r = &*table;
      break;
    }
    case PsiKind::MeanVariance:
    case PsiKind::MeanVarianceEmpirical: {
      const auto est = kind == PsiKind::MeanVarianceEmpirical ? Estimator::TrajectoryEmpirical : cfg.augment.estimator;
      if (est == Estimator::ExactDP) {
        if (!env) throw ConfigError("env", "the exact_dp estimator needs --env");
        src_stats = exact_return_stats(env->source, env->behavior);
        tgt_stats = exact_return_stats(env->target, env->behavior);
      } else {
        if (args.target_data.empty()) throw ConfigError("target-data", "mean-variance matching needs --target-data");
        const auto target = load_dataset(args.target_data);
        if (est == Estimator::TrajectoryEmpirical) {
          src_stats = empirical_return_stats(ds);
          tgt_stats = empirical_return_stats(target);
        } else {
          StatsConfig sc;
          sc.n_action_samples = cfg.augment.n_action_samples;
          sc.temperature = cfg.augment.temperature;
          sc.seed = derive_seed(seed, 0);
          src_stats = fitted_value_stats(ds, sc);
          sc.seed = derive_seed(seed, 1);
          tgt_stats = fitted_value_stats(target, sc);
        }
      }
      inputs.source_stats = &*src_stats;
      inputs.target_stats = &*tgt_stats;
      break;
    }
    case PsiKind::ExactCdf: {
      if (!env) throw ConfigError("env", "exact_cdf needs --env");
      src_returns = return_table(env->source, env->behavior);
      tgt_returns = return_table(env->target, env->behavior);
      inputs.source_returns = &*src_returns;
      inputs.target_returns = &*tgt_returns;
      break;
    }
  }
  const auto aug = augment(ds, kind, inputs);
  auto out = with_augmentation_header(aug);
  out.metadata["provenance"] = provenance(config_hash(cfg), seed);
  write_dataset(args.out, out);
  std::cout << "wrote " << args.out << ": " << to_string(kind) << " on " << aug.diagnostics.steps << " steps";
  if (kind == PsiKind::MeanVariance || kind == PsiKind::MeanVarianceEmpirical) {
    std::cout << ", clip rate " << fmt(aug.diagnostics.clip_rate()) << ", stats fallbacks "
              << aug.diagnostics.fallback_steps;
  }
  if (kind == PsiKind::Dara) std::cout << ", unsupported transitions " << aug.diagnostics.delta_r_misses;
  std::cout << "\n";
  return kExitOk;
}

struct FitArgs {
  std::vector<std::string> data;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_fit(Common& common, const FitArgs& args) {
  const auto cfg = effective_config(common);
  Dataset train = load_dataset(args.data.front());
  for (std::size_t i = 1; i < args.data.size(); ++i) train = mix(train, load_dataset(args.data[i]));
  const auto seed = pick_seed(args.seed, cfg);
  json doc;
  if (cfg.learner.kind == "tabular") {
    doc = to_json(fit_tabular(train, ReturnBinner{cfg.learner.bin_width, 0.0}, cfg.learner.smoothing,
                              cfg.learner.time_indexed));
  } else {
    auto ncfg = cfg.learner.neural;
    ncfg.seed = seed;
    ncfg.time_indexed = cfg.learner.time_indexed;
    const auto fit = fit_neural(train, ncfg);
    doc = to_json(fit.policy);
    doc["training_loss"] = fit.loss;
  }
  doc["provenance"] = provenance(config_hash(cfg), seed);
  doc["training_data"] = args.data;
  doc["training_trajectories"] = train.size();
  write_json(args.out, doc);
  std::cout << "wrote " << args.out << ": " << cfg.learner.kind << " policy from " << train.size()
            << " trajectories\n";
  return kExitOk;
}

struct EvalArgs {
  std::string model;
  std::string env;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void print_report(const EvalReport& report) {
  std::cout << "J* = " << fmt(report.optimal_value) << "\n";
  std::cout << "       f      exact    mc_mean      mc_se  suboptimality  fallback\n";
  for (const auto& r : report.results) {
    char line[160];
    std::snprintf(line, sizeof line, "%8.3f %10s %10.4f %10.4f %14.4f %9.4f\n", r.f,
                  r.has_exact ? fmt(r.exact).c_str() : "-", r.monte_carlo.mean, r.monte_carlo.se, r.suboptimality,
                  r.fallback_rate);
    std::cout << line;
  }
}

int cmd_eval(Common& common, const EvalArgs& args) {
  const auto cfg = effective_config(common);
  const auto env = load_env(args.env);
  const auto policy = load_policy(args.model);
  const auto seed = pick_seed(args.seed, cfg);
  const auto f_grid = cfg.eval.f_grid.empty() ? auto_f_grid(env) : cfg.eval.f_grid;
  auto report = evaluate(*policy, env.target, f_grid, cfg.eval.n_rollouts, seed, cfg.eval.exact, common.jobs);
  report.policy_id = fs::path(args.model).filename().string();
  auto doc = to_json(report);
  doc["provenance"] = provenance(config_hash(cfg), seed);
  if (!args.out.empty()) write_json(args.out, doc);
  print_report(report);
  return kExitOk;
}

void progress_line(std::size_t done, std::size_t total) {
  std::cerr << "\r  " << done << "/" << total << std::flush;
  if (done == total) std::cerr << "\n";
}

int cmd_experiment(Common& common, bool quiet) {
  const auto cfg = effective_config(common);
  RunOptions options;
  options.jobs = common.jobs;
  if (!quiet) options.progress = progress_line;
  const auto result = run_matrix(cfg, options);
  std::cout << "config " << result.config_hash << ", J* = " << fmt(result.optimal_value) << ", f grid [";
  for (std::size_t i = 0; i < result.f_grid.size(); ++i) std::cout << (i ? ", " : "") << result.f_grid[i];
  std::cout << "]\n";
  std::cout << "cell                  mean_return        se   n  failures\n";
  for (Cell c : result.cells) {
    const auto s = result.summary(c);
    char line[160];
    std::snprintf(line, sizeof line, "%-20s %12.4f %9.4f %3zu %9zu\n", cell_name(c).c_str(), s.headline.mean,
                  s.headline.se, s.headline.n, s.failures);
    std::cout << line;
  }
  for (const auto& r : result.results) {
    if (!r.ok) std::cerr << "warning: " << cell_name(r.cell) << " seed " << r.seed << " failed: " << r.error << "\n";
  }
  std::cout << "reports in " << (cfg.run.output_dir / "reports").string() << "\n";
  return kExitOk;
}

int cmd_rate_study(Common& common, bool quiet) {
  const auto cfg = effective_config(common);
  RunOptions options;
  options.jobs = common.jobs;
  if (!quiet) options.progress = progress_line;
  const auto result = rate_study(cfg, options);
  std::cout << "config " << result.config_hash << ", J* = " << fmt(result.optimal_value) << "\n";
  std::cout << "       N  n_target  n_source  median_suboptimality\n";
  for (const auto& p : result.points) {
    char line[120];
    std::snprintf(line, sizeof line, "%8zu %9zu %9zu %21.4f\n", p.n_total, p.n_target, p.n_source, p.median);
    std::cout << line;
  }
  std::cout << "log-log slope " << (std::isfinite(result.slope) ? fmt(result.slope) : std::string("undefined"))
            << ", monotone non-increasing: " << (result.monotone_non_increasing() ? "yes" : "no") << "\n";
  return kExitOk;
}

int inspect_dataset(const fs::path& path) {
  const auto ds = load_dataset(path);
  std::cout << "dataset " << path.string() << "\n"
            << "  shape: " << ds.num_states << " states, " << ds.num_actions << " actions, horizon " << ds.horizon
            << "\n"
            << "  trajectories: " << ds.size() << " (target " << ds.count(Domain::Target) << ", source "
            << ds.count(Domain::Source) << ")\n"
            << "  mdp fingerprint: " << ds.mdp_fingerprint << ", behavior: " << ds.behavior_policy_id
            << ", seed: " << ds.seed << "\n";
  if (!ds.empty()) {
    double lo = ds.trajectories.front().total_return(), hi = lo, total = 0.0, rtg_total = 0.0;
    for (const auto& t : ds.trajectories) {
      const double g = t.total_return();
      lo = std::min(lo, g);
      hi = std::max(hi, g);
      total += g;
      rtg_total += t.rtg.empty() ? 0.0 : t.rtg.front();
    }
    const double n = static_cast<double>(ds.size());
    std::cout << "  return: mean " << fmt(total / n) << ", min " << fmt(lo) << ", max " << fmt(hi)
              << "; mean initial rtg " << fmt(rtg_total / n) << "\n";
  }
  if (ds.metadata.contains("augmentation")) {
    std::cout << "  augmentation: " << ds.metadata["augmentation"].dump() << "\n";
  }
  if (ds.metadata.contains("provenance")) std::cout << "  provenance: " << ds.metadata["provenance"].dump() << "\n";
  return kExitOk;
}

int inspect_json(const fs::path& path) {
  const auto doc = read_json(path);
  const auto format = doc.value("format", "");
  const auto kind = doc.value("kind", "");
  if (format == "radt-env") {
    std::cout << "environment " << path.string() << "\n  " << doc["env"].dump() << "\n  shift "
              << doc["shift"].dump() << "\n  J* = " << doc["optimal_value"] << ", behavior "
              << doc["behavior_id"].get<std::string>() << " value " << doc["behavior_value"]
              << "\n  dynamics gap " << doc["dynamics_gap"].dump() << "\n";
  } else if (format == "radt-classifiers") {
    const auto table = delta_r_from_json(doc.at("delta_r"));
    double worst = 0.0;
    std::size_t supported = 0;
    for (std::size_t i = 0; i < table.values.size(); ++i) {
      if (!table.supported[i]) continue;
      ++supported;
      worst = std::max(worst, std::abs(table.values[i]));
    }
    std::cout << "classifier pair " << path.string() << "\n  supported transitions " << supported
              << ", max |delta_r| " << fmt(worst) << "\n  final losses: SAS " << doc["sas_loss"].back() << ", SA "
              << doc["sa_loss"].back() << "\n";
  } else if (kind == "tabular") {
    const auto policy = tabular_policy_from_json(doc);
    std::cout << "tabular policy " << path.string() << "\n  " << policy.num_states() << " states, "
              << policy.num_actions() << " actions, " << policy.counts().size() << " (t, s, g) cells, bin width "
              << policy.binner().width << ", time indexed " << (policy.time_indexed() ? "yes" : "no") << "\n";
  } else if (kind == "neural") {
    const auto policy = neural_policy_from_json(doc);
    std::cout << "neural policy " << path.string() << "\n  " << policy.num_params() << " parameters, hidden "
              << policy.config().hidden << "\n";
    if (doc.contains("training_loss")) {
      std::cout << "  loss " << doc["training_loss"].front() << " -> " << doc["training_loss"].back() << "\n";
    }
  } else {
    std::cout << path.string() << "\n";
    for (const auto& [key, value] : doc.items()) {
      auto text = value.dump();
      if (text.size() > 100) text = text.substr(0, 97) + "...";
      std::cout << "  " << key << ": " << text << "\n";
    }
    return kExitOk;
  }
  if (doc.contains("provenance")) std::cout << "  provenance: " << doc["provenance"].dump() << "\n";
  return kExitOk;
}

int cmd_inspect(const std::string& path) {
  if (!fs::exists(path)) throw std::runtime_error("no such file '" + path + "'");
  if (fs::path(path).extension() == ".jsonl") return inspect_dataset(path);
  return inspect_json(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"radt-lab: off-dynamics return-conditioned learning on tabular MDPs"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  Common common;
  bool quiet = false;

  auto* make_env = app.add_subcommand("make-env", "Build a target/source MDP pair and behavior policy");
  MakeEnvArgs make_env_args;
  add_common(make_env, common);
  mirror(make_env, common, "--name", "env.name", "Builtin environment (chainwalk, twostate, random)");
  make_env->add_option("--param", make_env_args.params, "Environment parameter name=value (repeatable)");
  mirror(make_env, common, "--shift-kind", "shift.kind", "transition_perturb, action_noise, action_restrict, state_merge");
  mirror(make_env, common, "--magnitude", "shift.magnitude", "Shift magnitude in [0, 1]");
  mirror(make_env, common, "--shift-seed", "shift.seed", "Shift seed");
  mirror(make_env, common, "--behavior", "data.behavior", "uniform or epsilon_greedy");
  mirror(make_env, common, "--epsilon", "data.epsilon", "Exploration rate of the epsilon-greedy behavior");
  make_env->add_option("-o,--out", make_env_args.out, "Output environment JSON")->required();

  auto* collect_cmd = app.add_subcommand("collect", "Sample behavior-policy trajectories");
  CollectArgs collect_args;
  add_common(collect_cmd, common);
  collect_cmd->add_option("--env", collect_args.env, "Environment JSON from make-env")->required();
  collect_cmd->add_option("--domain", collect_args.domain, "target or source");
  collect_cmd->add_option("-n,--n", collect_args.n, "Number of trajectories")->required();
  collect_cmd->add_option("--seed", collect_args.seed, "Seed (default run.root_seed)");
  collect_cmd->add_option("-o,--out", collect_args.out, "Output dataset (.jsonl)")->required();

  auto* classifiers_cmd = app.add_subcommand("train-classifiers", "Train the SAS/SA domain classifiers");
  ClassifierArgs classifier_args;
  add_common(classifiers_cmd, common);
  classifiers_cmd->add_option("--source", classifier_args.source, "Source dataset")->required();
  classifiers_cmd->add_option("--target", classifier_args.target, "Target dataset")->required();
  mirror(classifiers_cmd, common, "--lr", "augment.classifier_lr", "Learning rate");
  mirror(classifiers_cmd, common, "--epochs", "augment.classifier_epochs", "Epochs");
  mirror(classifiers_cmd, common, "--batch", "augment.classifier_batch", "Mini-batch size");
  mirror(classifiers_cmd, common, "--l2", "augment.classifier_l2", "L2 penalty");
  mirror(classifiers_cmd, common, "--clamp", "augment.delta_r_clamp", "Clamp on |delta_r|");
  classifiers_cmd->add_option("--seed", classifier_args.seed, "Seed (default run.root_seed)");
  classifiers_cmd->add_option("-o,--out", classifier_args.out, "Output classifier JSON")->required();

  auto* augment_cmd = app.add_subcommand("augment", "Transform the returns-to-go of a source dataset");
  AugmentArgs augment_args;
  add_common(augment_cmd, common);
  augment_cmd->add_option("--kind", augment_args.kind, "identity, dara, mv, mv_empirical or exact_cdf")->required();
  augment_cmd->add_option("-i,--in", augment_args.in, "Source dataset")->required();
  augment_cmd->add_option("--target-data", augment_args.target_data, "Target dataset (mean-variance matching)");
  augment_cmd->add_option("--env", augment_args.env, "Environment JSON (exact_cdf, exact_dp statistics)");
  augment_cmd->add_option("--delta-r", augment_args.delta_r, "Classifier JSON from train-classifiers (dara)");
  mirror(augment_cmd, common, "--eta", "augment.eta", "DARA reward-correction weight");
  mirror(augment_cmd, common, "--clip-lo", "augment.clip_lo", "Lower clip on the std ratio");
  mirror(augment_cmd, common, "--clip-hi", "augment.clip_hi", "Upper clip on the std ratio");
  mirror(augment_cmd, common, "--sigma-floor", "augment.sigma_floor", "Floor on the source std");
  mirror(augment_cmd, common, "--estimator", "augment.estimator", "exact_dp, fitted_value or trajectory_empirical");
  mirror(augment_cmd, common, "--n-action-samples", "augment.n_action_samples", "Actions sampled per state");
  mirror(augment_cmd, common, "--temperature", "augment.temperature", "Softmax temperature");
  augment_cmd->add_option("--seed", augment_args.seed, "Seed (default run.root_seed)");
  augment_cmd->add_option("-o,--out", augment_args.out, "Output dataset (.jsonl)")->required();

  auto* fit_cmd = app.add_subcommand("fit", "Fit a return-conditioned policy");
  FitArgs fit_args;
  add_common(fit_cmd, common);
  fit_cmd->add_option("-d,--data", fit_args.data, "Training dataset(s), concatenated in order")->required();
  mirror(fit_cmd, common, "--learner", "learner.kind", "tabular or neural");
  mirror(fit_cmd, common, "--bin-width", "learner.bin_width", "Return bin width");
  mirror(fit_cmd, common, "--smoothing", "learner.smoothing", "Additive count smoothing");
  mirror(fit_cmd, common, "--time-indexed", "learner.time_indexed", "Condition on the timestep");
  mirror(fit_cmd, common, "--hidden", "learner.hidden", "Hidden units (neural)");
  mirror(fit_cmd, common, "--lr", "learner.lr", "Adam learning rate (neural)");
  mirror(fit_cmd, common, "--epochs", "learner.epochs", "Epochs (neural)");
  mirror(fit_cmd, common, "--batch", "learner.batch", "Mini-batch size (neural)");
  fit_cmd->add_option("--seed", fit_args.seed, "Seed (default run.root_seed)");
  fit_cmd->add_option("-o,--out", fit_args.out, "Output policy JSON")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a policy in the target MDP");
  EvalArgs eval_args;
  add_common(eval_cmd, common);
  eval_cmd->add_option("-m,--model", eval_args.model, "Policy JSON from fit")->required();
  eval_cmd->add_option("--env", eval_args.env, "Environment JSON from make-env")->required();
  mirror(eval_cmd, common, "--f-grid", "eval.f_grid", "Conditioning targets, e.g. \"1, 2, 3\" or auto");
  mirror(eval_cmd, common, "--n-rollouts", "eval.n_rollouts", "Monte Carlo rollouts per target");
  mirror(eval_cmd, common, "--exact", "eval.exact", "Also compute exact values");
  eval_cmd->add_option("--seed", eval_args.seed, "Seed (default run.root_seed)");
  eval_cmd->add_option("-o,--out", eval_args.out, "Output report JSON");

  auto* experiment_cmd = app.add_subcommand("experiment", "Run the full experiment matrix");
  add_common(experiment_cmd, common);
  mirror(experiment_cmd, common, "--output-dir", "run.output_dir", "Output directory");
  mirror(experiment_cmd, common, "--seeds", "run.seeds", "Seeds, e.g. \"0..19\"");
  mirror(experiment_cmd, common, "--root-seed", "run.root_seed", "Root seed");
  experiment_cmd->add_flag("-q,--quiet", quiet, "No progress output");

  auto* rate_cmd = app.add_subcommand("rate-study", "Suboptimality against total sample size");
  add_common(rate_cmd, common);
  mirror(rate_cmd, common, "--output-dir", "run.output_dir", "Output directory");
  mirror(rate_cmd, common, "--seeds", "run.seeds", "Seeds, e.g. \"0..19\"");
  mirror(rate_cmd, common, "--root-seed", "run.root_seed", "Root seed");
  mirror(rate_cmd, common, "--n-grid", "rate.n_grid", "Total sizes, e.g. \"200, 800, 3200\"");
  rate_cmd->add_flag("-q,--quiet", quiet, "No progress output");

  auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a dataset, policy, classifier or report file");
  std::string inspect_path;
  inspect_cmd->add_option("path", inspect_path, "File to inspect")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    if (*make_env) return cmd_make_env(common, make_env_args);
    if (*collect_cmd) return cmd_collect(common, collect_args);
    if (*classifiers_cmd) return cmd_train_classifiers(common, classifier_args);
    if (*augment_cmd) return cmd_augment(common, augment_args);
    if (*fit_cmd) return cmd_fit(common, fit_args);
    if (*eval_cmd) return cmd_eval(common, eval_args);
    if (*experiment_cmd) return cmd_experiment(common, quiet);
    if (*rate_cmd) return cmd_rate_study(common, quiet);
    if (*inspect_cmd) return cmd_inspect(inspect_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  std::cerr << app.help();
  return kExitConfig;
}
