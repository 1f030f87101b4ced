#include "radt/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "radt/classifiers.hpp"
#include "radt/data.hpp"
#include "radt/envs.hpp"
#include "radt/parallel.hpp"
#include "radt/shift.hpp"
#include "radt/stats.hpp"

namespace radt {

namespace {

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// A JSON-safe number: NaN and infinities become null.
nlohmann::json jnum(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void prepare_output_dir(const std::filesystem::path& root) {
  for (const char* sub : {"datasets", "models", "reports"}) std::filesystem::create_directories(root / sub);
}

std::vector<Cell> configured_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  if (cfg.run.cells.empty()) {
    cells.assign(std::begin(kAllCells), std::end(kAllCells));
  } else {
    for (const auto& name : cfg.run.cells) cells.push_back(cell_from_name(name));
  }
  return cells;
}

const std::string kCsvHeader =
    "config_hash,tool_version,root_seed,seed,cell,psi_kind,f,exact_return,mc_mean,mc_se,suboptimality,"
    "fallback_rate,clip_rate,stats_fallback_steps,delta_r_misses,status,error\n";

std::string csv_escape(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::string csv_rows(const std::string& hash, std::uint64_t root_seed, std::span<const double> f_grid,
                     const CellResult& r) {
  std::ostringstream out;
  const std::string prefix = hash + "," + kToolVersion + "," + std::to_string(root_seed) + "," +
                             std::to_string(r.seed) + "," + cell_name(r.cell) + "," + cell_psi(r.cell) + ",";
  const std::string diag = num(r.diagnostics.clip_rate()) + "," + std::to_string(r.diagnostics.fallback_steps) +
                           "," + std::to_string(r.diagnostics.delta_r_misses);
  if (!r.ok) {
    for (double f : f_grid) {
      out << prefix << num(f) << ",,,,,,," << ",," << "failed," << csv_escape(r.error) << "\n";
    }
    return out.str();
  }
  for (const auto& c : r.report.results) {
    out << prefix << num(c.f) << "," << (c.has_exact ? num(c.exact) : std::string()) << ","
        << num(c.monte_carlo.mean) << "," << num(c.monte_carlo.se) << "," << num(c.suboptimality) << ","
        << num(c.fallback_rate) << "," << diag << ",ok,\n";
  }
  return out.str();
}

ReturnStats stats_for(const Dataset& ds, const TabularMdp& mdp, const StationaryPolicy& behavior,
                      Estimator estimator, const AugmentConfig& cfg, std::uint64_t seed) {
  switch (estimator) {
    case Estimator::ExactDP:
      return exact_return_stats(mdp, behavior, true);
    case Estimator::TrajectoryEmpirical:
      return empirical_return_stats(ds, true);
    case Estimator::FittedValue: {
      StatsConfig sc;
      sc.estimator = Estimator::FittedValue;
      sc.n_action_samples = cfg.n_action_samples;
      sc.temperature = cfg.temperature;
      sc.time_indexed = true;
      sc.seed = seed;
      return fitted_value_stats(ds, sc);
    }
  }
  throw std::logic_error("unknown estimator");
}

struct ReplicateData {
  Dataset t_small;
  Dataset t_large;
  Dataset source;
};

// Return tables of both domains under the behavior policy, for the CDF cell.
struct ReturnTables {
  ReturnTable source;
  ReturnTable target;
};

ReturnTables return_tables(const Environment& env) {
  return {return_table(env.source, env.behavior), return_table(env.target, env.behavior)};
}

CellResult run_cell(const ExperimentConfig& cfg, const Environment& env, const ReturnTables& tables,
                    std::span<const double> f_grid, Cell cell, std::uint64_t seed, const ReplicateData& data,
                    std::uint64_t rep) {
  CellResult result;
  result.cell = cell;
  result.seed = seed;
  try {
    const std::uint64_t mix_seed = stream_seed(rep, Stream::Mix);
    Dataset train;
    AugmentedDataset aug;
    bool augmented = false;
    switch (cell) {
      case Cell::T1:
        train = data.t_small;
        break;
      case Cell::T10:
        train = data.t_large;
        break;
      case Cell::Identity:
        aug = psi_identity(data.source);
        augmented = true;
        break;
      case Cell::Dara: {
        auto ccfg = cfg.augment.classifier;
        ccfg.seed = stream_seed(rep, Stream::Classifier);
        const auto pair = train_classifiers(data.source, data.t_small, ccfg);
        const auto table = delta_r(pair, cfg.augment.delta_r_clamp);
        aug = psi_dara(data.source, table, cfg.augment.eta);
        augmented = true;
        break;
      }
      case Cell::MeanVariance:
      case Cell::MeanVarianceEmpirical: {
        const Estimator est =
            cell == Cell::MeanVariance ? cfg.augment.estimator : Estimator::TrajectoryEmpirical;
        const auto kind = cell == Cell::MeanVariance ? PsiKind::MeanVariance : PsiKind::MeanVarianceEmpirical;
        const auto s = stream_seed(rep, Stream::Stats);
        const auto src = stats_for(data.source, env.source, env.behavior, est, cfg.augment, derive_seed(s, 0));
        // Both sides share the action-sampling stream.
        const auto tgt = stats_for(data.t_small, env.target, env.behavior, est, cfg.augment, derive_seed(s, 0));
        aug = psi_mean_variance(data.source, src, tgt, cfg.augment.clip, kind);
        augmented = true;
        break;
      }
      case Cell::ExactCdf:
        aug = psi_exact_cdf(data.source, tables.source, tables.target, stream_seed(rep, Stream::Cdf));
        augmented = true;
        break;
    }
    if (augmented) {
      result.diagnostics = aug.diagnostics;
      train = mix(data.t_small, with_augmentation_header(aug), mix_seed);
    }
    const auto policy = fit_policy(train, cfg.learner, stream_seed(rep, Stream::Learner));
    result.report = evaluate(*policy, env.target, f_grid, cfg.eval.n_rollouts, stream_seed(rep, Stream::Eval),
                             cfg.eval.exact, 1);
    result.report.policy_id = cell_name(cell) + "/seed" + std::to_string(seed);
    result.report.psi_kind = cell_psi(cell);
    result.report.dataset_spec = cell == Cell::T1    ? "1T"
                                 : cell == Cell::T10 ? "10T"
                                                     : "1T10S";
    double total = 0.0;
    for (const auto& c : result.report.results) total += c.has_exact ? c.exact : c.monte_carlo.mean;
    result.headline = total / static_cast<double>(result.report.results.size());
    result.ok = true;

    if (cfg.run.save_artifacts && !cfg.run.output_dir.empty()) {
      const auto stem = "seed" + std::to_string(seed) + "_" + cell_name(cell);
      const auto prov = provenance(config_hash(cfg), seed);
      Dataset stamped = train;
      stamped.metadata["provenance"] = prov;
      save_dataset(stamped, cfg.run.output_dir / "datasets" / (stem + ".jsonl"));
      nlohmann::json model;
      if (const auto* tab = dynamic_cast<const TabularRcslPolicy*>(policy.get())) {
        model = to_json(*tab);
      } else if (const auto* net = dynamic_cast<const NeuralRcslPolicy*>(policy.get())) {
        model = to_json(*net);
      }
      model["provenance"] = prov;
      write_text(cfg.run.output_dir / "models" / (stem + ".json"), model.dump(1) + "\n");
    }
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = e.what();
  }
  return result;
}

ReplicateData collect_replicate(const Environment& env, std::uint64_t rep,
                                std::size_t n_small, std::size_t n_large, std::size_t n_source) {
  ReplicateData data;
  // 1T is a prefix of 10T, so the two target cells share their first trajectories.
  data.t_large = collect(env.target, env.behavior, n_large, stream_seed(rep, Stream::TargetData), Domain::Target,
                         env.behavior_id);
  data.t_small = take(data.t_large, n_small);
  data.source = collect(env.source, env.behavior, n_source, stream_seed(rep, Stream::SourceData), Domain::Source,
                        env.behavior_id);
  return data;
}

}  // namespace

std::string cell_name(Cell cell) {
  switch (cell) {
    case Cell::T1:
      return "1T";
    case Cell::T10:
      return "10T";
    case Cell::Identity:
      return "1T10S-Identity";
    case Cell::Dara:
      return "RADT-DARA";
    case Cell::MeanVariance:
      return "RADT-MV";
    case Cell::MeanVarianceEmpirical:
      return "RADT-MV-empirical";
    case Cell::ExactCdf:
      return "RADT-ExactCDF";
  }
  throw std::logic_error("unknown cell");
}

Cell cell_from_name(const std::string& name) {
  for (Cell c : kAllCells) {
    if (cell_name(c) == name) return c;
  }
  throw std::invalid_argument("unknown cell '" + name + "'");
}

std::string cell_psi(Cell cell) {
  switch (cell) {
    case Cell::T1:
    case Cell::T10:
      return "none";
    case Cell::Identity:
      return to_string(PsiKind::Identity);
    case Cell::Dara:
      return to_string(PsiKind::Dara);
    case Cell::MeanVariance:
      return to_string(PsiKind::MeanVariance);
    case Cell::MeanVarianceEmpirical:
      return to_string(PsiKind::MeanVarianceEmpirical);
    case Cell::ExactCdf:
      return to_string(PsiKind::ExactCdf);
  }
  throw std::logic_error("unknown cell");
}

std::uint64_t replicate_seed(std::uint64_t root_seed, std::uint64_t seed) { return derive_seed(root_seed, seed); }

std::uint64_t stream_seed(std::uint64_t replicate, Stream stream) {
  return derive_seed(replicate, static_cast<std::uint64_t>(stream));
}

Environment build_environment(const ExperimentConfig& cfg) {
  auto target = make_builtin(cfg.env.name, cfg.env.params);
  auto source = apply_shift(target, cfg.shift);
  auto optimal = value_iteration(target);
  const int H = target.horizon(), S = target.num_states(), A = target.num_actions();
  if (cfg.data.behavior == "uniform") {
    return {std::move(target), std::move(source), StationaryPolicy::uniform(H, S, A), "uniform",
            std::move(optimal)};
  }
  auto beta = StationaryPolicy::epsilon_greedy(optimal.policy, cfg.data.epsilon);
  return {std::move(target), std::move(source), std::move(beta), "epsilon_greedy(" + num(cfg.data.epsilon) + ")",
          std::move(optimal)};
}

std::vector<double> auto_f_grid(const Environment& env) {
  const auto occ = joint_occupancy(env.target, env.behavior);
  const auto& joint = occ.joint;
  std::vector<double> law(joint.width(), 0.0);
  for (int s = 0; s < joint.num_states(); ++s) {
    for (int a = 0; a < joint.num_actions(); ++a) {
      const auto m = joint.masses(0, s, a);
      for (std::size_t k = 0; k < law.size(); ++k) law[k] += m[k];
    }
  }
  std::vector<double> grid;
  for (double q : {0.5, 0.9, 1.0}) {
    double cdf = 0.0;
    std::size_t k = 0;
    for (; k < law.size(); ++k) {
      cdf += law[k];
      if (cdf >= q - 1e-12) break;
    }
    // The top quantile is the largest atom with positive mass.
    if (q == 1.0) {
      k = law.size() - 1;
      while (k > 0 && law[k] <= 0.0) --k;
    }
    k = std::min(k, law.size() - 1);
    grid.push_back(static_cast<double>(joint.lo_units() + static_cast<std::int64_t>(k)) * joint.grid());
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::vector<double> resolve_f_grid(const ExperimentConfig& cfg, const Environment& env) {
  return cfg.eval.f_grid.empty() ? auto_f_grid(env) : cfg.eval.f_grid;
}

std::unique_ptr<ReturnConditionedPolicy> fit_policy(const Dataset& ds, const LearnerConfig& cfg,
                                                    std::uint64_t seed) {
  if (cfg.kind == "tabular") {
    return std::make_unique<TabularRcslPolicy>(
        fit_tabular(ds, ReturnBinner{cfg.bin_width, 0.0}, cfg.smoothing, cfg.time_indexed));
  }
  if (cfg.kind == "neural") {
    auto ncfg = cfg.neural;
    ncfg.seed = seed;
    ncfg.time_indexed = cfg.time_indexed;
    return std::make_unique<NeuralRcslPolicy>(fit_neural(ds, ncfg).policy);
  }
  throw std::invalid_argument("unknown learner kind '" + cfg.kind + "'");
}

std::vector<double> MatrixResult::headlines(Cell cell) const {
  std::vector<double> values;
  for (const auto& r : results) {
    if (r.cell == cell && r.ok) values.push_back(r.headline);
  }
  return values;
}

CellSummary MatrixResult::summary(Cell cell) const {
  CellSummary s;
  s.cell = cell;
  const auto values = headlines(cell);
  if (!values.empty()) s.headline = mean_se(values);
  for (const auto& r : results) s.failures += (r.cell == cell && !r.ok) ? 1 : 0;
  return s;
}

std::vector<CellResult> run_replicate(const ExperimentConfig& cfg, const Environment& env,
                                      std::span<const double> f_grid, std::span<const Cell> cells,
                                      std::uint64_t seed) {
  const auto tables = return_tables(env);
  const auto rep = replicate_seed(cfg.run.root_seed, seed);
  std::vector<CellResult> out;
  ReplicateData data;
  try {
    data = collect_replicate(env, rep, cfg.data.n_target_small, cfg.data.n_target_large, cfg.data.n_source);
  } catch (const std::exception& e) {
    for (Cell c : cells) {
      CellResult r;
      r.cell = c;
      r.seed = seed;
      r.error = std::string("data collection failed: ") + e.what();
      out.push_back(std::move(r));
    }
    return out;
  }
  for (Cell c : cells) out.push_back(run_cell(cfg, env, tables, f_grid, c, seed, data, rep));
  return out;
}

MatrixResult run_matrix(const ExperimentConfig& cfg, const RunOptions& options) {
  cfg.validate();
  const auto env = build_environment(cfg);
  MatrixResult result;
  result.config_hash = config_hash(cfg);
  result.root_seed = cfg.run.root_seed;
  result.f_grid = resolve_f_grid(cfg, env);
  result.optimal_value = env.optimal.value;
  result.cells = configured_cells(cfg);

  const bool write = options.write_outputs && !cfg.run.output_dir.empty();
  const auto reports = cfg.run.output_dir / "reports";
  std::ofstream csv;
  if (write) {
    prepare_output_dir(cfg.run.output_dir);
    csv.open(reports / "matrix.csv", std::ios::binary | std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write " + (reports / "matrix.csv").string());
    csv << kCsvHeader;
    csv.flush();
  }

  const auto& seeds = cfg.run.seeds;
  std::vector<std::vector<CellResult>> slots(seeds.size());
  std::vector<bool> finished(seeds.size(), false);
  std::size_t committed = 0;
  std::mutex commit_mutex;
  auto commit_ready = [&] {
    while (committed < seeds.size() && finished[committed]) {
      if (write) {
        for (const auto& r : slots[committed]) csv << csv_rows(result.config_hash, result.root_seed, result.f_grid, r);
        csv.flush();
      }
      ++committed;
      if (options.progress) options.progress(committed, seeds.size());
    }
  };
  parallel_for(seeds.size(), options.jobs, [&](std::size_t i) {
    auto rows = run_replicate(cfg, env, result.f_grid, result.cells, seeds[i]);
    std::lock_guard<std::mutex> lock(commit_mutex);
    slots[i] = std::move(rows);
    finished[i] = true;
    commit_ready();
  });
  for (auto& rows : slots) {
    for (auto& r : rows) result.results.push_back(std::move(r));
  }
  if (write) {
    write_text(reports / "summary.json", matrix_summary(result).dump(2) + "\n");
    write_text(reports / "schema.json", report_schema().dump(2) + "\n");
    write_text(reports / "config.ini", to_config_text(cfg));
  }
  return result;
}

std::string matrix_csv(const MatrixResult& result) {
  std::string out = kCsvHeader;
  for (const auto& r : result.results) out += csv_rows(result.config_hash, result.root_seed, result.f_grid, r);
  return out;
}

nlohmann::json matrix_summary(const MatrixResult& result) {
  nlohmann::json cells = nlohmann::json::array();
  std::map<Cell, CellSummary> by_cell;
  for (Cell c : result.cells) {
    const auto s = result.summary(c);
    by_cell[c] = s;
    cells.push_back({{"cell", cell_name(c)},
                     {"psi_kind", cell_psi(c)},
                     {"mean_return", jnum(s.headline.mean)},
                     {"se", jnum(s.headline.se)},
                     {"n", s.headline.n},
                     {"failures", s.failures},
                     {"suboptimality", jnum(result.optimal_value - s.headline.mean)}});
  }
  nlohmann::json contrasts = nlohmann::json::array();
  const auto identity = by_cell.find(Cell::Identity);
  if (identity != by_cell.end() && identity->second.headline.n > 0) {
    for (const auto& [c, s] : by_cell) {
      if (c == Cell::Identity || s.headline.n == 0) continue;
      const double diff = s.headline.mean - identity->second.headline.mean;
      const double se = pooled_se(s.headline, identity->second.headline);
      contrasts.push_back({{"cell", cell_name(c)},
                           {"minus", cell_name(Cell::Identity)},
                           {"difference", jnum(diff)},
                           {"pooled_se", jnum(se)},
                           {"z", jnum(se > 0 ? diff / se : std::numeric_limits<double>::quiet_NaN())}});
    }
  }
  return {{"provenance", provenance(result.config_hash, result.root_seed)},
          {"f_grid", result.f_grid},
          {"optimal_value", result.optimal_value},
          {"headline", "mean over the f grid of the exact target return of each fitted policy"},
          {"cells", cells},
          {"contrasts_vs_identity", contrasts}};
}

nlohmann::json report_schema() {
  return {
      {"matrix.csv",
       {{"config_hash", "FNV-1a hash of the effective configuration"},
        {"tool_version", "version of the radt_lab library"},
        {"root_seed", "run.root_seed after environment overrides"},
        {"seed", "replicate index from run.seeds"},
        {"cell", "1T, 10T, 1T10S-Identity, RADT-DARA, RADT-MV, RADT-MV-empirical or RADT-ExactCDF"},
        {"psi_kind", "return transform applied to the source data, none for target-only cells"},
        {"f", "initial conditioning target"},
        {"exact_return", "exact target value of the conditioned policy (empty if disabled)"},
        {"mc_mean", "Monte Carlo mean target return over eval.n_rollouts rollouts"},
        {"mc_se", "standard error of mc_mean"},
        {"suboptimality", "optimal target value minus the exact (else Monte Carlo) return"},
        {"fallback_rate", "share of rollout steps from (t, s, f) cells never seen in training"},
        {"clip_rate", "share of source steps whose std ratio hit the clip range"},
        {"stats_fallback_steps", "source steps whose (t, s, a) statistics fell back to global moments"},
        {"delta_r_misses", "source transitions outside the classifier support"},
        {"status", "ok or failed"},
        {"error", "failure message when status is failed"}}},
      {"rate_study.csv",
       {{"config_hash", "FNV-1a hash of the effective configuration"},
        {"tool_version", "version of the radt_lab library"},
        {"root_seed", "run.root_seed after environment overrides"},
        {"n_total", "target plus source trajectories"},
        {"n_target", "target trajectories"},
        {"n_source", "source trajectories"},
        {"seed", "replicate index from run.seeds"},
        {"suboptimality", "optimal value minus the mean exact return over the f grid"}}},
  };
}

bool RateResult::monotone_non_increasing() const {
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].median > points[i - 1].median) return false;
  }
  return true;
}

RateResult rate_study(const ExperimentConfig& cfg, const RunOptions& options) {
  cfg.validate();
  const auto env = build_environment(cfg);
  const auto tables = return_tables(env);
  RateResult result;
  result.config_hash = config_hash(cfg);
  result.root_seed = cfg.run.root_seed;
  result.f_grid = resolve_f_grid(cfg, env);
  result.optimal_value = env.optimal.value;
  result.seeds = cfg.run.seeds;

  const auto& seeds = cfg.run.seeds;
  const std::size_t n_points = cfg.rate.n_grid.size();
  for (std::size_t n : cfg.rate.n_grid) {
    RatePoint p;
    p.n_total = n;
    p.n_target = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(n) / (1.0 + cfg.rate.source_ratio))));
    p.n_source = n - p.n_target;
    p.suboptimality.assign(seeds.size(), std::numeric_limits<double>::quiet_NaN());
    result.points.push_back(p);
  }
  std::vector<bool> failed(n_points * seeds.size(), false);
  std::mutex progress_mutex;
  std::size_t done = 0;
  parallel_for(n_points * seeds.size(), options.jobs, [&](std::size_t job) {
    const std::size_t i = job / seeds.size(), j = job % seeds.size();
    auto& point = result.points[i];
    const auto rep = derive_seed(replicate_seed(cfg.run.root_seed, seeds[j]), point.n_total);
    try {
      const auto target = collect(env.target, env.behavior, point.n_target, stream_seed(rep, Stream::TargetData),
                                  Domain::Target, env.behavior_id);
      const auto source = collect(env.source, env.behavior, point.n_source, stream_seed(rep, Stream::SourceData),
                                  Domain::Source, env.behavior_id);
      const auto aug = psi_exact_cdf(source, tables.source, tables.target, stream_seed(rep, Stream::Cdf));
      const auto train = mix(target, aug.data, stream_seed(rep, Stream::Mix));
      const auto policy = fit_policy(train, cfg.learner, stream_seed(rep, Stream::Learner));
      double total = 0.0;
      for (double f : result.f_grid) total += exact_conditioned_value(*policy, env.target, f);
      point.suboptimality[j] = env.optimal.value - total / static_cast<double>(result.f_grid.size());
    } catch (const std::exception&) {
      failed[job] = true;
    }
    if (options.progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      options.progress(++done, n_points * seeds.size());
    }
  });

  std::vector<double> log_n, log_median;
  bool positive = true;
  for (std::size_t i = 0; i < n_points; ++i) {
    auto& p = result.points[i];
    std::vector<double> ok;
    for (std::size_t j = 0; j < seeds.size(); ++j) {
      if (failed[i * seeds.size() + j]) {
        ++p.failures;
      } else {
        ok.push_back(p.suboptimality[j]);
      }
    }
    p.median = ok.empty() ? std::numeric_limits<double>::quiet_NaN() : median(ok);
    positive = positive && p.median > 0.0;
    log_n.push_back(std::log(static_cast<double>(p.n_total)));
    log_median.push_back(std::log(p.median));
  }
  result.slope = positive ? fit_line(log_n, log_median).slope : std::numeric_limits<double>::quiet_NaN();

  if (options.write_outputs && !cfg.run.output_dir.empty()) {
    prepare_output_dir(cfg.run.output_dir);
    const auto reports = cfg.run.output_dir / "reports";
    write_text(reports / "rate_study.csv", rate_csv(result));
    write_text(reports / "rate_study.json", rate_summary(result).dump(2) + "\n");
    write_text(reports / "schema.json", report_schema().dump(2) + "\n");
  }
  return result;
}

std::string rate_csv(const RateResult& result) {
  std::ostringstream out;
  out << "config_hash,tool_version,root_seed,n_total,n_target,n_source,seed,suboptimality\n";
  for (const auto& p : result.points) {
    for (std::size_t j = 0; j < p.suboptimality.size(); ++j) {
      out << result.config_hash << "," << kToolVersion << "," << result.root_seed << "," << p.n_total << ","
          << p.n_target << "," << p.n_source << "," << result.seeds[j] << "," << num(p.suboptimality[j]) << "\n";
    }
  }
  return out.str();
}

nlohmann::json rate_summary(const RateResult& result) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : result.points) {
    points.push_back({{"n_total", p.n_total},
                      {"n_target", p.n_target},
                      {"n_source", p.n_source},
                      {"median_suboptimality", jnum(p.median)},
                      {"failures", p.failures}});
  }
  return {{"provenance", provenance(result.config_hash, result.root_seed)},
          {"psi_kind", to_string(PsiKind::ExactCdf)},
          {"f_grid", result.f_grid},
          {"optimal_value", result.optimal_value},
          {"points", points},
          {"log_log_slope", jnum(result.slope)},
          {"monotone_non_increasing", result.monotone_non_increasing()}};
}

nlohmann::json provenance(const std::string& config_hash, std::uint64_t seed) {
  return {{"config_hash", config_hash}, {"tool_version", kToolVersion}, {"seed", seed}};
}

}  // namespace radt
