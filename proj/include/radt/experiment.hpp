#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "radt/augment.hpp"
#include "radt/config.hpp"
#include "radt/eval.hpp"
#include "radt/mdp.hpp"
#include "radt/rcsl.hpp"

namespace radt {

inline constexpr const char* kToolVersion = RADT_VERSION;

enum class Cell { T1, T10, Identity, Dara, MeanVariance, MeanVarianceEmpirical, ExactCdf };

inline constexpr Cell kAllCells[] = {Cell::T1,           Cell::T10,          Cell::Identity,
                                     Cell::Dara,         Cell::MeanVariance, Cell::MeanVarianceEmpirical,
                                     Cell::ExactCdf};

std::string cell_name(Cell cell);
Cell cell_from_name(const std::string& name);
/// The return transform a cell applies to the source data ("none" for the
/// target-only cells).
std::string cell_psi(Cell cell);

/// Sub-seed streams of one replicate, derive_seed(replicate_seed, stream).
enum class Stream : std::uint64_t {
  TargetData = 1,
  Mix = 2,
  SourceData = 3,
  Classifier = 4,
  Cdf = 5,
  Stats = 6,
  Learner = 7,
  Eval = 8,
};

std::uint64_t replicate_seed(std::uint64_t root_seed, std::uint64_t seed);
std::uint64_t stream_seed(std::uint64_t replicate, Stream stream);

/// Target, source and behavior policy described by a config.
struct Environment {
  TabularMdp target;
  TabularMdp source;
  StationaryPolicy behavior;
  std::string behavior_id;
  OptimalSolution optimal;
};

Environment build_environment(const ExperimentConfig& cfg);

/// The {0.5, 0.9, 1.0} quantiles of the target behavior return law, unique
/// and sorted.
std::vector<double> auto_f_grid(const Environment& env);
std::vector<double> resolve_f_grid(const ExperimentConfig& cfg, const Environment& env);

/// Trains the configured learner.
std::unique_ptr<ReturnConditionedPolicy> fit_policy(const Dataset& ds, const LearnerConfig& cfg,
                                                    std::uint64_t seed);

struct CellResult {
  Cell cell = Cell::T1;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  EvalReport report;
  AugmentDiagnostics diagnostics;
  /// Mean over the f grid of the exact (or Monte Carlo) target return.
  double headline = 0.0;
};

struct CellSummary {
  Cell cell = Cell::T1;
  MeanSe headline;
  std::size_t failures = 0;
};

struct MatrixResult {
  std::string config_hash;
  std::uint64_t root_seed = 0;
  std::vector<double> f_grid;
  double optimal_value = 0.0;
  std::vector<Cell> cells;
  /// Seed-major, cells in the configured order.
  std::vector<CellResult> results;

  std::vector<double> headlines(Cell cell) const;
  CellSummary summary(Cell cell) const;
};

struct RunOptions {
  int jobs = 1;
  /// Write reports (and artifacts if configured) under run.output_dir.
  bool write_outputs = true;
  /// Called once per finished replicate, in seed order.
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Every configured cell for every seed. One replicate (all cells of one
/// seed) is a unit of work; results are committed in seed order so the
/// report files do not depend on `jobs`.
MatrixResult run_matrix(const ExperimentConfig& cfg, const RunOptions& options = {});

/// All cells of one replicate. Exposed for tests.
std::vector<CellResult> run_replicate(const ExperimentConfig& cfg, const Environment& env,
                                      std::span<const double> f_grid, std::span<const Cell> cells,
                                      std::uint64_t seed);

/// CSV with one row per cell x seed x f.
std::string matrix_csv(const MatrixResult& result);
nlohmann::json matrix_summary(const MatrixResult& result);
/// Column documentation for the matrix and rate-study CSVs.
nlohmann::json report_schema();

struct RatePoint {
  std::size_t n_total = 0;
  std::size_t n_target = 0;
  std::size_t n_source = 0;
  std::vector<double> suboptimality;  // one per seed
  double median = 0.0;
  std::size_t failures = 0;
};

struct RateResult {
  std::string config_hash;
  std::uint64_t root_seed = 0;
  std::vector<double> f_grid;
  double optimal_value = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<RatePoint> points;
  /// Least-squares slope of log(median) against log(N); NaN when a median is
  /// not positive.
  double slope = 0.0;

  bool monotone_non_increasing() const;
};

/// Median suboptimality of RADT-ExactCDF over the seeds for every total size
/// on rate.n_grid, with n_target = round(N / (1 + ratio)) and the rest source.
RateResult rate_study(const ExperimentConfig& cfg, const RunOptions& options = {});

std::string rate_csv(const RateResult& result);
nlohmann::json rate_summary(const RateResult& result);

/// {config_hash, tool_version, seed} stamped into every output.
nlohmann::json provenance(const std::string& config_hash, std::uint64_t seed);

}  // namespace radt
