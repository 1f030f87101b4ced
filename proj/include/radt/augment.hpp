#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "radt/classifiers.hpp"
#include "radt/data.hpp"
#include "radt/mdp.hpp"

namespace radt {

enum class Estimator { ExactDP, FittedValue, TrajectoryEmpirical };
enum class PsiKind { Identity, Dara, MeanVariance, MeanVarianceEmpirical, ExactCdf };

std::string to_string(Estimator estimator);
Estimator estimator_from_string(const std::string& name);
std::string to_string(PsiKind kind);
PsiKind psi_kind_from_string(const std::string& name);

/// Per-(t,s,a) mean and standard deviation of the return-to-go. When not time
/// indexed a single slice (t = 0) covers every timestep.
struct ReturnStats {
  int slices = 1;
  int num_states = 0;
  int num_actions = 0;
  bool time_indexed = true;
  Estimator estimator = Estimator::ExactDP;
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<double> count;
  std::vector<bool> supported;
  /// Trajectory-level return moments, used for unsupported entries.
  double global_mu = 0.0;
  double global_sigma = 0.0;

  std::size_t index(int t, int s, int a) const {
    const int slice = time_indexed ? t : 0;
    return (static_cast<std::size_t>(slice) * num_states + s) * num_actions + a;
  }
};

/// Ratio clip for the mean-variance transform: the std ratio is clamped to
/// [theta_lo, theta_hi] and the source std is floored at sigma_floor.
struct ClipConfig {
  double theta_lo = 0.9;
  double theta_hi = 1.25;
  double sigma_floor = 1e-6;

  void validate() const;
};

struct StatsConfig {
  Estimator estimator = Estimator::FittedValue;
  int n_action_samples = 10;
  double temperature = 1.0;
  bool time_indexed = true;
  std::uint64_t seed = 0;
};

/// Exact moments of the behavior policy's return-to-go laws.
ReturnStats exact_return_stats(const TabularMdp& mdp, const StationaryPolicy& behavior,
                               bool time_indexed = true);
/// Empirical-MDP value estimate: Q from backward DP on transition counts under
/// the empirical behavior policy; sigma(t,s) is the std of Q over actions
/// sampled from softmax(Q / temperature).
ReturnStats fitted_value_stats(const Dataset& ds, const StatsConfig& cfg);
/// Per-(t,s,a) sample moments of the observed returns-to-go.
ReturnStats empirical_return_stats(const Dataset& ds, bool time_indexed = true);

/// The empirical MDP Q table [t][s][a] used by fitted_value_stats, with
/// visited flags.
struct EmpiricalQ {
  std::vector<double> q;
  std::vector<bool> visited;
};
EmpiricalQ empirical_q_values(const Dataset& ds);

/// Pools a time-indexed table over t, weighting each slice by its count.
ReturnStats collapse_over_time(const ReturnStats& stats);

struct AugmentDiagnostics {
  std::size_t steps = 0;
  std::size_t fallback_steps = 0;   // unsupported stats lookups
  std::size_t clipped_steps = 0;    // std ratio outside the clip range
  std::size_t delta_r_misses = 0;   // unsupported transitions in a DARA table

  double clip_rate() const { return steps ? static_cast<double>(clipped_steps) / steps : 0.0; }
};

/// A dataset with transformed returns-to-go. Steps are copied bit-exactly from
/// the input; only rtg differs.
struct AugmentedDataset {
  Dataset data;
  PsiKind kind = PsiKind::Identity;
  nlohmann::json params = nlohmann::json::object();
  std::string provenance;
  AugmentDiagnostics diagnostics;
};

AugmentedDataset psi_identity(const Dataset& ds);

/// rtg_t = sum_{h>=t} r_h + eta * sum_{h>=t} dr(s_h, a_h, s_{h+1}).
AugmentedDataset psi_dara(const Dataset& ds, const DeltaRTable& dr, double eta);

/// rtg_t = (g_t - mu_S) * clamp(sigma_T / max(sigma_S, floor), lo, hi) + mu_T.
AugmentedDataset psi_mean_variance(const Dataset& ds, const ReturnStats& source,
                                   const ReturnStats& target, const ClipConfig& clip,
                                   PsiKind kind = PsiKind::MeanVariance);

/// Quantile transport per (t,s,a): u is drawn uniformly inside the source atom
/// of g_t, and the new rtg is the smallest target atom whose CDF reaches u.
AugmentedDataset psi_exact_cdf(const Dataset& ds, const ReturnTable& source_returns,
                               const ReturnTable& target_returns, std::uint64_t seed);

/// Transport plan of the randomized quantile map between two atom vectors on
/// the same lattice: plan[j][k] = P(source atom j is sent to target atom k),
/// unnormalized by the source mass (row j sums to source[j]).
std::vector<std::vector<double>> quantile_transport(std::span<const double> source,
                                                    std::span<const double> target);

struct AugmentInputs {
  const DeltaRTable* delta_r = nullptr;
  const ReturnStats* source_stats = nullptr;
  const ReturnStats* target_stats = nullptr;
  const ReturnTable* source_returns = nullptr;
  const ReturnTable* target_returns = nullptr;
  double eta = 0.1;
  ClipConfig clip;
  std::uint64_t seed = 0;
};

AugmentedDataset augment(const Dataset& ds, PsiKind kind, const AugmentInputs& inputs);

/// Ships the augmentation record into data.metadata["augmentation"].
Dataset with_augmentation_header(const AugmentedDataset& aug);

}  // namespace radt
