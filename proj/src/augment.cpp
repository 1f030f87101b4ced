#include "radt/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "radt/rng.hpp"

namespace radt {

std::string to_string(Estimator estimator) {
  switch (estimator) {
    case Estimator::ExactDP: return "exact_dp";
    case Estimator::FittedValue: return "fitted_value";
    case Estimator::TrajectoryEmpirical: return "trajectory_empirical";
  }
  throw std::invalid_argument("unknown estimator");
}

Estimator estimator_from_string(const std::string& name) {
  if (name == "exact_dp") return Estimator::ExactDP;
  if (name == "fitted_value") return Estimator::FittedValue;
  if (name == "trajectory_empirical") return Estimator::TrajectoryEmpirical;
  throw std::invalid_argument("unknown estimator '" + name + "'");
}

std::string to_string(PsiKind kind) {
  switch (kind) {
    case PsiKind::Identity: return "identity";
    case PsiKind::Dara: return "dara";
    case PsiKind::MeanVariance: return "mv";
    case PsiKind::MeanVarianceEmpirical: return "mv_empirical";
    case PsiKind::ExactCdf: return "exact_cdf";
  }
  throw std::invalid_argument("unknown psi kind");
}

PsiKind psi_kind_from_string(const std::string& name) {
  if (name == "identity") return PsiKind::Identity;
  if (name == "dara") return PsiKind::Dara;
  if (name == "mv") return PsiKind::MeanVariance;
  if (name == "mv_empirical") return PsiKind::MeanVarianceEmpirical;
  if (name == "exact_cdf") return PsiKind::ExactCdf;
  throw std::invalid_argument("unknown psi kind '" + name + "'");
}

void ClipConfig::validate() const {
  if (!(theta_lo > 0.0)) throw std::invalid_argument("clip: theta_lo must be positive");
  if (!(theta_hi >= theta_lo)) throw std::invalid_argument("clip: theta_hi must be >= theta_lo");
  if (!(sigma_floor >= 0.0)) throw std::invalid_argument("clip: sigma_floor must be nonnegative");
}

namespace {

ReturnStats empty_stats(int slices, int S, int A, bool time_indexed, Estimator estimator) {
  ReturnStats stats;
  stats.slices = slices;
  stats.num_states = S;
  stats.num_actions = A;
  stats.time_indexed = time_indexed;
  stats.estimator = estimator;
  const auto n = static_cast<std::size_t>(slices) * S * A;
  stats.mu.assign(n, 0.0);
  stats.sigma.assign(n, 0.0);
  stats.count.assign(n, 0.0);
  stats.supported.assign(n, false);
  return stats;
}

void trajectory_return_moments(const Dataset& ds, ReturnStats& stats) {
  double sum = 0.0;
  double sq = 0.0;
  for (const auto& traj : ds.trajectories) {
    const double g = traj.total_return();
    sum += g;
    sq += g * g;
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, ds.size()));
  stats.global_mu = sum / n;
  stats.global_sigma = std::sqrt(std::max(0.0, sq / n - stats.global_mu * stats.global_mu));
}

}  // namespace

ReturnStats collapse_over_time(const ReturnStats& stats) {
  if (!stats.time_indexed) return stats;
  const int S = stats.num_states;
  const int A = stats.num_actions;
  ReturnStats out = empty_stats(1, S, A, false, stats.estimator);
  out.global_mu = stats.global_mu;
  out.global_sigma = stats.global_sigma;
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      double w = 0.0;
      double m1 = 0.0;
      double m2 = 0.0;
      for (int t = 0; t < stats.slices; ++t) {
        const auto i = stats.index(t, s, a);
        if (!stats.supported[i] || stats.count[i] <= 0.0) continue;
        w += stats.count[i];
        m1 += stats.count[i] * stats.mu[i];
        m2 += stats.count[i] * (stats.sigma[i] * stats.sigma[i] + stats.mu[i] * stats.mu[i]);
      }
      const auto j = out.index(0, s, a);
      out.count[j] = w;
      if (w > 0.0) {
        out.mu[j] = m1 / w;
        out.sigma[j] = std::sqrt(std::max(0.0, m2 / w - out.mu[j] * out.mu[j]));
        out.supported[j] = true;
      }
    }
  }
  return out;
}

ReturnStats exact_return_stats(const TabularMdp& mdp, const StationaryPolicy& behavior, bool time_indexed) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const int H = mdp.horizon();
  const auto returns = return_table(mdp, behavior);
  const auto occupancy = state_occupancy(mdp, behavior);
  ReturnStats stats = empty_stats(H, S, A, true, Estimator::ExactDP);
  for (int t = 0; t < H; ++t) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const auto i = stats.index(t, s, a);
        stats.mu[i] = returns.mean(t, s, a);
        stats.sigma[i] = std::sqrt(returns.variance(t, s, a));
        stats.count[i] = occupancy[static_cast<std::size_t>(t) * S + s] * behavior.prob(t, s, a);
        stats.supported[i] = true;
      }
    }
  }
  double m1 = 0.0;
  double m2 = 0.0;
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const double w = mdp.initial_dist()[s] * behavior.prob(0, s, a);
      const double mu = returns.mean(0, s, a);
      m1 += w * mu;
      m2 += w * (returns.variance(0, s, a) + mu * mu);
    }
  }
  stats.global_mu = m1;
  stats.global_sigma = std::sqrt(std::max(0.0, m2 - m1 * m1));
  return time_indexed ? stats : collapse_over_time(stats);
}

ReturnStats empirical_return_stats(const Dataset& ds, bool time_indexed) {
  const int S = ds.num_states;
  const int A = ds.num_actions;
  const int H = ds.horizon;
  ReturnStats stats = empty_stats(time_indexed ? H : 1, S, A, time_indexed, Estimator::TrajectoryEmpirical);
  std::vector<double> mean(stats.mu.size(), 0.0);
  std::vector<double> m2(stats.mu.size(), 0.0);
  for (const auto& traj : ds.trajectories) {
    const auto g = returns_to_go(traj.steps);
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const auto i = stats.index(static_cast<int>(t), traj.steps[t].state, traj.steps[t].action);
      stats.count[i] += 1.0;
      const double delta = g[t] - mean[i];
      mean[i] += delta / stats.count[i];
      m2[i] += delta * (g[t] - mean[i]);
    }
  }
  for (std::size_t i = 0; i < mean.size(); ++i) {
    if (stats.count[i] <= 0.0) continue;
    stats.supported[i] = true;
    stats.mu[i] = mean[i];
    stats.sigma[i] = std::sqrt(std::max(0.0, m2[i] / stats.count[i]));
  }
  trajectory_return_moments(ds, stats);
  return stats;
}

EmpiricalQ empirical_q_values(const Dataset& ds) {
  const int S = ds.num_states;
  const int A = ds.num_actions;
  const int H = ds.horizon;
  const auto nsa = static_cast<std::size_t>(S) * A;
  std::vector<double> n_tsa(static_cast<std::size_t>(H) * nsa, 0.0);
  std::vector<double> n_sa(nsa, 0.0);
  std::vector<double> n_sas(nsa * S, 0.0);
  std::vector<double> reward_sum(nsa, 0.0);
  for (const auto& traj : ds.trajectories) {
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const auto& step = traj.steps[t];
      const auto sa = static_cast<std::size_t>(step.state) * A + step.action;
      n_tsa[t * nsa + sa] += 1.0;
      n_sa[sa] += 1.0;
      n_sas[sa * S + traj.next_state(t)] += 1.0;
      reward_sum[sa] += step.reward;
    }
  }
  EmpiricalQ out;
  out.q.assign(static_cast<std::size_t>(H) * nsa, 0.0);
  out.visited.assign(out.q.size(), false);
  std::vector<double> v_next(S, 0.0);
  for (int t = H - 1; t >= 0; --t) {
    std::vector<double> v(S, 0.0);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const auto sa = static_cast<std::size_t>(s) * A + a;
        if (n_sa[sa] <= 0.0) continue;
        double q = reward_sum[sa] / n_sa[sa];
        if (t + 1 < H) {
          for (int n = 0; n < S; ++n) q += n_sas[sa * S + n] / n_sa[sa] * v_next[n];
        }
        out.q[static_cast<std::size_t>(t) * nsa + sa] = q;
        out.visited[static_cast<std::size_t>(t) * nsa + sa] = true;
      }
      // Empirical behavior at (t, s); states unseen at t fall back to the
      // time-pooled behavior.
      const double* counts = n_tsa.data() + static_cast<std::size_t>(t) * nsa + static_cast<std::size_t>(s) * A;
      double total = std::accumulate(counts, counts + A, 0.0);
      if (total <= 0.0) {
        counts = n_sa.data() + static_cast<std::size_t>(s) * A;
        total = std::accumulate(counts, counts + A, 0.0);
      }
      if (total <= 0.0) continue;
      for (int a = 0; a < A; ++a) v[s] += counts[a] / total * out.q[static_cast<std::size_t>(t) * nsa + static_cast<std::size_t>(s) * A + a];
    }
    v_next = std::move(v);
  }
  return out;
}

ReturnStats fitted_value_stats(const Dataset& ds, const StatsConfig& cfg) {
  if (cfg.n_action_samples < 1) throw std::invalid_argument("fitted_value_stats: n_action_samples must be >= 1");
  if (!(cfg.temperature > 0.0)) throw std::invalid_argument("fitted_value_stats: temperature must be positive");
  const int S = ds.num_states;
  const int A = ds.num_actions;
  const int H = ds.horizon;
  const auto empirical = empirical_q_values(ds);
  ReturnStats stats = empty_stats(H, S, A, true, Estimator::FittedValue);
  for (const auto& traj : ds.trajectories) {
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      stats.count[stats.index(static_cast<int>(t), traj.steps[t].state, traj.steps[t].action)] += 1.0;
    }
  }
  std::vector<double> weights(A);
  std::vector<double> sampled(cfg.n_action_samples);
  for (int t = 0; t < H; ++t) {
    for (int s = 0; s < S; ++s) {
      const auto base = stats.index(t, s, 0);
      double qmax = -INFINITY;
      for (int a = 0; a < A; ++a) {
        if (empirical.visited[base + a]) qmax = std::max(qmax, empirical.q[base + a]);
      }
      if (!std::isfinite(qmax)) continue;
      for (int a = 0; a < A; ++a) {
        weights[a] = empirical.visited[base + a] ? std::exp((empirical.q[base + a] - qmax) / cfg.temperature) : 0.0;
      }
      Rng rng(derive_seed(derive_seed(cfg.seed, static_cast<std::uint64_t>(t)), static_cast<std::uint64_t>(s)));
      double mean = 0.0;
      for (auto& q : sampled) {
        q = empirical.q[base + rng.categorical(weights)];
        mean += q;
      }
      mean /= static_cast<double>(sampled.size());
      double var = 0.0;
      for (double q : sampled) var += (q - mean) * (q - mean);
      const double sigma = std::sqrt(var / static_cast<double>(sampled.size()));
      for (int a = 0; a < A; ++a) {
        if (!empirical.visited[base + a]) continue;
        stats.mu[base + a] = empirical.q[base + a];
        stats.sigma[base + a] = sigma;
        stats.supported[base + a] = true;
      }
    }
  }
  trajectory_return_moments(ds, stats);
  return cfg.time_indexed ? stats : collapse_over_time(stats);
}

namespace {

AugmentedDataset start_augmented(const Dataset& ds, PsiKind kind) {
  AugmentedDataset out;
  out.data = ds;
  out.kind = kind;
  return out;
}

void finish_provenance(AugmentedDataset& aug, const Dataset& input) {
  const std::string key = to_string(aug.kind) + "|" + aug.params.dump() + "|" + dataset_to_jsonl(input);
  aug.provenance = hex16(fnv1a64(key));
}

struct StatsLookup {
  double mu;
  double sigma;
  bool fallback;
};

StatsLookup lookup(const ReturnStats& stats, int t, int s, int a) {
  const auto i = stats.index(t, s, a);
  if (i < stats.supported.size() && stats.supported[i]) return {stats.mu[i], stats.sigma[i], false};
  return {stats.global_mu, stats.global_sigma, true};
}

}  // namespace

AugmentedDataset psi_identity(const Dataset& ds) {
  auto out = start_augmented(ds, PsiKind::Identity);
  out.diagnostics.steps = ds.num_transitions();
  finish_provenance(out, ds);
  return out;
}

AugmentedDataset psi_dara(const Dataset& ds, const DeltaRTable& dr, double eta) {
  if (!(eta >= 0.0)) throw std::invalid_argument("psi_dara: eta must be nonnegative");
  if (dr.num_states != ds.num_states || dr.num_actions != ds.num_actions) {
    throw ShapeError("psi_dara: delta_r table does not match dataset");
  }
  auto out = start_augmented(ds, PsiKind::Dara);
  out.params = {{"eta", eta}, {"clamp", dr.clamp_bound}};
  for (auto& traj : out.data.trajectories) {
    const std::size_t H = traj.steps.size();
    double reward_acc = 0.0;
    double correction_acc = 0.0;
    for (std::size_t t = H; t-- > 0;) {
      const auto& step = traj.steps[t];
      const int next = traj.next_state(t);
      reward_acc += step.reward;
      if (dr.is_supported(step.state, step.action, next)) {
        correction_acc += dr.at(step.state, step.action, next);
      } else {
        ++out.diagnostics.delta_r_misses;
      }
      traj.rtg[t] = reward_acc + eta * correction_acc;
    }
    out.diagnostics.steps += H;
  }
  finish_provenance(out, ds);
  return out;
}

AugmentedDataset psi_mean_variance(const Dataset& ds, const ReturnStats& source,
                                   const ReturnStats& target, const ClipConfig& clip, PsiKind kind) {
  clip.validate();
  for (const auto* stats : {&source, &target}) {
    if (stats->num_states != ds.num_states || stats->num_actions != ds.num_actions) {
      throw ShapeError("psi_mean_variance: stats do not match dataset");
    }
    if (stats->time_indexed && stats->slices != ds.horizon) {
      throw ShapeError("psi_mean_variance: time-indexed stats need one slice per timestep");
    }
  }
  auto out = start_augmented(ds, kind);
  out.params = {{"theta_lo", clip.theta_lo},
                {"theta_hi", clip.theta_hi},
                {"sigma_floor", clip.sigma_floor},
                {"source_estimator", to_string(source.estimator)},
                {"target_estimator", to_string(target.estimator)},
                {"time_indexed", source.time_indexed && target.time_indexed}};
  for (auto& traj : out.data.trajectories) {
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const auto& step = traj.steps[t];
      auto src = lookup(source, static_cast<int>(t), step.state, step.action);
      auto tgt = lookup(target, static_cast<int>(t), step.state, step.action);
      // Both sides fall back together so a missing entry on one side never
      // pairs local moments with global ones.
      if (src.fallback || tgt.fallback) {
        ++out.diagnostics.fallback_steps;
        src = {source.global_mu, source.global_sigma, true};
        tgt = {target.global_mu, target.global_sigma, true};
      }
      const double raw = tgt.sigma / std::max(src.sigma, clip.sigma_floor);
      const double ratio = std::clamp(raw, clip.theta_lo, clip.theta_hi);
      if (ratio != raw) ++out.diagnostics.clipped_steps;
      traj.rtg[t] = (traj.rtg[t] - src.mu) * ratio + tgt.mu;
    }
    out.diagnostics.steps += traj.steps.size();
  }
  finish_provenance(out, ds);
  return out;
}

std::vector<std::vector<double>> quantile_transport(std::span<const double> source,
                                                    std::span<const double> target) {
  if (source.size() != target.size()) throw ShapeError("quantile_transport: lattice sizes differ");
  const std::size_t n = source.size();
  std::vector<std::vector<double>> plan(n, std::vector<double>(n, 0.0));
  double src_lo = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double src_hi = src_lo + source[j];
    if (source[j] > 0.0) {
      double tgt_lo = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double tgt_hi = tgt_lo + target[k];
        if (target[k] > 0.0) {
          const double overlap = std::min(src_hi, tgt_hi) - std::max(src_lo, tgt_lo);
          if (overlap > 0.0) plan[j][k] = overlap;
        }
        tgt_lo = tgt_hi;
      }
    }
    src_lo = src_hi;
  }
  return plan;
}

AugmentedDataset psi_exact_cdf(const Dataset& ds, const ReturnTable& source_returns,
                               const ReturnTable& target_returns, std::uint64_t seed) {
  if (source_returns.lo_units() != target_returns.lo_units() ||
      source_returns.hi_units() != target_returns.hi_units() || source_returns.grid() != target_returns.grid()) {
    throw ShapeError("psi_exact_cdf: source and target laws live on different lattices");
  }
  if (source_returns.horizon() != ds.horizon || source_returns.num_states() != ds.num_states ||
      source_returns.num_actions() != ds.num_actions) {
    throw ShapeError("psi_exact_cdf: return tables do not match dataset");
  }
  auto out = start_augmented(ds, PsiKind::ExactCdf);
  out.params = {{"seed", seed}};
  const double grid = source_returns.grid();
  const std::int64_t lo = source_returns.lo_units();
  for (std::size_t i = 0; i < out.data.trajectories.size(); ++i) {
    auto& traj = out.data.trajectories[i];
    Rng rng(derive_seed(seed, i));
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const auto& step = traj.steps[t];
      const int ti = static_cast<int>(t);
      const auto units = static_cast<std::int64_t>(std::llround(traj.rtg[t] / grid));
      const auto src = source_returns.masses(ti, step.state, step.action);
      const auto tgt = target_returns.masses(ti, step.state, step.action);
      const auto j = units - lo;
      if (j < 0 || j >= static_cast<std::int64_t>(src.size()) || src[static_cast<std::size_t>(j)] <= 0.0) {
        throw std::domain_error("psi_exact_cdf: return " + std::to_string(traj.rtg[t]) +
                                " has zero source probability at (t=" + std::to_string(t) +
                                ", s=" + std::to_string(step.state) + ", a=" + std::to_string(step.action) + ")");
      }
      double below = 0.0;
      for (std::int64_t k = 0; k < j; ++k) below += src[static_cast<std::size_t>(k)];
      const double u = below + rng.uniform_pos() * src[static_cast<std::size_t>(j)];
      double acc = 0.0;
      std::size_t chosen = tgt.size();
      std::size_t last_positive = tgt.size();
      for (std::size_t k = 0; k < tgt.size(); ++k) {
        if (tgt[k] <= 0.0) continue;
        acc += tgt[k];
        last_positive = k;
        if (acc >= u) {
          chosen = k;
          break;
        }
      }
      if (chosen == tgt.size()) chosen = last_positive;  // u beyond the rounded total
      if (chosen == tgt.size()) {
        throw std::domain_error("psi_exact_cdf: empty target law at t=" + std::to_string(t));
      }
      traj.rtg[t] = static_cast<double>(lo + static_cast<std::int64_t>(chosen)) * grid;
    }
    out.diagnostics.steps += traj.steps.size();
  }
  finish_provenance(out, ds);
  return out;
}

AugmentedDataset augment(const Dataset& ds, PsiKind kind, const AugmentInputs& inputs) {
  switch (kind) {
    case PsiKind::Identity:
      return psi_identity(ds);
    case PsiKind::Dara:
      if (!inputs.delta_r) throw std::invalid_argument("augment: dara needs a delta_r table");
      return psi_dara(ds, *inputs.delta_r, inputs.eta);
    case PsiKind::MeanVariance:
    case PsiKind::MeanVarianceEmpirical:
      if (!inputs.source_stats || !inputs.target_stats) {
        throw std::invalid_argument("augment: mean-variance needs source and target stats");
      }
      return psi_mean_variance(ds, *inputs.source_stats, *inputs.target_stats, inputs.clip, kind);
    case PsiKind::ExactCdf:
      if (!inputs.source_returns || !inputs.target_returns) {
        throw std::invalid_argument("augment: exact_cdf needs source and target return tables");
      }
      return psi_exact_cdf(ds, *inputs.source_returns, *inputs.target_returns, inputs.seed);
  }
  throw std::invalid_argument("augment: unknown psi kind");
}

Dataset with_augmentation_header(const AugmentedDataset& aug) {
  Dataset out = aug.data;
  out.metadata["augmentation"] = {{"psi_kind", to_string(aug.kind)},
                                  {"params", aug.params},
                                  {"provenance", aug.provenance},
                                  {"diagnostics",
                                   {{"steps", aug.diagnostics.steps},
                                    {"fallback_steps", aug.diagnostics.fallback_steps},
                                    {"clipped_steps", aug.diagnostics.clipped_steps},
                                    {"delta_r_misses", aug.diagnostics.delta_r_misses}}}};
  return out;
}

}  // namespace radt
