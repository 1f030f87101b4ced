#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "radt/mdp.hpp"

namespace radt {

enum class ShiftKind { TransitionPerturb, ActionNoise, ActionRestrict, StateMerge };

std::string to_string(ShiftKind kind);
ShiftKind shift_kind_from_string(const std::string& name);

/// Parameterized dynamics shift. `magnitude` in [0,1]; 0 leaves dynamics unchanged.
struct ShiftSpec {
  ShiftKind kind = ShiftKind::TransitionPerturb;
  double magnitude = 0.0;
  std::uint64_t seed = 0;
};

/// Builds the source MDP from the target. Only the transition tensor changes:
///  - TransitionPerturb: p = (1-m) p_target + m q, q a seeded random row per (s,a).
///  - ActionNoise: the executed action is replaced by a uniform one w.p. m.
///  - ActionRestrict: a seed-chosen action is a no-op (self-loop) w.p. m.
///  - StateMerge: a fraction m of the mass flowing into a seed-chosen state is
///    redirected to its neighbor (the state below it, or above it for state 0).
TabularMdp apply_shift(const TabularMdp& target, const ShiftSpec& spec);

/// Action that ActionRestrict disables for this (mdp, seed).
int restricted_action(const TabularMdp& mdp, std::uint64_t seed);
/// State that StateMerge empties for this (mdp, seed).
int merged_state(const TabularMdp& mdp, std::uint64_t seed);

struct DynamicsGap {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> total_variation;  // [s][a]
  /// Max |log p_target/p_source| over next states supported by both rows;
  /// +inf when the rows share no support.
  std::vector<double> max_log_ratio;  // [s][a]
  /// True when some next state is supported by exactly one of the rows.
  std::vector<bool> support_mismatch;  // [s][a]

  double tv(int s, int a) const { return total_variation[static_cast<std::size_t>(s) * num_actions + a]; }
  double log_ratio(int s, int a) const { return max_log_ratio[static_cast<std::size_t>(s) * num_actions + a]; }
  double max_tv() const;
};

DynamicsGap dynamics_gap(const TabularMdp& source, const TabularMdp& target);

}  // namespace radt
