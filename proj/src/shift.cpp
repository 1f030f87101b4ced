#include "radt/shift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "radt/rng.hpp"

namespace radt {

std::string to_string(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::TransitionPerturb: return "transition_perturb";
    case ShiftKind::ActionNoise: return "action_noise";
    case ShiftKind::ActionRestrict: return "action_restrict";
    case ShiftKind::StateMerge: return "state_merge";
  }
  throw std::invalid_argument("unknown shift kind");
}

ShiftKind shift_kind_from_string(const std::string& name) {
  if (name == "transition_perturb") return ShiftKind::TransitionPerturb;
  if (name == "action_noise") return ShiftKind::ActionNoise;
  if (name == "action_restrict") return ShiftKind::ActionRestrict;
  if (name == "state_merge") return ShiftKind::StateMerge;
  throw std::invalid_argument("unknown shift kind '" + name + "'");
}

int restricted_action(const TabularMdp& mdp, std::uint64_t seed) {
  return static_cast<int>(Rng(derive_seed(seed, 1)).below(mdp.num_actions()));
}

int merged_state(const TabularMdp& mdp, std::uint64_t seed) {
  return static_cast<int>(Rng(derive_seed(seed, 2)).below(mdp.num_states()));
}

TabularMdp apply_shift(const TabularMdp& target, const ShiftSpec& spec) {
  const double m = spec.magnitude;
  if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("apply_shift: magnitude must be in [0,1]");
  const int S = target.num_states();
  const int A = target.num_actions();
  std::vector<double> p = target.transition();
  auto row = [&](int s, int a) { return p.data() + (static_cast<std::size_t>(s) * A + a) * S; };
  switch (spec.kind) {
    case ShiftKind::TransitionPerturb: {
      Rng rng(derive_seed(spec.seed, 0));
      std::vector<double> q(S);
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          double total = 0.0;
          for (int n = 0; n < S; ++n) total += q[n] = rng.exponential();
          auto* out = row(s, a);
          for (int n = 0; n < S; ++n) out[n] = (1.0 - m) * out[n] + m * (q[n] / total);
        }
      }
      break;
    }
    case ShiftKind::ActionNoise: {
      for (int s = 0; s < S; ++s) {
        std::vector<double> avg(S, 0.0);
        for (int b = 0; b < A; ++b) {
          const auto tr = target.row(s, b);
          for (int n = 0; n < S; ++n) avg[n] += tr[n] / A;
        }
        for (int a = 0; a < A; ++a) {
          auto* out = row(s, a);
          for (int n = 0; n < S; ++n) out[n] = (1.0 - m) * out[n] + m * avg[n];
        }
      }
      break;
    }
    case ShiftKind::ActionRestrict: {
      const int a = restricted_action(target, spec.seed);
      for (int s = 0; s < S; ++s) {
        auto* out = row(s, a);
        for (int n = 0; n < S; ++n) out[n] *= 1.0 - m;
        out[s] += m;
      }
      break;
    }
    case ShiftKind::StateMerge: {
      const int d = merged_state(target, spec.seed);
      const int neighbor = d > 0 ? d - 1 : std::min(1, S - 1);
      if (neighbor == d) break;
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          auto* out = row(s, a);
          const double moved = m * out[d];
          out[d] -= moved;
          out[neighbor] += moved;
        }
      }
      break;
    }
    default:
      throw std::invalid_argument("apply_shift: unknown kind");
  }
  if (m == 0.0) return target.with_transition(target.transition());
  // Exact renormalization keeps rows within the 1e-12 row-sum tolerance.
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      auto* out = row(s, a);
      double total = 0.0;
      for (int n = 0; n < S; ++n) total += out[n];
      for (int n = 0; n < S; ++n) out[n] /= total;
    }
  }
  return target.with_transition(std::move(p));
}

double DynamicsGap::max_tv() const {
  return total_variation.empty() ? 0.0 : *std::max_element(total_variation.begin(), total_variation.end());
}

DynamicsGap dynamics_gap(const TabularMdp& source, const TabularMdp& target) {
  if (source.num_states() != target.num_states() || source.num_actions() != target.num_actions()) {
    throw ShapeError("dynamics_gap: shape mismatch");
  }
  const int S = source.num_states();
  const int A = source.num_actions();
  DynamicsGap gap;
  gap.num_states = S;
  gap.num_actions = A;
  gap.total_variation.assign(static_cast<std::size_t>(S) * A, 0.0);
  gap.max_log_ratio.assign(static_cast<std::size_t>(S) * A, 0.0);
  gap.support_mismatch.assign(static_cast<std::size_t>(S) * A, false);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const auto ps = source.row(s, a);
      const auto pt = target.row(s, a);
      double tv = 0.0;
      double max_lr = 0.0;
      bool shared = false;
      bool mismatch = false;
      for (int n = 0; n < S; ++n) {
        tv += std::abs(ps[n] - pt[n]);
        if (ps[n] > 0.0 && pt[n] > 0.0) {
          shared = true;
          max_lr = std::max(max_lr, std::abs(std::log(pt[n]) - std::log(ps[n])));
        } else if (ps[n] > 0.0 || pt[n] > 0.0) {
          mismatch = true;
        }
      }
      const auto i = static_cast<std::size_t>(s) * A + a;
      gap.total_variation[i] = 0.5 * tv;
      gap.max_log_ratio[i] = shared ? max_lr : std::numeric_limits<double>::infinity();
      gap.support_mismatch[i] = mismatch;
    }
  }
  return gap;
}

}  // namespace radt
