#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace radt {

/// Raised when array shapes of two objects disagree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Finite-horizon tabular MDP. Timesteps are 0-based: t in [0, horizon).
///
/// Every reward is an integer multiple of `reward_grid`, so returns-to-go live
/// on an exact integer lattice ("return units") and their distributions can be
/// represented without binning error.
class TabularMdp {
 public:
  TabularMdp(int num_states, int num_actions, int horizon, double reward_grid,
             std::vector<double> transition, std::vector<double> reward,
             std::vector<double> initial_dist);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int horizon() const { return horizon_; }
  double reward_grid() const { return reward_grid_; }

  double p(int s, int a, int next) const {
    return transition_[(static_cast<std::size_t>(s) * num_actions_ + a) * num_states_ + next];
  }
  std::span<const double> row(int s, int a) const {
    return {transition_.data() + (static_cast<std::size_t>(s) * num_actions_ + a) * num_states_,
            static_cast<std::size_t>(num_states_)};
  }
  double r(int s, int a) const { return reward_[static_cast<std::size_t>(s) * num_actions_ + a]; }
  /// Reward as an integer count of reward_grid.
  std::int64_t reward_units(int s, int a) const {
    return reward_units_[static_cast<std::size_t>(s) * num_actions_ + a];
  }
  std::int64_t min_reward_units() const;
  std::int64_t max_reward_units() const;

  const std::vector<double>& transition() const { return transition_; }
  const std::vector<double>& reward() const { return reward_; }
  const std::vector<double>& initial_dist() const { return initial_dist_; }

  bool same_shape(const TabularMdp& other) const {
    return num_states_ == other.num_states_ && num_actions_ == other.num_actions_ &&
           horizon_ == other.horizon_;
  }

  /// Copy with a different transition tensor; everything else shared bit-exactly.
  TabularMdp with_transition(std::vector<double> transition) const;

 private:
  int num_states_;
  int num_actions_;
  int horizon_;
  double reward_grid_;
  std::vector<double> transition_;
  std::vector<double> reward_;
  std::vector<double> initial_dist_;
  std::vector<std::int64_t> reward_units_;
};

/// Time-indexed policy table probs[t][s][a].
class StationaryPolicy {
 public:
  StationaryPolicy(int horizon, int num_states, int num_actions, std::vector<double> probs);

  static StationaryPolicy uniform(int horizon, int num_states, int num_actions);
  /// actions[t * num_states + s] is the chosen action.
  static StationaryPolicy deterministic(int horizon, int num_states, int num_actions,
                                        std::span<const int> actions);
  /// Mixes `greedy` with the uniform policy: (1 - epsilon) * greedy + epsilon * uniform.
  static StationaryPolicy epsilon_greedy(const StationaryPolicy& greedy, double epsilon);

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  double prob(int t, int s, int a) const { return probs_[index(t, s) + a]; }
  std::span<const double> row(int t, int s) const {
    return {probs_.data() + index(t, s), static_cast<std::size_t>(num_actions_)};
  }
  const std::vector<double>& probs() const { return probs_; }

  void check_shape(const TabularMdp& mdp) const;

 private:
  std::size_t index(int t, int s) const {
    return (static_cast<std::size_t>(t) * num_states_ + s) * num_actions_;
  }
  int horizon_;
  int num_states_;
  int num_actions_;
  std::vector<double> probs_;
};

/// Law of a return-to-go conditioned on (t, s, a).
struct ReturnDistribution {
  std::vector<double> support;  // strictly increasing
  std::vector<double> mass;
  int t = 0;
  int state = 0;
  int action = 0;

  double mean() const;
  double variance() const;
};

/// Dense table of return-to-go laws for every (t, s, a) under a policy.
///
/// Masses are indexed by return units k in [lo_units, hi_units]; the value of
/// unit k is k * reward_grid.
class ReturnTable {
 public:
  ReturnTable(int horizon, int num_states, int num_actions, double grid, std::int64_t lo,
              std::int64_t hi);

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  double grid() const { return grid_; }
  std::int64_t lo_units() const { return lo_; }
  std::int64_t hi_units() const { return hi_; }
  std::size_t width() const { return static_cast<std::size_t>(hi_ - lo_ + 1); }

  std::span<double> masses(int t, int s, int a) {
    return {data_.data() + offset(t, s, a), width()};
  }
  std::span<const double> masses(int t, int s, int a) const {
    return {data_.data() + offset(t, s, a), width()};
  }
  double mass_at_units(int t, int s, int a, std::int64_t units) const {
    if (units < lo_ || units > hi_) return 0.0;
    return data_[offset(t, s, a) + static_cast<std::size_t>(units - lo_)];
  }
  ReturnDistribution distribution(int t, int s, int a) const;
  double mean(int t, int s, int a) const;
  double variance(int t, int s, int a) const;

 private:
  std::size_t offset(int t, int s, int a) const {
    return ((static_cast<std::size_t>(t) * num_states_ + s) * num_actions_ + a) * width();
  }
  int horizon_;
  int num_states_;
  int num_actions_;
  double grid_;
  std::int64_t lo_;
  std::int64_t hi_;
  std::vector<double> data_;
};

/// Exact joint law of (s_t, a_t, g_t) for each t, plus the state occupancy.
struct JointOccupancy {
  ReturnTable joint;                // joint.masses(t,s,a)[k] = P(s_t=s, a_t=a, g_t=k)
  std::vector<double> state_occ;    // [t][s]

  double state(int t, int s) const {
    return state_occ[static_cast<std::size_t>(t) * joint.num_states() + s];
  }
  /// P(s_t = s, a_t = a), i.e. the joint summed over returns.
  double state_action(int t, int s, int a) const;
};

struct OptimalSolution {
  StationaryPolicy policy;
  double value = 0.0;
};

/// Backward induction for the optimal time-dependent deterministic policy.
/// Ties go to the lowest action index.
OptimalSolution value_iteration(const TabularMdp& mdp);

/// Exact J(policy) = sum_s initial_dist(s) V_0(s).
double policy_value(const TabularMdp& mdp, const StationaryPolicy& policy);

/// Q_t(s, a) under the policy, laid out [t][s][a].
std::vector<double> policy_q_values(const TabularMdp& mdp, const StationaryPolicy& policy);

/// Forward state occupancy d_t(s), laid out [t][s].
std::vector<double> state_occupancy(const TabularMdp& mdp, const StationaryPolicy& policy);

/// Exact return-to-go laws for every (t, s, a) by backward convolution.
ReturnTable return_table(const TabularMdp& mdp, const StationaryPolicy& policy);

/// Law of sum_{h=t}^{H-1} r_h given (s_t, a_t) = (s, a).
ReturnDistribution return_to_go_distribution(const TabularMdp& mdp,
                                             const StationaryPolicy& policy, int t, int s,
                                             int a);

JointOccupancy joint_occupancy(const TabularMdp& mdp, const StationaryPolicy& policy);
JointOccupancy joint_occupancy(const TabularMdp& mdp, const StationaryPolicy& policy,
                               const ReturnTable& returns);

inline constexpr int kMdpFormatVersion = 1;

nlohmann::json to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const StationaryPolicy& policy);
StationaryPolicy policy_from_json(const nlohmann::json& doc);

/// 64-bit FNV-1a over bytes.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex16(std::uint64_t value);
/// FNV-1a of the canonical MDP JSON, as 16 hex chars.
std::string fingerprint(const TabularMdp& mdp);

}  // namespace radt
