#include "radt/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace radt {

namespace {

constexpr double kRowTol = 1e-12;

void check_distribution(std::span<const double> probs, const char* what) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(what) + ": entry outside [0,1]");
    total += p;
  }
  if (std::abs(total - 1.0) > kRowTol) {
    throw std::invalid_argument(std::string(what) + ": does not sum to 1 (sum = " +
                                std::to_string(total) + ")");
  }
}

}  // namespace

TabularMdp::TabularMdp(int num_states, int num_actions, int horizon, double reward_grid,
                       std::vector<double> transition, std::vector<double> reward,
                       std::vector<double> initial_dist)
    : num_states_(num_states),
      num_actions_(num_actions),
      horizon_(horizon),
      reward_grid_(reward_grid),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      initial_dist_(std::move(initial_dist)) {
  if (num_states_ <= 0 || num_actions_ <= 0 || horizon_ <= 0) {
    throw std::invalid_argument("TabularMdp: sizes must be positive");
  }
  if (!(reward_grid_ > 0.0) || !std::isfinite(reward_grid_)) {
    throw std::invalid_argument("TabularMdp: reward_grid must be positive");
  }
  const auto ns = static_cast<std::size_t>(num_states_);
  const auto na = static_cast<std::size_t>(num_actions_);
  if (transition_.size() != ns * na * ns) throw ShapeError("TabularMdp: transition size");
  if (reward_.size() != ns * na) throw ShapeError("TabularMdp: reward size");
  if (initial_dist_.size() != ns) throw ShapeError("TabularMdp: initial_dist size");
  for (int s = 0; s < num_states_; ++s) {
    for (int a = 0; a < num_actions_; ++a) check_distribution(row(s, a), "transition row");
  }
  check_distribution(initial_dist_, "initial_dist");
  reward_units_.resize(reward_.size());
  for (std::size_t i = 0; i < reward_.size(); ++i) {
    if (!std::isfinite(reward_[i])) throw std::invalid_argument("TabularMdp: non-finite reward");
    const double units = reward_[i] / reward_grid_;
    const double rounded = std::round(units);
    if (std::abs(units - rounded) > 1e-9 * std::max(1.0, std::abs(units))) {
      throw std::invalid_argument("TabularMdp: reward " + std::to_string(reward_[i]) +
                                  " is not a multiple of reward_grid");
    }
    reward_units_[i] = static_cast<std::int64_t>(rounded);
  }
}

std::int64_t TabularMdp::min_reward_units() const {
  return *std::min_element(reward_units_.begin(), reward_units_.end());
}

std::int64_t TabularMdp::max_reward_units() const {
  return *std::max_element(reward_units_.begin(), reward_units_.end());
}

TabularMdp TabularMdp::with_transition(std::vector<double> transition) const {
  return TabularMdp(num_states_, num_actions_, horizon_, reward_grid_, std::move(transition),
                    reward_, initial_dist_);
}

StationaryPolicy::StationaryPolicy(int horizon, int num_states, int num_actions,
                                   std::vector<double> probs)
    : horizon_(horizon), num_states_(num_states), num_actions_(num_actions), probs_(std::move(probs)) {
  if (horizon_ <= 0 || num_states_ <= 0 || num_actions_ <= 0) {
    throw std::invalid_argument("StationaryPolicy: sizes must be positive");
  }
  if (probs_.size() != static_cast<std::size_t>(horizon_) * num_states_ * num_actions_) {
    throw ShapeError("StationaryPolicy: probs size");
  }
  for (int t = 0; t < horizon_; ++t) {
    for (int s = 0; s < num_states_; ++s) check_distribution(row(t, s), "policy row");
  }
}

StationaryPolicy StationaryPolicy::uniform(int horizon, int num_states, int num_actions) {
  return StationaryPolicy(horizon, num_states, num_actions,
                          std::vector<double>(static_cast<std::size_t>(horizon) * num_states * num_actions,
                                              1.0 / num_actions));
}

StationaryPolicy StationaryPolicy::deterministic(int horizon, int num_states, int num_actions,
                                                 std::span<const int> actions) {
  if (actions.size() != static_cast<std::size_t>(horizon) * num_states) {
    throw ShapeError("StationaryPolicy::deterministic: actions size");
  }
  std::vector<double> probs(static_cast<std::size_t>(horizon) * num_states * num_actions, 0.0);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] < 0 || actions[i] >= num_actions) {
      throw std::invalid_argument("StationaryPolicy::deterministic: action out of range");
    }
    probs[i * num_actions + actions[i]] = 1.0;
  }
  return StationaryPolicy(horizon, num_states, num_actions, std::move(probs));
}

StationaryPolicy StationaryPolicy::epsilon_greedy(const StationaryPolicy& greedy, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("epsilon_greedy: epsilon must be in [0,1]");
  }
  std::vector<double> probs = greedy.probs();
  const double u = 1.0 / greedy.num_actions();
  for (double& p : probs) p = (1.0 - epsilon) * p + epsilon * u;
  // Renormalize rows so they sum to 1 within rounding.
  const auto na = static_cast<std::size_t>(greedy.num_actions());
  for (std::size_t i = 0; i < probs.size(); i += na) {
    const double total = std::accumulate(probs.begin() + i, probs.begin() + i + na, 0.0);
    for (std::size_t j = 0; j < na; ++j) probs[i + j] /= total;
  }
  return StationaryPolicy(greedy.horizon(), greedy.num_states(), greedy.num_actions(),
                          std::move(probs));
}

void StationaryPolicy::check_shape(const TabularMdp& mdp) const {
  if (horizon_ != mdp.horizon() || num_states_ != mdp.num_states() ||
      num_actions_ != mdp.num_actions()) {
    throw ShapeError("policy shape does not match MDP");
  }
}

double ReturnDistribution::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) m += support[i] * mass[i];
  return m;
}

double ReturnDistribution::variance() const {
  const double m = mean();
  double v = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) v += (support[i] - m) * (support[i] - m) * mass[i];
  return v;
}

ReturnTable::ReturnTable(int horizon, int num_states, int num_actions, double grid,
                         std::int64_t lo, std::int64_t hi)
    : horizon_(horizon),
      num_states_(num_states),
      num_actions_(num_actions),
      grid_(grid),
      lo_(lo),
      hi_(hi),
      data_(static_cast<std::size_t>(horizon) * num_states * num_actions *
                static_cast<std::size_t>(hi - lo + 1),
            0.0) {}

ReturnDistribution ReturnTable::distribution(int t, int s, int a) const {
  ReturnDistribution out;
  out.t = t;
  out.state = s;
  out.action = a;
  const auto m = masses(t, s, a);
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (m[k] > 0.0) {
      out.support.push_back(static_cast<double>(lo_ + static_cast<std::int64_t>(k)) * grid_);
      out.mass.push_back(m[k]);
    }
  }
  return out;
}

double ReturnTable::mean(int t, int s, int a) const {
  const auto m = masses(t, s, a);
  double total = 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    total += m[k];
    acc += m[k] * static_cast<double>(lo_ + static_cast<std::int64_t>(k)) * grid_;
  }
  return total > 0.0 ? acc / total : 0.0;
}

double ReturnTable::variance(int t, int s, int a) const {
  const auto m = masses(t, s, a);
  const double mu = mean(t, s, a);
  double total = 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    const double d = static_cast<double>(lo_ + static_cast<std::int64_t>(k)) * grid_ - mu;
    total += m[k];
    acc += m[k] * d * d;
  }
  return total > 0.0 ? acc / total : 0.0;
}

double JointOccupancy::state_action(int t, int s, int a) const {
  double total = 0.0;
  for (double m : joint.masses(t, s, a)) total += m;
  return total;
}

OptimalSolution value_iteration(const TabularMdp& mdp) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const int H = mdp.horizon();
  std::vector<double> v_next(S, 0.0);
  std::vector<double> v(S, 0.0);
  std::vector<int> actions(static_cast<std::size_t>(H) * S, 0);
  for (int t = H - 1; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < A; ++a) {
        double q = mdp.r(s, a);
        const auto row = mdp.row(s, a);
        for (int n = 0; n < S; ++n) q += row[n] * v_next[n];
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      v[s] = best;
      actions[static_cast<std::size_t>(t) * S + s] = best_a;
    }
    std::swap(v, v_next);
  }
  double value = 0.0;
  for (int s = 0; s < S; ++s) value += mdp.initial_dist()[s] * v_next[s];
  return {StationaryPolicy::deterministic(H, S, A, actions), value};
}

std::vector<double> policy_q_values(const TabularMdp& mdp, const StationaryPolicy& policy) {
  policy.check_shape(mdp);
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const int H = mdp.horizon();
  std::vector<double> q(static_cast<std::size_t>(H) * S * A, 0.0);
  std::vector<double> v_next(S, 0.0);
  for (int t = H - 1; t >= 0; --t) {
    std::vector<double> v(S, 0.0);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        double value = mdp.r(s, a);
        const auto row = mdp.row(s, a);
        for (int n = 0; n < S; ++n) value += row[n] * v_next[n];
        q[(static_cast<std::size_t>(t) * S + s) * A + a] = value;
        v[s] += policy.prob(t, s, a) * value;
      }
    }
    v_next = std::move(v);
  }
  return q;
}

double policy_value(const TabularMdp& mdp, const StationaryPolicy& policy) {
  const auto q = policy_q_values(mdp, policy);
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  double value = 0.0;
  for (int s = 0; s < S; ++s) {
    double v = 0.0;
    for (int a = 0; a < A; ++a) v += policy.prob(0, s, a) * q[static_cast<std::size_t>(s) * A + a];
    value += mdp.initial_dist()[s] * v;
  }
  return value;
}

std::vector<double> state_occupancy(const TabularMdp& mdp, const StationaryPolicy& policy) {
  policy.check_shape(mdp);
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const int H = mdp.horizon();
  std::vector<double> occ(static_cast<std::size_t>(H) * S, 0.0);
  std::copy(mdp.initial_dist().begin(), mdp.initial_dist().end(), occ.begin());
  for (int t = 0; t + 1 < H; ++t) {
    for (int s = 0; s < S; ++s) {
      const double ds = occ[static_cast<std::size_t>(t) * S + s];
      if (ds == 0.0) continue;
      for (int a = 0; a < A; ++a) {
        const double w = ds * policy.prob(t, s, a);
        if (w == 0.0) continue;
        const auto row = mdp.row(s, a);
        for (int n = 0; n < S; ++n) occ[static_cast<std::size_t>(t + 1) * S + n] += w * row[n];
      }
    }
  }
  return occ;
}

ReturnTable return_table(const TabularMdp& mdp, const StationaryPolicy& policy) {
  policy.check_shape(mdp);
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const int H = mdp.horizon();
  const std::int64_t rmin = mdp.min_reward_units();
  const std::int64_t rmax = mdp.max_reward_units();
  const std::int64_t lo = rmin < 0 ? rmin * H : rmin;
  const std::int64_t hi = rmax > 0 ? rmax * H : rmax;
  ReturnTable table(H, S, A, mdp.reward_grid(), lo, hi);
  const std::size_t W = table.width();

  // mixed[s'] = law of g_{t+1} given s_{t+1} = s', mixed over the policy.
  std::vector<double> mixed(static_cast<std::size_t>(S) * W, 0.0);
  for (int t = H - 1; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        auto out = table.masses(t, s, a);
        const auto shift = static_cast<std::size_t>(mdp.reward_units(s, a) - lo);
        if (t == H - 1) {
          out[shift] = 1.0;
          continue;
        }
        // g_t = r(s,a) + g_{t+1}: the k-th unit of g_{t+1} lands at k + r.
        const auto r = mdp.reward_units(s, a);
        const auto row = mdp.row(s, a);
        for (int n = 0; n < S; ++n) {
          if (row[n] == 0.0) continue;
          const double* src = mixed.data() + static_cast<std::size_t>(n) * W;
          for (std::size_t k = 0; k < W; ++k) {
            if (src[k] == 0.0) continue;
            const auto dest = static_cast<std::int64_t>(k) + r;
            out[static_cast<std::size_t>(dest)] += row[n] * src[k];
          }
        }
      }
    }
    std::fill(mixed.begin(), mixed.end(), 0.0);
    for (int s = 0; s < S; ++s) {
      double* dst = mixed.data() + static_cast<std::size_t>(s) * W;
      for (int a = 0; a < A; ++a) {
        const double w = policy.prob(t, s, a);
        if (w == 0.0) continue;
        const auto m = table.masses(t, s, a);
        for (std::size_t k = 0; k < W; ++k) dst[k] += w * m[k];
      }
    }
  }
  return table;
}

ReturnDistribution return_to_go_distribution(const TabularMdp& mdp,
                                             const StationaryPolicy& policy, int t, int s,
                                             int a) {
  if (t < 0 || t >= mdp.horizon()) throw std::out_of_range("return_to_go_distribution: t");
  if (s < 0 || s >= mdp.num_states() || a < 0 || a >= mdp.num_actions()) {
    throw std::out_of_range("return_to_go_distribution: state/action");
  }
  return return_table(mdp, policy).distribution(t, s, a);
}

JointOccupancy joint_occupancy(const TabularMdp& mdp, const StationaryPolicy& policy,
                               const ReturnTable& returns) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const int H = mdp.horizon();
  JointOccupancy occ{ReturnTable(H, S, A, returns.grid(), returns.lo_units(), returns.hi_units()),
                     state_occupancy(mdp, policy)};
  for (int t = 0; t < H; ++t) {
    for (int s = 0; s < S; ++s) {
      const double ds = occ.state(t, s);
      for (int a = 0; a < A; ++a) {
        const double w = ds * policy.prob(t, s, a);
        auto out = occ.joint.masses(t, s, a);
        const auto in = returns.masses(t, s, a);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = w * in[k];
      }
    }
  }
  return occ;
}

JointOccupancy joint_occupancy(const TabularMdp& mdp, const StationaryPolicy& policy) {
  return joint_occupancy(mdp, policy, return_table(mdp, policy));
}

nlohmann::json to_json(const TabularMdp& mdp) {
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  nlohmann::json transition = nlohmann::json::array();
  nlohmann::json reward = nlohmann::json::array();
  for (int s = 0; s < S; ++s) {
    nlohmann::json per_action = nlohmann::json::array();
    nlohmann::json rewards = nlohmann::json::array();
    for (int a = 0; a < A; ++a) {
      const auto row = mdp.row(s, a);
      per_action.push_back(std::vector<double>(row.begin(), row.end()));
      rewards.push_back(mdp.r(s, a));
    }
    transition.push_back(std::move(per_action));
    reward.push_back(std::move(rewards));
  }
  return {{"version", kMdpFormatVersion},
          {"num_states", S},
          {"num_actions", A},
          {"horizon", mdp.horizon()},
          {"reward_grid", mdp.reward_grid()},
          {"transition", std::move(transition)},
          {"reward", std::move(reward)},
          {"initial_dist", mdp.initial_dist()}};
}

TabularMdp mdp_from_json(const nlohmann::json& doc) {
  if (doc.at("version").get<int>() != kMdpFormatVersion) {
    throw std::invalid_argument("unsupported MDP format version");
  }
  const int S = doc.at("num_states").get<int>();
  const int A = doc.at("num_actions").get<int>();
  std::vector<double> transition;
  std::vector<double> reward;
  const auto& tr = doc.at("transition");
  const auto& rw = doc.at("reward");
  if (tr.size() != static_cast<std::size_t>(S) || rw.size() != static_cast<std::size_t>(S)) {
    throw ShapeError("MDP JSON: state dimension mismatch");
  }
  for (int s = 0; s < S; ++s) {
    if (tr[s].size() != static_cast<std::size_t>(A) || rw[s].size() != static_cast<std::size_t>(A)) {
      throw ShapeError("MDP JSON: action dimension mismatch");
    }
    for (int a = 0; a < A; ++a) {
      const auto row = tr[s][a].get<std::vector<double>>();
      if (row.size() != static_cast<std::size_t>(S)) throw ShapeError("MDP JSON: row length");
      transition.insert(transition.end(), row.begin(), row.end());
      reward.push_back(rw[s][a].get<double>());
    }
  }
  return TabularMdp(S, A, doc.at("horizon").get<int>(), doc.at("reward_grid").get<double>(),
                    std::move(transition), std::move(reward),
                    doc.at("initial_dist").get<std::vector<double>>());
}

nlohmann::json to_json(const StationaryPolicy& policy) {
  return {{"horizon", policy.horizon()},
          {"num_states", policy.num_states()},
          {"num_actions", policy.num_actions()},
          {"probs", policy.probs()}};
}

StationaryPolicy policy_from_json(const nlohmann::json& doc) {
  return StationaryPolicy(doc.at("horizon").get<int>(), doc.at("num_states").get<int>(),
                          doc.at("num_actions").get<int>(),
                          doc.at("probs").get<std::vector<double>>());
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex16(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string fingerprint(const TabularMdp& mdp) { return hex16(fnv1a64(to_json(mdp).dump())); }

}  // namespace radt
