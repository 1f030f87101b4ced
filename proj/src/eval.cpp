#include "radt/eval.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "radt/parallel.hpp"

namespace radt {

double exact_conditioned_value(const ReturnConditionedPolicy& policy, const TabularMdp& mdp,
                               double initial_target, double* fallback_mass) {
  if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions()) {
    throw ShapeError("exact_conditioned_value: policy does not match MDP");
  }
  const int S = mdp.num_states();
  const int A = mdp.num_actions();
  const double grid = mdp.reward_grid();
  // (state, reward units collected so far) -> probability
  std::map<std::pair<int, std::int64_t>, double> frontier;
  for (int s = 0; s < S; ++s) {
    if (mdp.initial_dist()[s] > 0.0) frontier[{s, 0}] += mdp.initial_dist()[s];
  }
  std::vector<double> probs(A);
  double value = 0.0;
  double fallback = 0.0;
  for (int t = 0; t < mdp.horizon(); ++t) {
    std::map<std::pair<int, std::int64_t>, double> next;
    for (const auto& [key, mass] : frontier) {
      const auto [s, collected] = key;
      const double f = initial_target - static_cast<double>(collected) * grid;
      if (!policy.action_probs(t, s, f, probs)) fallback += mass;
      for (int a = 0; a < A; ++a) {
        const double w = mass * probs[a];
        if (w == 0.0) continue;
        value += w * mdp.r(s, a);
        if (t + 1 == mdp.horizon()) continue;
        const auto row = mdp.row(s, a);
        const auto units = collected + mdp.reward_units(s, a);
        for (int n = 0; n < S; ++n) {
          if (row[n] > 0.0) next[{n, units}] += w * row[n];
        }
      }
    }
    frontier = std::move(next);
  }
  if (fallback_mass) *fallback_mass = fallback;
  return value;
}

EvalReport evaluate(const ReturnConditionedPolicy& policy, const TabularMdp& target,
                    std::span<const double> f_grid, std::size_t n_rollouts, std::uint64_t seed, bool exact,
                    int jobs) {
  if (f_grid.empty()) throw std::invalid_argument("evaluate: f_grid must not be empty");
  if (n_rollouts < 1) throw std::invalid_argument("evaluate: n_rollouts must be at least 1");
  EvalReport report;
  report.f_grid.assign(f_grid.begin(), f_grid.end());
  report.optimal_value = value_iteration(target).value;
  for (std::size_t j = 0; j < f_grid.size(); ++j) {
    ConditionedResult res;
    res.f = f_grid[j];
    std::vector<double> returns(n_rollouts);
    std::vector<std::size_t> fallbacks(n_rollouts);
    const std::uint64_t f_seed = derive_seed(seed, j);
    parallel_for(n_rollouts, jobs, [&](std::size_t i) {
      const auto r = rollout(policy, target, ConditioningFunction{f_grid[j]}, derive_seed(f_seed, i));
      returns[i] = r.trajectory.total_return();
      fallbacks[i] = r.fallbacks;
    });
    res.monte_carlo = mean_se(returns);
    std::size_t total_fallbacks = 0;
    for (auto n : fallbacks) total_fallbacks += n;
    res.fallback_rate = static_cast<double>(total_fallbacks) / (static_cast<double>(n_rollouts) * target.horizon());
    if (exact) {
      res.exact = exact_conditioned_value(policy, target, f_grid[j]);
      res.has_exact = true;
      res.suboptimality = report.optimal_value - res.exact;
    } else {
      res.suboptimality = report.optimal_value - res.monte_carlo.mean;
      res.suboptimality_se = res.monte_carlo.se;
    }
    report.results.push_back(res);
  }
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json results = nlohmann::json::array();
  for (const auto& r : report.results) {
    results.push_back({{"f", r.f},
                       {"mc_mean", r.monte_carlo.mean},
                       {"mc_se", r.monte_carlo.se},
                       {"n_rollouts", r.monte_carlo.n},
                       {"exact", r.has_exact ? nlohmann::json(r.exact) : nlohmann::json(nullptr)},
                       {"suboptimality", r.suboptimality},
                       {"suboptimality_se", r.suboptimality_se},
                       {"fallback_rate", r.fallback_rate}});
  }
  return {{"policy_id", report.policy_id},
          {"psi_kind", report.psi_kind},
          {"dataset_spec", report.dataset_spec},
          {"f_grid", report.f_grid},
          {"optimal_value", report.optimal_value},
          {"results", std::move(results)},
          {"diagnostics", report.diagnostics}};
}

}  // namespace radt
