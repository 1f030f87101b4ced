#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "radt/mdp.hpp"
#include "radt/rcsl.hpp"
#include "radt/stats.hpp"

namespace radt {

/// Exact expected return of a return-conditioned policy rolled out with
/// f_{t+1} = f_t - r_t from f_0 = initial_target. The product chain
/// (state, accumulated reward units) is propagated forward exactly.
/// `fallback_mass`, when given, receives the expected number of steps taken
/// from uncovered (t, s, f) cells.
double exact_conditioned_value(const ReturnConditionedPolicy& policy, const TabularMdp& mdp,
                               double initial_target, double* fallback_mass = nullptr);

struct ConditionedResult {
  double f = 0.0;
  MeanSe monte_carlo;
  double exact = 0.0;
  bool has_exact = false;
  double suboptimality = 0.0;     // J*(target) - J(pi_f), exact when available
  double suboptimality_se = 0.0;  // 0 when exact
  double fallback_rate = 0.0;     // uncovered steps per rollout step (Monte Carlo)
};

struct EvalReport {
  std::string policy_id;
  std::string psi_kind;
  std::string dataset_spec;
  std::vector<double> f_grid;
  double optimal_value = 0.0;
  std::vector<ConditionedResult> results;
  nlohmann::json diagnostics = nlohmann::json::object();
};

/// Monte Carlo evaluation over n_rollouts per conditioning target, plus the
/// exact value via the product chain. Rollout i of target j uses
/// derive_seed(derive_seed(seed, j), i).
EvalReport evaluate(const ReturnConditionedPolicy& policy, const TabularMdp& target,
                    std::span<const double> f_grid, std::size_t n_rollouts, std::uint64_t seed,
                    bool exact = true, int jobs = 1);

nlohmann::json to_json(const EvalReport& report);

}  // namespace radt
