#include <doctest.h>

#include <cmath>
#include <vector>

#include "radt/data.hpp"
#include "radt/envs.hpp"
#include "radt/eval.hpp"
#include "radt/rcsl.hpp"

using namespace radt;

TEST_SUITE("eval") {
  TEST_CASE("optimal policy has zero suboptimality") {
    const auto mdp = chain_walk();
    const UnconditionedPolicy policy(value_iteration(mdp).policy);
    const std::vector<double> grid = {0.0, 1.0};
    const auto report = evaluate(policy, mdp, grid, 2000, 1);
    for (const auto& r : report.results) {
      CHECK(std::abs(r.suboptimality) <= 1e-12);
      CHECK(std::abs(report.optimal_value - r.monte_carlo.mean) <= 3.0 * r.monte_carlo.se);
    }
  }

  TEST_CASE("exact value of a wrapped policy equals its policy value") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const auto mdp = random_mdp(5, 3, 6, seed);
      const auto beta = StationaryPolicy::uniform(6, 5, 3);
      CHECK(std::abs(exact_conditioned_value(UnconditionedPolicy(beta), mdp, 2.0) - policy_value(mdp, beta)) <= 1e-9);
    }
    const auto cw = chain_walk();
    const auto beta = StationaryPolicy::uniform(5, 5, 2);
    CHECK(std::abs(exact_conditioned_value(UnconditionedPolicy(beta), cw, 1.0) - policy_value(cw, beta)) <= 1e-9);
  }

  TEST_CASE("invalid evaluation inputs are rejected") {
    const auto mdp = chain_walk();
    const UnconditionedPolicy policy(StationaryPolicy::uniform(5, 5, 2));
    CHECK_THROWS_AS(evaluate(policy, mdp, std::vector<double>{}, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(evaluate(policy, mdp, std::vector<double>{1.0}, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(evaluate(policy, chain_walk(4), std::vector<double>{1.0}, 10, 1), ShapeError);
  }

  TEST_CASE("exact and Monte Carlo values agree for fitted policies") {
    std::size_t cells = 0, agree = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto mdp = random_mdp(4, 2, 5, seed, 3, 3);
      const auto ds = collect(mdp, StationaryPolicy::uniform(5, 4, 2), 200, seed + 100);
      const auto policy = fit_tabular(ds, ReturnBinner{1.0, 0.0}, 0.0, true);
      const std::vector<double> grid = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
      const auto report = evaluate(policy, mdp, grid, 2000, seed);
      for (const auto& r : report.results) {
        ++cells;
        if (std::abs(r.exact - r.monte_carlo.mean) <= 3.0 * r.monte_carlo.se + 1e-12) ++agree;
        CHECK(r.suboptimality >= -3.0 * r.monte_carlo.se - 1e-12);
      }
    }
    CHECK(static_cast<double>(agree) >= 0.99 * static_cast<double>(cells));
  }

  TEST_CASE("evaluation is deterministic and independent of job count") {
    const auto mdp = chain_walk();
    const auto ds = collect(mdp, StationaryPolicy::uniform(5, 5, 2), 300, 2);
    const auto policy = fit_tabular(ds, ReturnBinner{1.0, 0.0}, 0.0, true);
    const std::vector<double> grid = {0.0, 1.0};
    const auto a = evaluate(policy, mdp, grid, 500, 7, true, 1);
    const auto b = evaluate(policy, mdp, grid, 500, 7, true, 3);
    CHECK(to_json(a).dump() == to_json(b).dump());
  }

  TEST_CASE("fallbacks are reported for unseen conditioning targets") {
    const auto mdp = chain_walk();
    const auto ds = collect(mdp, StationaryPolicy::uniform(5, 5, 2), 50, 3);
    const auto policy = fit_tabular(ds, ReturnBinner{1.0, 0.0}, 0.0, true);
    const std::vector<double> grid = {40.0};
    const auto report = evaluate(policy, mdp, grid, 50, 1);
    CHECK(report.results[0].fallback_rate == 1.0);
    double fallback = 0.0;
    exact_conditioned_value(policy, mdp, 40.0, &fallback);
    CHECK(fallback == doctest::Approx(5.0));
  }

  TEST_CASE("neural and tabular learners reach comparable returns") {
    const auto mdp = chain_walk();
    const auto ds = collect(mdp, StationaryPolicy::uniform(5, 5, 2), 500, 4);
    const auto tab = fit_tabular(ds, ReturnBinner{1.0, 0.0}, 0.0, true);
    NeuralConfig cfg;
    cfg.lr = 3e-3;
    cfg.epochs = 60;
    cfg.time_indexed = true;
    cfg.seed = 2;
    const auto nn = fit_neural(ds, cfg);
    const std::vector<double> grid = {1.0};
    const auto rt = evaluate(tab, mdp, grid, 2000, 5);
    const auto rn = evaluate(nn.policy, mdp, grid, 2000, 5);
    // Both exact values should sit within Monte Carlo noise of each other.
    const double se = std::hypot(rt.results[0].monte_carlo.se, rn.results[0].monte_carlo.se);
    CHECK(std::abs(rt.results[0].exact - rn.results[0].exact) <= 3.0 * se);
  }

  TEST_CASE("report serializes every field") {
    const auto mdp = chain_walk();
    const UnconditionedPolicy policy(StationaryPolicy::uniform(5, 5, 2));
    const std::vector<double> grid = {1.0};
    auto report = evaluate(policy, mdp, grid, 10, 1, false);
    CHECK_FALSE(report.results[0].has_exact);
    CHECK(report.results[0].suboptimality_se > 0.0);
    const auto doc = to_json(report);
    CHECK(doc["results"][0]["exact"].is_null());
    CHECK(doc["optimal_value"] == report.optimal_value);
  }
}
