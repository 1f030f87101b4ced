#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "radt/envs.hpp"
#include "radt/rng.hpp"
#include "radt/shift.hpp"

using namespace radt;

namespace {

constexpr ShiftKind kKinds[] = {ShiftKind::TransitionPerturb, ShiftKind::ActionNoise, ShiftKind::ActionRestrict,
                                ShiftKind::StateMerge};

double row_tv(const TabularMdp& x, const TabularMdp& y, int s, int a) {
  double tv = 0.0;
  for (int n = 0; n < x.num_states(); ++n) tv += std::abs(x.p(s, a, n) - y.p(s, a, n));
  return 0.5 * tv;
}

}  // namespace

TEST_SUITE("shift") {
  TEST_CASE("zero magnitude leaves the tensor unchanged") {
    const auto target = random_mdp(6, 3, 4, 5);
    for (auto kind : kKinds) {
      const auto source = apply_shift(target, {kind, 0.0, 11});
      REQUIRE(source.transition().size() == target.transition().size());
      for (std::size_t i = 0; i < target.transition().size(); ++i) {
        CHECK(std::abs(source.transition()[i] - target.transition()[i]) <= 1e-15);
      }
    }
  }

  TEST_CASE("full action noise gives the action-averaged row everywhere") {
    const auto target = random_mdp(5, 3, 4, 8);
    const auto source = apply_shift(target, {ShiftKind::ActionNoise, 1.0, 0});
    for (int s = 0; s < 5; ++s) {
      for (int n = 0; n < 5; ++n) {
        double avg = 0.0;
        for (int b = 0; b < 3; ++b) avg += target.p(s, b, n) / 3.0;
        for (int a = 0; a < 3; ++a) CHECK(source.p(s, a, n) == doctest::Approx(avg).epsilon(1e-14));
      }
    }
  }

  TEST_CASE("perturbation TV per row is at most the magnitude") {
    const auto target = chain_walk(5, 0.9, 5);
    const auto source = apply_shift(target, {ShiftKind::TransitionPerturb, 0.25, 7});
    for (int s = 0; s < 5; ++s) {
      for (int a = 0; a < 2; ++a) CHECK(row_tv(source, target, s, a) <= 0.25 + 1e-15);
    }
  }

  TEST_CASE("dynamics gap matches a hand-computed row") {
    // Row (s=0, a=right) of ChainWalk-5 is [0.1, 0.9, 0, 0, 0]. Its perturbation
    // row is the second block of five exponential draws from the shift stream.
    const auto target = chain_walk(5, 0.9, 5);
    const auto source = apply_shift(target, {ShiftKind::TransitionPerturb, 0.25, 7});
    Rng rng(derive_seed(7, 0));
    std::vector<double> e(10);
    for (double& x : e) x = rng.exponential();
    double total = 0.0;
    for (int n = 5; n < 10; ++n) total += e[n];
    const double base[5] = {0.1, 0.9, 0.0, 0.0, 0.0};
    double expected_tv = 0.0;
    double expected_lr = 0.0;
    for (int n = 0; n < 5; ++n) {
      const double ps = 0.75 * base[n] + 0.25 * e[5 + n] / total;
      CHECK(source.p(0, 1, n) == doctest::Approx(ps).epsilon(1e-14));
      expected_tv += 0.5 * std::abs(ps - base[n]);
      if (base[n] > 0.0) expected_lr = std::max(expected_lr, std::abs(std::log(base[n] / ps)));
    }
    const auto gap = dynamics_gap(source, target);
    CHECK(gap.tv(0, 1) == doctest::Approx(expected_tv).epsilon(1e-13));
    CHECK(gap.log_ratio(0, 1) == doctest::Approx(expected_lr).epsilon(1e-12));
    CHECK(gap.support_mismatch[1]);
  }

  TEST_CASE("rewards and initial distribution are preserved bit-exactly") {
    const auto target = random_mdp(5, 2, 3, 4);
    for (auto kind : kKinds) {
      const auto source = apply_shift(target, {kind, 0.6, 3});
      CHECK(source.reward() == target.reward());
      CHECK(source.initial_dist() == target.initial_dist());
      CHECK(source.horizon() == target.horizon());
      CHECK(source.reward_grid() == target.reward_grid());
    }
  }

  TEST_CASE("shifts are deterministic in the seed") {
    const auto target = random_mdp(5, 2, 3, 4);
    for (auto kind : kKinds) {
      CHECK(apply_shift(target, {kind, 0.4, 9}).transition() == apply_shift(target, {kind, 0.4, 9}).transition());
    }
    CHECK(apply_shift(target, {ShiftKind::TransitionPerturb, 0.4, 9}).transition() !=
          apply_shift(target, {ShiftKind::TransitionPerturb, 0.4, 10}).transition());
  }

  TEST_CASE("perturbation gap is nondecreasing in magnitude") {
    const auto target = random_mdp(6, 3, 4, 1);
    std::vector<double> previous(18, 0.0);
    for (int i = 0; i <= 20; ++i) {
      const double m = i / 20.0;
      const auto gap = dynamics_gap(apply_shift(target, {ShiftKind::TransitionPerturb, m, 5}), target);
      for (std::size_t k = 0; k < previous.size(); ++k) {
        CHECK(gap.total_variation[k] >= previous[k] - 1e-15);
        previous[k] = gap.total_variation[k];
      }
    }
  }

  TEST_CASE("identical MDPs have zero gap") {
    const auto mdp = random_mdp(4, 3, 2, 6);
    const auto gap = dynamics_gap(mdp, mdp);
    CHECK(gap.max_tv() == 0.0);
    for (double lr : gap.max_log_ratio) CHECK(lr == 0.0);
  }

  TEST_CASE("disjoint rows give TV one and an infinite log ratio") {
    const TabularMdp a(2, 1, 1, 1.0, {1.0, 0.0, 1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0});
    const TabularMdp b(2, 1, 1, 1.0, {0.0, 1.0, 0.0, 1.0}, {0.0, 0.0}, {1.0, 0.0});
    const auto gap = dynamics_gap(a, b);
    CHECK(gap.tv(0, 0) == 1.0);
    CHECK(gap.log_ratio(0, 0) == std::numeric_limits<double>::infinity());
    CHECK(gap.support_mismatch[0]);
  }

  TEST_CASE("action restriction turns the chosen action into a self loop") {
    const auto target = chain_walk(5, 0.9, 5);
    const auto source = apply_shift(target, {ShiftKind::ActionRestrict, 1.0, 3});
    const int a = restricted_action(target, 3);
    for (int s = 0; s < 5; ++s) {
      CHECK(source.p(s, a, s) == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(source.row(s, 1 - a)[0] == target.row(s, 1 - a)[0]);
    }
  }

  TEST_CASE("state merge moves mass into the neighbor") {
    const auto target = random_mdp(5, 2, 3, 2, 3, 5);
    const auto source = apply_shift(target, {ShiftKind::StateMerge, 1.0, 4});
    const int d = merged_state(target, 4);
    const int neighbor = d > 0 ? d - 1 : 1;
    for (int s = 0; s < 5; ++s) {
      for (int a = 0; a < 2; ++a) {
        CHECK(source.p(s, a, d) == 0.0);
        CHECK(source.p(s, a, neighbor) ==
              doctest::Approx(target.p(s, a, neighbor) + target.p(s, a, d)).epsilon(1e-14));
      }
    }
  }

  TEST_CASE("invalid magnitude and shape mismatch are rejected") {
    const auto mdp = chain_walk();
    CHECK_THROWS_AS(apply_shift(mdp, {ShiftKind::ActionNoise, 1.5, 0}), std::invalid_argument);
    CHECK_THROWS_AS(apply_shift(mdp, {ShiftKind::ActionNoise, -0.1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(dynamics_gap(mdp, chain_walk(4)), ShapeError);
    CHECK_THROWS_AS(shift_kind_from_string("warp"), std::invalid_argument);
  }
}
