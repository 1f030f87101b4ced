#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>
#include <vector>

#include "radt/augment.hpp"
#include "radt/data.hpp"
#include "radt/envs.hpp"
#include "radt/shift.hpp"
#include "radt/stats.hpp"

using namespace radt;

namespace {

// Checks every window against the recurrence and the anchor by walking the
// window independently of the slicing code.
void check_windows(const Trajectory& traj, std::size_t k, const std::vector<SlicedWindow>& windows) {
  for (const auto& w : windows) {
    REQUIRE(w.steps.size() == w.rtg.size());
    REQUIRE(!w.steps.empty());
    const std::size_t last = w.start + w.steps.size() - 1;
    CHECK(w.steps.size() <= k);
    CHECK(w.rtg.back() == traj.rtg[last]);
    for (std::size_t i = 0; i < w.steps.size(); ++i) {
      CHECK(w.steps[i] == traj.steps[w.start + i]);
      if (i + 1 < w.steps.size()) CHECK(w.rtg[i] == w.steps[i].reward + w.rtg[i + 1]);
    }
  }
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("radt_test_" + name);
}

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("collected rtg sums the rewards") {
    const auto mdp = random_mdp(5, 3, 6, 2);
    const auto ds = collect(mdp, StationaryPolicy::uniform(6, 5, 3), 200, 1);
    for (const auto& traj : ds.trajectories) {
      REQUIRE(traj.length() == 6);
      double g = 0.0;
      for (std::size_t t = traj.length(); t-- > 0;) {
        g += traj.steps[t].reward;
        CHECK(traj.rtg[t] == g);
      }
      CHECK(traj.rtg[0] == traj.total_return());
    }
  }

  TEST_CASE("collect is deterministic and independent of job count") {
    const auto mdp = chain_walk();
    const auto beta = StationaryPolicy::uniform(5, 5, 2);
    const auto a = collect(mdp, beta, 300, 42, Domain::Source, "behavior", 1);
    const auto b = collect(mdp, beta, 300, 42, Domain::Source, "behavior", 4);
    CHECK(a == b);
    CHECK(a.mdp_fingerprint == fingerprint(mdp));
    CHECK(a.count(Domain::Source) == 300);
    CHECK(!(collect(mdp, beta, 300, 43) == a));
  }

  TEST_CASE("n below one is rejected and n of one gives one trajectory") {
    const auto mdp = chain_walk();
    const auto beta = StationaryPolicy::uniform(5, 5, 2);
    CHECK_THROWS_AS(collect(mdp, beta, 0, 1), std::invalid_argument);
    const auto ds = collect(mdp, beta, 1, 1);
    REQUIRE(ds.size() == 1);
    CHECK(ds.trajectories[0].length() == 5);
  }

  TEST_CASE("deterministic MDP and policy give identical trajectories") {
    const auto mdp = chain_walk(5, 1.0, 7);
    const std::vector<int> right(35, 1);
    const auto ds = collect(mdp, StationaryPolicy::deterministic(7, 5, 2, right), 50, 3);
    for (const auto& traj : ds.trajectories) CHECK(traj == ds.trajectories[0]);
    CHECK(ds.trajectories[0].total_return() == 3.0);
  }

  TEST_CASE("mean return agrees with the exact value") {
    const auto mdp = chain_walk();
    const auto beta = StationaryPolicy::uniform(5, 5, 2);
    const auto ds = collect(mdp, beta, 100000, 5);
    std::vector<double> returns;
    for (const auto& traj : ds.trajectories) returns.push_back(traj.total_return());
    const auto m = mean_se(returns);
    CHECK(std::abs(m.mean - policy_value(mdp, beta)) <= 3.0 * m.se);
  }

  TEST_CASE("transition frequencies pass a chi-square test") {
    const auto mdp = chain_walk();
    const auto ds = collect(mdp, StationaryPolicy::uniform(5, 5, 2), 100000, 6);
    std::vector<double> counts(5 * 2 * 5, 0.0);
    for (const auto& traj : ds.trajectories) {
      for (std::size_t t = 0; t < traj.length(); ++t) {
        const auto& st = traj.steps[t];
        counts[(st.state * 2 + st.action) * 5 + traj.next_state(t)] += 1.0;
      }
    }
    for (int s = 0; s < 5; ++s) {
      for (int a = 0; a < 2; ++a) {
        const std::span<const double> obs(counts.data() + (s * 2 + a) * 5, 5);
        const auto row = mdp.row(s, a);
        const auto res = chi_square_gof(obs, row);
        CHECK(res.p_value >= 0.001);
      }
    }
  }

  TEST_CASE("window count follows the loop bound") {
    const auto ds = collect(chain_walk(5, 0.9, 8), StationaryPolicy::uniform(8, 5, 2), 1, 0);
    const auto& traj = ds.trajectories[0];
    for (std::size_t k = 1; k <= 8; ++k) {
      CHECK(consistent_return_slices(traj, k).size() == 8 - k + 1);
      CHECK(consistent_return_slices(traj, k, true).size() == 8);
    }
    CHECK_THROWS_AS(consistent_return_slices(traj, 0), std::out_of_range);
    CHECK_THROWS_AS(consistent_return_slices(traj, 9), std::out_of_range);
  }

  TEST_CASE("unaugmented windows equal slices of the original rtg") {
    const auto ds = collect(random_mdp(4, 2, 6, 1), StationaryPolicy::uniform(6, 4, 2), 20, 0);
    for (const auto& traj : ds.trajectories) {
      for (const auto& w : consistent_return_slices(traj, 3, true)) {
        for (std::size_t i = 0; i < w.rtg.size(); ++i) CHECK(w.rtg[i] == traj.rtg[w.start + i]);
      }
    }
  }

  TEST_CASE("zeroed rtg with k=2 gives (r_i, 0) windows") {
    auto traj = collect(random_mdp(4, 2, 5, 3), StationaryPolicy::uniform(5, 4, 2), 1, 2).trajectories[0];
    std::fill(traj.rtg.begin(), traj.rtg.end(), 0.0);
    const auto windows = consistent_return_slices(traj, 2);
    REQUIRE(windows.size() == 4);
    for (const auto& w : windows) {
      CHECK(w.rtg[0] == w.steps[0].reward);
      CHECK(w.rtg[1] == 0.0);
    }
  }

  TEST_CASE("windows of mean-variance augmented trajectories re-scan as consistent") {
    const auto target = chain_walk();
    const auto source = apply_shift(target, {ShiftKind::TransitionPerturb, 0.5, 7});
    const auto beta = StationaryPolicy::uniform(5, 5, 2);
    const auto ds = collect(source, beta, 200, 9, Domain::Source);
    const auto src = exact_return_stats(source, beta);
    const auto tgt = exact_return_stats(target, beta);
    const auto aug = psi_mean_variance(ds, src, tgt, ClipConfig{});
    bool changed = false;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto& traj = aug.data.trajectories[i];
      changed = changed || traj.rtg != ds.trajectories[i].rtg;
      check_windows(traj, 3, consistent_return_slices(traj, 3));
      check_windows(traj, 3, consistent_return_slices(traj, 3, true));
    }
    CHECK(changed);
  }

  TEST_CASE("mix keeps tags and counts") {
    const auto mdp = chain_walk();
    const auto beta = StationaryPolicy::uniform(5, 5, 2);
    const auto t = collect(mdp, beta, 100, 1, Domain::Target);
    const auto s = collect(mdp, beta, 1000, 2, Domain::Source);
    const auto m = mix(t, s, 3);
    CHECK(m.size() == 1100);
    CHECK(m.count(Domain::Target) == 100);
    CHECK(m.count(Domain::Source) == 1000);
    CHECK(m.metadata["mix"]["shuffle_seed"] == 3);
    const auto plain = mix(t, s);
    CHECK(plain.trajectories.front() == t.trajectories.front());
    CHECK(plain.trajectories[100] == s.trajectories.front());
    Dataset empty = t;
    empty.trajectories.clear();
    CHECK(mix(t, empty) == t);
    CHECK_THROWS_AS(mix(t, collect(chain_walk(4), StationaryPolicy::uniform(5, 4, 2), 2, 0)), ShapeError);
  }

  TEST_CASE("persistence round-trips preserve every field") {
    const auto mdp = chain_walk();
    const auto beta = StationaryPolicy::uniform(5, 5, 2);
    const auto t = collect(mdp, beta, 10, 1, Domain::Target);
    const auto s = collect(mdp, beta, 20, 2, Domain::Source);
    Dataset empty = t;
    empty.trajectories.clear();
    const auto single = take(t, 1);
    const auto big = collect(mdp, beta, 10000, 4);
    const auto mixed = mix(t, s, 8);
    int i = 0;
    for (const Dataset* ds : std::vector<const Dataset*>{&empty, &single, &big, &mixed}) {
      const auto path = temp_path("roundtrip_" + std::to_string(i++) + ".jsonl");
      save_dataset(*ds, path);
      const auto back = load_dataset(path);
      CHECK(back == *ds);
      std::filesystem::remove(path);
    }
  }

  TEST_CASE("augmented rtg values survive persistence bit-exactly") {
    auto ds = collect(chain_walk(), StationaryPolicy::uniform(5, 5, 2), 5, 1);
    ds.trajectories[0].rtg[2] = 0.1 + 0.2;
    ds.trajectories[1].rtg[0] = -1.0 / 3.0;
    std::stringstream buffer(dataset_to_jsonl(ds));
    CHECK(dataset_from_jsonl(buffer) == ds);
  }

  TEST_CASE("malformed files are rejected") {
    std::stringstream empty_stream("");
    CHECK_THROWS(dataset_from_jsonl(empty_stream));
    std::stringstream not_json("{oops\n");
    CHECK_THROWS(dataset_from_jsonl(not_json));
    const auto ds = collect(chain_walk(), StationaryPolicy::uniform(5, 5, 2), 3, 1);
    auto text = dataset_to_jsonl(ds);
    text.resize(text.size() - text.size() / 4);
    std::stringstream truncated(text);
    CHECK_THROWS(dataset_from_jsonl(truncated));
  }

  TEST_CASE("fingerprint mismatch is a warning, not an error") {
    const auto ds = collect(chain_walk(), StationaryPolicy::uniform(5, 5, 2), 3, 1);
    CHECK_FALSE(check_fingerprint(ds, chain_walk()).has_value());
    CHECK(check_fingerprint(ds, chain_walk(5, 0.8)).has_value());
  }
}
