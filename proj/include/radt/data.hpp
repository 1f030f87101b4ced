#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "radt/mdp.hpp"
#include "radt/rng.hpp"

namespace radt {

enum class Domain { Source, Target };

std::string to_string(Domain domain);
Domain domain_from_string(const std::string& name);

struct Step {
  int state = 0;
  int action = 0;
  double reward = 0.0;

  bool operator==(const Step&) const = default;
};

/// One episode of exactly H steps. rtg[t] is the (possibly transformed)
/// return-to-go at step t; final_state is s_{H}, the state reached after the
/// last action, kept so every step has a successor for transition statistics.
struct Trajectory {
  std::vector<Step> steps;
  std::vector<double> rtg;
  int final_state = 0;
  Domain domain = Domain::Target;

  std::size_t length() const { return steps.size(); }
  int next_state(std::size_t t) const {
    return t + 1 < steps.size() ? steps[t + 1].state : final_state;
  }
  /// Sum of rewards.
  double total_return() const;

  bool operator==(const Trajectory&) const = default;
};

/// Returns-to-go of the raw rewards, g_t = sum_{h >= t} r_h.
std::vector<double> returns_to_go(const std::vector<Step>& steps);

struct Dataset {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  std::vector<Trajectory> trajectories;
  std::string mdp_fingerprint;
  std::string behavior_policy_id;
  std::uint64_t seed = 0;
  /// Free-form provenance (mix order, augmentation parameters, ...).
  nlohmann::json metadata = nlohmann::json::object();

  std::size_t size() const { return trajectories.size(); }
  bool empty() const { return trajectories.empty(); }
  std::size_t num_transitions() const { return trajectories.size() * static_cast<std::size_t>(horizon); }
  std::size_t count(Domain domain) const;

  bool operator==(const Dataset&) const = default;
};

/// Throws if any trajectory has the wrong length or out-of-range indices.
void validate_shape(const Dataset& ds);

/// Samples n i.i.d. trajectories. Trajectory i is drawn from the sub-seed
/// derive_seed(seed, i), so the result does not depend on `jobs`.
Dataset collect(const TabularMdp& mdp, const StationaryPolicy& policy, std::size_t n,
                std::uint64_t seed, Domain domain = Domain::Target,
                const std::string& policy_id = "behavior", int jobs = 1);

Trajectory sample_trajectory(const TabularMdp& mdp, const StationaryPolicy& policy, Rng& rng,
                             Domain domain);

/// Context window over a trajectory with returns-to-go made consistent.
struct SlicedWindow {
  std::size_t start = 0;
  std::vector<Step> steps;
  std::vector<double> rtg;
};

/// Windows of length k at starts 0..H-k. The last rtg of each window is taken
/// from the trajectory; earlier entries are rebuilt as r_i + rtg_{i+1}.
/// With include_partial, shorter windows starting at H-k+1..H-1 are appended.
std::vector<SlicedWindow> consistent_return_slices(const Trajectory& traj, std::size_t k,
                                                   bool include_partial = false);

/// Target trajectories first, then source; optionally shuffled with a seed
/// recorded under metadata["mix"].
Dataset mix(const Dataset& target_ds, const Dataset& source_ds,
            std::optional<std::uint64_t> shuffle_seed = std::nullopt);

/// First n trajectories.
Dataset take(const Dataset& ds, std::size_t n);

inline constexpr int kDatasetFormatVersion = 1;

void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);
std::string dataset_to_jsonl(const Dataset& ds);
Dataset dataset_from_jsonl(std::istream& in);

/// Warning text when the dataset was not generated from `mdp`.
std::optional<std::string> check_fingerprint(const Dataset& ds, const TabularMdp& mdp);

}  // namespace radt
