#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "radt/data.hpp"
#include "radt/mdp.hpp"
#include "radt/rng.hpp"

namespace radt {

/// Conditioning value outside the behavior policy's return coverage.
class CoverageError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Training loss became non-finite.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, int last_finite_epoch)
      : std::runtime_error(what), last_finite_epoch_(last_finite_epoch) {}
  int last_finite_epoch() const { return last_finite_epoch_; }

 private:
  int last_finite_epoch_;
};

/// Maps a return to an integer bin; grid returns land on bin centers when
/// width equals the reward grid.
struct ReturnBinner {
  double width = 1.0;
  double origin = 0.0;

  std::int64_t bin(double g) const;
  double center(std::int64_t b) const { return origin + static_cast<double>(b) * width; }
};

/// pi(a | s, g) with an optional dependence on the timestep.
class ReturnConditionedPolicy {
 public:
  virtual ~ReturnConditionedPolicy() = default;
  virtual int num_states() const = 0;
  virtual int num_actions() const = 0;
  /// Writes the action law into `out`. Returns false when (t, s, g) was never
  /// seen and `out` holds the uniform fallback.
  virtual bool action_probs(int t, int s, double g, std::span<double> out) const = 0;
};

/// Count-based conditional pi(a | s, bin(g)) (optionally also keyed by t).
class TabularRcslPolicy final : public ReturnConditionedPolicy {
 public:
  struct Key {
    int slice = 0;
    int state = 0;
    std::int64_t bin = 0;
    auto operator<=>(const Key&) const = default;
  };

  TabularRcslPolicy(int num_states, int num_actions, ReturnBinner binner, double smoothing,
                    bool time_indexed);

  int num_states() const override { return num_states_; }
  int num_actions() const override { return num_actions_; }
  bool action_probs(int t, int s, double g, std::span<double> out) const override;

  const ReturnBinner& binner() const { return binner_; }
  double smoothing() const { return smoothing_; }
  bool time_indexed() const { return time_indexed_; }
  const std::map<Key, std::vector<double>>& counts() const { return counts_; }
  void add(int t, int s, double g, int a, double weight = 1.0);

 private:
  int num_states_;
  int num_actions_;
  ReturnBinner binner_;
  double smoothing_;
  bool time_indexed_;
  std::map<Key, std::vector<double>> counts_;
};

/// Exact co-occurrence counts of (s_t, bin(rtg_t), a_t), the empirical NLL
/// maximizer over tabular conditionals.
TabularRcslPolicy fit_tabular(const Dataset& ds, const ReturnBinner& binner, double smoothing = 0.0,
                              bool time_indexed = false);

struct NeuralConfig {
  int hidden = 64;
  double lr = 3e-4;
  int epochs = 50;
  std::size_t batch = 64;
  std::uint64_t seed = 0;
  bool time_indexed = false;
};

struct NeuralSample {
  int t = 0;
  int state = 0;
  double g = 0.0;
  int action = 0;
};

/// One tanh hidden layer over [one-hot(s), one-hot(t)?, normalized g] with a
/// softmax head. Parameters are a single flat vector:
/// W1 (hidden x input), b1 (hidden), W2 (actions x hidden), b2 (actions).
class NeuralRcslPolicy final : public ReturnConditionedPolicy {
 public:
  NeuralRcslPolicy(int num_states, int num_actions, int horizon, const NeuralConfig& cfg, double g_shift,
                   double g_scale);

  int num_states() const override { return num_states_; }
  int num_actions() const override { return num_actions_; }
  bool action_probs(int t, int s, double g, std::span<double> out) const override;

  std::size_t input_size() const;
  std::size_t num_params() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  const NeuralConfig& config() const { return cfg_; }
  int horizon() const { return horizon_; }
  double g_shift() const { return g_shift_; }
  double g_scale() const { return g_scale_; }

  /// Mean NLL over the samples; gradient w.r.t. params when `grad` is given.
  double nll(std::span<const NeuralSample> samples, std::vector<double>* grad = nullptr) const;

 private:
  void forward(int t, int s, double g, std::vector<double>& hidden, std::span<double> probs) const;

  int num_states_;
  int num_actions_;
  int horizon_;
  NeuralConfig cfg_;
  double g_shift_;
  double g_scale_;
  std::vector<double> params_;
};

struct NeuralFit {
  NeuralRcslPolicy policy;
  std::vector<double> loss;  // training NLL before training and after each epoch
};

std::vector<NeuralSample> neural_samples(const Dataset& ds);

/// Mini-batch Adam on the NLL with seeded shuffling.
NeuralFit fit_neural(const Dataset& ds, const NeuralConfig& cfg);

/// Infinite-data RCSL policy from an exact joint occupancy:
/// pi(a | t, s, f) = P(s_t=s, a_t=a, g_t=f) / P(s_t=s, g_t=f).
class OracleRcslPolicy final : public ReturnConditionedPolicy {
 public:
  explicit OracleRcslPolicy(JointOccupancy occupancy) : occ_(std::move(occupancy)) {}

  int num_states() const override { return occ_.joint.num_states(); }
  int num_actions() const override { return occ_.joint.num_actions(); }
  bool action_probs(int t, int s, double g, std::span<double> out) const override;

  const JointOccupancy& occupancy() const { return occ_; }

 private:
  JointOccupancy occ_;
};

/// Exact conditional action law; throws CoverageError when P(g = f | s_t = s)
/// is zero or f is off the return grid.
std::vector<double> oracle_rcsl_policy(const JointOccupancy& occ, double f_value, int t, int s);
std::vector<double> oracle_rcsl_policy(const TabularMdp& mdp, const StationaryPolicy& beta, double f_value,
                                       int t, int s);

/// Wraps a time-indexed policy so it can be evaluated as return-conditioned;
/// the conditioning value is ignored.
class UnconditionedPolicy final : public ReturnConditionedPolicy {
 public:
  explicit UnconditionedPolicy(StationaryPolicy policy) : policy_(std::move(policy)) {}
  int num_states() const override { return policy_.num_states(); }
  int num_actions() const override { return policy_.num_actions(); }
  bool action_probs(int t, int s, double g, std::span<double> out) const override;

 private:
  StationaryPolicy policy_;
};

/// f(s_{t+1}) = f(s_t) - r_t, starting from initial_target.
struct ConditioningFunction {
  double initial_target = 0.0;

  double next(double current, double reward) const { return current - reward; }
};

int act(const ReturnConditionedPolicy& policy, int t, int s, double g, Rng& rng, bool* fallback = nullptr);

struct Rollout {
  Trajectory trajectory;
  std::vector<double> conditioning;  // f_t at each step
  std::size_t fallbacks = 0;
};

Rollout rollout(const ReturnConditionedPolicy& policy, const TabularMdp& mdp, const ConditioningFunction& f,
                std::uint64_t seed);

nlohmann::json to_json(const TabularRcslPolicy& policy);
TabularRcslPolicy tabular_policy_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const NeuralRcslPolicy& policy);
NeuralRcslPolicy neural_policy_from_json(const nlohmann::json& doc);

}  // namespace radt
