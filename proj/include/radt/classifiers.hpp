#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "radt/data.hpp"
#include "radt/mdp.hpp"

namespace radt {

enum class FeatureKind { SAS, SA };

std::string to_string(FeatureKind kind);

/// Probability clamp for classifier outputs.
inline constexpr double kClassifierEpsilon = 1e-6;

/// Logistic model over one-hot (s,a,s') or (s,a) features plus a bias.
/// Positive logits favour the target domain.
class LogisticModel {
 public:
  LogisticModel(FeatureKind kind, int num_states, int num_actions);
  LogisticModel(FeatureKind kind, int num_states, int num_actions, std::vector<double> weights,
                double bias);

  FeatureKind kind() const { return kind_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  std::size_t num_features() const { return weights_.size(); }

  std::size_t feature(int s, int a, int next) const {
    const auto sa = static_cast<std::size_t>(s) * num_actions_ + a;
    return kind_ == FeatureKind::SAS ? sa * num_states_ + next : sa;
  }
  double logit(int s, int a, int next = 0) const { return weights_[feature(s, a, next)] + bias_; }
  /// P(target | features), clamped to [eps, 1 - eps].
  double predict(int s, int a, int next = 0) const;

  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& weights() { return weights_; }
  double bias() const { return bias_; }
  double& bias() { return bias_; }

 private:
  FeatureKind kind_;
  int num_states_;
  int num_actions_;
  std::vector<double> weights_;
  double bias_ = 0.0;
};

/// One labelled transition; label 1 = target, 0 = source.
struct LabeledTransition {
  int state = 0;
  int action = 0;
  int next_state = 0;
  double label = 0.0;
  double weight = 1.0;
};

/// Weighted mean cross-entropy plus 0.5 * l2 * |w|^2 (bias unpenalized).
/// When `grad` is non-null it receives d loss / d (weights..., bias).
double cross_entropy(const LogisticModel& model, std::span<const LabeledTransition> batch, double l2,
                     std::vector<double>* grad = nullptr);

struct ClassifierConfig {
  double lr = 0.02;
  int epochs = 60;
  std::size_t batch = 256;
  std::uint64_t seed = 0;
  double l2 = 1e-6;
};

struct ClassifierPair {
  LogisticModel sas;
  LogisticModel sa;
  /// Full training-set loss before training and after each epoch.
  std::vector<double> sas_loss;
  std::vector<double> sa_loss;
  /// Transitions observed in either dataset, [s][a][s'].
  std::vector<bool> observed;
};

/// Every (s, a, s') of a dataset, labelled by domain, with balanced class
/// weights N / (2 N_class).
std::vector<LabeledTransition> labeled_transitions(const Dataset& source_ds, const Dataset& target_ds);

/// Mini-batch RMSprop on class-balanced cross-entropy.
ClassifierPair train_classifiers(const Dataset& source_ds, const Dataset& target_ds,
                                 const ClassifierConfig& cfg);

/// Models whose logits are the exact Bayes log-odds under equal class priors.
/// Visitation tables are [s][a] and must sum to 1.
ClassifierPair bayes_classifier_oracle(const TabularMdp& source, const TabularMdp& target,
                                       std::span<const double> source_visitation,
                                       std::span<const double> target_visitation);
ClassifierPair bayes_classifier_oracle(const TabularMdp& source, const TabularMdp& target,
                                       std::span<const double> visitation);

/// Dynamics reward correction, [s][a][s'].
struct DeltaRTable {
  int num_states = 0;
  int num_actions = 0;
  double clamp_bound = 0.0;
  std::vector<double> values;
  std::vector<bool> supported;

  std::size_t index(int s, int a, int next) const {
    return (static_cast<std::size_t>(s) * num_actions + a) * num_states + next;
  }
  double at(int s, int a, int next) const { return values[index(s, a, next)]; }
  bool is_supported(int s, int a, int next) const { return supported[index(s, a, next)]; }
};

/// delta_r(s,a,s') = clamp(logit_sas(s,a,s') - logit_sa(s,a), -clamp, clamp).
/// Entries outside `supported` (when given) are 0.
DeltaRTable delta_r(const LogisticModel& sas, const LogisticModel& sa, double clamp,
                    const std::vector<bool>* supported = nullptr);
DeltaRTable delta_r(const ClassifierPair& pair, double clamp);

inline constexpr double kDefaultDeltaRClamp = 10.0;

nlohmann::json to_json(const LogisticModel& model);
LogisticModel logistic_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const DeltaRTable& table);
DeltaRTable delta_r_from_json(const nlohmann::json& doc);

}  // namespace radt
