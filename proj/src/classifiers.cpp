#include "radt/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "radt/rng.hpp"

namespace radt {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

const double kMaxLogit = std::log((1.0 - kClassifierEpsilon) / kClassifierEpsilon);

std::size_t feature_count(FeatureKind kind, int S, int A) {
  const auto sa = static_cast<std::size_t>(S) * A;
  return kind == FeatureKind::SAS ? sa * S : sa;
}

}  // namespace

std::string to_string(FeatureKind kind) { return kind == FeatureKind::SAS ? "sas" : "sa"; }

LogisticModel::LogisticModel(FeatureKind kind, int num_states, int num_actions)
    : LogisticModel(kind, num_states, num_actions,
                    std::vector<double>(feature_count(kind, num_states, num_actions), 0.0), 0.0) {}

LogisticModel::LogisticModel(FeatureKind kind, int num_states, int num_actions,
                             std::vector<double> weights, double bias)
    : kind_(kind), num_states_(num_states), num_actions_(num_actions), weights_(std::move(weights)), bias_(bias) {
  if (num_states_ <= 0 || num_actions_ <= 0) throw std::invalid_argument("LogisticModel: sizes");
  if (weights_.size() != feature_count(kind, num_states, num_actions)) {
    throw ShapeError("LogisticModel: weight vector length");
  }
  for (double w : weights_) {
    if (!std::isfinite(w)) throw std::invalid_argument("LogisticModel: non-finite weight");
  }
}

double LogisticModel::predict(int s, int a, int next) const {
  return std::clamp(sigmoid(logit(s, a, next)), kClassifierEpsilon, 1.0 - kClassifierEpsilon);
}

double cross_entropy(const LogisticModel& model, std::span<const LabeledTransition> batch, double l2,
                     std::vector<double>* grad) {
  const std::size_t nf = model.num_features();
  if (grad) grad->assign(nf + 1, 0.0);
  double total_weight = 0.0;
  for (const auto& ex : batch) total_weight += ex.weight;
  if (!(total_weight > 0.0)) throw std::invalid_argument("cross_entropy: empty batch");
  double loss = 0.0;
  for (const auto& ex : batch) {
    const double z = model.logit(ex.state, ex.action, ex.next_state);
    // -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
    loss += ex.weight * (softplus(z) - ex.label * z);
    if (grad) {
      const double dz = ex.weight * (sigmoid(z) - ex.label) / total_weight;
      (*grad)[model.feature(ex.state, ex.action, ex.next_state)] += dz;
      (*grad)[nf] += dz;
    }
  }
  loss /= total_weight;
  double sq = 0.0;
  for (std::size_t i = 0; i < nf; ++i) {
    const double w = model.weights()[i];
    sq += w * w;
    if (grad) (*grad)[i] += l2 * w;
  }
  return loss + 0.5 * l2 * sq;
}

std::vector<LabeledTransition> labeled_transitions(const Dataset& source_ds, const Dataset& target_ds) {
  const double n_source = static_cast<double>(source_ds.num_transitions());
  const double n_target = static_cast<double>(target_ds.num_transitions());
  const double total = n_source + n_target;
  std::vector<LabeledTransition> out;
  out.reserve(source_ds.num_transitions() + target_ds.num_transitions());
  auto append = [&](const Dataset& ds, double label, double weight) {
    for (const auto& traj : ds.trajectories) {
      for (std::size_t t = 0; t < traj.steps.size(); ++t) {
        out.push_back({traj.steps[t].state, traj.steps[t].action, traj.next_state(t), label, weight});
      }
    }
  };
  append(target_ds, 1.0, total / (2.0 * n_target));
  append(source_ds, 0.0, total / (2.0 * n_source));
  return out;
}

namespace {

struct RmsProp {
  std::vector<double> square;
  double decay = 0.99;
  double eps = 1e-8;

  void step(std::vector<double>& params, double& bias, const std::vector<double>& grad, double lr) {
    if (square.empty()) square.assign(grad.size(), 0.0);
    for (std::size_t i = 0; i < grad.size(); ++i) {
      square[i] = decay * square[i] + (1.0 - decay) * grad[i] * grad[i];
      const double delta = lr * grad[i] / (std::sqrt(square[i]) + eps);
      if (i < params.size()) {
        params[i] -= delta;
      } else {
        bias -= delta;
      }
    }
  }
};

std::vector<double> train_one(LogisticModel& model, const std::vector<LabeledTransition>& data,
                              const ClassifierConfig& cfg, std::uint64_t seed) {
  std::vector<double> history;
  history.push_back(cross_entropy(model, data, cfg.l2));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<LabeledTransition> batch;
  std::vector<double> grad;
  RmsProp opt;
  Rng rng(seed);
  const std::size_t batch_size = std::max<std::size_t>(1, cfg.batch);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Linear decay to 10% of the base rate over the run.
    const double frac = cfg.epochs > 1 ? static_cast<double>(epoch) / (cfg.epochs - 1) : 0.0;
    const double lr = cfg.lr * (1.0 - 0.9 * frac);
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
      const std::size_t end = std::min(order.size(), begin + batch_size);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(data[order[i]]);
      cross_entropy(model, batch, cfg.l2, &grad);
      opt.step(model.weights(), model.bias(), grad, lr);
    }
    history.push_back(cross_entropy(model, data, cfg.l2));
  }
  return history;
}

}  // namespace

ClassifierPair train_classifiers(const Dataset& source_ds, const Dataset& target_ds,
                                 const ClassifierConfig& cfg) {
  if (source_ds.empty() || target_ds.empty()) {
    throw std::invalid_argument("train_classifiers: both datasets must be nonempty");
  }
  if (source_ds.num_states != target_ds.num_states || source_ds.num_actions != target_ds.num_actions) {
    throw ShapeError("train_classifiers: datasets have different shapes");
  }
  const int S = source_ds.num_states;
  const int A = source_ds.num_actions;
  const auto data = labeled_transitions(source_ds, target_ds);
  ClassifierPair pair{LogisticModel(FeatureKind::SAS, S, A), LogisticModel(FeatureKind::SA, S, A), {}, {},
                      std::vector<bool>(static_cast<std::size_t>(S) * A * S, false)};
  for (const auto& ex : data) {
    pair.observed[(static_cast<std::size_t>(ex.state) * A + ex.action) * S + ex.next_state] = true;
  }
  pair.sas_loss = train_one(pair.sas, data, cfg, derive_seed(cfg.seed, 0));
  pair.sa_loss = train_one(pair.sa, data, cfg, derive_seed(cfg.seed, 1));
  return pair;
}

ClassifierPair bayes_classifier_oracle(const TabularMdp& source, const TabularMdp& target,
                                       std::span<const double> source_visitation,
                                       std::span<const double> target_visitation) {
  if (source.num_states() != target.num_states() || source.num_actions() != target.num_actions()) {
    throw ShapeError("bayes_classifier_oracle: MDP shapes differ");
  }
  const int S = source.num_states();
  const int A = source.num_actions();
  const auto nsa = static_cast<std::size_t>(S) * A;
  if (source_visitation.size() != nsa || target_visitation.size() != nsa) {
    throw ShapeError("bayes_classifier_oracle: visitation must be [s][a]");
  }
  for (auto vis : {source_visitation, target_visitation}) {
    const double total = std::accumulate(vis.begin(), vis.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("bayes_classifier_oracle: visitation must sum to 1");
  }
  auto log_odds = [](double num, double den) {
    if (num == 0.0 && den == 0.0) return 0.0;
    if (num == 0.0) return -kMaxLogit;
    if (den == 0.0) return kMaxLogit;
    return std::clamp(std::log(num) - std::log(den), -kMaxLogit, kMaxLogit);
  };
  std::vector<double> w_sas(nsa * S, 0.0);
  std::vector<double> w_sa(nsa, 0.0);
  std::vector<bool> observed(nsa * S, false);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const auto i = static_cast<std::size_t>(s) * A + a;
      w_sa[i] = log_odds(target_visitation[i], source_visitation[i]);
      for (int n = 0; n < S; ++n) {
        const double num = target.p(s, a, n) * target_visitation[i];
        const double den = source.p(s, a, n) * source_visitation[i];
        w_sas[i * S + n] = log_odds(num, den);
        observed[i * S + n] = num > 0.0 || den > 0.0;
      }
    }
  }
  return {LogisticModel(FeatureKind::SAS, S, A, std::move(w_sas), 0.0),
          LogisticModel(FeatureKind::SA, S, A, std::move(w_sa), 0.0), {}, {}, std::move(observed)};
}

ClassifierPair bayes_classifier_oracle(const TabularMdp& source, const TabularMdp& target,
                                       std::span<const double> visitation) {
  return bayes_classifier_oracle(source, target, visitation, visitation);
}

DeltaRTable delta_r(const LogisticModel& sas, const LogisticModel& sa, double clamp,
                    const std::vector<bool>* supported) {
  if (sas.kind() != FeatureKind::SAS || sa.kind() != FeatureKind::SA) {
    throw std::invalid_argument("delta_r: expected an (SAS, SA) model pair");
  }
  if (sas.num_states() != sa.num_states() || sas.num_actions() != sa.num_actions()) {
    throw ShapeError("delta_r: models do not share a feature vocabulary");
  }
  if (!(clamp >= 0.0)) throw std::invalid_argument("delta_r: clamp must be nonnegative");
  DeltaRTable table;
  table.num_states = sas.num_states();
  table.num_actions = sas.num_actions();
  table.clamp_bound = clamp;
  const int S = table.num_states;
  const int A = table.num_actions;
  table.values.assign(static_cast<std::size_t>(S) * A * S, 0.0);
  table.supported.assign(table.values.size(), true);
  if (supported) {
    if (supported->size() != table.values.size()) throw ShapeError("delta_r: support mask size");
    table.supported = *supported;
  }
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      for (int n = 0; n < S; ++n) {
        const auto i = table.index(s, a, n);
        if (!table.supported[i]) continue;
        table.values[i] = std::clamp(sas.logit(s, a, n) - sa.logit(s, a), -clamp, clamp);
      }
    }
  }
  return table;
}

DeltaRTable delta_r(const ClassifierPair& pair, double clamp) {
  return delta_r(pair.sas, pair.sa, clamp, &pair.observed);
}

nlohmann::json to_json(const LogisticModel& model) {
  return {{"feature_kind", to_string(model.kind())},
          {"num_states", model.num_states()},
          {"num_actions", model.num_actions()},
          {"weights", model.weights()},
          {"bias", model.bias()}};
}

LogisticModel logistic_from_json(const nlohmann::json& doc) {
  const auto kind_name = doc.at("feature_kind").get<std::string>();
  FeatureKind kind;
  if (kind_name == "sas") {
    kind = FeatureKind::SAS;
  } else if (kind_name == "sa") {
    kind = FeatureKind::SA;
  } else {
    throw std::invalid_argument("unknown feature_kind '" + kind_name + "'");
  }
  return LogisticModel(kind, doc.at("num_states").get<int>(), doc.at("num_actions").get<int>(),
                       doc.at("weights").get<std::vector<double>>(), doc.at("bias").get<double>());
}

nlohmann::json to_json(const DeltaRTable& table) {
  return {{"num_states", table.num_states},
          {"num_actions", table.num_actions},
          {"clamp_bound", table.clamp_bound},
          {"values", table.values},
          {"supported", table.supported}};
}

DeltaRTable delta_r_from_json(const nlohmann::json& doc) {
  DeltaRTable table;
  table.num_states = doc.at("num_states").get<int>();
  table.num_actions = doc.at("num_actions").get<int>();
  table.clamp_bound = doc.at("clamp_bound").get<double>();
  table.values = doc.at("values").get<std::vector<double>>();
  table.supported = doc.at("supported").get<std::vector<bool>>();
  const auto expected = static_cast<std::size_t>(table.num_states) * table.num_actions * table.num_states;
  if (table.values.size() != expected || table.supported.size() != expected) {
    throw ShapeError("delta_r JSON: table size");
  }
  return table;
}

}  // namespace radt
