#include "radt/rcsl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace radt {

std::int64_t ReturnBinner::bin(double g) const {
  return static_cast<std::int64_t>(std::llround((g - origin) / width));
}

TabularRcslPolicy::TabularRcslPolicy(int num_states, int num_actions, ReturnBinner binner, double smoothing,
                                     bool time_indexed)
    : num_states_(num_states),
      num_actions_(num_actions),
      binner_(binner),
      smoothing_(smoothing),
      time_indexed_(time_indexed) {
  if (num_states_ <= 0 || num_actions_ <= 0) throw std::invalid_argument("TabularRcslPolicy: sizes");
  if (!(binner_.width > 0.0)) throw std::invalid_argument("TabularRcslPolicy: bin width must be positive");
  if (!(smoothing_ >= 0.0)) throw std::invalid_argument("TabularRcslPolicy: smoothing must be nonnegative");
}

void TabularRcslPolicy::add(int t, int s, double g, int a, double weight) {
  const Key key{time_indexed_ ? t : 0, s, binner_.bin(g)};
  auto [it, inserted] = counts_.try_emplace(key, std::vector<double>(num_actions_, 0.0));
  it->second[a] += weight;
}

bool TabularRcslPolicy::action_probs(int t, int s, double g, std::span<double> out) const {
  const auto it = counts_.find(Key{time_indexed_ ? t : 0, s, binner_.bin(g)});
  if (it == counts_.end()) {
    std::fill(out.begin(), out.end(), 1.0 / num_actions_);
    return false;
  }
  const auto& c = it->second;
  const double total = std::accumulate(c.begin(), c.end(), 0.0) + smoothing_ * num_actions_;
  if (std::isinf(smoothing_)) {
    std::fill(out.begin(), out.end(), 1.0 / num_actions_);
    return true;
  }
  for (int a = 0; a < num_actions_; ++a) out[a] = (c[a] + smoothing_) / total;
  return true;
}

TabularRcslPolicy fit_tabular(const Dataset& ds, const ReturnBinner& binner, double smoothing,
                              bool time_indexed) {
  if (ds.empty()) throw std::invalid_argument("fit_tabular: empty dataset");
  TabularRcslPolicy policy(ds.num_states, ds.num_actions, binner, smoothing, time_indexed);
  for (const auto& traj : ds.trajectories) {
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      policy.add(static_cast<int>(t), traj.steps[t].state, traj.rtg[t], traj.steps[t].action);
    }
  }
  return policy;
}

NeuralRcslPolicy::NeuralRcslPolicy(int num_states, int num_actions, int horizon, const NeuralConfig& cfg,
                                   double g_shift, double g_scale)
    : num_states_(num_states),
      num_actions_(num_actions),
      horizon_(horizon),
      cfg_(cfg),
      g_shift_(g_shift),
      g_scale_(g_scale) {
  if (num_states_ <= 0 || num_actions_ <= 0 || horizon_ <= 0 || cfg_.hidden <= 0) {
    throw std::invalid_argument("NeuralRcslPolicy: sizes must be positive");
  }
  if (!(g_scale_ > 0.0)) throw std::invalid_argument("NeuralRcslPolicy: g_scale must be positive");
  const std::size_t in = input_size();
  const auto hid = static_cast<std::size_t>(cfg_.hidden);
  const auto na = static_cast<std::size_t>(num_actions_);
  params_.assign(hid * in + hid + na * hid + na, 0.0);
  Rng rng(derive_seed(cfg_.seed, 0x6e6e));
  const double s1 = std::sqrt(2.0 / static_cast<double>(in + hid));
  const double s2 = std::sqrt(2.0 / static_cast<double>(hid + na));
  for (std::size_t i = 0; i < hid * in; ++i) params_[i] = s1 * rng.normal();
  const std::size_t w2 = hid * in + hid;
  for (std::size_t i = 0; i < na * hid; ++i) params_[w2 + i] = s2 * rng.normal();
}

std::size_t NeuralRcslPolicy::input_size() const {
  return static_cast<std::size_t>(num_states_) + (cfg_.time_indexed ? static_cast<std::size_t>(horizon_) : 0) + 1;
}

void NeuralRcslPolicy::forward(int t, int s, double g, std::vector<double>& hidden, std::span<double> probs) const {
  const std::size_t in = input_size();
  const auto hid = static_cast<std::size_t>(cfg_.hidden);
  const double* w1 = params_.data();
  const double* b1 = w1 + hid * in;
  const double* w2 = b1 + hid;
  const double* b2 = w2 + static_cast<std::size_t>(num_actions_) * hid;
  const double gn = (g - g_shift_) / g_scale_;
  const std::size_t t_col = static_cast<std::size_t>(num_states_) + static_cast<std::size_t>(t);
  hidden.resize(hid);
  for (std::size_t j = 0; j < hid; ++j) {
    const double* row = w1 + j * in;
    double z = b1[j] + row[s] + row[in - 1] * gn;
    if (cfg_.time_indexed) z += row[t_col];
    hidden[j] = std::tanh(z);
  }
  double zmax = -INFINITY;
  for (int k = 0; k < num_actions_; ++k) {
    const double* row = w2 + static_cast<std::size_t>(k) * hid;
    double z = b2[k];
    for (std::size_t j = 0; j < hid; ++j) z += row[j] * hidden[j];
    probs[k] = z;
    zmax = std::max(zmax, z);
  }
  double total = 0.0;
  for (int k = 0; k < num_actions_; ++k) total += probs[k] = std::exp(probs[k] - zmax);
  for (int k = 0; k < num_actions_; ++k) probs[k] /= total;
}

bool NeuralRcslPolicy::action_probs(int t, int s, double g, std::span<double> out) const {
  std::vector<double> hidden;
  forward(std::clamp(t, 0, horizon_ - 1), s, g, hidden, out);
  return true;
}

double NeuralRcslPolicy::nll(std::span<const NeuralSample> samples, std::vector<double>* grad) const {
  if (samples.empty()) throw std::invalid_argument("NeuralRcslPolicy::nll: no samples");
  const std::size_t in = input_size();
  const auto hid = static_cast<std::size_t>(cfg_.hidden);
  const auto na = static_cast<std::size_t>(num_actions_);
  const std::size_t off_b1 = hid * in;
  const std::size_t off_w2 = off_b1 + hid;
  const std::size_t off_b2 = off_w2 + na * hid;
  if (grad) grad->assign(params_.size(), 0.0);
  std::vector<double> hidden;
  std::vector<double> probs(na);
  std::vector<double> dh(hid);
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  double loss = 0.0;
  for (const auto& x : samples) {
    forward(x.t, x.state, x.g, hidden, probs);
    loss -= std::log(std::max(probs[x.action], 1e-300));
    if (!grad) continue;
    auto& gr = *grad;
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t k = 0; k < na; ++k) {
      const double dz = (probs[k] - (static_cast<int>(k) == x.action ? 1.0 : 0.0)) * inv_n;
      gr[off_b2 + k] += dz;
      const double* w2row = params_.data() + off_w2 + k * hid;
      double* g2row = gr.data() + off_w2 + k * hid;
      for (std::size_t j = 0; j < hid; ++j) {
        g2row[j] += dz * hidden[j];
        dh[j] += dz * w2row[j];
      }
    }
    const double gn = (x.g - g_shift_) / g_scale_;
    const std::size_t t_col = static_cast<std::size_t>(num_states_) + static_cast<std::size_t>(x.t);
    for (std::size_t j = 0; j < hid; ++j) {
      const double dpre = dh[j] * (1.0 - hidden[j] * hidden[j]);
      double* g1row = gr.data() + j * in;
      g1row[x.state] += dpre;
      g1row[in - 1] += dpre * gn;
      if (cfg_.time_indexed) g1row[t_col] += dpre;
      gr[off_b1 + j] += dpre;
    }
  }
  return loss * inv_n;
}

std::vector<NeuralSample> neural_samples(const Dataset& ds) {
  std::vector<NeuralSample> out;
  out.reserve(ds.num_transitions());
  for (const auto& traj : ds.trajectories) {
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      out.push_back({static_cast<int>(t), traj.steps[t].state, traj.rtg[t], traj.steps[t].action});
    }
  }
  return out;
}

NeuralFit fit_neural(const Dataset& ds, const NeuralConfig& cfg) {
  if (ds.empty()) throw std::invalid_argument("fit_neural: empty dataset");
  const auto samples = neural_samples(ds);
  double mean = 0.0;
  for (const auto& x : samples) mean += x.g;
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  for (const auto& x : samples) var += (x.g - mean) * (x.g - mean);
  const double sd = std::sqrt(var / static_cast<double>(samples.size()));
  NeuralFit fit{NeuralRcslPolicy(ds.num_states, ds.num_actions, ds.horizon, cfg, mean, sd > 1e-12 ? sd : 1.0), {}};
  auto& policy = fit.policy;
  fit.loss.push_back(policy.nll(samples));

  auto& params = policy.params();
  std::vector<double> m(params.size(), 0.0);
  std::vector<double> v(params.size(), 0.0);
  std::vector<double> grad;
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<NeuralSample> batch;
  Rng rng(derive_seed(cfg.seed, 0x5f5f));
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  std::uint64_t step = 0;
  const std::size_t batch_size = std::max<std::size_t>(1, cfg.batch);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
      const std::size_t end = std::min(order.size(), begin + batch_size);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(samples[order[i]]);
      policy.nll(batch, &grad);
      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        params[i] -= cfg.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
      }
    }
    const double loss = policy.nll(samples);
    const bool params_finite = std::all_of(params.begin(), params.end(), [](double w) { return std::isfinite(w); });
    if (!std::isfinite(loss) || !params_finite) {
      throw TrainingDiverged("fit_neural: loss became non-finite at epoch " + std::to_string(epoch + 1), epoch);
    }
    fit.loss.push_back(loss);
  }
  return fit;
}

std::vector<double> oracle_rcsl_policy(const JointOccupancy& occ, double f_value, int t, int s) {
  const auto& joint = occ.joint;
  if (t < 0 || t >= joint.horizon() || s < 0 || s >= joint.num_states()) {
    throw std::out_of_range("oracle_rcsl_policy: (t, s) out of range");
  }
  const double units = f_value / joint.grid();
  const double rounded = std::round(units);
  if (std::abs(units - rounded) > 1e-9 * std::max(1.0, std::abs(units))) {
    throw CoverageError("return coverage violated: f = " + std::to_string(f_value) +
                        " is not on the return grid");
  }
  const auto k = static_cast<std::int64_t>(rounded);
  std::vector<double> probs(joint.num_actions(), 0.0);
  double total = 0.0;
  for (int a = 0; a < joint.num_actions(); ++a) total += probs[a] = joint.mass_at_units(t, s, a, k);
  if (!(total > 0.0)) {
    throw CoverageError("return coverage violated: P(g = " + std::to_string(f_value) + " | t = " +
                        std::to_string(t) + ", s = " + std::to_string(s) + ") is zero");
  }
  for (double& p : probs) p /= total;
  return probs;
}

std::vector<double> oracle_rcsl_policy(const TabularMdp& mdp, const StationaryPolicy& beta, double f_value,
                                       int t, int s) {
  return oracle_rcsl_policy(joint_occupancy(mdp, beta), f_value, t, s);
}

bool OracleRcslPolicy::action_probs(int t, int s, double g, std::span<double> out) const {
  try {
    const auto probs = oracle_rcsl_policy(occ_, g, t, s);
    std::copy(probs.begin(), probs.end(), out.begin());
    return true;
  } catch (const CoverageError&) {
    std::fill(out.begin(), out.end(), 1.0 / num_actions());
    return false;
  }
}

bool UnconditionedPolicy::action_probs(int t, int s, double, std::span<double> out) const {
  const auto row = policy_.row(t, s);
  std::copy(row.begin(), row.end(), out.begin());
  return true;
}

int act(const ReturnConditionedPolicy& policy, int t, int s, double g, Rng& rng, bool* fallback) {
  std::vector<double> probs(policy.num_actions());
  const bool seen = policy.action_probs(t, s, g, probs);
  if (fallback) *fallback = !seen;
  return static_cast<int>(rng.categorical(probs));
}

Rollout rollout(const ReturnConditionedPolicy& policy, const TabularMdp& mdp, const ConditioningFunction& f,
                std::uint64_t seed) {
  if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions()) {
    throw ShapeError("rollout: policy does not match MDP");
  }
  Rng rng(seed);
  Rollout out;
  out.trajectory.domain = Domain::Target;
  int s = static_cast<int>(rng.categorical(mdp.initial_dist()));
  double current = f.initial_target;
  for (int t = 0; t < mdp.horizon(); ++t) {
    bool fallback = false;
    const int a = act(policy, t, s, current, rng, &fallback);
    out.fallbacks += fallback ? 1 : 0;
    out.conditioning.push_back(current);
    const double r = mdp.r(s, a);
    out.trajectory.steps.push_back({s, a, r});
    s = static_cast<int>(rng.categorical(mdp.row(s, a)));
    current = f.next(current, r);
  }
  out.trajectory.final_state = s;
  out.trajectory.rtg = returns_to_go(out.trajectory.steps);
  return out;
}

nlohmann::json to_json(const TabularRcslPolicy& policy) {
  nlohmann::json counts = nlohmann::json::array();
  for (const auto& [key, c] : policy.counts()) counts.push_back({key.slice, key.state, key.bin, c});
  return {{"kind", "tabular"},
          {"num_states", policy.num_states()},
          {"num_actions", policy.num_actions()},
          {"bin_width", policy.binner().width},
          {"bin_origin", policy.binner().origin},
          {"smoothing", policy.smoothing()},
          {"time_indexed", policy.time_indexed()},
          {"counts", std::move(counts)}};
}

TabularRcslPolicy tabular_policy_from_json(const nlohmann::json& doc) {
  if (doc.at("kind") != "tabular") throw std::invalid_argument("policy JSON: not a tabular policy");
  TabularRcslPolicy policy(doc.at("num_states").get<int>(), doc.at("num_actions").get<int>(),
                           ReturnBinner{doc.at("bin_width").get<double>(), doc.at("bin_origin").get<double>()},
                           doc.at("smoothing").get<double>(), doc.at("time_indexed").get<bool>());
  for (const auto& entry : doc.at("counts")) {
    const int slice = entry.at(0).get<int>();
    const int s = entry.at(1).get<int>();
    const auto bin = entry.at(2).get<std::int64_t>();
    const auto c = entry.at(3).get<std::vector<double>>();
    if (c.size() != static_cast<std::size_t>(policy.num_actions())) throw ShapeError("policy JSON: count row");
    for (int a = 0; a < policy.num_actions(); ++a) {
      if (c[a] != 0.0) policy.add(slice, s, policy.binner().center(bin), a, c[a]);
    }
  }
  return policy;
}

nlohmann::json to_json(const NeuralRcslPolicy& policy) {
  const auto& cfg = policy.config();
  return {{"kind", "neural"},
          {"num_states", policy.num_states()},
          {"num_actions", policy.num_actions()},
          {"horizon", policy.horizon()},
          {"hidden", cfg.hidden},
          {"lr", cfg.lr},
          {"epochs", cfg.epochs},
          {"batch", cfg.batch},
          {"seed", cfg.seed},
          {"time_indexed", cfg.time_indexed},
          {"g_shift", policy.g_shift()},
          {"g_scale", policy.g_scale()},
          {"params", policy.params()}};
}

NeuralRcslPolicy neural_policy_from_json(const nlohmann::json& doc) {
  if (doc.at("kind") != "neural") throw std::invalid_argument("policy JSON: not a neural policy");
  NeuralConfig cfg;
  cfg.hidden = doc.at("hidden").get<int>();
  cfg.lr = doc.at("lr").get<double>();
  cfg.epochs = doc.at("epochs").get<int>();
  cfg.batch = doc.at("batch").get<std::size_t>();
  cfg.seed = doc.at("seed").get<std::uint64_t>();
  cfg.time_indexed = doc.at("time_indexed").get<bool>();
  NeuralRcslPolicy policy(doc.at("num_states").get<int>(), doc.at("num_actions").get<int>(),
                          doc.at("horizon").get<int>(), cfg, doc.at("g_shift").get<double>(),
                          doc.at("g_scale").get<double>());
  auto params = doc.at("params").get<std::vector<double>>();
  if (params.size() != policy.num_params()) throw ShapeError("policy JSON: parameter count");
  policy.params() = std::move(params);
  return policy;
}

}  // namespace radt
