#include "radt/envs.hpp"

#include <algorithm>
#include <initializer_list>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "radt/rng.hpp"

namespace radt {

TabularMdp chain_walk(int num_states, double success, int horizon) {
  if (num_states < 2) throw std::invalid_argument("chain_walk: need at least 2 states");
  if (!(success >= 0.0 && success <= 1.0)) throw std::invalid_argument("chain_walk: success");
  const int S = num_states;
  const int A = 2;
  std::vector<double> transition(static_cast<std::size_t>(S) * A * S, 0.0);
  std::vector<double> reward(static_cast<std::size_t>(S) * A, 0.0);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const int target = a == 0 ? std::max(0, s - 1) : std::min(S - 1, s + 1);
      auto* row = transition.data() + (static_cast<std::size_t>(s) * A + a) * S;
      row[target] += success;
      row[s] += 1.0 - success;
      reward[static_cast<std::size_t>(s) * A + a] = s == S - 1 ? 1.0 : 0.0;
    }
  }
  std::vector<double> init(S, 0.0);
  init[0] = 1.0;
  return TabularMdp(S, A, horizon, 1.0, std::move(transition), std::move(reward), std::move(init));
}

TabularMdp two_state(double p_keep, int horizon) {
  if (!(p_keep >= 0.0 && p_keep <= 1.0)) throw std::invalid_argument("two_state: p_keep");
  std::vector<double> transition(8, 0.0);
  for (int s = 0; s < 2; ++s) {
    auto* keep = transition.data() + (static_cast<std::size_t>(s) * 2 + 0) * 2;
    keep[s] = p_keep;
    keep[1 - s] = 1.0 - p_keep;
    auto* flip = transition.data() + (static_cast<std::size_t>(s) * 2 + 1) * 2;
    flip[1 - s] = p_keep;
    flip[s] = 1.0 - p_keep;
  }
  std::vector<double> reward{0.0, 0.0, 1.0, 1.0};
  return TabularMdp(2, 2, horizon, 1.0, std::move(transition), std::move(reward), {0.5, 0.5});
}

TabularMdp random_mdp(int num_states, int num_actions, int horizon, std::uint64_t seed,
                      int reward_levels, int branching) {
  if (num_states <= 0 || num_actions <= 0 || reward_levels <= 0 || branching <= 0) {
    throw std::invalid_argument("random_mdp: sizes must be positive");
  }
  Rng rng(seed);
  const int S = num_states;
  const int A = num_actions;
  const int k = std::min(branching, S);
  std::vector<double> transition(static_cast<std::size_t>(S) * A * S, 0.0);
  std::vector<double> reward(static_cast<std::size_t>(S) * A, 0.0);
  std::vector<int> order(S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      std::iota(order.begin(), order.end(), 0);
      rng.shuffle(std::span<int>(order));
      auto* row = transition.data() + (static_cast<std::size_t>(s) * A + a) * S;
      double total = 0.0;
      for (int i = 0; i < k; ++i) {
        row[order[i]] = rng.exponential();
        total += row[order[i]];
      }
      for (int i = 0; i < S; ++i) row[i] /= total;
      reward[static_cast<std::size_t>(s) * A + a] = static_cast<double>(rng.below(reward_levels));
    }
  }
  std::vector<double> init(S, 0.0);
  init[0] = 1.0;
  return TabularMdp(S, A, horizon, 1.0, std::move(transition), std::move(reward), std::move(init));
}

namespace {

const std::string* lookup(const std::map<std::string, std::string>& params, const std::string& key) {
  const auto it = params.find(key);
  return it == params.end() ? nullptr : &it->second;
}

double get_double(const std::map<std::string, std::string>& params, const std::string& key,
                  double fallback) {
  const auto* text = lookup(params, key);
  if (!text) return fallback;
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(*text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text->size()) {
    throw std::invalid_argument("parameter '" + key + "' is not a number: '" + *text + "'");
  }
  return value;
}

int get_int(const std::map<std::string, std::string>& params, const std::string& key, int fallback) {
  const auto* text = lookup(params, key);
  if (!text) return fallback;
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(*text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text->size()) {
    throw std::invalid_argument("parameter '" + key + "' is not an integer: '" + *text + "'");
  }
  return value;
}

void check_keys(const std::string& name, const std::map<std::string, std::string>& params,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : params) {
    bool known = false;
    for (const char* k : allowed) known = known || key == k;
    if (!known) throw std::invalid_argument("unknown parameter '" + key + "' for environment '" + name + "'");
  }
}

}  // namespace

TabularMdp make_builtin(const std::string& name, const std::map<std::string, std::string>& params) {
  if (name == "chainwalk") {
    check_keys(name, params, {"states", "success", "horizon"});
    return chain_walk(get_int(params, "states", 5), get_double(params, "success", 0.9),
                      get_int(params, "horizon", 5));
  }
  if (name == "twostate") {
    check_keys(name, params, {"p_keep", "horizon"});
    return two_state(get_double(params, "p_keep", 0.9), get_int(params, "horizon", 1));
  }
  if (name == "random") {
    check_keys(name, params, {"states", "actions", "horizon", "seed", "reward_levels", "branching"});
    return random_mdp(get_int(params, "states", 5), get_int(params, "actions", 2),
                      get_int(params, "horizon", 5),
                      static_cast<std::uint64_t>(get_int(params, "seed", 0)),
                      get_int(params, "reward_levels", 3), get_int(params, "branching", 3));
  }
  throw std::invalid_argument("unknown builtin environment '" + name + "'");
}

}  // namespace radt
