#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "radt/mdp.hpp"

namespace radt {

/// Chain of `num_states` cells, actions {0: left, 1: right}. The intended move
/// succeeds with probability `success`, otherwise the agent stays put. Moves
/// past either end are clamped. Reward 1 for every step taken while standing
/// on the rightmost cell. Episodes start in cell 0.
TabularMdp chain_walk(int num_states = 5, double success = 0.9, int horizon = 5);

/// Two states, two actions. Action 0 keeps the current state with probability
/// `p_keep`, action 1 switches state with probability `p_keep`. Reward 1 for
/// acting in state 1. Start distribution uniform.
TabularMdp two_state(double p_keep, int horizon = 1);

/// Random MDP: each transition row is supported on at most `branching`
/// next states with uniform-simplex weights; rewards are integers drawn from
/// {0, ..., reward_levels - 1}. Start state 0.
TabularMdp random_mdp(int num_states, int num_actions, int horizon, std::uint64_t seed,
                      int reward_levels = 3, int branching = 3);

/// Builds a named builtin ("chainwalk", "twostate", "random") from string params.
TabularMdp make_builtin(const std::string& name, const std::map<std::string, std::string>& params);

}  // namespace radt
