#pragma once

#include "spg/checks.hpp"
#include "spg/game.hpp"

namespace spg {

// Discretized dual MDP: one representative state per grid point, one row per
// (state, joint action). Rewards are potential evaluations.
struct TabularMdp {
  std::vector<Vec> states;
  std::vector<Vec> joint_actions;
  // n_agents and per-agent action index factorization of joint_actions:
  // joint index = sum_i idx_i * stride_i (last agent fastest).
  int n_agents = 1;
  std::vector<int> actions_per_agent;
  std::vector<Vec> reward;      // [state][action]
  std::vector<std::vector<Vec>> transition;  // [state][action] -> dist
  double discount = 0.9;

  int n_states() const { return static_cast<int>(states.size()); }
  int n_actions() const { return static_cast<int>(joint_actions.size()); }
  void validate() const;  // rows sum to 1 +- 1e-9

  int joint_index(const std::vector<int>& per_agent) const;
  std::vector<int> factor_index(int joint) const;
};

struct ValueIterationResult {
  Vec values;
  std::vector<int> greedy;   // joint action index per state (lowest-index ties)
  Vec sup_deltas;            // sup-norm change per sweep
  int iterations = 0;
};

// Monte-Carlo discretization: transition rows estimated by nearest-grid-point
// frequencies over mc_samples draws per (state, action). The joint action
// grid is the product of the per-agent grids, last agent fastest.
TabularMdp discretize(const GameSpec& game, const std::vector<Vec>& state_grid,
                      const std::vector<std::vector<Vec>>& per_agent_actions,
                      int mc_samples, Rng& rng, const PotentialFn& phi);

// Builds the product grid of per-agent action grids (last agent fastest).
std::vector<Vec> joint_action_grid(const std::vector<std::vector<Vec>>& per_agent);

ValueIterationResult value_iteration(const TabularMdp& mdp, double tol,
                                     const Vec* v0 = nullptr);

// Expected discounted value of agent `i` when it plays tabular policy
// `policy_i` (state -> own action index) and the others follow `joint_policy`.
// reward_i maps (state, joint action) to agent i's reward.
Vec tabular_agent_values(const TabularMdp& mdp,
                         const std::vector<Vec>& reward_i,
                         const std::vector<int>& joint_policy,
                         int agent, const std::vector<int>& policy_i,
                         double tol = 1e-10);

// MPE certificate: true when no single-agent tabular deviation from the
// greedy joint policy improves that agent's own value anywhere.
bool mpe_certificate(const TabularMdp& mdp, const GameSpec& game,
                     const std::vector<int>& greedy, double slack = 1e-9);

}  // namespace spg
