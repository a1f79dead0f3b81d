#include "spg/tabular.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace spg {

void TabularMdp::validate() const {
  for (const auto& rows : transition)
    for (const auto& row : rows) {
      double s = 0.0;
      for (double p : row) s += p;
      if (std::fabs(s - 1.0) > 1e-9)
        throw std::runtime_error("TabularMdp: transition row sums to " +
                                 std::to_string(s));
    }
}

int TabularMdp::joint_index(const std::vector<int>& per_agent) const {
  int idx = 0;
  for (int i = 0; i < n_agents; ++i) idx = idx * actions_per_agent[i] + per_agent[i];
  return idx;
}

std::vector<int> TabularMdp::factor_index(int joint) const {
  std::vector<int> out(n_agents);
  for (int i = n_agents - 1; i >= 0; --i) {
    out[i] = joint % actions_per_agent[i];
    joint /= actions_per_agent[i];
  }
  return out;
}

std::vector<Vec> joint_action_grid(
    const std::vector<std::vector<Vec>>& per_agent) {
  std::vector<Vec> grid = {{}};
  for (const auto& agent_grid : per_agent) {
    std::vector<Vec> next;
    next.reserve(grid.size() * agent_grid.size());
    for (const auto& prefix : grid)
      for (const auto& a : agent_grid) next.push_back(concat(prefix, a));
    grid = std::move(next);
  }
  return grid;
}

namespace {
int nearest_state(const std::vector<Vec>& grid, const Vec& s) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < grid.size(); ++i) {
    double d = 0.0;
    for (size_t k = 0; k < s.size(); ++k) {
      double e = grid[i][k] - s[k];
      d += e * e;
    }
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}
}  // namespace

TabularMdp discretize(const GameSpec& game, const std::vector<Vec>& state_grid,
                      const std::vector<std::vector<Vec>>& per_agent_actions,
                      int mc_samples, Rng& rng, const PotentialFn& phi) {
  if (state_grid.empty() || per_agent_actions.empty())
    throw std::invalid_argument("discretize: empty grid");
  for (const auto& g : per_agent_actions)
    if (g.empty()) throw std::invalid_argument("discretize: empty grid");
  std::vector<Vec> joint_grid = joint_action_grid(per_agent_actions);
  TabularMdp mdp;
  mdp.states = state_grid;
  mdp.joint_actions = joint_grid;
  mdp.n_agents = game.n_agents;
  for (const auto& g : per_agent_actions)
    mdp.actions_per_agent.push_back(static_cast<int>(g.size()));
  mdp.discount = game.discount;
  mdp.reward.assign(state_grid.size(), Vec(joint_grid.size(), 0.0));
  mdp.transition.assign(
      state_grid.size(),
      std::vector<Vec>(joint_grid.size(), Vec(state_grid.size(), 0.0)));
  for (size_t si = 0; si < state_grid.size(); ++si)
    for (size_t ai = 0; ai < joint_grid.size(); ++ai) {
      mdp.reward[si][ai] = phi(state_grid[si], joint_grid[ai]);
      for (int m = 0; m < mc_samples; ++m) {
        Vec s2 = game.transition(state_grid[si], joint_grid[ai], rng);
        mdp.transition[si][ai][nearest_state(state_grid, s2)] +=
            1.0 / mc_samples;
      }
    }
  mdp.validate();
  return mdp;
}

ValueIterationResult value_iteration(const TabularMdp& mdp, double tol,
                                     const Vec* v0) {
  if (mdp.discount >= 1.0)
    throw std::invalid_argument("value_iteration: discount must be < 1");
  const int ns = mdp.n_states(), na = mdp.n_actions();
  ValueIterationResult res;
  res.values = v0 ? *v0 : Vec(ns, 0.0);
  res.greedy.assign(ns, 0);
  while (true) {
    Vec next(ns);
    double delta = 0.0;
    for (int s = 0; s < ns; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < na; ++a) {
        double q = mdp.reward[s][a];
        if (mdp.discount > 0.0)
          q += mdp.discount * dot(mdp.transition[s][a], res.values);
        if (q > best) {  // strict: ties resolve to the lowest action index
          best = q;
          best_a = a;
        }
      }
      next[s] = best;
      res.greedy[s] = best_a;
      delta = std::max(delta, std::fabs(next[s] - res.values[s]));
    }
    res.values = std::move(next);
    res.sup_deltas.push_back(delta);
    ++res.iterations;
    if (delta < tol || res.iterations > 100000) break;
  }
  return res;
}

Vec tabular_agent_values(const TabularMdp& mdp,
                         const std::vector<Vec>& reward_i,
                         const std::vector<int>& joint_policy, int agent,
                         const std::vector<int>& policy_i, double tol) {
  const int ns = mdp.n_states();
  Vec v(ns, 0.0);
  // Joint action actually played: joint_policy with agent's slot replaced.
  std::vector<int> played(ns);
  for (int s = 0; s < ns; ++s) {
    std::vector<int> f = mdp.factor_index(joint_policy[s]);
    f[agent] = policy_i[s];
    played[s] = mdp.joint_index(f);
  }
  while (true) {
    double delta = 0.0;
    Vec next(ns);
    for (int s = 0; s < ns; ++s) {
      int a = played[s];
      next[s] = reward_i[s][a] + mdp.discount * dot(mdp.transition[s][a], v);
      delta = std::max(delta, std::fabs(next[s] - v[s]));
    }
    v = std::move(next);
    if (delta < tol) break;
  }
  return v;
}

bool mpe_certificate(const TabularMdp& mdp, const GameSpec& game,
                     const std::vector<int>& greedy, double slack) {
  const int ns = mdp.n_states(), na = mdp.n_actions();
  for (int i = 0; i < game.n_agents; ++i) {
    std::vector<Vec> reward_i(ns, Vec(na, 0.0));
    for (int s = 0; s < ns; ++s)
      for (int a = 0; a < na; ++a)
        reward_i[s][a] =
            game.reward_oracle(mdp.states[s], mdp.joint_actions[a])[i];
    std::vector<int> own(ns);
    for (int s = 0; s < ns; ++s) own[s] = mdp.factor_index(greedy[s])[i];
    Vec v = tabular_agent_values(mdp, reward_i, greedy, i, own);
    // One-step policy improvement over agent i's own actions; by the policy
    // improvement theorem, no stationary unilateral deviation helps iff no
    // greedy one-step deviation helps.
    for (int s = 0; s < ns; ++s) {
      std::vector<int> f = mdp.factor_index(greedy[s]);
      for (int ai = 0; ai < mdp.actions_per_agent[i]; ++ai) {
        f[i] = ai;
        int a = mdp.joint_index(f);
        double q = reward_i[s][a] + mdp.discount * dot(mdp.transition[s][a], v);
        if (q > v[s] + slack) return false;
      }
    }
  }
  return true;
}

}  // namespace spg
