#pragma once

#include <functional>
#include <optional>
#include <string>

#include "spg/gaussian_policy.hpp"
#include "spg/rng.hpp"
#include "spg/vec.hpp"

namespace spg {

// A continuous stochastic game. Joint actions are stored concatenated; the
// per-agent slice of agent i is [action_offset(i), action_offset(i) +
// action_dims[i]). Oracles must be pure functions of their arguments.
struct GameSpec {
  std::string name;
  int n_agents = 0;
  int state_dim = 0;
  std::vector<int> action_dims;
  int horizon = 1;
  double discount = 0.99;

  Vec action_low, action_high;  // joint box, concatenated
  Vec state_low, state_high;    // probe box for structural checks

  std::function<Vec(const Vec& s, const Vec& a)> reward_oracle;
  // Optional analytic derivatives of agent i's reward: d R_i / d a (joint
  // length) and d R_i / d s.
  std::function<void(const Vec& s, const Vec& a, int i, Vec* da, Vec* ds)>
      reward_grad_oracle;
  std::function<Vec(const Vec& s, const Vec& a, Rng& rng)> transition;
  std::function<Vec(Rng& rng)> initial_state;
  std::function<bool(const Vec& s)> is_terminal;  // optional
  std::function<double(const Vec& s, const Vec& a)> analytic_potential;
  Vec analytic_ne;  // joint action; empty when no closed form is known

  int joint_action_dim() const;
  int action_offset(int agent) const;
  Vec agent_slice(const Vec& joint, int agent) const;
  void set_agent_slice(Vec& joint, int agent, const Vec& a) const;
  bool has_reward_grad() const { return static_cast<bool>(reward_grad_oracle); }
};

struct TransitionSample {
  Vec s;
  Vec a;  // joint, concatenated
  Vec s2;
  Vec rewards;  // one per agent
  bool done = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity);

  void push(TransitionSample t);
  int size() const { return static_cast<int>(data_.size()); }
  int capacity() const { return capacity_; }
  int64_t total_inserted() const { return inserted_; }
  const TransitionSample& at(int i) const { return data_[i]; }

  // Uniform with replacement; throws on empty buffer.
  std::vector<TransitionSample> sample(int batch, Rng& rng) const;

 private:
  int capacity_;
  int64_t inserted_ = 0;
  int head_ = 0;
  std::vector<TransitionSample> data_;
};

// Runs `episodes` episodes with one policy per agent, appending samples in
// time order. Episodes end at env-terminal states or the game horizon.
std::vector<TransitionSample> rollout(
    const GameSpec& game, const std::vector<GaussianPolicy>& policies,
    int episodes, Rng& rng);

void append_rollout(const GameSpec& game,
                    const std::vector<GaussianPolicy>& policies, int episodes,
                    Rng& rng, ReplayBuffer& buffer,
                    std::vector<TransitionSample>* trace = nullptr);

// JSONL trajectory dump: one sample per line, fields {s, a, s2, r, done}.
std::string sample_to_jsonl(const TransitionSample& t);
void dump_trajectory(const std::vector<TransitionSample>& traj,
                     const std::string& path);

}  // namespace spg
