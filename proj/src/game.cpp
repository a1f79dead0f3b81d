#include "spg/game.hpp"

#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace spg {

int GameSpec::joint_action_dim() const {
  return std::accumulate(action_dims.begin(), action_dims.end(), 0);
}

int GameSpec::action_offset(int agent) const {
  int off = 0;
  for (int i = 0; i < agent; ++i) off += action_dims[i];
  return off;
}

Vec GameSpec::agent_slice(const Vec& joint, int agent) const {
  int off = action_offset(agent);
  return Vec(joint.begin() + off, joint.begin() + off + action_dims[agent]);
}

void GameSpec::set_agent_slice(Vec& joint, int agent, const Vec& a) const {
  int off = action_offset(agent);
  for (int k = 0; k < action_dims[agent]; ++k) joint[off + k] = a[k];
}

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("ReplayBuffer: capacity < 1");
  data_.reserve(capacity);
}

void ReplayBuffer::push(TransitionSample t) {
  ++inserted_;
  if (size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[head_] = std::move(t);  // FIFO eviction
    head_ = (head_ + 1) % capacity_;
  }
}

std::vector<TransitionSample> ReplayBuffer::sample(int batch, Rng& rng) const {
  if (data_.empty()) throw std::runtime_error("ReplayBuffer: empty");
  std::vector<TransitionSample> out;
  out.reserve(batch);
  for (int i = 0; i < batch; ++i) out.push_back(data_[rng.uniform_int(size())]);
  return out;
}

void append_rollout(const GameSpec& game,
                    const std::vector<GaussianPolicy>& policies, int episodes,
                    Rng& rng, ReplayBuffer& buffer,
                    std::vector<TransitionSample>* trace) {
  if (static_cast<int>(policies.size()) != game.n_agents)
    throw std::invalid_argument("rollout: one policy per agent required");
  for (int i = 0; i < game.n_agents; ++i)
    if (policies[i].state_dim() != game.state_dim ||
        policies[i].action_dim() != game.action_dims[i])
      throw std::invalid_argument("rollout: policy/game dimension mismatch");

  for (int ep = 0; ep < episodes; ++ep) {
    Vec s = game.initial_state(rng);
    for (int t = 0; t < game.horizon; ++t) {
      Vec a(game.joint_action_dim());
      for (int i = 0; i < game.n_agents; ++i)
        game.set_agent_slice(a, i, policies[i].sample(s, rng));
      Vec s2 = game.transition(s, a, rng);
      bool done = (t + 1 == game.horizon) ||
                  (game.is_terminal && game.is_terminal(s2));
      TransitionSample sample{s, a, s2, game.reward_oracle(s, a), done};
      buffer.push(sample);
      if (trace) trace->push_back(std::move(sample));
      if (done) break;
      s = std::move(s2);
    }
  }
}

std::vector<TransitionSample> rollout(
    const GameSpec& game, const std::vector<GaussianPolicy>& policies,
    int episodes, Rng& rng) {
  ReplayBuffer scratch(std::max(1, episodes * game.horizon));
  std::vector<TransitionSample> trace;
  append_rollout(game, policies, episodes, rng, scratch, &trace);
  return trace;
}

std::string sample_to_jsonl(const TransitionSample& t) {
  nlohmann::json j;
  j["s"] = t.s;
  j["a"] = t.a;
  j["s2"] = t.s2;
  j["r"] = t.rewards;
  j["done"] = t.done;
  return j.dump();
}

void dump_trajectory(const std::vector<TransitionSample>& traj,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dump_trajectory: cannot open " + path);
  for (const auto& t : traj) out << sample_to_jsonl(t) << '\n';
}

}  // namespace spg
