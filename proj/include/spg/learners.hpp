#pragma once

#include "spg/game.hpp"
#include "spg/optimizer.hpp"
#include "spg/potential.hpp"
#include "spg/tabular.hpp"

namespace spg {

// Critic over (state, joint action) with a Polyak-averaged target copy.
struct CriticModel {
  DenseNet main;
  DenseNet target;
  double tau = 0.01;

  static CriticModel make(const GameSpec& game, const std::vector<int>& hidden,
                          double tau, Rng& rng);

  double value(const Vec& s, const Vec& a) const;
  double target_value(const Vec& s, const Vec& a) const;
  void polyak();
};

struct ActorSet {
  std::vector<GaussianPolicy> actors;

  // Concatenated deterministic joint action.
  Vec joint_action(const GameSpec& game, const Vec& s) const;
  void set_sigma(double s);
};

ActorSet make_actor_set(const GameSpec& game, const std::vector<int>& hidden,
                        double sigma, Rng& rng);

enum class MaxProxy { kActors, kSampling };

struct TrainConfig {
  double lr_actor = 1e-4;
  double lr_critic = 1e-3;
  int batch = 256;
  int buffer = 4096;
  double gamma = 0.99;
  double grad_clip = 1.0;
  int iterations = 20000;  // outer iterations; one rollout episode each
  int phi_refresh = 10;    // potential re-estimation period, iterations
  double tau = 0.01;
  MaxProxy max_proxy = MaxProxy::kActors;
  int max_samples = 64;  // joint draws for the sampling proxy
  double sigma_start = 0.1;
  double sigma_end = 0.01;
  bool use_analytic_potential = true;
  bool reevaluate_others = false;  // re-derive opponents' batch actions
  std::vector<int> critic_hidden = {64, 64, 64};
  std::vector<int> actor_hidden = {64, 64, 64};
  ResidualConfig residual;  // used when the potential is estimated
  int eval_every = 100;     // trace cadence, iterations
  double stop_ne_gap = -1.0;  // early stop threshold; negative disables
};

// Fitted-Q target: Y = phi(s, a) + gamma * max_a' F_target(s', a'), with the
// max resolved by the proxy; terminal samples use Y = phi(s, a).
double spotq_target(const GameSpec& game, const TransitionSample& sample,
                    const PotentialFn& phi, const CriticModel& critic,
                    double gamma, MaxProxy proxy, const ActorSet* actors,
                    int max_samples, Rng& rng);

// One squared-error step toward the targets plus a Polyak update. Returns the
// pre-step mean squared error.
double critic_fit(CriticModel& critic, const GameSpec& game,
                  const std::vector<TransitionSample>& batch,
                  const Vec& targets, Optimizer& opt);

// Deterministic-policy-gradient ascent step for one agent; opponents' actions
// come from the batch records unless reevaluate_others. Returns the parameter
// gradient norm.
double actor_update(const GameSpec& game, int agent, ActorSet& actors,
                    const CriticModel& critic,
                    const std::vector<TransitionSample>& batch, Optimizer& opt,
                    bool reevaluate_others);

struct TrainTracePoint {
  int iteration = 0;
  double social_welfare = 0.0;
  double ne_gap = 0.0;             // NaN without an analytic equilibrium
  double potential_residual = 0.0; // NaN when the analytic potential is used
};

struct SpotacResult {
  ActorSet actors;
  CriticModel critic;
  PotentialModel phi_hat;  // valid only when the potential was estimated
  std::vector<TrainTracePoint> trace;
  int iterations = 0;
  int env_steps = 0;
};

SpotacResult train_spotac(const GameSpec& game, const TrainConfig& cfg,
                          Rng& rng);

// Independent selfish baseline: per-agent critic on the agent's own reward,
// per-agent DPG actor, no potential anywhere.
SpotacResult train_independent(const GameSpec& game, const TrainConfig& cfg,
                               Rng& rng);

// Exact fitted-Q iteration on a discretized dual MDP.
struct SpotqResult {
  std::vector<Vec> q;  // [state][joint action]
  std::vector<int> greedy;
  int iterations = 0;
};

SpotqResult train_spotq(const TabularMdp& mdp, double tol = 1e-10);

struct BestResponseResult {
  GaussianPolicy br;
  double br_value = 0.0;       // agent's value when it deviates to br
  double current_value = 0.0;  // agent's value under the frozen profile
};

struct BestResponseConfig {
  int steps = 5000;
  int eval_episodes = 100;
  double lr_actor = 1e-3;
  double lr_critic = 1e-3;
  int batch = 64;
  int buffer = 4096;
  double sigma = 0.1;
  std::vector<int> hidden = {32, 32};
};

// Single-agent actor-critic on agent i's own reward against frozen
// opponents; both values are Monte-Carlo means over eval_episodes.
BestResponseResult train_best_response(const GameSpec& game,
                                       const ActorSet& frozen, int agent,
                                       const BestResponseConfig& cfg, Rng& rng);

// Undiscounted mean episode return of one agent under deterministic play.
double evaluate_agent_value(const GameSpec& game, const ActorSet& actors,
                            int agent, int episodes, Rng& rng);

}  // namespace spg
