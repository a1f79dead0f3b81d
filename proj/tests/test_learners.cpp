#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "spg/envs/cournot.hpp"
#include "spg/learners.hpp"

using namespace spg;

namespace {

// Linear critic F(s, a) = w . (s, a) + b, built by hand.
CriticModel linear_critic(const GameSpec& game, const Vec& w, double b) {
  Rng rng(1);
  CriticModel c = CriticModel::make(game, {}, 0.01, rng);
  Vec p = w;
  p.push_back(b);
  c.main.set_params(p);
  c.target = c.main;
  return c;
}

// Pins every actor to the constant joint action `a` (zero final-layer
// weights, bias at the unsquashed target).
void pin_actors(const GameSpec& game, ActorSet& actors, const Vec& a) {
  for (int i = 0; i < game.n_agents; ++i) {
    GaussianPolicy& pi = actors.actors[i];
    Vec u = pi.unsquash(game.agent_slice(a, i));
    Vec p(pi.mean_net().param_count(), 0.0);
    for (int q = 0; q < pi.action_dim(); ++q)
      p[p.size() - pi.action_dim() + q] = u[q];
    pi.mean_net().set_params(p);
  }
}

GameSpec zero_reward_game() {
  GameSpec g = cournot_game({});
  g.reward_oracle = [n = g.n_agents](const Vec&, const Vec&) {
    return Vec(n, 0.0);
  };
  return g;
}

TabularMdp two_state_mdp() {
  TabularMdp mdp;
  mdp.states = {{0.0}, {1.0}};
  mdp.joint_actions = {{0.0}, {1.0}};
  mdp.n_agents = 1;
  mdp.actions_per_agent = {2};
  mdp.reward = {{1.0, 0.0}, {0.0, 2.0}};
  mdp.transition = {{{0.0, 1.0}, {1.0, 0.0}}, {{0.5, 0.5}, {0.0, 1.0}}};
  mdp.discount = 0.9;
  return mdp;
}

}  // namespace

TEST_CASE("spotq target arithmetic") {
  GameSpec game = cournot_game({});
  Rng rng(7);
  // Constant critic: zero weights, bias 5.
  CriticModel critic = linear_critic(game, Vec(3, 0.0), 5.0);
  PotentialFn phi = [](const Vec&, const Vec&) { return 0.3; };
  ActorSet actors = make_actor_set(game, {8}, 0.0, rng);

  TransitionSample t;
  t.s = {0.0};
  t.a = {0.2, 0.4};
  t.s2 = {0.0};
  t.rewards = {0.0, 0.0};
  t.done = false;

  double y = spotq_target(game, t, phi, critic, 0.5, MaxProxy::kActors,
                          &actors, 0, rng);
  CHECK(y == doctest::Approx(0.3 + 0.5 * 5.0));

  t.done = true;
  CHECK(spotq_target(game, t, phi, critic, 0.5, MaxProxy::kActors, &actors, 0,
                     rng) == doctest::Approx(0.3));
  t.done = false;
  CHECK(spotq_target(game, t, phi, critic, 0.0, MaxProxy::kActors, &actors, 0,
                     rng) == doctest::Approx(0.3));

  // A constant critic makes the sampling proxy exact.
  CHECK(spotq_target(game, t, phi, critic, 0.5, MaxProxy::kSampling, nullptr,
                     16, rng) == doctest::Approx(2.8));
}

TEST_CASE("critic fit converges to constant targets") {
  GameSpec game = cournot_game({});
  Rng rng(11);
  CriticModel critic = CriticModel::make(game, {16}, 0.01, rng);
  std::vector<TransitionSample> batch;
  for (int k = 0; k < 32; ++k) {
    TransitionSample t;
    t.s = {0.0};
    t.a = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    t.s2 = {0.0};
    t.rewards = {0.0, 0.0};
    t.done = true;
    batch.push_back(t);
  }
  Vec targets(batch.size(), 0.7);
  Optimizer opt = Optimizer::adam(1e-2);
  double mse = 0.0;
  for (int it = 0; it < 2000; ++it)
    mse = critic_fit(critic, game, batch, targets, opt);
  CHECK(mse < 1e-5);
}

TEST_CASE("critic fit loss is non-increasing under small sgd steps") {
  GameSpec game = cournot_game({});
  Rng rng(13);
  CriticModel critic = CriticModel::make(game, {8}, 0.01, rng);
  std::vector<TransitionSample> batch;
  Vec targets;
  for (int k = 0; k < 16; ++k) {
    TransitionSample t;
    t.s = {0.0};
    t.a = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    t.s2 = {0.0};
    t.rewards = {0.0, 0.0};
    t.done = true;
    batch.push_back(t);
    targets.push_back(t.a[0] + t.a[1]);
  }
  Optimizer opt = Optimizer::sgd(1e-3, 1e9);
  double prev = 1e300;
  for (int it = 0; it < 200; ++it) {
    double mse = critic_fit(critic, game, batch, targets, opt);
    CHECK(mse <= prev + 1e-12);
    prev = mse;
  }
}

TEST_CASE("tau of one copies the critic into the target") {
  GameSpec game = cournot_game({});
  Rng rng(17);
  CriticModel critic = CriticModel::make(game, {8}, 1.0, rng);
  std::vector<TransitionSample> batch(1);
  batch[0].s = {0.0};
  batch[0].a = {0.1, 0.2};
  batch[0].s2 = {0.0};
  batch[0].rewards = {0.0, 0.0};
  batch[0].done = true;
  Optimizer opt = Optimizer::adam(1e-2);
  critic_fit(critic, game, batch, {0.5}, opt);
  Vec pm = critic.main.params(), pt = critic.target.params();
  for (size_t k = 0; k < pm.size(); ++k) CHECK(pt[k] == pm[k]);
}

TEST_CASE("actor update climbs a fitted quadratic to its peak") {
  CournotParams p;
  p.n_agents = 1;
  GameSpec game = cournot_game(p);
  Rng rng(19);
  // Fit the critic to F(a) = -(a - 0.5)^2 on uniform samples.
  CriticModel critic = CriticModel::make(game, {32, 32}, 0.01, rng);
  std::vector<TransitionSample> data;
  Vec targets;
  for (int k = 0; k < 256; ++k) {
    TransitionSample t;
    t.s = {0.0};
    t.a = {rng.uniform(-1.0, 1.0)};
    t.s2 = {0.0};
    t.rewards = {0.0};
    t.done = true;
    data.push_back(t);
    targets.push_back(-(t.a[0] - 0.5) * (t.a[0] - 0.5));
  }
  Optimizer copt = Optimizer::adam(1e-2);
  double mse = 0.0;
  for (int it = 0; it < 3000; ++it)
    mse = critic_fit(critic, game, data, targets, copt);
  REQUIRE(mse < 1e-4);

  ActorSet actors = make_actor_set(game, {16}, 0.0, rng);
  Optimizer aopt = Optimizer::adam(1e-2);
  for (int it = 0; it < 800; ++it)
    actor_update(game, 0, actors, critic, data, aopt, false);
  double a = actors.actors[0].act({0.0})[0];
  // The fitted peak can sit slightly off the true argmax.
  CHECK(std::abs(a - 0.5) < 0.05);
}

TEST_CASE("actor update is a no-op under a flat critic") {
  GameSpec game = cournot_game({});
  Rng rng(23);
  // Critic independent of agent 0's action: w = (0.4, 0, 0.9).
  CriticModel critic = linear_critic(game, {0.4, 0.0, 0.9}, 0.1);
  ActorSet actors = make_actor_set(game, {8}, 0.0, rng);
  Vec before = actors.actors[0].mean_net().params();
  std::vector<TransitionSample> batch(4);
  for (auto& t : batch) {
    t.s = {0.0};
    t.a = {0.1, -0.2};
    t.s2 = {0.0};
    t.rewards = {0.0, 0.0};
    t.done = true;
  }
  Optimizer opt = Optimizer::sgd(1e-2, 1e9);
  double gn = actor_update(game, 0, actors, critic, batch, opt, false);
  CHECK(gn == doctest::Approx(0.0));
  Vec after = actors.actors[0].mean_net().params();
  for (size_t k = 0; k < before.size(); ++k) CHECK(after[k] == before[k]);
}

TEST_CASE("actor update direction matches a finite difference") {
  GameSpec game = cournot_game({});
  Rng rng(29);
  CriticModel critic = linear_critic(game, {0.2, 0.7, -0.3}, 0.0);
  ActorSet actors = make_actor_set(game, {6}, 0.0, rng);
  std::vector<TransitionSample> batch(3);
  Rng draw(31);
  for (auto& t : batch) {
    t.s = {0.0};
    t.a = {draw.uniform(-0.5, 0.5), draw.uniform(-0.5, 0.5)};
    t.s2 = {0.0};
    t.rewards = {0.0, 0.0};
    t.done = true;
  }
  // Batch-mean critic value as a function of agent 0's mean-net parameters.
  GaussianPolicy& pi = actors.actors[0];
  auto objective = [&](const Vec& params) {
    pi.mean_net().set_params(params);
    double v = 0.0;
    for (const auto& t : batch) {
      Vec a = t.a;
      game.set_agent_slice(a, 0, pi.act(t.s));
      v += critic.value(t.s, a) / batch.size();
    }
    return v;
  };
  Vec p0 = pi.mean_net().params();
  Vec fd(p0.size());
  const double h = 1e-6;
  for (size_t k = 0; k < p0.size(); ++k) {
    Vec pp = p0, pm = p0;
    pp[k] += h;
    pm[k] -= h;
    fd[k] = (objective(pp) - objective(pm)) / (2 * h);
  }
  pi.mean_net().set_params(p0);
  // One tiny sgd step recovers lr * gradient from the parameter delta.
  const double lr = 1e-8;
  Optimizer opt = Optimizer::sgd(lr, 1e12);
  actor_update(game, 0, actors, critic, batch, opt, false);
  Vec p1 = pi.mean_net().params();
  double num = 0.0, den = 0.0;
  for (size_t k = 0; k < p0.size(); ++k) {
    double g = (p1[k] - p0[k]) / lr;  // ascent direction
    num += (g - fd[k]) * (g - fd[k]);
    den += fd[k] * fd[k];
  }
  REQUIRE(den > 0.0);
  CHECK(std::sqrt(num / den) < 1e-3);
}

TEST_CASE("spotac reaches the cournot equilibrium") {
  GameSpec game = cournot_game({});
  TrainConfig cfg;
  cfg.iterations = 4000;
  cfg.batch = 64;
  cfg.buffer = 1024;
  cfg.lr_actor = 3e-3;
  cfg.lr_critic = 3e-3;
  cfg.critic_hidden = {32, 32};
  cfg.actor_hidden = {32, 32};
  cfg.eval_every = 200;
  cfg.stop_ne_gap = 0.02;
  Rng rng(101);
  SpotacResult res = train_spotac(game, cfg, rng);
  REQUIRE(!res.trace.empty());
  double gap = res.trace.back().ne_gap;
  CHECK(gap < 0.05);
  CHECK(res.env_steps == res.iterations);  // horizon-1 episodes
}

TEST_CASE("spotac is deterministic for a fixed seed") {
  GameSpec game = cournot_game({});
  TrainConfig cfg;
  cfg.iterations = 300;
  cfg.batch = 32;
  cfg.buffer = 256;
  cfg.critic_hidden = {16};
  cfg.actor_hidden = {16};
  cfg.eval_every = 100;
  Rng r1(5), r2(5);
  SpotacResult a = train_spotac(game, cfg, r1);
  SpotacResult b = train_spotac(game, cfg, r2);
  REQUIRE(a.trace.size() == b.trace.size());
  for (size_t k = 0; k < a.trace.size(); ++k) {
    CHECK(a.trace[k].social_welfare == b.trace[k].social_welfare);
    CHECK(a.trace[k].ne_gap == b.trace[k].ne_gap);
  }
  Vec pa = a.actors.actors[0].mean_net().params();
  Vec pb = b.actors.actors[0].mean_net().params();
  for (size_t k = 0; k < pa.size(); ++k) CHECK(pa[k] == pb[k]);
}

TEST_CASE("spotq matches value iteration on a small mdp") {
  TabularMdp mdp = two_state_mdp();
  SpotqResult res = train_spotq(mdp, 1e-12);
  ValueIterationResult vi = value_iteration(mdp, 1e-12);
  REQUIRE(res.greedy.size() == vi.greedy.size());
  for (size_t s = 0; s < res.greedy.size(); ++s) {
    CHECK(res.greedy[s] == vi.greedy[s]);
    double vmax = *std::max_element(res.q[s].begin(), res.q[s].end());
    CHECK(vmax == doctest::Approx(vi.values[s]).epsilon(1e-9));
  }
}

TEST_CASE("spotq with zero discount is greedy on immediate reward") {
  TabularMdp mdp = two_state_mdp();
  mdp.discount = 0.0;
  SpotqResult res = train_spotq(mdp);
  CHECK(res.q[0][0] == doctest::Approx(1.0));
  CHECK(res.q[1][1] == doctest::Approx(2.0));
  CHECK(res.greedy[0] == 0);
  CHECK(res.greedy[1] == 1);
}

TEST_CASE("best response gains nothing at the equilibrium") {
  CournotParams p;
  GameSpec game = cournot_game(p);
  Rng rng(41);
  ActorSet frozen = make_actor_set(game, {16}, 0.0, rng);
  double ne = cournot_symmetric_ne(p);
  pin_actors(game, frozen, {ne, ne});
  BestResponseConfig cfg;
  cfg.steps = 3000;
  BestResponseResult res = train_best_response(game, frozen, 0, cfg, rng);
  CHECK(res.br_value - res.current_value <= 0.02);
}

TEST_CASE("best response exploits passive opponents") {
  GameSpec game = cournot_game({});
  Rng rng(43);
  ActorSet frozen = make_actor_set(game, {16}, 0.0, rng);
  pin_actors(game, frozen, {0.0, 0.0});
  BestResponseConfig cfg;
  cfg.steps = 4000;
  BestResponseResult res = train_best_response(game, frozen, 0, cfg, rng);
  // R_0 = a (1 - a) against a zero opponent; the optimum is a = 1/2.
  CHECK(std::abs(res.br.act({0.0})[0] - 0.5) < 0.05);
  CHECK(res.br_value == doctest::Approx(0.25).epsilon(0.05));
  CHECK(res.current_value == doctest::Approx(0.0));
}

TEST_CASE("best response to a zero-reward game gains nothing") {
  GameSpec game = zero_reward_game();
  Rng rng(47);
  ActorSet frozen = make_actor_set(game, {8}, 0.0, rng);
  BestResponseConfig cfg;
  cfg.steps = 300;
  cfg.eval_episodes = 10;
  BestResponseResult res = train_best_response(game, frozen, 0, cfg, rng);
  CHECK(res.br_value == doctest::Approx(0.0));
  CHECK(res.current_value == doctest::Approx(0.0));
}

TEST_CASE("independent learning solves the single-agent case") {
  CournotParams p;
  p.n_agents = 1;
  GameSpec game = cournot_game(p);
  TrainConfig cfg;
  cfg.iterations = 3000;
  cfg.batch = 64;
  cfg.buffer = 1024;
  cfg.lr_actor = 3e-3;
  cfg.lr_critic = 3e-3;
  cfg.critic_hidden = {32, 32};
  cfg.actor_hidden = {32, 32};
  cfg.eval_every = 200;
  Rng rng(53);
  SpotacResult res = train_independent(game, cfg, rng);
  // Monopoly optimum: argmax a (1 - a) = 1/2, which is also the 1-agent NE.
  double a = res.actors.actors[0].act({0.0})[0];
  CHECK(std::abs(a - 0.5) < 0.05);
}

TEST_CASE("independent learning is deterministic for a fixed seed") {
  GameSpec game = cournot_game({});
  TrainConfig cfg;
  cfg.iterations = 200;
  cfg.batch = 32;
  cfg.buffer = 256;
  cfg.critic_hidden = {16};
  cfg.actor_hidden = {16};
  cfg.eval_every = 100;
  Rng r1(3), r2(3);
  SpotacResult a = train_independent(game, cfg, r1);
  SpotacResult b = train_independent(game, cfg, r2);
  Vec pa = a.actors.actors[1].mean_net().params();
  Vec pb = b.actors.actors[1].mean_net().params();
  for (size_t k = 0; k < pa.size(); ++k) CHECK(pa[k] == pb[k]);
}

TEST_CASE("symmetric agents train to matching strategies") {
  GameSpec game = cournot_game({});
  TrainConfig cfg;
  cfg.iterations = 4000;
  cfg.batch = 64;
  cfg.buffer = 1024;
  cfg.lr_actor = 3e-3;
  cfg.lr_critic = 3e-3;
  cfg.critic_hidden = {32, 32};
  cfg.actor_hidden = {32, 32};
  cfg.eval_every = 200;
  cfg.stop_ne_gap = 0.02;
  Rng rng(59);
  SpotacResult res = train_spotac(game, cfg, rng);
  double a0 = res.actors.actors[0].act({0.0})[0];
  double a1 = res.actors.actors[1].act({0.0})[0];
  CHECK(std::abs(a0 - a1) < 0.1);
}
