#include "spg/learners.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace spg {

namespace {

std::vector<int> net_dims(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> dims = {in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

std::vector<Activation> net_acts(size_t n_layers) {
  std::vector<Activation> acts(n_layers, Activation::kTanh);
  acts.back() = Activation::kIdentity;
  return acts;
}

}  // namespace

CriticModel CriticModel::make(const GameSpec& game,
                              const std::vector<int>& hidden, double tau,
                              Rng& rng) {
  CriticModel c;
  auto dims = net_dims(game.state_dim + game.joint_action_dim(), hidden, 1);
  c.main = DenseNet::xavier(dims, net_acts(dims.size() - 1), rng);
  c.target = c.main;
  c.tau = tau;
  return c;
}

double CriticModel::value(const Vec& s, const Vec& a) const {
  return main.forward(concat(s, a))[0];
}

double CriticModel::target_value(const Vec& s, const Vec& a) const {
  return target.forward(concat(s, a))[0];
}

void CriticModel::polyak() {
  Vec pm = main.params(), pt = target.params();
  for (size_t k = 0; k < pm.size(); ++k)
    pt[k] = tau * pm[k] + (1.0 - tau) * pt[k];
  target.set_params(pt);
}

Vec ActorSet::joint_action(const GameSpec& game, const Vec& s) const {
  Vec a(game.joint_action_dim());
  for (int i = 0; i < game.n_agents; ++i)
    game.set_agent_slice(a, i, actors[i].act(s));
  return a;
}

void ActorSet::set_sigma(double s) {
  for (auto& pi : actors) pi.set_sigma(s);
}

ActorSet make_actor_set(const GameSpec& game, const std::vector<int>& hidden,
                        double sigma, Rng& rng) {
  ActorSet set;
  for (int i = 0; i < game.n_agents; ++i) {
    auto dims = net_dims(game.state_dim, hidden, game.action_dims[i]);
    auto net = DenseNet::xavier(dims, net_acts(dims.size() - 1), rng);
    int off = game.action_offset(i);
    Vec lo(game.action_low.begin() + off,
           game.action_low.begin() + off + game.action_dims[i]);
    Vec hi(game.action_high.begin() + off,
           game.action_high.begin() + off + game.action_dims[i]);
    set.actors.emplace_back(std::move(net), sigma, lo, hi);
  }
  return set;
}

double spotq_target(const GameSpec& game, const TransitionSample& sample,
                    const PotentialFn& phi, const CriticModel& critic,
                    double gamma, MaxProxy proxy, const ActorSet* actors,
                    int max_samples, Rng& rng) {
  double base = phi(sample.s, sample.a);
  if (sample.done || gamma == 0.0) return base;
  double best;
  if (proxy == MaxProxy::kActors) {
    if (!actors) throw std::invalid_argument("spotq_target: actors required");
    best = critic.target_value(sample.s2, actors->joint_action(game, sample.s2));
  } else {
    best = -1e300;
    const int A = game.joint_action_dim();
    for (int m = 0; m < max_samples; ++m) {
      Vec a(A);
      for (int k = 0; k < A; ++k)
        a[k] = rng.uniform(game.action_low[k], game.action_high[k]);
      best = std::max(best, critic.target_value(sample.s2, a));
    }
  }
  return base + gamma * best;
}

double critic_fit(CriticModel& critic, const GameSpec& game,
                  const std::vector<TransitionSample>& batch,
                  const Vec& targets, Optimizer& opt) {
  (void)game;
  if (batch.empty()) throw std::invalid_argument("critic_fit: empty batch");
  const int B = static_cast<int>(batch.size());
  Vec grad(critic.main.param_count(), 0.0);
  double mse = 0.0;
  for (int k = 0; k < B; ++k) {
    Vec x = concat(batch[k].s, batch[k].a);
    double err = critic.main.forward(x)[0] - targets[k];
    mse += err * err / B;
    Vec pg(grad.size(), 0.0);
    critic.main.backward(x, {2.0 * err / B}, &pg, nullptr);
    axpy(1.0, pg, grad);
  }
  if (!std::isfinite(mse))
    throw std::runtime_error("critic_fit: non-finite loss");
  Vec params = critic.main.params();
  opt.step(params, grad);
  critic.main.set_params(params);
  critic.polyak();
  return mse;
}

double actor_update(const GameSpec& game, int agent, ActorSet& actors,
                    const CriticModel& critic,
                    const std::vector<TransitionSample>& batch, Optimizer& opt,
                    bool reevaluate_others) {
  GaussianPolicy& pi = actors.actors[agent];
  const int B = static_cast<int>(batch.size());
  const int off = game.action_offset(agent);
  const int ni = game.action_dims[agent];
  const int S = game.state_dim;
  Vec grad(pi.mean_net().param_count(), 0.0);
  for (const auto& t : batch) {
    Vec u = pi.mean_presquash(t.s);
    Vec a = t.a;
    if (reevaluate_others) a = actors.joint_action(game, t.s);
    game.set_agent_slice(a, agent, pi.squash(u));
    Vec x = concat(t.s, a);
    Vec ig(static_cast<size_t>(S) + a.size(), 0.0);
    critic.main.backward(x, {1.0}, nullptr, &ig);
    Vec dsq = pi.squash_deriv(u);
    Vec upstream(ni);
    for (int q = 0; q < ni; ++q) upstream[q] = ig[S + off + q] * dsq[q];
    Vec pg(grad.size(), 0.0);
    pi.mean_net().backward(t.s, upstream, &pg, nullptr);
    axpy(1.0 / B, pg, grad);
  }
  double gn = norm2(grad);
  // Ascent on the critic value; the optimizer descends.
  for (double& v : grad) v = -v;
  Vec params = pi.mean_net().params();
  opt.step(params, grad);
  pi.mean_net().set_params(params);
  return gn;
}

namespace {

double ne_gap_at_start(const GameSpec& game, const ActorSet& actors, Rng& rng) {
  if (game.analytic_ne.empty()) return std::nan("");
  Vec s0 = game.initial_state(rng);
  Vec a = actors.joint_action(game, s0);
  double gap = 0.0;
  for (int k = 0; k < game.joint_action_dim(); ++k)
    gap = std::max(gap, std::abs(a[k] - game.analytic_ne[k]));
  return gap;
}

struct TrainLoop {
  const GameSpec& game;
  const TrainConfig& cfg;
  Rng rng_rollout, rng_batch, rng_eval;
  ReplayBuffer buffer;
  std::deque<double> episode_returns;  // sum over agents and steps

  TrainLoop(const GameSpec& g, const TrainConfig& c, Rng& root)
      : game(g), cfg(c), rng_rollout(root.fork("rollout")),
        rng_batch(root.fork("batch")), rng_eval(root.fork("eval")),
        buffer(c.buffer) {}

  // One exploration episode appended to the buffer; returns steps taken.
  int collect(ActorSet& actors, double sigma) {
    actors.set_sigma(sigma);
    std::vector<TransitionSample> trace;
    append_rollout(game, actors.actors, 1, rng_rollout, buffer, &trace);
    double ret = 0.0;
    for (const auto& t : trace)
      for (double r : t.rewards) ret += r;
    episode_returns.push_back(ret);
    if (episode_returns.size() > 100) episode_returns.pop_front();
    return static_cast<int>(trace.size());
  }

  double sigma_at(int it) const {
    double f = cfg.iterations <= 1 ? 1.0 : static_cast<double>(it) /
                                               (cfg.iterations - 1);
    return cfg.sigma_start + f * (cfg.sigma_end - cfg.sigma_start);
  }

  double mean_return() const {
    if (episode_returns.empty()) return 0.0;
    double m = 0.0;
    for (double r : episode_returns) m += r;
    return m / episode_returns.size();
  }
};

}  // namespace

SpotacResult train_spotac(const GameSpec& game, const TrainConfig& cfg,
                          Rng& rng) {
  SpotacResult res;
  Rng rng_init = rng.fork("init");
  res.actors = make_actor_set(game, cfg.actor_hidden, cfg.sigma_start, rng_init);
  res.critic = CriticModel::make(game, cfg.critic_hidden, cfg.tau, rng_init);
  TrainLoop loop(game, cfg, rng);

  // Potential source. With analytic gradients the residual objective does not
  // depend on the replay data, so one estimate is the fixed point and the
  // refresh period only matters for data-fitted reward derivatives.
  PotentialFn phi;
  double phi_residual = std::nan("");
  Rng rng_phi = rng.fork("phi");
  RewardFitConfig reward_fit;
  auto refresh_phi = [&](bool have_data) {
    if (cfg.use_analytic_potential) {
      if (!game.analytic_potential)
        throw std::invalid_argument("train_spotac: no analytic potential");
      phi = game.analytic_potential;
      return;
    }
    RewardModelSet fitted;
    const RewardModelSet* fitted_ptr = nullptr;
    if (!game.has_reward_grad()) {
      if (!have_data) return;  // wait until the buffer can support a fit
      std::vector<TransitionSample> data;
      for (int k = 0; k < loop.buffer.size(); ++k)
        data.push_back(loop.buffer.at(k));
      fitted = fit_reward_models(game, data, reward_fit, rng_phi);
      fitted_ptr = &fitted;
    }
    auto est = estimate_potential(game, PotentialModel::poly(game, 2),
                                  cfg.residual,
                                  reward_grad_source(game, fitted_ptr), rng_phi);
    res.phi_hat = est.phi;
    phi_residual = est.loss_trace.empty() ? 0.0 : est.loss_trace.back();
    phi = res.phi_hat.as_fn();
  };
  refresh_phi(false);

  std::vector<Optimizer> actor_opts;
  for (int i = 0; i < game.n_agents; ++i)
    actor_opts.push_back(Optimizer::adam(cfg.lr_actor, cfg.grad_clip));
  Optimizer critic_opt = Optimizer::adam(cfg.lr_critic, cfg.grad_clip);

  bool phi_is_data_dependent =
      !cfg.use_analytic_potential && !game.has_reward_grad();
  for (int it = 0; it < cfg.iterations; ++it) {
    res.env_steps += loop.collect(res.actors, loop.sigma_at(it));
    res.iterations = it + 1;
    if (!phi && phi_is_data_dependent && loop.buffer.size() >= cfg.batch)
      refresh_phi(true);
    else if (phi_is_data_dependent && phi && it % cfg.phi_refresh == 0 && it > 0)
      refresh_phi(true);
    if (!phi || loop.buffer.size() < cfg.batch) continue;

    auto batch = loop.buffer.sample(cfg.batch, loop.rng_batch);
    Vec targets(batch.size());
    for (size_t k = 0; k < batch.size(); ++k)
      targets[k] = spotq_target(game, batch[k], phi, res.critic, cfg.gamma,
                                cfg.max_proxy, &res.actors, cfg.max_samples,
                                loop.rng_batch);
    critic_fit(res.critic, game, batch, targets, critic_opt);
    for (int i = 0; i < game.n_agents; ++i)
      actor_update(game, i, res.actors, res.critic, batch, actor_opts[i],
                   cfg.reevaluate_others);

    if ((it + 1) % cfg.eval_every == 0 || it + 1 == cfg.iterations) {
      TrainTracePoint pt;
      pt.iteration = it + 1;
      pt.social_welfare = loop.mean_return();
      pt.ne_gap = ne_gap_at_start(game, res.actors, loop.rng_eval);
      pt.potential_residual = phi_residual;
      res.trace.push_back(pt);
      if (cfg.stop_ne_gap > 0.0 && std::isfinite(pt.ne_gap) &&
          pt.ne_gap < cfg.stop_ne_gap)
        break;
    }
  }
  return res;
}

SpotacResult train_independent(const GameSpec& game, const TrainConfig& cfg,
                               Rng& rng) {
  SpotacResult res;
  Rng rng_init = rng.fork("init");
  res.actors = make_actor_set(game, cfg.actor_hidden, cfg.sigma_start, rng_init);
  std::vector<CriticModel> critics;
  std::vector<Optimizer> actor_opts, critic_opts;
  for (int i = 0; i < game.n_agents; ++i) {
    critics.push_back(CriticModel::make(game, cfg.critic_hidden, cfg.tau,
                                        rng_init));
    actor_opts.push_back(Optimizer::adam(cfg.lr_actor, cfg.grad_clip));
    critic_opts.push_back(Optimizer::adam(cfg.lr_critic, cfg.grad_clip));
  }
  res.critic = critics[0];
  TrainLoop loop(game, cfg, rng);

  for (int it = 0; it < cfg.iterations; ++it) {
    res.env_steps += loop.collect(res.actors, loop.sigma_at(it));
    res.iterations = it + 1;
    if (loop.buffer.size() < cfg.batch) continue;
    auto batch = loop.buffer.sample(cfg.batch, loop.rng_batch);
    for (int i = 0; i < game.n_agents; ++i) {
      Vec targets(batch.size());
      for (size_t k = 0; k < batch.size(); ++k) {
        const auto& t = batch[k];
        double y = t.rewards[i];
        if (!t.done && cfg.gamma > 0.0)
          y += cfg.gamma * critics[i].target_value(
                               t.s2, res.actors.joint_action(game, t.s2));
        targets[k] = y;
      }
      critic_fit(critics[i], game, batch, targets, critic_opts[i]);
      actor_update(game, i, res.actors, critics[i], batch, actor_opts[i],
                   cfg.reevaluate_others);
    }
    if ((it + 1) % cfg.eval_every == 0 || it + 1 == cfg.iterations) {
      TrainTracePoint pt;
      pt.iteration = it + 1;
      pt.social_welfare = loop.mean_return();
      pt.ne_gap = ne_gap_at_start(game, res.actors, loop.rng_eval);
      pt.potential_residual = std::nan("");
      res.trace.push_back(pt);
    }
  }
  res.critic = critics[0];
  return res;
}

SpotqResult train_spotq(const TabularMdp& mdp, double tol) {
  mdp.validate();
  SpotqResult res;
  const int S = mdp.n_states(), A = mdp.n_actions();
  res.q.assign(S, Vec(A, 0.0));
  Vec vmax(S, 0.0);
  for (int sweep = 0; sweep < 100000; ++sweep) {
    double delta = 0.0;
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        double y = mdp.reward[s][a];
        for (int s2 = 0; s2 < S; ++s2) {
          double p = mdp.transition[s][a][s2];
          if (p > 0.0) y += mdp.discount * p * vmax[s2];
        }
        delta = std::max(delta, std::abs(y - res.q[s][a]));
        res.q[s][a] = y;
      }
    }
    for (int s = 0; s < S; ++s)
      vmax[s] = *std::max_element(res.q[s].begin(), res.q[s].end());
    res.iterations = sweep + 1;
    if (delta < tol) break;
  }
  res.greedy.assign(S, 0);
  for (int s = 0; s < S; ++s) {
    int best = 0;
    for (int a = 1; a < A; ++a)
      if (res.q[s][a] > res.q[s][best]) best = a;  // lowest index on ties
    res.greedy[s] = best;
  }
  return res;
}

double evaluate_agent_value(const GameSpec& game, const ActorSet& actors,
                            int agent, int episodes, Rng& rng) {
  double total = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    Vec s = game.initial_state(rng);
    for (int t = 0; t < game.horizon; ++t) {
      if (game.is_terminal && game.is_terminal(s)) break;
      Vec a = actors.joint_action(game, s);
      total += game.reward_oracle(s, a)[agent];
      s = game.transition(s, a, rng);
    }
  }
  return total / episodes;
}

BestResponseResult train_best_response(const GameSpec& game,
                                       const ActorSet& frozen, int agent,
                                       const BestResponseConfig& cfg,
                                       Rng& rng) {
  BestResponseResult res;
  Rng rng_init = rng.fork("br_init");
  Rng rng_env = rng.fork("br_env");
  Rng rng_batch = rng.fork("br_batch");
  Rng rng_eval = rng.fork("br_eval");

  const int off = game.action_offset(agent);
  const int ni = game.action_dims[agent];
  const int S = game.state_dim;
  auto adims = net_dims(S, cfg.hidden, ni);
  Vec lo(game.action_low.begin() + off, game.action_low.begin() + off + ni);
  Vec hi(game.action_high.begin() + off, game.action_high.begin() + off + ni);
  res.br = GaussianPolicy(
      DenseNet::xavier(adims, net_acts(adims.size() - 1), rng_init), cfg.sigma,
      lo, hi);
  auto cdims = net_dims(S + ni, cfg.hidden, 1);
  DenseNet critic = DenseNet::xavier(cdims, net_acts(cdims.size() - 1), rng_init);
  DenseNet critic_target = critic;
  const double tau = 0.01;

  struct Step {
    Vec s, ai, s2;
    double r;
    bool done;
  };
  std::vector<Step> buffer;
  buffer.reserve(cfg.buffer);
  size_t head = 0;

  Optimizer actor_opt = Optimizer::adam(cfg.lr_actor, 1.0);
  Optimizer critic_opt = Optimizer::adam(cfg.lr_critic, 1.0);

  Vec s = game.initial_state(rng_env);
  int t_in_ep = 0;
  for (int step = 0; step < cfg.steps; ++step) {
    Vec joint = frozen.joint_action(game, s);
    Vec ai = res.br.sample(s, rng_env);
    game.set_agent_slice(joint, agent, ai);
    double r = game.reward_oracle(s, joint)[agent];
    Vec s2 = game.transition(s, joint, rng_env);
    ++t_in_ep;
    bool done = t_in_ep >= game.horizon ||
                (game.is_terminal && game.is_terminal(s2));
    Step st{s, ai, s2, r, done};
    if (static_cast<int>(buffer.size()) < cfg.buffer) {
      buffer.push_back(std::move(st));
    } else {
      buffer[head] = std::move(st);
      head = (head + 1) % buffer.size();
    }
    s = done ? game.initial_state(rng_env) : s2;
    if (done) t_in_ep = 0;

    if (static_cast<int>(buffer.size()) < cfg.batch) continue;
    // Critic regression toward r + gamma * F_target(s', br(s')).
    Vec cgrad(critic.param_count(), 0.0);
    std::vector<int> idx(cfg.batch);
    for (int k = 0; k < cfg.batch; ++k)
      idx[k] = rng_batch.uniform_int(static_cast<int>(buffer.size()));
    for (int k = 0; k < cfg.batch; ++k) {
      const Step& b = buffer[idx[k]];
      double y = b.r;
      if (!b.done)
        y += game.discount *
             critic_target.forward(concat(b.s2, res.br.act(b.s2)))[0];
      Vec x = concat(b.s, b.ai);
      double err = critic.forward(x)[0] - y;
      Vec pg(cgrad.size(), 0.0);
      critic.backward(x, {2.0 * err / cfg.batch}, &pg, nullptr);
      axpy(1.0, pg, cgrad);
    }
    Vec cp = critic.params();
    critic_opt.step(cp, cgrad);
    critic.set_params(cp);
    Vec tp = critic_target.params();
    for (size_t k = 0; k < tp.size(); ++k)
      tp[k] = tau * cp[k] + (1.0 - tau) * tp[k];
    critic_target.set_params(tp);

    // DPG ascent on the critic.
    Vec agrad(res.br.mean_net().param_count(), 0.0);
    for (int k = 0; k < cfg.batch; ++k) {
      const Step& b = buffer[idx[k]];
      Vec u = res.br.mean_presquash(b.s);
      Vec x = concat(b.s, res.br.squash(u));
      Vec ig(x.size(), 0.0);
      critic.backward(x, {1.0}, nullptr, &ig);
      Vec dsq = res.br.squash_deriv(u);
      Vec upstream(ni);
      for (int q = 0; q < ni; ++q) upstream[q] = ig[S + q] * dsq[q];
      Vec pg(agrad.size(), 0.0);
      res.br.mean_net().backward(b.s, upstream, &pg, nullptr);
      axpy(-1.0 / cfg.batch, pg, agrad);
    }
    Vec ap = res.br.mean_net().params();
    actor_opt.step(ap, agrad);
    res.br.mean_net().set_params(ap);
  }

  // Monte-Carlo evaluation of both profiles.
  res.current_value =
      evaluate_agent_value(game, frozen, agent, cfg.eval_episodes, rng_eval);
  ActorSet deviated = frozen;
  deviated.actors[agent] = res.br;
  deviated.actors[agent].set_sigma(0.0);
  res.br_value =
      evaluate_agent_value(game, deviated, agent, cfg.eval_episodes, rng_eval);
  return res;
}

}  // namespace spg
