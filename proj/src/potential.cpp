#include "spg/potential.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "spg/dense_net.hpp"
#include "spg/optimizer.hpp"

namespace spg {

namespace {

int potential_input_dim(const GameSpec& game) {
  return game.state_dim + game.joint_action_dim();
}

Vec box_center(const Vec& lo, const Vec& hi) {
  Vec c(lo.size());
  for (size_t k = 0; k < lo.size(); ++k) c[k] = 0.5 * (lo[k] + hi[k]);
  return c;
}

}  // namespace

PotentialModel PotentialModel::poly(const GameSpec& game, int degree) {
  return PotentialModel(
      std::make_unique<PolyModel>(potential_input_dim(game), degree));
}

PotentialModel PotentialModel::dense(const GameSpec& game,
                                     std::vector<int> hidden, Rng& rng) {
  std::vector<int> dims = {potential_input_dim(game)};
  std::vector<Activation> acts;
  for (int h : hidden) {
    dims.push_back(h);
    acts.push_back(Activation::kTanh);
  }
  dims.push_back(1);
  acts.push_back(Activation::kIdentity);
  return PotentialModel(
      std::make_unique<DenseNet>(DenseNet::xavier(dims, acts, rng)));
}

double PotentialModel::value(const Vec& s, const Vec& a) const {
  return body_->forward(concat(s, a))[0] + offset_;
}

void PotentialModel::input_grad(const Vec& s, const Vec& a, Vec* da,
                                Vec* ds) const {
  Vec ig(body_->input_dim(), 0.0);
  body_->backward(concat(s, a), {1.0}, nullptr, &ig);
  const int S = static_cast<int>(s.size());
  if (ds) ds->assign(ig.begin(), ig.begin() + S);
  if (da) da->assign(ig.begin() + S, ig.end());
}

void PotentialModel::canonicalize(const Vec& s_ref, const Vec& a_ref) {
  offset_ = 0.0;
  offset_ = -value(s_ref, a_ref);
}

PotentialFn PotentialModel::as_fn() const {
  auto copy = std::make_shared<PotentialModel>(*this);
  return [copy](const Vec& s, const Vec& a) { return copy->value(s, a); };
}

// ---- Reward models ----

RewardGradFn RewardModelSet::grad_fn() const {
  auto copy = std::make_shared<RewardModelSet>(*this);
  return [copy](const Vec& s, const Vec& a, int i, Vec* da, Vec* ds) {
    copy->models.at(i).input_grad(s, a, da, ds);
  };
}

RewardModelSet fit_reward_models(const GameSpec& game,
                                 const std::vector<TransitionSample>& data,
                                 const RewardFitConfig& cfg, Rng& rng) {
  if (data.empty()) throw std::invalid_argument("fit_reward_models: no data");
  const int N = game.n_agents;
  const int n = static_cast<int>(data.size());
  std::vector<int> idx(n);
  for (int k = 0; k < n; ++k) idx[k] = k;
  for (int k = n - 1; k > 0; --k) std::swap(idx[k], idx[rng.uniform_int(k + 1)]);
  int n_hold = std::max(1, static_cast<int>(n * cfg.holdout_fraction));
  int n_train = n - n_hold;
  if (n_train < 1) throw std::invalid_argument("fit_reward_models: too few samples");

  RewardModelSet out;
  out.holdout_mse.assign(N, 0.0);
  for (int i = 0; i < N; ++i) {
    PotentialModel model =
        cfg.hidden.empty()
            ? PotentialModel::poly(game, cfg.poly_degree)
            : PotentialModel::dense(game, cfg.hidden, rng);
    if (cfg.hidden.empty()) {
      // Linear-in-features model: ridge-regularized normal equations.
      auto* pm = dynamic_cast<PolyModel*>(&model.body());
      const int F = pm->param_count();
      std::vector<Vec> AtA(F, Vec(F, 0.0));
      Vec Atb(F, 0.0);
      for (int t = 0; t < n_train; ++t) {
        const auto& smp = data[idx[t]];
        Vec f = pm->basis().features(concat(smp.s, smp.a));
        double y = smp.rewards[i];
        for (int r = 0; r < F; ++r) {
          Atb[r] += f[r] * y;
          for (int c = 0; c < F; ++c) AtA[r][c] += f[r] * f[c];
        }
      }
      for (int r = 0; r < F; ++r) AtA[r][r] += 1e-10;
      pm->set_params(solve_linear(AtA, Atb));
    } else {
      Vec params = model.body().params();
      Optimizer opt = Optimizer::adam(cfg.lr, 1e9);
      for (int ep = 0; ep < cfg.epochs; ++ep) {
        Vec grad(params.size(), 0.0);
        for (int t = 0; t < n_train; ++t) {
          const auto& smp = data[idx[t]];
          Vec x = concat(smp.s, smp.a);
          double err = model.body().forward(x)[0] - smp.rewards[i];
          Vec pg(params.size(), 0.0);
          model.body().backward(x, {2.0 * err / n_train}, &pg, nullptr);
          axpy(1.0, pg, grad);
        }
        opt.step(params, grad);
        model.body().set_params(params);
      }
    }
    double mse = 0.0;
    for (int t = n_train; t < n; ++t) {
      const auto& smp = data[idx[t]];
      double err = model.value(smp.s, smp.a) - smp.rewards[i];
      mse += err * err;
    }
    out.holdout_mse[i] = mse / n_hold;
    out.models.push_back(std::move(model));
  }
  return out;
}

RewardGradFn reward_grad_source(const GameSpec& game,
                                const RewardModelSet* fitted) {
  if (game.has_reward_grad()) return game.reward_grad_oracle;
  if (fitted && !fitted->models.empty()) return fitted->grad_fn();
  throw std::invalid_argument("no reward derivative source available");
}

// ---- Residual objective ----

std::vector<Probe> draw_probes(const GameSpec& game, const ResidualConfig& cfg,
                               Rng& rng) {
  if (cfg.mc_actions < 1 || cfg.sigma_eps <= 0.0)
    throw std::invalid_argument("bad residual config");
  const int A = game.joint_action_dim();
  std::vector<Probe> probes(cfg.probes);
  for (auto& p : probes) {
    p.s.resize(game.state_dim);
    for (int k = 0; k < game.state_dim; ++k) {
      double c = 0.5 * (game.state_low[k] + game.state_high[k]);
      double r = 0.5 * (game.state_high[k] - game.state_low[k]) * cfg.shrink;
      p.s[k] = c + r * (2.0 * rng.uniform() - 1.0);
    }
    p.eta.resize(A);
    for (int k = 0; k < A; ++k) {
      double c = 0.5 * (game.action_low[k] + game.action_high[k]);
      double r = 0.5 * (game.action_high[k] - game.action_low[k]) * cfg.shrink;
      p.eta[k] = c + r * (2.0 * rng.uniform() - 1.0);
    }
    p.z.resize(cfg.mc_actions);
    for (auto& z : p.z) {
      z.resize(A);
      for (double& v : z) v = rng.normal();
    }
  }
  return probes;
}

namespace {

// Per-sample stacked derivative blocks of R_i - phi at (s, a): own-action
// block then state block.
void stacked_blocks(const GameSpec& game, int agent, const Vec& s, const Vec& a,
                    const PotentialModel& phi, const RewardGradFn& reward_grads,
                    Vec* blocks) {
  const int off = game.action_offset(agent);
  const int ni = game.action_dims[agent];
  const int S = game.state_dim;
  Vec rda, rds, pda, pds;
  reward_grads(s, a, agent, &rda, &rds);
  phi.input_grad(s, a, &pda, &pds);
  blocks->resize(ni + S);
  for (int q = 0; q < ni; ++q) (*blocks)[q] = rda[off + q] - pda[off + q];
  for (int q = 0; q < S; ++q) (*blocks)[ni + q] = rds[q] - pds[q];
}

}  // namespace

Vec residual_gi(const GameSpec& game, int agent, const Probe& probe,
                const PotentialModel& phi, const RewardGradFn& reward_grads,
                const ResidualConfig& cfg) {
  const int off = game.action_offset(agent);
  const int ni = game.action_dims[agent];
  const int S = game.state_dim;
  const int D = ni + S;
  Vec g(static_cast<size_t>(ni) * D, 0.0);
  const int K = static_cast<int>(probe.z.size());
  Vec blocks;
  for (int k = 0; k < K; ++k) {
    Vec a = probe.eta;
    axpy(cfg.sigma_eps, probe.z[k], a);
    stacked_blocks(game, agent, probe.s, a, phi, reward_grads, &blocks);
    for (int p = 0; p < ni; ++p) {
      double score = probe.z[k][off + p] / cfg.sigma_eps;
      for (int q = 0; q < D; ++q)
        g[static_cast<size_t>(p) * D + q] += score * blocks[q] / K;
    }
  }
  return g;
}

namespace {

double gradient_mode_objective(const GameSpec& game,
                               const std::vector<Probe>& probes,
                               const PotentialModel& phi,
                               const RewardGradFn& reward_grads,
                               const ResidualConfig& cfg, Vec* grad,
                               int agent_filter) {
  const int N = game.n_agents;
  const int S = game.state_dim;
  const int P = static_cast<int>(probes.size());
  const int in_dim = S + game.joint_action_dim();
  double loss = 0.0;
  if (grad) grad->assign(phi.body().param_count(), 0.0);
  int agents_counted = (agent_filter >= 0) ? 1 : N;
  for (const auto& probe : probes) {
    for (int i = 0; i < N; ++i) {
      if (agent_filter >= 0 && i != agent_filter) continue;
      const int off = game.action_offset(i);
      const int ni = game.action_dims[i];
      const int D = ni + S;
      const int K = static_cast<int>(probe.z.size());
      // First pass: accumulate g^i, keeping per-sample pieces for the
      // parameter gradient.
      Vec g(static_cast<size_t>(ni) * D, 0.0);
      std::vector<Vec> blocks_k(K), score_k(K);
      std::vector<Vec> a_k(K);
      for (int k = 0; k < K; ++k) {
        Vec a = probe.eta;
        axpy(cfg.sigma_eps, probe.z[k], a);
        a_k[k] = a;
        stacked_blocks(game, i, probe.s, a, phi, reward_grads, &blocks_k[k]);
        score_k[k].resize(ni);
        for (int p = 0; p < ni; ++p)
          score_k[k][p] = probe.z[k][off + p] / cfg.sigma_eps;
        for (int p = 0; p < ni; ++p)
          for (int q = 0; q < D; ++q)
            g[static_cast<size_t>(p) * D + q] +=
                score_k[k][p] * blocks_k[k][q] / K;
      }
      loss += dot(g, g);
      if (!grad) continue;
      // d g_{pq} / d rho = -(1/K) sum_k score_p mixed_grad(x_k, e_dir(q));
      // fold the p,q sums into one direction per sample (linearity).
      for (int k = 0; k < K; ++k) {
        Vec dir(in_dim, 0.0);
        for (int p = 0; p < ni; ++p) {
          double sc = score_k[k][p];
          for (int q = 0; q < ni; ++q)
            dir[S + off + q] += g[static_cast<size_t>(p) * D + q] * sc;
          for (int q = 0; q < S; ++q)
            dir[q] += g[static_cast<size_t>(p) * D + ni + q] * sc;
        }
        if (norm_inf(dir) == 0.0) continue;
        Vec mg = phi.body().mixed_grad(concat(probe.s, a_k[k]), dir);
        axpy(-2.0 / (agents_counted * P * K), mg, *grad);
      }
    }
  }
  return loss / (agents_counted * P);
}

double difference_mode_objective(const GameSpec& game,
                                 const std::vector<Probe>& probes,
                                 const PotentialModel& phi,
                                 const ResidualConfig& cfg, Vec* grad,
                                 int agent_filter) {
  const int N = game.n_agents;
  const int P = static_cast<int>(probes.size());
  double loss = 0.0;
  if (grad) grad->assign(phi.body().param_count(), 0.0);
  int agents_counted = (agent_filter >= 0) ? 1 : N;
  int pairs = 0;
  for (const auto& probe : probes) {
    const int K = static_cast<int>(probe.z.size());
    for (int i = 0; i < N; ++i) {
      if (agent_filter >= 0 && i != agent_filter) continue;
      const int off = game.action_offset(i);
      const int ni = game.action_dims[i];
      for (int k = 0; k < K; ++k) {
        Vec a = probe.eta;
        axpy(cfg.sigma_eps, probe.z[k], a);
        // Unilateral deviation: agent i's block redrawn from the next frozen
        // noise vector.
        Vec a2 = a;
        const Vec& z2 = probe.z[(k + 1) % K];
        for (int q = 0; q < ni; ++q)
          a2[off + q] = probe.eta[off + q] + cfg.sigma_eps * z2[off + q];
        double dr = game.reward_oracle(probe.s, a2)[i] -
                    game.reward_oracle(probe.s, a)[i];
        double dphi = phi.value(probe.s, a2) - phi.value(probe.s, a);
        double r = dr - dphi;
        loss += r * r;
        ++pairs;
        if (grad) {
          Vec pg2(grad->size(), 0.0), pg1(grad->size(), 0.0);
          phi.body().backward(concat(probe.s, a2), {1.0}, &pg2, nullptr);
          phi.body().backward(concat(probe.s, a), {1.0}, &pg1, nullptr);
          axpy(-2.0 * r, pg2, *grad);
          axpy(2.0 * r, pg1, *grad);
        }
      }
    }
  }
  (void)P;
  (void)agents_counted;
  if (pairs == 0) return 0.0;
  if (grad)
    for (double& v : *grad) v /= pairs;
  return loss / pairs;
}

}  // namespace

double residual_objective(const GameSpec& game,
                          const std::vector<Probe>& probes,
                          const PotentialModel& phi,
                          const RewardGradFn& reward_grads,
                          const ResidualConfig& cfg, Vec* grad,
                          int agent_filter) {
  if (probes.empty()) throw std::invalid_argument("no probes");
  if (cfg.mode == ResidualMode::kGradient)
    return gradient_mode_objective(game, probes, phi, reward_grads, cfg, grad,
                                   agent_filter);
  return difference_mode_objective(game, probes, phi, cfg, grad, agent_filter);
}

EstimationResult estimate_potential(const GameSpec& game, PotentialModel init,
                                    const ResidualConfig& cfg,
                                    const RewardGradFn& reward_grads,
                                    Rng& rng) {
  EstimationResult res;
  res.phi = std::move(init);
  auto probes = draw_probes(game, cfg, rng);
  Vec params = res.phi.body().params();
  Optimizer opt(cfg.opt_kind, cfg.lr, 0.9, 0.999, 1e-8, 1e9);
  for (int it = 0; it < cfg.iterations; ++it) {
    Vec grad;
    double loss =
        residual_objective(game, probes, res.phi, reward_grads, cfg, &grad);
    if (!std::isfinite(loss) || loss > 1e6) {
      std::ostringstream msg;
      msg << "potential estimation diverged at iteration " << it
          << " (loss " << loss << ")";
      throw std::runtime_error(msg.str());
    }
    res.loss_trace.push_back(loss);
    double gn = norm2(grad);
    res.grad_norm_trace.push_back(gn);
    res.iterations = it + 1;
    if (gn < cfg.stop_grad_norm) {
      res.converged = true;
      break;
    }
    opt.step(params, grad);
    res.phi.body().set_params(params);
  }
  res.phi.canonicalize(box_center(game.state_low, game.state_high),
                       box_center(game.action_low, game.action_high));
  return res;
}

std::string estimation_report(const EstimationResult& res,
                              const ResidualConfig& cfg) {
  nlohmann::json j;
  j["mode"] = cfg.mode == ResidualMode::kGradient ? "gradient" : "difference";
  j["iterations"] = res.iterations;
  j["converged"] = res.converged;
  j["final_loss"] = res.loss_trace.empty() ? 0.0 : res.loss_trace.back();
  j["final_grad_norm"] =
      res.grad_norm_trace.empty() ? 0.0 : res.grad_norm_trace.back();
  if (const auto* pm = dynamic_cast<const PolyModel*>(&res.phi.body()))
    j["coefficients"] = pm->params();
  return j.dump(2);
}

Vec nascent_bound_probe(const std::function<double(const Vec&)>& F,
                        const Vec& a, const Vec& a_dev, const Vec& sigmas,
                        int n_samples, Rng& rng) {
  for (double s : sigmas)
    if (s <= 0.0) throw std::invalid_argument("sigmas must be positive");
  // Common random numbers across the sigma sweep.
  std::vector<Vec> z(n_samples, Vec(a.size()));
  for (auto& row : z)
    for (double& v : row) v = rng.normal();
  double pure = F(a_dev) - F(a);
  Vec gaps(sigmas.size());
  for (size_t si = 0; si < sigmas.size(); ++si) {
    double m1 = 0.0, m2 = 0.0;
    for (int k = 0; k < n_samples; ++k) {
      Vec x1 = a, x2 = a_dev;
      axpy(sigmas[si], z[k], x1);
      axpy(sigmas[si], z[k], x2);
      m1 += F(x1) / n_samples;
      m2 += F(x2) / n_samples;
    }
    gaps[si] = std::abs(pure - (m2 - m1));
  }
  return gaps;
}

}  // namespace spg
