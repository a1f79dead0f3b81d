#include "spg/envs/ablation.hpp"

#include <cmath>
#include <stdexcept>

namespace spg {

AblationMode ablation_mode_from_name(const std::string& name) {
  if (name == "noncoop_potential") return AblationMode::kNoncoopPotential;
  if (name == "non_potential") return AblationMode::kNonPotential;
  throw std::invalid_argument("unknown ablation mode: " + name);
}

std::string ablation_mode_name(AblationMode mode) {
  return mode == AblationMode::kNoncoopPotential ? "noncoop_potential"
                                                 : "non_potential";
}

namespace {

// First action component of each agent in the joint vector.
int head_index(const GameSpec& g, int agent) { return g.action_offset(agent); }

double extra_term(const GameSpec& g, AblationMode mode, double c, const Vec& a,
                  int i) {
  const int N = g.n_agents;
  if (mode == AblationMode::kNoncoopPotential) {
    double v = 0.0;
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      double x = a[head_index(g, j)];
      v += x * x;
    }
    return c * v;
  }
  // The minus sign makes the coupling a drag on returns near positive joint
  // actions, so stronger c degrades realized welfare.
  int nxt = (i + 1) % N;
  return -c * a[head_index(g, i)] * std::sin(a[head_index(g, nxt)]);
}

void extra_grad(const GameSpec& g, AblationMode mode, double c, const Vec& a,
                int i, Vec* da) {
  if (!da) return;
  const int N = g.n_agents;
  if (mode == AblationMode::kNoncoopPotential) {
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      (*da)[head_index(g, j)] += 2.0 * c * a[head_index(g, j)];
    }
    return;
  }
  int nxt = (i + 1) % N;
  (*da)[head_index(g, i)] -= c * std::sin(a[head_index(g, nxt)]);
  (*da)[head_index(g, nxt)] -=
      c * a[head_index(g, i)] * std::cos(a[head_index(g, nxt)]);
}

}  // namespace

GameSpec ablate(const GameSpec& base, const AblationConfig& cfg) {
  if (cfg.c < 0.0) throw std::invalid_argument("c must be nonnegative");
  if (base.n_agents < 2 && cfg.mode == AblationMode::kNonPotential)
    throw std::invalid_argument("non_potential coupling needs >= 2 agents");
  GameSpec g = base;
  g.name = base.name + "+" + ablation_mode_name(cfg.mode);
  if (cfg.c == 0.0) return g;

  const AblationMode mode = cfg.mode;
  const double c = cfg.c;
  auto base_reward = base.reward_oracle;
  g.reward_oracle = [base, base_reward, mode, c](const Vec& s, const Vec& a) {
    Vec r = base_reward(s, a);
    for (int i = 0; i < base.n_agents; ++i)
      r[i] += extra_term(base, mode, c, a, i);
    return r;
  };
  if (base.reward_grad_oracle) {
    auto base_grad = base.reward_grad_oracle;
    g.reward_grad_oracle = [base, base_grad, mode, c](const Vec& s,
                                                      const Vec& a, int i,
                                                      Vec* da, Vec* ds) {
      base_grad(s, a, i, da, ds);
      extra_grad(base, mode, c, a, i, da);
    };
  }
  // analytic_potential stays the base game's candidate; non_potential mode
  // exists precisely so that candidate stops certifying the rewards.
  return g;
}

GameSpec team_game(const GameSpec& base) {
  if (!base.analytic_potential)
    throw std::invalid_argument("team_game needs a bundled potential");
  GameSpec g = base;
  g.name = base.name + "+team";
  auto phi = base.analytic_potential;
  int n = base.n_agents;
  g.reward_oracle = [phi, n](const Vec& s, const Vec& a) {
    return Vec(n, phi(s, a));
  };
  g.reward_grad_oracle = [phi](const Vec& s, const Vec& a, int, Vec* da,
                               Vec* ds) {
    const double h = 1e-6;
    if (da) {
      da->assign(a.size(), 0.0);
      for (size_t k = 0; k < a.size(); ++k) {
        Vec ap = a, am = a;
        ap[k] += h;
        am[k] -= h;
        (*da)[k] = (phi(s, ap) - phi(s, am)) / (2 * h);
      }
    }
    if (ds) {
      ds->assign(s.size(), 0.0);
      for (size_t k = 0; k < s.size(); ++k) {
        Vec sp = s, sm = s;
        sp[k] += h;
        sm[k] -= h;
        (*ds)[k] = (phi(sp, a) - phi(sm, a)) / (2 * h);
      }
    }
  };
  g.analytic_ne.clear();
  return g;
}

}  // namespace spg
