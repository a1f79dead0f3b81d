#include "spg/envs/nav.hpp"

#include <cmath>
#include <stdexcept>

#include "spg/rng.hpp"

namespace spg {

namespace {

void validate(const NavParams& p) {
  if (p.n_agents < 1) throw std::invalid_argument("need at least one agent");
  if (p.eps <= 0.0) throw std::invalid_argument("eps must be positive");
  if (p.dt <= 0.0) throw std::invalid_argument("dt must be positive");
  // M symmetric PSD (2x2: symmetric, nonnegative diagonal and determinant).
  const auto& M = p.M;
  if (std::abs(M[0][1] - M[1][0]) > 1e-12)
    throw std::invalid_argument("M must be symmetric");
  if (M[0][0] < 0.0 || M[1][1] < 0.0 ||
      M[0][0] * M[1][1] - M[0][1] * M[1][0] < -1e-12)
    throw std::invalid_argument("M must be PSD");
}

double quad_form(const std::array<std::array<double, 2>, 2>& M, double dx,
                 double dy) {
  return M[0][0] * dx * dx + 2.0 * M[0][1] * dx * dy + M[1][1] * dy * dy;
}

}  // namespace

GameSpec nav_game(const NavParams& params) {
  validate(params);
  NavParams p = params;
  if (p.bonus.empty()) p.bonus.assign(p.n_agents, 1.0);
  if (static_cast<int>(p.bonus.size()) != p.n_agents)
    throw std::invalid_argument("bonus size must equal n_agents");
  const int N = p.n_agents;

  GameSpec g;
  g.name = "nav";
  g.n_agents = N;
  g.state_dim = 2 * N;
  g.action_dims.assign(N, 2);
  g.horizon = p.horizon;
  g.discount = 0.99;
  g.state_low.assign(2 * N, -p.arena_halfwidth);
  g.state_high.assign(2 * N, p.arena_halfwidth);
  g.action_low.assign(2 * N, -1.0);
  g.action_high.assign(2 * N, 1.0);

  g.initial_state = [N, p](Rng&) {
    // Agents start on a small circle around the origin.
    Vec s(2 * N);
    for (int i = 0; i < N; ++i) {
      double th = 2.0 * M_PI * i / N;
      s[2 * i] = 0.5 * std::cos(th);
      s[2 * i + 1] = 0.5 * std::sin(th);
    }
    return s;
  };

  g.transition = [N, p](const Vec& s, const Vec& a, Rng&) {
    Vec s2(2 * N);
    for (int k = 0; k < 2 * N; ++k) {
      double x = s[k] + p.dt * a[k];
      s2[k] = std::clamp(x, -p.arena_halfwidth, p.arena_halfwidth);
    }
    return s2;
  };

  g.reward_oracle = [N, p](const Vec& s, const Vec& a) {
    Vec r(N, 0.0);
    for (int i = 0; i < N; ++i) {
      double dx = s[2 * i] - p.target[0];
      double dy = s[2 * i + 1] - p.target[1];
      double val = p.bonus[i] - p.alpha * (dx * dx + dy * dy);
      for (int j = 0; j < N; ++j) {
        if (j == i) continue;
        double ux = s[2 * i] - s[2 * j], uy = s[2 * i + 1] - s[2 * j + 1];
        val -= p.beta / std::sqrt(ux * ux + uy * uy + p.eps);
      }
      double ax = a[2 * i] - p.rho[0], ay = a[2 * i + 1] - p.rho[1];
      val -= quad_form(p.M, ax, ay);
      r[i] = val;
    }
    return r;
  };

  g.reward_grad_oracle = [N, p](const Vec& s, const Vec& a, int i, Vec* da,
                                Vec* ds) {
    if (da) {
      da->assign(2 * N, 0.0);
      double ax = a[2 * i] - p.rho[0], ay = a[2 * i + 1] - p.rho[1];
      (*da)[2 * i] = -2.0 * (p.M[0][0] * ax + p.M[0][1] * ay);
      (*da)[2 * i + 1] = -2.0 * (p.M[1][0] * ax + p.M[1][1] * ay);
    }
    if (ds) {
      ds->assign(2 * N, 0.0);
      (*ds)[2 * i] = -2.0 * p.alpha * (s[2 * i] - p.target[0]);
      (*ds)[2 * i + 1] = -2.0 * p.alpha * (s[2 * i + 1] - p.target[1]);
      for (int j = 0; j < N; ++j) {
        if (j == i) continue;
        double ux = s[2 * i] - s[2 * j], uy = s[2 * i + 1] - s[2 * j + 1];
        double u = ux * ux + uy * uy + p.eps;
        double c = p.beta * std::pow(u, -1.5);
        (*ds)[2 * i] += c * ux;
        (*ds)[2 * i + 1] += c * uy;
        (*ds)[2 * j] -= c * ux;
        (*ds)[2 * j + 1] -= c * uy;
      }
    }
  };

  g.analytic_potential = [N, p](const Vec& s, const Vec& a) {
    double phi = 0.0;
    for (int i = 0; i < N; ++i) {
      double dx = s[2 * i] - p.target[0];
      double dy = s[2 * i + 1] - p.target[1];
      phi -= p.alpha * (dx * dx + dy * dy);
      double ax = a[2 * i] - p.rho[0], ay = a[2 * i + 1] - p.rho[1];
      phi -= quad_form(p.M, ax, ay);
      for (int j = i + 1; j < N; ++j) {
        double ux = s[2 * i] - s[2 * j], uy = s[2 * i + 1] - s[2 * j + 1];
        phi -= p.beta / std::sqrt(ux * ux + uy * uy + p.eps);
      }
    }
    return phi;
  };

  return g;
}

}  // namespace spg
