#include "spg/envs/cournot.hpp"

#include <numeric>
#include <stdexcept>

namespace spg {

double cournot_symmetric_ne(const CournotParams& p) {
  return (p.alpha - p.gamma_cost) / (p.beta * (p.n_agents + 1));
}

double cournot_best_response(const CournotParams& p, double others_total) {
  return (p.alpha - p.gamma_cost - p.beta * others_total) / (2.0 * p.beta);
}

GameSpec cournot_game(const CournotParams& p) {
  if (p.beta == 0.0) throw std::invalid_argument("cournot: beta must be != 0");
  Vec caps = p.action_caps;
  if (caps.empty()) caps.assign(p.n_agents, 1.0);
  if (static_cast<int>(caps.size()) != p.n_agents)
    throw std::invalid_argument("cournot: action_caps size mismatch");
  for (double c : caps)
    if (c <= 0.0) throw std::invalid_argument("cournot: caps must be > 0");

  const int n = p.n_agents;
  const double alpha = p.alpha, beta = p.beta, gc = p.gamma_cost;

  GameSpec g;
  g.name = "cournot";
  g.n_agents = n;
  g.state_dim = 1;
  g.action_dims.assign(n, 1);
  g.horizon = 1;
  g.discount = 0.99;
  g.state_low = {0.0};
  g.state_high = {0.0};
  for (double c : caps) {
    g.action_low.push_back(-c);
    g.action_high.push_back(c);
  }
  g.reward_oracle = [n, alpha, beta, gc](const Vec&, const Vec& a) {
    double total = std::accumulate(a.begin(), a.end(), 0.0);
    Vec r(n);
    for (int i = 0; i < n; ++i)
      r[i] = a[i] * (alpha - beta * total) - gc * a[i];
    return r;
  };
  g.reward_grad_oracle = [n, alpha, beta, gc](const Vec&, const Vec& a, int i,
                                              Vec* da, Vec* ds) {
    double total = std::accumulate(a.begin(), a.end(), 0.0);
    if (da) {
      da->assign(n, 0.0);
      for (int j = 0; j < n; ++j) (*da)[j] = -beta * a[i];
      (*da)[i] = alpha - beta * total - beta * a[i] - gc;
    }
    if (ds) ds->assign(1, 0.0);
  };
  // phi = (alpha - gc) sum a - beta sum a_i^2 - beta sum_{i<j} a_i a_j, k = 0.
  g.analytic_potential = [n, alpha, beta, gc](const Vec&, const Vec& a) {
    double lin = 0.0, sq = 0.0, cross = 0.0;
    for (int i = 0; i < n; ++i) {
      lin += a[i];
      sq += a[i] * a[i];
      for (int j = i + 1; j < n; ++j) cross += a[i] * a[j];
    }
    return (alpha - gc) * lin - beta * sq - beta * cross;
  };
  g.transition = [](const Vec& s, const Vec&, Rng&) { return s; };
  g.initial_state = [](Rng&) { return Vec{0.0}; };
  g.analytic_ne.assign(n, cournot_symmetric_ne(p));
  return g;
}

}  // namespace spg
