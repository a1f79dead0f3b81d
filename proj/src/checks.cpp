#include "spg/checks.hpp"

#include <stdexcept>

namespace spg {

namespace {
Vec uniform_in_box(const Vec& lo, const Vec& hi, Rng& rng) {
  Vec x(lo.size());
  for (size_t i = 0; i < lo.size(); ++i) x[i] = rng.uniform(lo[i], hi[i]);
  return x;
}
}  // namespace

CheckReport check_potentiality(const GameSpec& game, const PotentialFn& phi,
                               int probes, double tol, Rng& rng) {
  if (probes < 1) throw std::invalid_argument("check_potentiality: probes < 1");
  CheckReport rep;
  rep.probes = probes;
  for (int p = 0; p < probes; ++p) {
    Vec s = uniform_in_box(game.state_low, game.state_high, rng);
    Vec a = uniform_in_box(game.action_low, game.action_high, rng);
    int i = rng.uniform_int(game.n_agents);
    Vec a2 = a;
    int off = game.action_offset(i);
    for (int k = 0; k < game.action_dims[i]; ++k)
      a2[off + k] = rng.uniform(game.action_low[off + k],
                                game.action_high[off + k]);
    double dr = game.reward_oracle(s, a2)[i] - game.reward_oracle(s, a)[i];
    double dphi = phi(s, a2) - phi(s, a);
    rep.max_violation = std::max(rep.max_violation, std::fabs(dr - dphi));
  }
  rep.pass = rep.max_violation <= tol;
  return rep;
}

CheckReport check_state_transitivity(const GameSpec& game,
                                     const PotentialFn& phi, int probes,
                                     double tol, Rng& rng) {
  if (probes < 1)
    throw std::invalid_argument("check_state_transitivity: probes < 1");
  CheckReport rep;
  rep.probes = probes;
  for (int p = 0; p < probes; ++p) {
    Vec s = uniform_in_box(game.state_low, game.state_high, rng);
    Vec s2 = uniform_in_box(game.state_low, game.state_high, rng);
    Vec a = uniform_in_box(game.action_low, game.action_high, rng);
    int i = rng.uniform_int(game.n_agents);
    double dr = game.reward_oracle(s, a)[i] - game.reward_oracle(s2, a)[i];
    double dphi = phi(s, a) - phi(s2, a);
    rep.max_violation = std::max(rep.max_violation, std::fabs(dr - dphi));
  }
  rep.pass = rep.max_violation <= tol;
  return rep;
}

}  // namespace spg
