#pragma once

#include "spg/game.hpp"

namespace spg {

struct CheckReport {
  double max_violation = 0.0;
  bool pass = false;
  int probes = 0;
};

using PotentialFn = std::function<double(const Vec& s, const Vec& a)>;

// Unilateral-action-deviation check of the potentiality condition:
// |[R_i(s,(a'^i,a^-i)) - R_i(s,a)] - [phi(s,(a'^i,a^-i)) - phi(s,a)]|.
CheckReport check_potentiality(const GameSpec& game, const PotentialFn& phi,
                               int probes, double tol, Rng& rng);

// State-deviation analogue at fixed joint action.
CheckReport check_state_transitivity(const GameSpec& game,
                                     const PotentialFn& phi, int probes,
                                     double tol, Rng& rng);

}  // namespace spg
