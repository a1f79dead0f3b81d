#pragma once

#include "spg/game.hpp"

namespace spg {

// Cournot oligopoly: R_i = a_i (alpha - beta * sum a) - gamma_cost * a_i.
// Horizon-1 game over a single dummy state. Interior symmetric NE at
// a* = (alpha - gamma_cost) / (beta (N + 1)).
struct CournotParams {
  int n_agents = 2;
  double alpha = 2.0;
  double beta = 1.0;
  double gamma_cost = 1.0;
  Vec action_caps;  // A_i; default: 1 per agent
};

GameSpec cournot_game(const CournotParams& p);

double cournot_symmetric_ne(const CournotParams& p);

// Closed-form best response to the opponents' total quantity.
double cournot_best_response(const CournotParams& p, double others_total);

}  // namespace spg
