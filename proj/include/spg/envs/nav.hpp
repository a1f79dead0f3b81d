#pragma once

#include <array>

#include "spg/game.hpp"

namespace spg {

// Coordinated point navigation in the plane. Each agent steers toward a
// shared target while a pairwise repulsion term discourages crowding and a
// Mahalanobis penalty anchors actions near a preferred control rho.
struct NavParams {
  int n_agents = 2;
  std::array<double, 2> target = {0.0, 0.0};
  double alpha = 1.0;           // target attraction weight
  double beta = 0.1;            // pairwise repulsion weight
  double eps = 0.01;            // repulsion regularizer, must be > 0
  Vec bonus;                    // per-agent constant K_i; defaults to 1
  std::array<double, 2> rho = {0.0, 0.0};
  std::array<std::array<double, 2>, 2> M = {{{1.0, 0.0}, {0.0, 1.0}}};
  double dt = 0.1;
  int horizon = 32;
  double arena_halfwidth = 4.0;  // state box is [-w, w]^2 per agent
};

// State is the concatenation of agent positions; dynamics x' = x + dt * a
// with a in [-1, 1]^2. Reward per step:
//   R_i = K_i - alpha ||x_i - target||^2
//         - beta sum_{j != i} (||x_i - x_j||^2 + eps)^{-1/2}
//         - (a_i - rho)^T M (a_i - rho).
// The bundled potential counts the repulsion once per unordered pair.
GameSpec nav_game(const NavParams& p);

}  // namespace spg
