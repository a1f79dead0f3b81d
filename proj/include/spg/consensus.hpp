#pragma once

#include "spg/potential.hpp"

namespace spg {

// Symmetric 0/1 adjacency over logical agent nodes.
using Adjacency = std::vector<std::vector<int>>;

Adjacency ring_adjacency(int n);
Adjacency complete_adjacency(int n);
bool adjacency_connected(const Adjacency& adj);

// Metropolis weights: c_ij = 1 / (1 + max(deg_i, deg_j)) on edges, diagonal
// takes the remainder. Doubly stochastic by construction.
std::vector<Vec> metropolis_weights(const Adjacency& adj);

// Distributed descent with gradient tracking. Per round
//   rho^i <- sum_j c(i,j) rho^j - alpha kappa^i
//   kappa^i <- sum_j c(i,j) kappa^j + grad_i(rho^i_new) - grad_i(rho^i_old)
// which preserves sum_i kappa^i = sum_i grad_i(rho^i).
struct ConsensusState {
  std::vector<Vec> rho;
  std::vector<Vec> kappa;
  std::vector<Vec> last_grads;  // grad_i at the current rho^i
  std::vector<Vec> C;
  double alpha = 1e-2;

  int n_nodes() const { return static_cast<int>(rho.size()); }
  void validate() const;  // rows/cols sum to 1 +- 1e-9, entries >= 0
  double max_pairwise_distance() const;
  // || sum kappa - sum grad ||_inf, the tracking invariant.
  double tracking_error() const;
};

using NodeGradFn = std::function<Vec(int node, const Vec& rho)>;

ConsensusState make_consensus_state(std::vector<Vec> rho0,
                                    const std::vector<Vec>& C, double alpha,
                                    const NodeGradFn& grad);

void consensus_round(ConsensusState& st, const NodeGradFn& grad);

// ---- Distributed potential estimation ----

struct ConsensusConfig {
  double alpha = 1e-2;
  int rounds = 2000;
  double agreement_tol = 1e-6;
  double stop_grad_norm = 1e-5;
};

struct ConsensusEstimation {
  std::vector<PotentialModel> models;  // one per agent, canonicalized
  Vec agreement_trace;                 // max pairwise parameter distance
  Vec loss_trace;                      // global objective at the mean params
  Vec tracking_error_trace;
  int rounds = 0;
  bool converged = false;
};

// Each agent descends the residual objective restricted to its own rewards,
// interleaved with Metropolis-weighted parameter exchange. All agents share
// one frozen probe pool so the per-node objectives are deterministic.
ConsensusEstimation estimate_potential_consensus(
    const GameSpec& game, const Adjacency& adj, const PotentialModel& init,
    const ResidualConfig& rcfg, const ConsensusConfig& ccfg,
    const RewardGradFn& reward_grads, Rng& rng);

}  // namespace spg
