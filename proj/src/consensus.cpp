#include "spg/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spg {

Adjacency ring_adjacency(int n) {
  Adjacency adj(n, std::vector<int>(n, 0));
  for (int i = 0; i < n; ++i) {
    adj[i][(i + 1) % n] = 1;
    adj[(i + 1) % n][i] = 1;
  }
  if (n == 1) adj[0][0] = 0;
  return adj;
}

Adjacency complete_adjacency(int n) {
  Adjacency adj(n, std::vector<int>(n, 1));
  for (int i = 0; i < n; ++i) adj[i][i] = 0;
  return adj;
}

bool adjacency_connected(const Adjacency& adj) {
  const int n = static_cast<int>(adj.size());
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::vector<int> stack = {0};
  seen[0] = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int u = 0; u < n; ++u)
      if (adj[v][u] && !seen[u]) {
        seen[u] = 1;
        stack.push_back(u);
      }
  }
  return std::all_of(seen.begin(), seen.end(), [](char c) { return c; });
}

std::vector<Vec> metropolis_weights(const Adjacency& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> deg(n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && adj[i][j]) ++deg[i];
  std::vector<Vec> C(n, Vec(n, 0.0));
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j = 0; j < n; ++j) {
      if (i == j || !adj[i][j]) continue;
      C[i][j] = 1.0 / (1.0 + std::max(deg[i], deg[j]));
      off += C[i][j];
    }
    C[i][i] = 1.0 - off;
  }
  return C;
}

void ConsensusState::validate() const {
  const int n = n_nodes();
  if (static_cast<int>(C.size()) != n)
    throw std::invalid_argument("consensus matrix size mismatch");
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      if (C[i][j] < -1e-12)
        throw std::invalid_argument("consensus matrix has negative entry");
      row += C[i][j];
    }
    if (std::abs(row - 1.0) > 1e-9)
      throw std::invalid_argument("consensus matrix row does not sum to 1");
    double col = 0.0;
    for (int j = 0; j < n; ++j) col += C[j][i];
    if (std::abs(col - 1.0) > 1e-9)
      throw std::invalid_argument("consensus matrix column does not sum to 1");
  }
}

double ConsensusState::max_pairwise_distance() const {
  double d = 0.0;
  for (int i = 0; i < n_nodes(); ++i)
    for (int j = i + 1; j < n_nodes(); ++j) {
      double s = 0.0;
      for (size_t k = 0; k < rho[i].size(); ++k) {
        double e = rho[i][k] - rho[j][k];
        s += e * e;
      }
      d = std::max(d, std::sqrt(s));
    }
  return d;
}

double ConsensusState::tracking_error() const {
  Vec sk(rho[0].size(), 0.0), sg(rho[0].size(), 0.0);
  for (int i = 0; i < n_nodes(); ++i) {
    axpy(1.0, kappa[i], sk);
    axpy(1.0, last_grads[i], sg);
  }
  axpy(-1.0, sg, sk);
  return norm_inf(sk);
}

ConsensusState make_consensus_state(std::vector<Vec> rho0,
                                    const std::vector<Vec>& C, double alpha,
                                    const NodeGradFn& grad) {
  ConsensusState st;
  st.rho = std::move(rho0);
  st.C = C;
  st.alpha = alpha;
  st.validate();
  for (int i = 0; i < st.n_nodes(); ++i) {
    st.last_grads.push_back(grad(i, st.rho[i]));
    st.kappa.push_back(st.last_grads.back());
  }
  return st;
}

void consensus_round(ConsensusState& st, const NodeGradFn& grad) {
  st.validate();
  const int n = st.n_nodes();
  const size_t d = st.rho[0].size();
  std::vector<Vec> rho_new(n, Vec(d, 0.0)), kappa_mixed(n, Vec(d, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (st.C[i][j] == 0.0) continue;
      axpy(st.C[i][j], st.rho[j], rho_new[i]);
      axpy(st.C[i][j], st.kappa[j], kappa_mixed[i]);
    }
    axpy(-st.alpha, st.kappa[i], rho_new[i]);
  }
  for (int i = 0; i < n; ++i) {
    Vec g_new = grad(i, rho_new[i]);
    Vec k = kappa_mixed[i];
    axpy(1.0, g_new, k);
    axpy(-1.0, st.last_grads[i], k);
    st.rho[i] = std::move(rho_new[i]);
    st.kappa[i] = std::move(k);
    st.last_grads[i] = std::move(g_new);
  }
}

ConsensusEstimation estimate_potential_consensus(
    const GameSpec& game, const Adjacency& adj, const PotentialModel& init,
    const ResidualConfig& rcfg, const ConsensusConfig& ccfg,
    const RewardGradFn& reward_grads, Rng& rng) {
  const int N = game.n_agents;
  if (static_cast<int>(adj.size()) != N)
    throw std::invalid_argument("adjacency size must equal n_agents");
  if (!adjacency_connected(adj))
    throw std::invalid_argument("communication graph is disconnected");
  auto probes = draw_probes(game, rcfg, rng);
  auto C = metropolis_weights(adj);

  // Node-local objective: this agent's residual norm over the shared pool.
  PotentialModel scratch = init;
  auto grad = [&](int node, const Vec& rho) {
    scratch.body().set_params(rho);
    Vec g;
    residual_objective(game, probes, scratch, reward_grads, rcfg, &g, node);
    return g;
  };

  std::vector<Vec> rho0(N, init.body().params());
  ConsensusState st = make_consensus_state(std::move(rho0), C, ccfg.alpha, grad);

  ConsensusEstimation res;
  for (int r = 0; r < ccfg.rounds; ++r) {
    consensus_round(st, grad);
    res.rounds = r + 1;
    res.agreement_trace.push_back(st.max_pairwise_distance());
    res.tracking_error_trace.push_back(st.tracking_error());
    Vec mean(st.rho[0].size(), 0.0);
    for (int i = 0; i < N; ++i) axpy(1.0 / N, st.rho[i], mean);
    scratch.body().set_params(mean);
    double loss =
        residual_objective(game, probes, scratch, reward_grads, rcfg, nullptr);
    res.loss_trace.push_back(loss);
    if (!std::isfinite(loss) || loss > 1e6)
      throw std::runtime_error("consensus estimation diverged");
    double gsum = 0.0;
    for (int i = 0; i < N; ++i) gsum += norm2(st.last_grads[i]);
    if (res.agreement_trace.back() < ccfg.agreement_tol &&
        gsum / N < ccfg.stop_grad_norm) {
      res.converged = true;
      break;
    }
  }

  Vec s_ref(game.state_dim), a_ref(game.joint_action_dim());
  for (int k = 0; k < game.state_dim; ++k)
    s_ref[k] = 0.5 * (game.state_low[k] + game.state_high[k]);
  for (int k = 0; k < game.joint_action_dim(); ++k)
    a_ref[k] = 0.5 * (game.action_low[k] + game.action_high[k]);
  for (int i = 0; i < N; ++i) {
    PotentialModel m = init;
    m.body().set_params(st.rho[i]);
    m.canonicalize(s_ref, a_ref);
    res.models.push_back(std::move(m));
  }
  return res;
}

}  // namespace spg
