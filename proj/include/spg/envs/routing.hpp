#pragma once

#include <string>

#include "spg/game.hpp"

namespace spg {

// Atomic splittable routing on a DAG with affine edge latencies
// l_e(x) = a_e x + b_e. Each agent holds a commodity distribution over nodes
// and splits the mass at every node across outgoing edges each time step.
struct RoutingNet {
  struct Edge {
    int from = 0, to = 0;
    double a = 0.0, b = 0.0;
  };

  int n_nodes = 0;
  std::vector<Edge> edges;
  int source = 0, sink = 0;
  int n_agents = 1;
  Vec demands;
  int max_horizon = 8;

  int n_edges() const { return static_cast<int>(edges.size()); }
  double total_demand() const;
  std::vector<std::vector<int>> out_edges() const;  // per node, edge ids
  // Topological order; throws if the graph has a cycle.
  std::vector<int> topo_order() const;
  // True when every node lies on some source->sink path or is the sink.
  bool all_reach_sink() const;
  void validate() const;
};

// State layout: agent-major node masses, s[i * n_nodes + v]. Actions are one
// logit per edge per agent; a per-node softmax turns them into split
// fractions. Episodes end when sink mass reaches total demand - 1e-6.
GameSpec routing_game(const RoutingNet& net);

// Per-agent edge flows induced by (state, joint logits).
std::vector<Vec> routing_flows(const RoutingNet& net, const Vec& s,
                               const Vec& logits);

RoutingNet braess_network(int n_agents = 2, double demand_per_agent = 0.5);
RoutingNet braess_network_no_shortcut(int n_agents = 2,
                                      double demand_per_agent = 0.5);

RoutingNet random_layered_network(int layers, int width, uint64_t seed,
                                  int n_agents = 2,
                                  double demand_per_agent = 0.5);

std::string routing_net_to_json(const RoutingNet& net);
RoutingNet routing_net_from_json(const std::string& text);
void save_routing_net(const RoutingNet& net, const std::string& path);
RoutingNet load_routing_net(const std::string& path);

// ---- Static flow-game oracle (best-response dynamics over paths) ----

enum class FlowCostModel {
  kAtomic,   // cost_i = sum_e l_e(f_e) f_e^i; true best responses
  kWardrop,  // average-cost dynamics: mass drifts to the cheapest path
};

struct FlowEquilibrium {
  std::vector<std::vector<int>> paths;  // edge-id sequences source -> sink
  std::vector<Vec> agent_path_flow;     // [agent][path]
  Vec edge_flow;                        // totals
  Vec path_latency;                     // at the final flows
  double social_cost = 0.0;             // sum_e l_e(f_e) f_e
  int iterations = 0;
};

std::vector<std::vector<int>> enumerate_paths(const RoutingNet& net);

FlowEquilibrium flow_equilibrium(const RoutingNet& net, FlowCostModel model,
                                 int max_iters = 20000, double tol = 1e-10);

}  // namespace spg
