#include "spg/envs/routing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

#include "spg/rng.hpp"

namespace spg {

double RoutingNet::total_demand() const {
  return std::accumulate(demands.begin(), demands.end(), 0.0);
}

std::vector<std::vector<int>> RoutingNet::out_edges() const {
  std::vector<std::vector<int>> out(n_nodes);
  for (int e = 0; e < n_edges(); ++e) out[edges[e].from].push_back(e);
  return out;
}

std::vector<int> RoutingNet::topo_order() const {
  std::vector<int> indeg(n_nodes, 0);
  for (const auto& e : edges) ++indeg[e.to];
  std::vector<int> order;
  std::vector<int> frontier;
  for (int v = 0; v < n_nodes; ++v)
    if (indeg[v] == 0) frontier.push_back(v);
  auto out = out_edges();
  while (!frontier.empty()) {
    int v = frontier.back();
    frontier.pop_back();
    order.push_back(v);
    for (int e : out[v])
      if (--indeg[edges[e].to] == 0) frontier.push_back(edges[e].to);
  }
  if (static_cast<int>(order.size()) != n_nodes)
    throw std::invalid_argument("routing network has a cycle");
  return order;
}

bool RoutingNet::all_reach_sink() const {
  // Reverse reachability from the sink.
  std::vector<char> reach(n_nodes, 0);
  reach[sink] = 1;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& e : edges) {
      if (reach[e.to] && !reach[e.from]) {
        reach[e.from] = 1;
        changed = true;
      }
    }
  }
  return std::all_of(reach.begin(), reach.end(), [](char c) { return c; });
}

void RoutingNet::validate() const {
  if (n_nodes < 2) throw std::invalid_argument("need at least 2 nodes");
  if (source < 0 || source >= n_nodes || sink < 0 || sink >= n_nodes ||
      source == sink)
    throw std::invalid_argument("bad source/sink");
  for (const auto& e : edges) {
    if (e.from < 0 || e.from >= n_nodes || e.to < 0 || e.to >= n_nodes)
      throw std::invalid_argument("edge endpoint out of range");
    if (e.from == e.to) throw std::invalid_argument("self loop");
    if (e.a < 0.0 || e.b < 0.0)
      throw std::invalid_argument("latency coefficients must be nonnegative");
  }
  if (static_cast<int>(demands.size()) != n_agents)
    throw std::invalid_argument("demands size must equal n_agents");
  for (double d : demands)
    if (d <= 0.0) throw std::invalid_argument("demands must be positive");
  topo_order();
  if (!all_reach_sink())
    throw std::invalid_argument("every node must reach the sink");
  auto out = out_edges();
  for (int v = 0; v < n_nodes; ++v)
    if (v != sink && out[v].empty())
      throw std::invalid_argument("non-sink node with no outgoing edge");
}

namespace {

// Stable softmax over the logits of the given edge ids.
Vec node_softmax(const Vec& logits, const std::vector<int>& eids, int offset) {
  double mx = -1e300;
  for (int e : eids) mx = std::max(mx, logits[offset + e]);
  Vec p(eids.size());
  double z = 0.0;
  for (size_t k = 0; k < eids.size(); ++k) {
    p[k] = std::exp(logits[offset + eids[k]] - mx);
    z += p[k];
  }
  for (double& x : p) x /= z;
  return p;
}

}  // namespace

std::vector<Vec> routing_flows(const RoutingNet& net, const Vec& s,
                               const Vec& logits) {
  const int E = net.n_edges();
  auto out = net.out_edges();
  std::vector<Vec> f(net.n_agents, Vec(E, 0.0));
  for (int i = 0; i < net.n_agents; ++i) {
    for (int v = 0; v < net.n_nodes; ++v) {
      if (v == net.sink || out[v].empty()) continue;
      double mass = s[i * net.n_nodes + v];
      if (mass <= 0.0) continue;
      Vec p = node_softmax(logits, out[v], i * E);
      for (size_t k = 0; k < out[v].size(); ++k)
        f[i][out[v][k]] = mass * p[k];
    }
  }
  return f;
}

GameSpec routing_game(const RoutingNet& net) {
  net.validate();
  const int N = net.n_agents;
  const int V = net.n_nodes;
  const int E = net.n_edges();
  const double total = net.total_demand();

  GameSpec g;
  g.name = "routing";
  g.n_agents = N;
  g.state_dim = N * V;
  g.action_dims.assign(N, E);
  g.horizon = net.max_horizon;
  g.discount = 1.0;
  g.state_low.assign(N * V, 0.0);
  g.state_high.assign(N * V, total);
  g.action_low.assign(N * E, -5.0);
  g.action_high.assign(N * E, 5.0);

  g.initial_state = [net, N, V](Rng&) {
    Vec s(N * V, 0.0);
    for (int i = 0; i < N; ++i) s[i * V + net.source] = net.demands[i];
    return s;
  };

  g.is_terminal = [net, N, V, total](const Vec& s) {
    double at_sink = 0.0;
    for (int i = 0; i < N; ++i) at_sink += s[i * V + net.sink];
    return at_sink >= total - 1e-6;
  };

  g.transition = [net, N, V, E](const Vec& s, const Vec& a, Rng&) {
    auto f = routing_flows(net, s, a);
    Vec s2(N * V, 0.0);
    for (int i = 0; i < N; ++i) {
      s2[i * V + net.sink] = s[i * V + net.sink];
      for (int e = 0; e < E; ++e) s2[i * V + net.edges[e].to] += f[i][e];
    }
    return s2;
  };

  g.reward_oracle = [net, N, E](const Vec& s, const Vec& a) {
    auto f = routing_flows(net, s, a);
    Vec r(N, 0.0);
    for (int e = 0; e < E; ++e) {
      double fe = 0.0;
      for (int i = 0; i < N; ++i) fe += f[i][e];
      double lat = net.edges[e].a * fe + net.edges[e].b;
      for (int i = 0; i < N; ++i) r[i] -= lat * f[i][e];
    }
    return r;
  };

  // dR_i/df_e^j = -a_e f_e^i for j != i and -(a_e f_e + b_e) - a_e f_e^i for
  // j = i; chain through the softmax splits and the node masses.
  g.reward_grad_oracle = [net, N, V, E](const Vec& s, const Vec& a, int i,
                                        Vec* da, Vec* ds) {
    auto f = routing_flows(net, s, a);
    auto out = net.out_edges();
    Vec dR_df(static_cast<size_t>(N) * E, 0.0);  // j-major
    for (int e = 0; e < E; ++e) {
      double fe = 0.0;
      for (int j = 0; j < N; ++j) fe += f[j][e];
      double lat = net.edges[e].a * fe + net.edges[e].b;
      for (int j = 0; j < N; ++j) {
        double v = -net.edges[e].a * f[i][e];
        if (j == i) v -= lat;
        dR_df[static_cast<size_t>(j) * E + e] = v;
      }
    }
    if (da) da->assign(static_cast<size_t>(N) * E, 0.0);
    if (ds) ds->assign(static_cast<size_t>(N) * V, 0.0);
    for (int j = 0; j < N; ++j) {
      for (int v = 0; v < V; ++v) {
        if (v == net.sink || out[v].empty()) continue;
        double mass = s[j * V + v];
        Vec p = node_softmax(a, out[v], j * E);
        double avg = 0.0;  // sum_k p_k dR/df_k at this node
        for (size_t k = 0; k < out[v].size(); ++k)
          avg += p[k] * dR_df[static_cast<size_t>(j) * E + out[v][k]];
        if (ds) (*ds)[j * V + v] = avg;
        if (da && mass > 0.0) {
          for (size_t k = 0; k < out[v].size(); ++k) {
            double gk = dR_df[static_cast<size_t>(j) * E + out[v][k]];
            (*da)[j * E + out[v][k]] += mass * p[k] * (gk - avg);
          }
        }
      }
    }
  };

  // Exact potential of the per-step flow game: congestion terms count each
  // unordered agent pair once.
  g.analytic_potential = [net, N, E](const Vec& s, const Vec& a) {
    auto f = routing_flows(net, s, a);
    double phi = 0.0;
    for (int e = 0; e < E; ++e) {
      double quad = 0.0, lin = 0.0;
      for (int i = 0; i < N; ++i) {
        quad += f[i][e] * f[i][e];
        lin += f[i][e];
        for (int j = i + 1; j < N; ++j) quad += f[i][e] * f[j][e];
      }
      phi -= net.edges[e].a * quad + net.edges[e].b * lin;
    }
    return phi;
  };

  return g;
}

RoutingNet braess_network(int n_agents, double demand_per_agent) {
  RoutingNet net;
  net.n_nodes = 4;  // 0 source, 1 upper, 2 lower, 3 sink
  net.edges = {{0, 1, 1.0, 0.0},
               {0, 2, 0.0, 1.0},
               {1, 3, 0.0, 1.0},
               {2, 3, 1.0, 0.0},
               {1, 2, 0.0, 0.0}};
  net.source = 0;
  net.sink = 3;
  net.n_agents = n_agents;
  net.demands.assign(n_agents, demand_per_agent);
  net.max_horizon = 8;
  return net;
}

RoutingNet braess_network_no_shortcut(int n_agents, double demand_per_agent) {
  RoutingNet net = braess_network(n_agents, demand_per_agent);
  net.edges.pop_back();
  return net;
}

RoutingNet random_layered_network(int layers, int width, uint64_t seed,
                                  int n_agents, double demand_per_agent) {
  if (layers < 2 || width < 1)
    throw std::invalid_argument("need layers >= 2 and width >= 1");
  RoutingNet net;
  Rng rng(seed);
  // Layer 0 is the source, layer layers-1 is the sink; interior layers have
  // `width` nodes each and consecutive layers are fully connected.
  std::vector<std::vector<int>> layer_nodes(layers);
  net.n_nodes = 0;
  for (int l = 0; l < layers; ++l) {
    int w = (l == 0 || l == layers - 1) ? 1 : width;
    for (int k = 0; k < w; ++k) layer_nodes[l].push_back(net.n_nodes++);
  }
  net.source = layer_nodes.front()[0];
  net.sink = layer_nodes.back()[0];
  for (int l = 0; l + 1 < layers; ++l)
    for (int u : layer_nodes[l])
      for (int v : layer_nodes[l + 1])
        net.edges.push_back({u, v, rng.uniform(0.5, 2.0), rng.uniform(0.0, 1.0)});
  net.n_agents = n_agents;
  net.demands.assign(n_agents, demand_per_agent);
  net.max_horizon = 2 * layers;
  net.validate();
  return net;
}

std::string routing_net_to_json(const RoutingNet& net) {
  nlohmann::json j;
  j["nodes"] = net.n_nodes;
  j["source"] = net.source;
  j["sink"] = net.sink;
  j["n_agents"] = net.n_agents;
  j["demands"] = net.demands;
  j["max_horizon"] = net.max_horizon;
  j["edges"] = nlohmann::json::array();
  for (const auto& e : net.edges)
    j["edges"].push_back({{"from", e.from}, {"to", e.to}, {"a", e.a}, {"b", e.b}});
  return j.dump(2);
}

RoutingNet routing_net_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  RoutingNet net;
  net.n_nodes = j.at("nodes").get<int>();
  net.source = j.at("source").get<int>();
  net.sink = j.at("sink").get<int>();
  net.n_agents = j.value("n_agents", 1);
  net.demands = j.value("demands", Vec(net.n_agents, 1.0));
  net.max_horizon = j.value("max_horizon", 8);
  for (const auto& je : j.at("edges"))
    net.edges.push_back({je.at("from").get<int>(), je.at("to").get<int>(),
                         je.at("a").get<double>(), je.at("b").get<double>()});
  net.validate();
  return net;
}

void save_routing_net(const RoutingNet& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << routing_net_to_json(net) << "\n";
}

RoutingNet load_routing_net(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return routing_net_from_json(text);
}

// ---- Static flow game over paths ----

std::vector<std::vector<int>> enumerate_paths(const RoutingNet& net) {
  std::vector<std::vector<int>> paths;
  auto out = net.out_edges();
  std::vector<int> cur;
  // DFS on a validated DAG; intended for desk-scale networks.
  std::function<void(int)> dfs = [&](int v) {
    if (v == net.sink) {
      paths.push_back(cur);
      return;
    }
    for (int e : out[v]) {
      cur.push_back(e);
      dfs(net.edges[e].to);
      cur.pop_back();
    }
  };
  dfs(net.source);
  return paths;
}

namespace {

// Euclidean projection onto {x >= 0, sum x = total}.
Vec project_simplex(Vec x, double total) {
  const int n = static_cast<int>(x.size());
  Vec u = x;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, theta = 0.0;
  for (int k = 0; k < n; ++k) {
    css += u[k];
    double t = (css - total) / (k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  for (double& v : x) v = std::max(0.0, v - theta);
  return x;
}

Vec edge_totals(const RoutingNet& net,
                const std::vector<std::vector<int>>& paths,
                const std::vector<Vec>& x) {
  Vec fe(net.n_edges(), 0.0);
  for (size_t i = 0; i < x.size(); ++i)
    for (size_t p = 0; p < paths.size(); ++p)
      for (int e : paths[p]) fe[e] += x[i][p];
  return fe;
}

Vec path_latencies(const RoutingNet& net,
                   const std::vector<std::vector<int>>& paths, const Vec& fe) {
  Vec lat(paths.size(), 0.0);
  for (size_t p = 0; p < paths.size(); ++p)
    for (int e : paths[p])
      lat[p] += net.edges[e].a * fe[e] + net.edges[e].b;
  return lat;
}

}  // namespace

FlowEquilibrium flow_equilibrium(const RoutingNet& net, FlowCostModel model,
                                 int max_iters, double tol) {
  FlowEquilibrium eq;
  eq.paths = enumerate_paths(net);
  const int P = static_cast<int>(eq.paths.size());
  const int N = net.n_agents;
  if (P == 0) throw std::runtime_error("no source-sink path");
  eq.agent_path_flow.assign(N, Vec(P, 0.0));
  for (int i = 0; i < N; ++i)
    for (int p = 0; p < P; ++p)
      eq.agent_path_flow[i][p] = net.demands[i] / P;

  if (model == FlowCostModel::kAtomic) {
    // Round-robin exact-ish best responses via projected gradient descent on
    // each agent's cost, a convex quadratic over its demand simplex.
    for (int it = 0; it < max_iters; ++it) {
      double move = 0.0;
      for (int i = 0; i < N; ++i) {
        Vec x = eq.agent_path_flow[i];
        for (int inner = 0; inner < 600; ++inner) {
          eq.agent_path_flow[i] = x;
          Vec fe = edge_totals(net, eq.paths, eq.agent_path_flow);
          Vec grad(P, 0.0);  // d cost_i / d x_i[p]
          for (int p = 0; p < P; ++p) {
            double g = 0.0;
            for (int e : eq.paths[p]) {
              double fei = 0.0;
              for (int q = 0; q < P; ++q)
                for (int e2 : eq.paths[q])
                  if (e2 == e) fei += x[q];
              g += net.edges[e].a * fe[e] + net.edges[e].b +
                   net.edges[e].a * fei;
            }
            grad[p] = g;
          }
          Vec x2 = x;
          for (int p = 0; p < P; ++p) x2[p] -= 0.05 * grad[p];
          x2 = project_simplex(x2, net.demands[i]);
          double step = 0.0;
          for (int p = 0; p < P; ++p) step += std::abs(x2[p] - x[p]);
          x = x2;
          if (step < tol) break;
        }
        for (int p = 0; p < P; ++p)
          move += std::abs(eq.agent_path_flow[i][p] - x[p]);
        eq.agent_path_flow[i] = x;
      }
      eq.iterations = it + 1;
      if (move < 1e-9) break;
    }
  } else {
    // Average-cost dynamics: multiplicative-weights reweighting toward
    // cheaper paths. Fixed points equalize latencies across supported paths;
    // dominated paths decay geometrically.
    const double theta = 2.0;
    for (int it = 0; it < max_iters; ++it) {
      Vec fe = edge_totals(net, eq.paths, eq.agent_path_flow);
      Vec lat = path_latencies(net, eq.paths, fe);
      double lmin = *std::min_element(lat.begin(), lat.end());
      double move = 0.0;
      for (int i = 0; i < N; ++i) {
        Vec w(P);
        double z = 0.0;
        for (int p = 0; p < P; ++p) {
          w[p] = eq.agent_path_flow[i][p] * std::exp(-theta * (lat[p] - lmin));
          z += w[p];
        }
        for (int p = 0; p < P; ++p) {
          double nv = net.demands[i] * w[p] / z;
          move += std::abs(nv - eq.agent_path_flow[i][p]);
          eq.agent_path_flow[i][p] = nv;
        }
      }
      eq.iterations = it + 1;
      if (move < tol) break;
    }
  }

  eq.edge_flow = edge_totals(net, eq.paths, eq.agent_path_flow);
  eq.path_latency = path_latencies(net, eq.paths, eq.edge_flow);
  eq.social_cost = 0.0;
  for (int e = 0; e < net.n_edges(); ++e)
    eq.social_cost +=
        (net.edges[e].a * eq.edge_flow[e] + net.edges[e].b) * eq.edge_flow[e];
  return eq;
}

}  // namespace spg
