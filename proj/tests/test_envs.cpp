#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>

#include "spg/checks.hpp"
#include "spg/envs/ablation.hpp"
#include "spg/envs/cournot.hpp"
#include "spg/envs/nav.hpp"
#include "spg/envs/routing.hpp"

using namespace spg;

namespace {

// Finite-difference verification of reward_grad_oracle for one agent.
void check_reward_grads(const GameSpec& g, const Vec& s, const Vec& a, int i,
                        double tol) {
  Vec da, ds;
  g.reward_grad_oracle(s, a, i, &da, &ds);
  const double h = 1e-6;
  for (int k = 0; k < g.joint_action_dim(); ++k) {
    Vec ap = a, am = a;
    ap[k] += h;
    am[k] -= h;
    double fd =
        (g.reward_oracle(s, ap)[i] - g.reward_oracle(s, am)[i]) / (2 * h);
    CHECK(da[k] == doctest::Approx(fd).epsilon(tol).scale(1.0));
  }
  for (int k = 0; k < g.state_dim; ++k) {
    Vec sp = s, sm = s;
    sp[k] += h;
    sm[k] -= h;
    double fd =
        (g.reward_oracle(sp, a)[i] - g.reward_oracle(sm, a)[i]) / (2 * h);
    CHECK(ds[k] == doctest::Approx(fd).epsilon(tol).scale(1.0));
  }
}

}  // namespace

// ---- Cournot ----

TEST_CASE("cournot rewards and potential at pinned points") {
  GameSpec g = cournot_game(CournotParams{});
  Vec s = {0.0};
  CHECK(g.reward_oracle(s, {0.0, 0.0}) == Vec{0.0, 0.0});
  Vec r = g.reward_oracle(s, {1.0 / 3, 1.0 / 3});
  CHECK(r[0] == doctest::Approx(1.0 / 9).epsilon(1e-12));
  CHECK(g.analytic_potential(s, {1.0 / 3, 1.0 / 3}) ==
        doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("cournot symmetric equilibrium scales as 1/(N+1)") {
  CournotParams p2;
  CHECK(cournot_symmetric_ne(p2) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CournotParams p4;
  p4.n_agents = 4;
  CHECK(cournot_symmetric_ne(p4) == doctest::Approx(1.0 / 5).epsilon(1e-12));
  // Best response to the equilibrium is the equilibrium.
  CHECK(cournot_best_response(p2, 1.0 / 3) ==
        doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("cournot analytic gradients match finite differences") {
  CournotParams p;
  p.n_agents = 3;
  GameSpec g = cournot_game(p);
  check_reward_grads(g, {0.0}, {0.2, 0.5, 0.1}, 0, 1e-5);
  check_reward_grads(g, {0.0}, {0.2, 0.5, 0.1}, 2, 1e-5);
}

TEST_CASE("cournot potential certifies the game for several sizes") {
  for (int n : {2, 3, 5}) {
    CournotParams p;
    p.n_agents = n;
    GameSpec g = cournot_game(p);
    Rng rng(100 + n);
    CHECK(check_potentiality(g, g.analytic_potential, 1000, 1e-9, rng).pass);
  }
}

// ---- Routing ----

TEST_CASE("single-edge network reproduces hand-computed flow values") {
  RoutingNet net;
  net.n_nodes = 2;
  net.edges = {{0, 1, 1.0, 0.0}};
  net.source = 0;
  net.sink = 1;
  net.n_agents = 2;
  net.demands = {0.5, 0.5};
  GameSpec g = routing_game(net);
  Rng rng(1);
  Vec s = g.initial_state(rng);
  Vec a(2, 0.0);
  Vec r = g.reward_oracle(s, a);
  CHECK(r[0] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(r[1] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(g.analytic_potential(s, a) == doctest::Approx(-0.75).epsilon(1e-12));
  Vec s2 = g.transition(s, a, rng);
  CHECK(g.is_terminal(s2));
  CHECK(g.reward_oracle(s2, a) == Vec{0.0, 0.0});
}

TEST_CASE("routing conserves mass and keeps rewards nonpositive") {
  RoutingNet net = braess_network();
  GameSpec g = routing_game(net);
  Rng rng(2);
  Vec s = g.initial_state(rng);
  double total0 = 0.0;
  for (double v : s) total0 += v;
  for (int step = 0; step < 6; ++step) {
    Vec a(g.joint_action_dim());
    for (double& v : a) v = rng.uniform(-2.0, 2.0);
    Vec r = g.reward_oracle(s, a);
    for (double v : r) CHECK(v <= 1e-12);
    s = g.transition(s, a, rng);
    double total = 0.0;
    for (double v : s) total += v;
    CHECK(total == doctest::Approx(total0).epsilon(1e-12));
  }
}

TEST_CASE("routing potential certifies the game on random probes") {
  GameSpec g = routing_game(braess_network());
  Rng rng(3);
  // States drawn in the probe box need not be reachable; potentiality must
  // hold for any mass profile.
  CHECK(check_potentiality(g, g.analytic_potential, 1000, 1e-9, rng).pass);
}

TEST_CASE("routing analytic gradients match finite differences") {
  GameSpec g = routing_game(braess_network());
  Rng rng(4);
  Vec s(g.state_dim);
  for (double& v : s) v = rng.uniform(0.0, 0.5);
  Vec a(g.joint_action_dim());
  for (double& v : a) v = rng.uniform(-1.0, 1.0);
  check_reward_grads(g, s, a, 0, 1e-4);
  check_reward_grads(g, s, a, 1, 1e-4);
}

TEST_CASE("braess flow game: average-cost dynamics collapse onto the shortcut") {
  RoutingNet net = braess_network();
  auto eq = flow_equilibrium(net, FlowCostModel::kWardrop);
  REQUIRE(eq.paths.size() == 3);
  // Path 1 is src -> A -> shortcut -> B -> sink.
  REQUIRE(eq.paths[1] == std::vector<int>{0, 4, 3});
  double shortcut = 0.0;
  for (const auto& x : eq.agent_path_flow) shortcut += x[1];
  CHECK(shortcut == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(eq.path_latency[1] == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("braess flow game: atomic best responses split a third per path") {
  RoutingNet net = braess_network();
  auto eq = flow_equilibrium(net, FlowCostModel::kAtomic);
  for (int p = 0; p < 3; ++p) {
    double tot = eq.agent_path_flow[0][p] + eq.agent_path_flow[1][p];
    CHECK(tot == doctest::Approx(1.0 / 3).epsilon(1e-4));
  }
}

TEST_CASE("removing the shortcut restores the efficient split") {
  RoutingNet net = braess_network_no_shortcut();
  CHECK(net.edges.size() == 4);
  for (auto model : {FlowCostModel::kWardrop, FlowCostModel::kAtomic}) {
    auto eq = flow_equilibrium(net, model);
    REQUIRE(eq.paths.size() == 2);
    for (int p = 0; p < 2; ++p) {
      double tot = eq.agent_path_flow[0][p] + eq.agent_path_flow[1][p];
      CHECK(tot == doctest::Approx(0.5).epsilon(1e-4));
    }
    CHECK(eq.path_latency[0] == doctest::Approx(1.5).epsilon(1e-4));
  }
}

TEST_CASE("braess topology invariants") {
  RoutingNet net = braess_network();
  CHECK(net.edges.size() == 5);
  CHECK_NOTHROW(net.validate());
  CHECK(net.topo_order().size() == 4);
}

TEST_CASE("layered generator: determinism, reachability, degenerate case") {
  RoutingNet a = random_layered_network(4, 3, 99);
  RoutingNet b = random_layered_network(4, 3, 99);
  REQUIRE(a.edges.size() == b.edges.size());
  for (size_t e = 0; e < a.edges.size(); ++e) {
    CHECK(a.edges[e].a == b.edges[e].a);
    CHECK(a.edges[e].b == b.edges[e].b);
  }
  CHECK(a.all_reach_sink());

  RoutingNet tiny = random_layered_network(2, 1, 1);
  CHECK(tiny.n_nodes == 2);
  CHECK(tiny.edges.size() == 1);
}

TEST_CASE("network json round-trip and shipped braess fixture") {
  RoutingNet net = random_layered_network(3, 2, 5);
  RoutingNet back = routing_net_from_json(routing_net_to_json(net));
  CHECK(back.n_nodes == net.n_nodes);
  REQUIRE(back.edges.size() == net.edges.size());
  for (size_t e = 0; e < net.edges.size(); ++e) {
    CHECK(back.edges[e].a == net.edges[e].a);
    CHECK(back.edges[e].to == net.edges[e].to);
  }

  const char* dir = std::getenv("SPG_FIXTURES");
  REQUIRE(dir != nullptr);
  RoutingNet braess = load_routing_net(std::string(dir) + "/braess.json");
  CHECK(braess.n_nodes == 4);
  CHECK(braess.edges.size() == 5);
  CHECK(braess.demands == Vec{0.5, 0.5});
}

TEST_CASE("invalid networks are rejected") {
  RoutingNet cyc;
  cyc.n_nodes = 3;
  cyc.edges = {{0, 1, 1, 0}, {1, 0, 1, 0}, {1, 2, 0, 1}};
  cyc.source = 0;
  cyc.sink = 2;
  cyc.n_agents = 1;
  cyc.demands = {1.0};
  CHECK_THROWS(cyc.validate());

  // Dropping B -> sink strands node B.
  RoutingNet dead = braess_network();
  dead.edges.erase(dead.edges.begin() + 3);
  CHECK_THROWS(dead.validate());
}

// ---- Navigation ----

TEST_CASE("navigation reward at the target with the preferred action") {
  NavParams p;
  p.n_agents = 1;
  p.bonus = {2.5};
  GameSpec g = nav_game(p);
  Vec s = {p.target[0], p.target[1]};
  Vec a = {p.rho[0], p.rho[1]};
  CHECK(g.reward_oracle(s, a)[0] == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("coincident agents feel the regularized repulsion") {
  NavParams p;
  p.alpha = 0.0;
  p.beta = 0.3;
  p.eps = 0.01;
  p.bonus = {0.0, 0.0};
  GameSpec g = nav_game(p);
  Vec s = {1.0, 1.0, 1.0, 1.0};  // coincident, away from target irrelevant
  Vec a = {0.0, 0.0, 0.0, 0.0};
  // (0 + 0.01)^{-1/2} = 10 per ordered pair.
  CHECK(g.reward_oracle(s, a)[0] == doctest::Approx(-0.3 * 10.0).epsilon(1e-12));
  CHECK(g.analytic_potential(s, a) == doctest::Approx(-0.3 * 10.0).epsilon(1e-12));
}

TEST_CASE("navigation potential certifies action deviations") {
  NavParams p;
  p.n_agents = 3;
  GameSpec g = nav_game(p);
  Rng rng(6);
  CHECK(check_potentiality(g, g.analytic_potential, 1000, 1e-9, rng).pass);
  // State transitivity is measured, not assumed; record the magnitude.
  Rng rng2(6);
  auto st = check_state_transitivity(g, g.analytic_potential, 200, 1e-9, rng2);
  MESSAGE("nav state-transitivity max violation: " << st.max_violation);
}

TEST_CASE("navigation analytic gradients match finite differences") {
  NavParams p;
  p.n_agents = 3;
  p.M = {{{2.0, 0.5}, {0.5, 1.0}}};
  GameSpec g = nav_game(p);
  Rng rng(8);
  Vec s(g.state_dim), a(g.joint_action_dim());
  for (double& v : s) v = rng.uniform(-1.5, 1.5);
  for (double& v : a) v = rng.uniform(-1.0, 1.0);
  check_reward_grads(g, s, a, 1, 1e-5);
}

TEST_CASE("navigation dynamics integrate and clamp to the arena") {
  NavParams p;
  p.n_agents = 1;
  p.dt = 0.5;
  GameSpec g = nav_game(p);
  Rng rng(9);
  Vec s2 = g.transition({0.0, 0.0}, {1.0, -1.0}, rng);
  CHECK(s2[0] == doctest::Approx(0.5));
  CHECK(s2[1] == doctest::Approx(-0.5));
  Vec s3 = g.transition({p.arena_halfwidth, 0.0}, {1.0, 0.0}, rng);
  CHECK(s3[0] == p.arena_halfwidth);
}

TEST_CASE("nav parameter validation") {
  NavParams bad;
  bad.eps = 0.0;
  CHECK_THROWS(nav_game(bad));
  NavParams asym;
  asym.M = {{{1.0, 0.4}, {0.1, 1.0}}};
  CHECK_THROWS(nav_game(asym));
}

// ---- Ablations ----

TEST_CASE("ablation with c=0 reproduces the base game exactly") {
  GameSpec base = cournot_game(CournotParams{});
  for (auto mode : {AblationMode::kNoncoopPotential, AblationMode::kNonPotential}) {
    GameSpec g = ablate(base, {mode, 0.0});
    Rng rng(10);
    for (int k = 0; k < 100; ++k) {
      Vec a = {rng.uniform(0, 1), rng.uniform(0, 1)};
      Vec r0 = base.reward_oracle({0.0}, a);
      Vec r1 = g.reward_oracle({0.0}, a);
      CHECK(r0 == r1);
    }
  }
}

TEST_CASE("own-action-independent additions keep the base potential valid") {
  GameSpec base = cournot_game(CournotParams{});
  GameSpec g = ablate(base, {AblationMode::kNoncoopPotential, 0.7});
  Rng rng(12);
  CHECK(check_potentiality(g, g.analytic_potential, 1000, 1e-9, rng).pass);
  // And the rewards really did change.
  Vec r0 = base.reward_oracle({0.0}, {0.5, 0.5});
  Vec r1 = g.reward_oracle({0.0}, {0.5, 0.5});
  CHECK(r1[0] != doctest::Approx(r0[0]));
}

TEST_CASE("cyclic coupling breaks the potential structure") {
  GameSpec base = cournot_game(CournotParams{});
  GameSpec g = ablate(base, {AblationMode::kNonPotential, 0.5});
  Rng rng(13);
  auto rep = check_potentiality(g, g.analytic_potential, 1000, 1e-9, rng);
  CHECK_FALSE(rep.pass);
  CHECK(rep.max_violation > 1e-3);
}

TEST_CASE("ablated gradient oracles stay consistent with rewards") {
  CournotParams p;
  p.n_agents = 3;
  GameSpec base = cournot_game(p);
  for (auto mode : {AblationMode::kNoncoopPotential, AblationMode::kNonPotential}) {
    GameSpec g = ablate(base, {mode, 0.4});
    check_reward_grads(g, {0.0}, {0.3, 0.6, 0.2}, 0, 1e-5);
    check_reward_grads(g, {0.0}, {0.3, 0.6, 0.2}, 1, 1e-5);
  }
}
