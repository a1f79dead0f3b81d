#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "spg/harness.hpp"

using namespace spg;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_path;
  int64_t seed = -1;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true) {
  auto* c = cmd->add_option("--config", opts.config_path, "config file path");
  if (config_required) c->required();
  cmd->add_option("--seed", opts.seed, "override the config seed");
  cmd->add_option("--out", opts.out_dir, "override the output directory");
}

ExperimentConfig load_with_overrides(const CommonOpts& opts) {
  ExperimentConfig cfg = load_config(opts.config_path);
  if (opts.seed >= 0) cfg.run.seeds = {static_cast<uint64_t>(opts.seed)};
  if (!opts.out_dir.empty()) cfg.run.out_dir = opts.out_dir;
  return cfg;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const UnknownEnvError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}

int cmd_estimate(const CommonOpts& opts) {
  return guarded([&] {
    ExperimentConfig cfg = load_with_overrides(opts);
    GameSpec game = build_env(cfg.env);
    Rng rng(cfg.run.seeds[0]);
    std::string report;
    if (cfg.algo.consensus) {
      Adjacency adj = cfg.algo.topology == "ring"
                          ? ring_adjacency(game.n_agents)
                          : complete_adjacency(game.n_agents);
      ConsensusEstimation est = estimate_potential_consensus(
          game, adj, PotentialModel::poly(game, 2), cfg.algo.train.residual,
          ConsensusConfig{}, reward_grad_source(game, nullptr), rng);
      json rep;
      rep["mode"] = "consensus";
      rep["rounds"] = est.rounds;
      rep["converged"] = est.converged;
      rep["agreement"] =
          est.agreement_trace.empty() ? 0.0 : est.agreement_trace.back();
      rep["final_loss"] = est.loss_trace.empty() ? 0.0 : est.loss_trace.back();
      report = rep.dump(2);
    } else {
      EstimationResult est = estimate_potential(
          game, PotentialModel::poly(game, 2), cfg.algo.train.residual,
          reward_grad_source(game, nullptr), rng);
      report = estimation_report(est, cfg.algo.train.residual);
    }
    std::cout << report << "\n";
    std::filesystem::create_directories(cfg.run.out_dir);
    std::ofstream out(cfg.run.out_dir + "/potential_report.json");
    out << report << "\n";
    return 0;
  });
}

int cmd_check(const CommonOpts& opts, int probes, double tol) {
  return guarded([&] {
    ExperimentConfig cfg = load_with_overrides(opts);
    GameSpec game = build_env(cfg.env);
    if (!game.analytic_potential)
      throw std::runtime_error("env has no bundled potential to check");
    Rng rng(cfg.run.seeds[0]);
    CheckReport action =
        check_potentiality(game, game.analytic_potential, probes, tol, rng);
    CheckReport state =
        check_state_transitivity(game, game.analytic_potential, probes, tol,
                                 rng);
    json rep;
    rep["env"] = cfg.env.name;
    rep["action_deviation"] = {{"pass", action.pass},
                               {"max_violation", action.max_violation},
                               {"probes", action.probes}};
    rep["state_deviation"] = {{"pass", state.pass},
                              {"max_violation", state.max_violation},
                              {"probes", state.probes}};
    std::cout << rep.dump(2) << "\n";
    return action.pass ? 0 : 1;
  });
}

int cmd_oracle(const CommonOpts& opts) {
  return guarded([&] {
    ExperimentConfig cfg = load_with_overrides(opts);
    json rep;
    rep["env"] = cfg.env.name;
    if (cfg.env.name == "cournot") {
      CournotParams p;
      p.n_agents = cfg.env.n_agents;
      p.alpha = cfg.env.alpha;
      p.beta = cfg.env.beta;
      p.gamma_cost = cfg.env.gamma_cost;
      rep["symmetric_ne"] = cournot_symmetric_ne(p);
      rep["best_response_to_ne_others"] = cournot_best_response(
          p, (p.n_agents - 1) * cournot_symmetric_ne(p));
    } else if (cfg.env.name == "braess" ||
               cfg.env.name == "braess_no_shortcut") {
      RoutingNet net = cfg.env.name == "braess"
                           ? braess_network(cfg.env.n_agents, cfg.env.demand)
                           : braess_network_no_shortcut(cfg.env.n_agents,
                                                        cfg.env.demand);
      for (auto model : {FlowCostModel::kAtomic, FlowCostModel::kWardrop}) {
        FlowEquilibrium eq = flow_equilibrium(net, model);
        json sub;
        sub["edge_flow"] = eq.edge_flow;
        sub["path_latency"] = eq.path_latency;
        sub["social_cost"] = eq.social_cost;
        sub["iterations"] = eq.iterations;
        rep[model == FlowCostModel::kAtomic ? "atomic" : "wardrop"] = sub;
      }
    } else {
      throw std::runtime_error("oracle supports cournot and braess envs");
    }
    std::cout << rep.dump(2) << "\n";
    return 0;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic potential game training and analysis"};
  app.require_subcommand(1);

  CommonOpts train_opts, est_opts, check_opts, exploit_opts, sweep_opts,
      oracle_opts;
  int check_probes = 256;
  double check_tol = 1e-8;
  std::vector<double> sweep_values = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};

  CLI::App* train = app.add_subcommand("train", "train per the config");
  add_common(train, train_opts);

  CLI::App* est = app.add_subcommand("estimate-potential",
                                     "fit a potential from reward samples");
  add_common(est, est_opts);

  CLI::App* check = app.add_subcommand(
      "check-potential", "structural potentiality check of the bundled form");
  add_common(check, check_opts);
  check->add_option("--probes", check_probes, "probe count");
  check->add_option("--tol", check_tol, "violation tolerance");

  CLI::App* exploit = app.add_subcommand(
      "exploitability", "train, then measure best-response gains");
  add_common(exploit, exploit_opts);

  CLI::App* sweep =
      app.add_subcommand("sweep", "ablation-strength sweep into one CSV");
  add_common(sweep, sweep_opts);
  sweep->add_option("--values", sweep_values, "ablation strengths");

  CLI::App* oracle = app.add_subcommand(
      "oracle", "closed-form equilibria and flow-dynamics solutions");
  add_common(oracle, oracle_opts);

  CLI11_PARSE(app, argc, argv);

  if (train->parsed())
    return guarded([&] { return run_experiment(load_with_overrides(train_opts)); });
  if (est->parsed()) return cmd_estimate(est_opts);
  if (check->parsed()) return cmd_check(check_opts, check_probes, check_tol);
  if (exploit->parsed())
    return guarded([&] {
      ExperimentConfig cfg = load_with_overrides(exploit_opts);
      cfg.eval.exploitability = true;
      return run_experiment(cfg);
    });
  if (sweep->parsed())
    return guarded([&] {
      ExperimentConfig cfg = load_with_overrides(sweep_opts);
      return run_sweep(cfg, Vec(sweep_values.begin(), sweep_values.end()));
    });
  if (oracle->parsed()) return cmd_oracle(oracle_opts);
  return 1;
}
