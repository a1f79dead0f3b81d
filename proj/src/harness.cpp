#include "spg/harness.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "spg/checkpoint.hpp"

namespace spg {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw std::runtime_error(where + ": " + what);
}

double to_d(const std::string& where, const std::string& v) {
  try {
    size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(where, "expected a number, got '" + v + "'");
  }
}

int to_i(const std::string& where, const std::string& v) {
  double x = to_d(where, v);
  if (x != static_cast<int>(x)) fail(where, "expected an integer, got '" + v + "'");
  return static_cast<int>(x);
}

bool to_b(const std::string& where, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(where, "expected a boolean, got '" + v + "'");
}

std::vector<uint64_t> to_seeds(const std::string& where, std::string v) {
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') fail(where, "unterminated list");
    v = v.substr(1, v.size() - 2);
  }
  std::vector<uint64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<uint64_t>(to_d(where, item)));
  }
  if (out.empty()) fail(where, "empty seed list");
  return out;
}

void apply_key(ExperimentConfig& cfg, const std::string& section,
               const std::string& key, const std::string& value,
               const std::string& where) {
  EnvConfig& e = cfg.env;
  AlgoConfig& a = cfg.algo;
  TrainConfig& t = cfg.algo.train;
  EvalConfig& ev = cfg.eval;
  RunConfig& r = cfg.run;
  if (section == "env") {
    if (key == "name") e.name = value;
    else if (key == "n_agents") e.n_agents = to_i(where, value);
    else if (key == "alpha") e.alpha = to_d(where, value);
    else if (key == "beta") e.beta = to_d(where, value);
    else if (key == "gamma_cost") e.gamma_cost = to_d(where, value);
    else if (key == "cap") e.cap = to_d(where, value);
    else if (key == "network_file") e.network_file = value;
    else if (key == "layers") e.layers = to_i(where, value);
    else if (key == "width") e.width = to_i(where, value);
    else if (key == "net_seed") e.net_seed = static_cast<uint64_t>(to_d(where, value));
    else if (key == "demand") e.demand = to_d(where, value);
    else if (key == "horizon") e.horizon = to_i(where, value);
    else if (key == "ablation_c") e.ablation_c = to_d(where, value);
    else if (key == "team") e.team = to_b(where, value);
    else fail(where, "unknown key '" + key + "' in [env]");
  } else if (section == "algo") {
    if (key == "name") a.name = value;
    else if (key == "consensus") a.consensus = to_b(where, value);
    else if (key == "topology") a.topology = value;
    else if (key == "lr_actor") t.lr_actor = to_d(where, value);
    else if (key == "lr_critic") t.lr_critic = to_d(where, value);
    else if (key == "batch") t.batch = to_i(where, value);
    else if (key == "buffer") t.buffer = to_i(where, value);
    else if (key == "gamma") t.gamma = to_d(where, value);
    else if (key == "grad_clip") t.grad_clip = to_d(where, value);
    else if (key == "iterations") t.iterations = to_i(where, value);
    else if (key == "phi_refresh") t.phi_refresh = to_i(where, value);
    else if (key == "tau") t.tau = to_d(where, value);
    else if (key == "max_samples") t.max_samples = to_i(where, value);
    else if (key == "sigma_start") t.sigma_start = to_d(where, value);
    else if (key == "sigma_end") t.sigma_end = to_d(where, value);
    else if (key == "use_analytic_potential")
      t.use_analytic_potential = to_b(where, value);
    else if (key == "reevaluate_others") t.reevaluate_others = to_b(where, value);
    else if (key == "eval_every") t.eval_every = to_i(where, value);
    else if (key == "stop_ne_gap") t.stop_ne_gap = to_d(where, value);
    else if (key == "max_proxy") {
      if (value == "actors") t.max_proxy = MaxProxy::kActors;
      else if (value == "sampling") t.max_proxy = MaxProxy::kSampling;
      else fail(where, "max_proxy must be actors or sampling");
    } else if (key == "residual_mode") {
      if (value == "gradient") t.residual.mode = ResidualMode::kGradient;
      else if (value == "difference") t.residual.mode = ResidualMode::kDifference;
      else fail(where, "residual_mode must be gradient or difference");
    } else if (key == "residual_probes") t.residual.probes = to_i(where, value);
    else if (key == "residual_mc_actions")
      t.residual.mc_actions = to_i(where, value);
    else if (key == "residual_iterations")
      t.residual.iterations = to_i(where, value);
    else if (key == "residual_sigma_eps")
      t.residual.sigma_eps = to_d(where, value);
    else if (key == "residual_lr") t.residual.lr = to_d(where, value);
    else fail(where, "unknown key '" + key + "' in [algo]");
  } else if (section == "eval") {
    if (key == "episodes") ev.episodes = to_i(where, value);
    else if (key == "exploitability") ev.exploitability = to_b(where, value);
    else if (key == "best_response_steps")
      ev.best_response_steps = to_i(where, value);
    else fail(where, "unknown key '" + key + "' in [eval]");
  } else if (section == "run") {
    if (key == "seeds") r.seeds = to_seeds(where, value);
    else if (key == "out_dir") r.out_dir = value;
    else if (key == "run_id") r.run_id = value;
    else fail(where, "unknown key '" + key + "' in [run]");
  } else {
    fail(where, "unknown section [" + section + "]");
  }
}

void validate(const ExperimentConfig& cfg, const std::string& where) {
  const TrainConfig& t = cfg.algo.train;
  if (t.gamma < 0.0 || t.gamma > 1.0)
    fail(where, "gamma must lie in [0, 1]");
  if (t.batch <= 0 || t.buffer <= 0 || t.iterations <= 0 || t.eval_every <= 0)
    fail(where, "batch, buffer, iterations and eval_every must be positive");
  if (cfg.algo.name != "spotac" && cfg.algo.name != "independent")
    fail(where, "algo name must be spotac or independent");
  if (cfg.algo.topology != "ring" && cfg.algo.topology != "complete")
    fail(where, "topology must be ring or complete");
  if (cfg.run.seeds.empty()) fail(where, "at least one seed is required");
}

ExperimentConfig parse_json_config(const std::string& text) {
  ExperimentConfig cfg;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("config json: ") + e.what());
  }
  for (const auto& [section, body] : j.items()) {
    if (!body.is_object())
      fail("config json", "section '" + section + "' must be an object");
    for (const auto& [key, val] : body.items()) {
      std::string s;
      if (val.is_string()) s = val.get<std::string>();
      else if (val.is_boolean()) s = val.get<bool>() ? "true" : "false";
      else if (val.is_array()) {
        s = "[";
        for (size_t k = 0; k < val.size(); ++k)
          s += (k ? "," : "") + json(val[k]).dump();
        s += "]";
      } else s = val.dump();
      apply_key(cfg, section, key, s, section + "." + key);
    }
  }
  validate(cfg, "config json");
  return cfg;
}

std::chrono::steady_clock::time_point now() {
  return std::chrono::steady_clock::now();
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(now() - t0).count();
}

}  // namespace

LogLevel log_level() {
  const char* v = std::getenv("LOG_LEVEL");
  if (!v) return LogLevel::kInfo;
  std::string s(v);
  if (s == "error") return LogLevel::kError;
  if (s == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

void log_line(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) <= static_cast<int>(log_level()))
    std::cerr << msg << "\n";
}

ExperimentConfig parse_config(const std::string& text) {
  std::string head = trim(text);
  if (!head.empty() && head.front() == '{') return parse_json_config(text);

  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::string where = "line " + std::to_string(lineno);
    size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(where, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos) fail(where, "expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (section.empty()) fail(where, "key outside any section");
    if (key.empty()) fail(where, "empty key");
    apply_key(cfg, section, key, value, where);
  }
  validate(cfg, "config");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> known_envs() {
  return {"cournot",       "braess",          "braess_no_shortcut",
          "routing_random", "routing_file",   "nav",
          "ablation_noncoop", "ablation_nonpot"};
}

GameSpec build_env(const EnvConfig& cfg) {
  GameSpec game;
  CournotParams cp;
  cp.n_agents = cfg.n_agents;
  cp.alpha = cfg.alpha;
  cp.beta = cfg.beta;
  cp.gamma_cost = cfg.gamma_cost;
  cp.action_caps = Vec(cfg.n_agents, cfg.cap);
  if (cfg.name == "cournot") {
    game = cournot_game(cp);
  } else if (cfg.name == "braess") {
    game = routing_game(braess_network(cfg.n_agents, cfg.demand));
  } else if (cfg.name == "braess_no_shortcut") {
    game = routing_game(braess_network_no_shortcut(cfg.n_agents, cfg.demand));
  } else if (cfg.name == "routing_random") {
    game = routing_game(random_layered_network(cfg.layers, cfg.width,
                                               cfg.net_seed, cfg.n_agents,
                                               cfg.demand));
  } else if (cfg.name == "routing_file") {
    game = routing_game(load_routing_net(cfg.network_file));
  } else if (cfg.name == "nav") {
    NavParams np;
    np.n_agents = cfg.n_agents;
    np.horizon = cfg.horizon;
    game = nav_game(np);
  } else if (cfg.name == "ablation_noncoop" || cfg.name == "ablation_nonpot") {
    AblationConfig ac;
    ac.mode = cfg.name == "ablation_noncoop" ? AblationMode::kNoncoopPotential
                                             : AblationMode::kNonPotential;
    ac.c = cfg.ablation_c;
    game = ablate(cournot_game(cp), ac);
  } else {
    std::string msg = "unknown env '" + cfg.name + "'; available:";
    for (const auto& n : known_envs()) msg += " " + n;
    throw UnknownEnvError(msg);
  }
  if (cfg.team) game = team_game(game);
  return game;
}

namespace {

// Runs all seed cells of one config, appending CSV rows and event lines.
// Returns 0 on success. wall_ms is reported in events.jsonl only; the CSV
// column is fixed at zero so reruns are byte-identical.
int run_cells(const ExperimentConfig& cfg, const std::string& env_label,
              std::ostream& csv, std::ostream& events, std::string* report) {
  GameSpec game = build_env(cfg.env);
  for (uint64_t seed : cfg.run.seeds) {
    auto t0 = now();
    events << json{{"event", "run_start"},
                   {"run_id", cfg.run.run_id},
                   {"env", env_label},
                   {"algo", cfg.algo.name},
                   {"seed", seed}}
                  .dump()
           << "\n";
    Rng rng(seed);

    GameSpec run_game = game;
    TrainConfig tcfg = cfg.algo.train;
    if (cfg.algo.consensus && !tcfg.use_analytic_potential) {
      // Decentralized estimation first; the agreed model then serves as the
      // training potential.
      Adjacency adj = cfg.algo.topology == "ring"
                          ? ring_adjacency(game.n_agents)
                          : complete_adjacency(game.n_agents);
      Rng crng = rng.fork("consensus");
      ConsensusEstimation est = estimate_potential_consensus(
          game, adj, PotentialModel::poly(game, 2), tcfg.residual,
          ConsensusConfig{}, reward_grad_source(game, nullptr), crng);
      PotentialModel agreed = est.models[0];
      run_game.analytic_potential = agreed.as_fn();
      tcfg.use_analytic_potential = true;
      if (report) {
        json rep;
        rep["mode"] = "consensus";
        rep["rounds"] = est.rounds;
        rep["converged"] = est.converged;
        rep["agreement"] =
            est.agreement_trace.empty() ? 0.0 : est.agreement_trace.back();
        rep["final_loss"] =
            est.loss_trace.empty() ? 0.0 : est.loss_trace.back();
        *report = rep.dump(2);
      }
    }

    SpotacResult res;
    if (cfg.algo.name == "spotac") {
      res = train_spotac(run_game, tcfg, rng);
    } else {
      res = train_independent(run_game, tcfg, rng);
    }
    if (report && report->empty()) {
      if (cfg.algo.train.use_analytic_potential) {
        *report = json{{"mode", "analytic"}}.dump(2);
      } else if (res.phi_hat.valid()) {
        json rep;
        rep["mode"] = "estimated";
        rep["final_residual"] = res.trace.empty()
                                    ? 0.0
                                    : res.trace.back().potential_residual;
        *report = rep.dump(2);
      }
    }

    double exploit = std::nan("");
    if (cfg.eval.exploitability) {
      BestResponseConfig bcfg;
      bcfg.steps = cfg.eval.best_response_steps;
      bcfg.eval_episodes = cfg.eval.episodes;
      ActorSet frozen = res.actors;
      frozen.set_sigma(0.0);
      Rng erng = rng.fork("exploit");
      exploit = exploitability(run_game, frozen, bcfg, erng).delta;
    }

    for (size_t k = 0; k < res.trace.size(); ++k) {
      const TrainTracePoint& pt = res.trace[k];
      MetricsRow row;
      row.run_id = cfg.run.run_id;
      row.seed = seed;
      row.env = env_label;
      row.algo = cfg.algo.name;
      row.iteration = pt.iteration;
      row.episodes = cfg.eval.episodes;
      row.social_welfare = pt.social_welfare;
      row.exploitability =
          k + 1 == res.trace.size() ? exploit : std::nan("");
      row.ne_gap = pt.ne_gap;
      row.potential_residual = pt.potential_residual;
      row.wall_ms = 0.0;
      csv << metrics_csv_row(row) << "\n";
    }

    for (int i = 0; i < game.n_agents; ++i) {
      std::string path = cfg.run.out_dir + "/checkpoint_" + env_label +
                         "_seed" + std::to_string(seed) + "_agent" +
                         std::to_string(i) + ".json";
      save_dense_net(res.actors.actors[i].mean_net(), path);
    }

    events << json{{"event", "run_end"},
                   {"run_id", cfg.run.run_id},
                   {"env", env_label},
                   {"seed", seed},
                   {"iterations", res.iterations},
                   {"env_steps", res.env_steps},
                   {"wall_ms", ms_since(t0)}}
                  .dump()
           << "\n";
    log_line(LogLevel::kInfo, "finished " + env_label + " seed " +
                                  std::to_string(seed) + " in " +
                                  std::to_string(ms_since(t0)) + " ms");
  }
  return 0;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const UnknownEnvError& e) {
    log_line(LogLevel::kError, e.what());
    return 2;
  } catch (const std::exception& e) {
    log_line(LogLevel::kError, e.what());
    return 1;
  }
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg) {
  return guarded([&] {
    std::filesystem::create_directories(cfg.run.out_dir);
    std::ofstream csv(cfg.run.out_dir + "/metrics.csv");
    std::ofstream events(cfg.run.out_dir + "/events.jsonl");
    csv << metrics_csv_header() << "\n";
    std::string report;
    int rc = run_cells(cfg, cfg.env.name, csv, events, &report);
    if (!report.empty()) {
      std::ofstream rep(cfg.run.out_dir + "/potential_report.json");
      rep << report << "\n";
    }
    return rc;
  });
}

int run_sweep(const ExperimentConfig& base, const Vec& ablation_values) {
  return guarded([&] {
    std::filesystem::create_directories(base.run.out_dir);
    std::ofstream csv(base.run.out_dir + "/metrics.csv");
    std::ofstream events(base.run.out_dir + "/events.jsonl");
    csv << metrics_csv_header() << "\n";
    for (double c : ablation_values) {
      ExperimentConfig cfg = base;
      cfg.env.ablation_c = c;
      std::ostringstream label;
      label << cfg.env.name << "_c" << c;
      int rc = run_cells(cfg, label.str(), csv, events, nullptr);
      if (rc != 0) return rc;
    }
    return 0;
  });
}

}  // namespace spg
