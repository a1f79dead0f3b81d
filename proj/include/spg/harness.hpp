#pragma once

#include <stdexcept>
#include <string>

#include "spg/consensus.hpp"
#include "spg/envs/ablation.hpp"
#include "spg/envs/cournot.hpp"
#include "spg/envs/nav.hpp"
#include "spg/envs/routing.hpp"
#include "spg/learners.hpp"
#include "spg/metrics.hpp"

namespace spg {

struct UnknownEnvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- Logging ----

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

// Reads LOG_LEVEL from the environment; defaults to info.
LogLevel log_level();
void log_line(LogLevel level, const std::string& msg);

// ---- Configuration ----

struct EnvConfig {
  std::string name = "cournot";
  // Quantity game.
  int n_agents = 2;
  double alpha = 2.0;
  double beta = 1.0;
  double gamma_cost = 1.0;
  double cap = 1.0;
  // Routing.
  std::string network_file;  // routing_file: JSON network path
  int layers = 2;
  int width = 3;
  uint64_t net_seed = 1;
  double demand = 0.5;  // per agent
  // Navigation.
  int horizon = 32;
  // Ablation strength and team-reward wrapper.
  double ablation_c = 0.0;
  bool team = false;
};

struct AlgoConfig {
  std::string name = "spotac";  // spotac | independent
  TrainConfig train;
  bool consensus = false;
  std::string topology = "ring";  // ring | complete
};

struct EvalConfig {
  int episodes = 100;
  bool exploitability = false;
  int best_response_steps = 2000;
};

struct RunConfig {
  std::vector<uint64_t> seeds = {1};
  std::string out_dir = "out";
  std::string run_id = "run";
};

struct ExperimentConfig {
  EnvConfig env;
  AlgoConfig algo;
  EvalConfig eval;
  RunConfig run;
};

// Strict section/key=value parser; JSON with the same section layout is
// accepted when the text starts with '{'. Unknown sections or keys and
// out-of-range values raise std::runtime_error naming the offending line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

std::vector<std::string> known_envs();
GameSpec build_env(const EnvConfig& cfg);

// ---- Runs ----

// Trains every (seed) cell, appending one MetricsRow per eval interval to
// out_dir/metrics.csv plus events.jsonl, potential_report.json and per-seed
// actor checkpoints. Returns a process exit code; 2 flags an unknown env.
int run_experiment(const ExperimentConfig& cfg);

// Ablation sweep: one run group per strength value, all in one CSV.
int run_sweep(const ExperimentConfig& base, const Vec& ablation_values);

}  // namespace spg
