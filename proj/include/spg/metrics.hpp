#pragma once

#include <string>

#include "spg/envs/cournot.hpp"
#include "spg/learners.hpp"

namespace spg {

// One evaluation record; serialized as one CSV line under a fixed schema.
struct MetricsRow {
  std::string run_id;
  uint64_t seed = 0;
  std::string env;
  std::string algo;
  int iteration = 0;
  int episodes = 0;
  double social_welfare = 0.0;
  double exploitability = 0.0;
  double ne_gap = 0.0;
  double potential_residual = 0.0;
  double wall_ms = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);

// Mean over episodes of the undiscounted per-episode sum of all agents'
// rewards, under deterministic play.
double social_welfare(const GameSpec& game, const ActorSet& actors,
                      int episodes, Rng& rng);

// Sup-norm distance between the deterministic joint action at the initial
// state and the analytic equilibrium; NaN when none is known.
double ne_gap(const GameSpec& game, const ActorSet& actors, Rng& rng);

struct Exploitability {
  double delta = 0.0;       // mean best-response gain across agents
  Vec per_agent_gain;       // br_value - current_value, clipped at 0
  Vec per_agent_stderr;     // Monte-Carlo standard error of the gain
};

// Learned best responses, one per agent, against the frozen profile.
Exploitability exploitability(const GameSpec& game, const ActorSet& actors,
                              const BestResponseConfig& cfg, Rng& rng);

// Closed-form check for the quantity game: the best response to the
// opponents' total is known exactly, so the gain has no training error.
Exploitability cournot_exploitability(const CournotParams& p,
                                      const ActorSet& actors);

// Mean and standard error of one agent's undiscounted episode return.
void agent_return_stats(const GameSpec& game, const ActorSet& actors,
                        int agent, int episodes, Rng& rng, double* mean,
                        double* stderr_out);

}  // namespace spg
