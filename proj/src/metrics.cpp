#include "spg/metrics.hpp"

#include <cmath>
#include <sstream>

namespace spg {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string metrics_csv_header() {
  return "run_id,seed,env,algo,iteration,episodes,social_welfare,"
         "exploitability,ne_gap,potential_residual,wall_ms";
}

std::string metrics_csv_row(const MetricsRow& r) {
  std::ostringstream os;
  os << r.run_id << ',' << r.seed << ',' << r.env << ',' << r.algo << ','
     << r.iteration << ',' << r.episodes << ',' << fmt(r.social_welfare) << ','
     << fmt(r.exploitability) << ',' << fmt(r.ne_gap) << ','
     << fmt(r.potential_residual) << ',' << fmt(r.wall_ms);
  return os.str();
}

double social_welfare(const GameSpec& game, const ActorSet& actors,
                      int episodes, Rng& rng) {
  double total = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    Vec s = game.initial_state(rng);
    for (int t = 0; t < game.horizon; ++t) {
      if (game.is_terminal && game.is_terminal(s)) break;
      Vec a = actors.joint_action(game, s);
      Vec r = game.reward_oracle(s, a);
      for (double ri : r) total += ri;
      s = game.transition(s, a, rng);
    }
  }
  return total / episodes;
}

double ne_gap(const GameSpec& game, const ActorSet& actors, Rng& rng) {
  if (game.analytic_ne.empty()) return std::nan("");
  Vec s0 = game.initial_state(rng);
  Vec a = actors.joint_action(game, s0);
  double gap = 0.0;
  for (int k = 0; k < game.joint_action_dim(); ++k)
    gap = std::max(gap, std::abs(a[k] - game.analytic_ne[k]));
  return gap;
}

void agent_return_stats(const GameSpec& game, const ActorSet& actors,
                        int agent, int episodes, Rng& rng, double* mean,
                        double* stderr_out) {
  Vec returns;
  returns.reserve(episodes);
  for (int ep = 0; ep < episodes; ++ep) {
    Vec s = game.initial_state(rng);
    double ret = 0.0;
    for (int t = 0; t < game.horizon; ++t) {
      if (game.is_terminal && game.is_terminal(s)) break;
      Vec a = actors.joint_action(game, s);
      ret += game.reward_oracle(s, a)[agent];
      s = game.transition(s, a, rng);
    }
    returns.push_back(ret);
  }
  double m = 0.0;
  for (double r : returns) m += r;
  m /= episodes;
  double var = 0.0;
  for (double r : returns) var += (r - m) * (r - m);
  var = episodes > 1 ? var / (episodes - 1) : 0.0;
  if (mean) *mean = m;
  if (stderr_out) *stderr_out = std::sqrt(var / episodes);
}

Exploitability exploitability(const GameSpec& game, const ActorSet& actors,
                              const BestResponseConfig& cfg, Rng& rng) {
  Exploitability out;
  for (int i = 0; i < game.n_agents; ++i) {
    Rng agent_rng = rng.fork("exploit_" + std::to_string(i));
    BestResponseResult br = train_best_response(game, actors, i, cfg, agent_rng);
    double gain = std::max(0.0, br.br_value - br.current_value);
    out.per_agent_gain.push_back(gain);

    ActorSet deviated = actors;
    deviated.actors[i] = br.br;
    deviated.actors[i].set_sigma(0.0);
    Rng eval_rng = agent_rng.fork("stderr");
    double se_dev = 0.0, se_cur = 0.0, unused = 0.0;
    agent_return_stats(game, deviated, i, cfg.eval_episodes, eval_rng, &unused,
                       &se_dev);
    agent_return_stats(game, actors, i, cfg.eval_episodes, eval_rng, &unused,
                       &se_cur);
    out.per_agent_stderr.push_back(std::sqrt(se_dev * se_dev + se_cur * se_cur));
    out.delta += gain / game.n_agents;
  }
  return out;
}

Exploitability cournot_exploitability(const CournotParams& p,
                                      const ActorSet& actors) {
  GameSpec game = cournot_game(p);
  Rng rng(0);
  Vec s0 = game.initial_state(rng);
  Vec a = actors.joint_action(game, s0);
  Exploitability out;
  for (int i = 0; i < p.n_agents; ++i) {
    double others = 0.0;
    for (int j = 0; j < p.n_agents; ++j)
      if (j != i) others += a[j];
    double br = cournot_best_response(p, others);
    br = std::clamp(br, game.action_low[i], game.action_high[i]);
    Vec dev = a;
    dev[i] = br;
    double gain = std::max(0.0, game.reward_oracle(s0, dev)[i] -
                                    game.reward_oracle(s0, a)[i]);
    out.per_agent_gain.push_back(gain);
    out.per_agent_stderr.push_back(0.0);
    out.delta += gain / p.n_agents;
  }
  return out;
}

}  // namespace spg
