#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "spg/harness.hpp"

using namespace spg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

std::string tmp_dir(const std::string& leaf) {
  fs::path p = fs::temp_directory_path() / ("spg_harness_" + leaf);
  fs::remove_all(p);
  return p.string();
}

ExperimentConfig tiny_config(const std::string& out) {
  ExperimentConfig cfg;
  cfg.algo.train.iterations = 120;
  cfg.algo.train.batch = 32;
  cfg.algo.train.buffer = 128;
  cfg.algo.train.eval_every = 60;
  cfg.algo.train.critic_hidden = {8};
  cfg.algo.train.actor_hidden = {8};
  cfg.run.out_dir = out;
  return cfg;
}

}  // namespace

TEST_CASE("defaults survive an empty algo section") {
  ExperimentConfig cfg = parse_config("[algo]\n");
  CHECK(cfg.algo.train.lr_actor == 1e-4);
  CHECK(cfg.algo.train.lr_critic == 1e-3);
  CHECK(cfg.algo.train.batch == 256);
  CHECK(cfg.algo.train.buffer == 4096);
  CHECK(cfg.algo.train.gamma == 0.99);
}

TEST_CASE("parser fills sections and seed lists") {
  ExperimentConfig cfg = parse_config(
      "[env]\n"
      "name = braess\n"
      "n_agents = 3\n"
      "demand = 0.4  # per agent\n"
      "\n"
      "[algo]\n"
      "name = independent\n"
      "gamma = 0.9\n"
      "\n"
      "[run]\n"
      "seeds = [1, 2, 3]\n"
      "out_dir = /tmp/x\n");
  CHECK(cfg.env.name == "braess");
  CHECK(cfg.env.n_agents == 3);
  CHECK(cfg.env.demand == 0.4);
  CHECK(cfg.algo.name == "independent");
  CHECK(cfg.algo.train.gamma == 0.9);
  REQUIRE(cfg.run.seeds.size() == 3);
  CHECK(cfg.run.seeds[2] == 3);
}

TEST_CASE("parser rejects bad input with line diagnostics") {
  CHECK_THROWS_WITH_AS(parse_config("[algo]\ngamma = 1.5\n"),
                       doctest::Contains("gamma"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config("[env]\nbogus_key = 1\n"),
                       doctest::Contains("line 2"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config("[nope]\nx = 1\n"),
                       doctest::Contains("unknown section"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config("x = 1\n"),
                       doctest::Contains("outside any section"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config("[algo]\nbatch = -1\n"),
                       doctest::Contains("positive"), std::runtime_error);
  CHECK_THROWS(parse_config("[algo]\nbatch = abc\n"));
}

TEST_CASE("json configs mirror the ini sections") {
  ExperimentConfig cfg = parse_config(
      R"({"env": {"name": "cournot", "n_agents": 4},
          "algo": {"gamma": 0.5, "use_analytic_potential": false},
          "run": {"seeds": [5, 6]}})");
  CHECK(cfg.env.n_agents == 4);
  CHECK(cfg.algo.train.gamma == 0.5);
  CHECK_FALSE(cfg.algo.train.use_analytic_potential);
  REQUIRE(cfg.run.seeds.size() == 2);
  CHECK(cfg.run.seeds[1] == 6);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"env": {"bogus": 1}})"),
      doctest::Contains("unknown key"), std::runtime_error);
}

TEST_CASE("every advertised env builds") {
  for (const auto& name : known_envs()) {
    EnvConfig e;
    e.name = name;
    if (name == "routing_file") {
      const char* fx = std::getenv("SPG_FIXTURES");
      REQUIRE(fx != nullptr);
      e.network_file = std::string(fx) + "/braess.json";
    }
    GameSpec game = build_env(e);
    CHECK(game.n_agents >= 1);
    CHECK(static_cast<bool>(game.reward_oracle));
  }
}

TEST_CASE("unknown envs fail with the available list") {
  EnvConfig e;
  e.name = "pong";
  CHECK_THROWS_WITH_AS(build_env(e), doctest::Contains("cournot"),
                       UnknownEnvError);
  ExperimentConfig cfg = tiny_config(tmp_dir("unknown"));
  cfg.env.name = "pong";
  CHECK(run_experiment(cfg) == 2);
}

TEST_CASE("team wrapper applies on top of a named env") {
  EnvConfig e;
  e.team = true;
  GameSpec game = build_env(e);
  Rng rng(1);
  Vec s = game.initial_state(rng);
  Vec r = game.reward_oracle(s, {0.2, 0.3});
  CHECK(r[0] == doctest::Approx(r[1]));
}

TEST_CASE("experiments emit one row per eval interval per seed") {
  std::string out = tmp_dir("rows");
  ExperimentConfig cfg = tiny_config(out);
  cfg.run.seeds = {1, 2};
  REQUIRE(run_experiment(cfg) == 0);
  std::string csv = slurp(out + "/metrics.csv");
  // Header plus 2 trace points per seed (iterations 60 and 120).
  CHECK(count_lines(csv) == 1 + 2 * 2);
  CHECK(csv.rfind(metrics_csv_header(), 0) == 0);
  CHECK(fs::exists(out + "/events.jsonl"));
  CHECK(fs::exists(out + "/checkpoint_cournot_seed1_agent0.json"));
  CHECK(fs::exists(out + "/checkpoint_cournot_seed2_agent1.json"));
}

TEST_CASE("reruns are byte-identical") {
  std::string out1 = tmp_dir("rerun_a"), out2 = tmp_dir("rerun_b");
  ExperimentConfig cfg = tiny_config(out1);
  cfg.run.seeds = {7};
  REQUIRE(run_experiment(cfg) == 0);
  cfg.run.out_dir = out2;
  REQUIRE(run_experiment(cfg) == 0);
  CHECK(slurp(out1 + "/metrics.csv") == slurp(out2 + "/metrics.csv"));
}

TEST_CASE("the ablation sweep groups all strengths in one csv") {
  std::string out = tmp_dir("sweep");
  ExperimentConfig cfg = tiny_config(out);
  cfg.env.name = "ablation_noncoop";
  REQUIRE(run_sweep(cfg, {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}) == 0);
  std::string csv = slurp(out + "/metrics.csv");
  // 6 groups x 1 seed x 2 trace points.
  CHECK(count_lines(csv) == 1 + 6 * 2);
  for (const char* label : {"ablation_noncoop_c0,", "ablation_noncoop_c0.5,"})
    CHECK(csv.find(label) != std::string::npos);
}

TEST_CASE("estimated-potential runs write a report") {
  std::string out = tmp_dir("report");
  ExperimentConfig cfg = tiny_config(out);
  cfg.algo.train.use_analytic_potential = false;
  cfg.algo.train.residual.iterations = 200;
  cfg.algo.train.residual.probes = 16;
  REQUIRE(run_experiment(cfg) == 0);
  std::string rep = slurp(out + "/potential_report.json");
  CHECK(rep.find("estimated") != std::string::npos);
}
