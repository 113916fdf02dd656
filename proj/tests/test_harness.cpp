#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <sstream>

#include "oracles.hpp"
#include "wakeup/harness.hpp"

using namespace wakeup;
namespace oracle = testing_oracles;

namespace {

ExperimentConfig base_config() {
  ExperimentConfig cfg;
  cfg.instance = ExperimentConfig::Instance::RandomConnected;
  cfg.n = 32;
  cfg.m = 80;
  cfg.protocol = "flooding";
  cfg.tau = 4;
  cfg.delay_mode = DelayPolicy::Mode::Uniform;
  cfg.wake = WakeSpec::parse("random");
  cfg.seeds = {1, 2, 3, 4};
  return cfg;
}

}  // namespace

TEST_CASE("config validation", "[harness]") {
  ExperimentConfig cfg = base_config();
  cfg.seeds.clear();
  REQUIRE_THROWS_AS(run_experiment(cfg), ConfigError);

  cfg = base_config();
  cfg.protocol = "dfs-rank";  // KT0 instance
  REQUIRE_THROWS_AS(run_experiment(cfg), ConfigError);

  cfg = base_config();
  cfg.m = 2;  // infeasible
  REQUIRE_THROWS_AS(run_experiment(cfg), ConfigError);

  cfg = base_config();
  cfg.wake = WakeSpec::parse("all-centers");  // only defined for family G
  REQUIRE_THROWS_AS(run_experiment(cfg), ConfigError);

  REQUIRE_THROWS_AS(WakeSpec::parse("sometimes"), ConfigError);
}

TEST_CASE("wake spec parsing", "[harness]") {
  WakeSpec w = WakeSpec::parse("staggered:3x4@64");
  REQUIRE(w.kind == WakeSpec::Kind::Staggered);
  REQUIRE(w.groups == 3);
  REQUIRE(w.group_size == 4);
  REQUIRE(w.interval == 64);

  WakeSpec e = WakeSpec::parse("explicit:0@0,5@32");
  REQUIRE(e.entries.size() == 2);
  REQUIRE(e.entries[1].node == 5);
  REQUIRE(e.entries[1].tick == 32);

  REQUIRE(WakeSpec::parse("node:7").node == 7);
}

TEST_CASE("family G: flooding floods, basic-bfs stays linear", "[harness]") {
  ExperimentConfig cfg;
  cfg.instance = ExperimentConfig::Instance::FamilyG;
  cfg.n = 16;
  cfg.protocol = "flooding";
  cfg.tau = 1;
  cfg.delay_mode = DelayPolicy::Mode::Constant;
  cfg.delay_constant = 1;
  cfg.wake = WakeSpec::parse("all-centers");
  cfg.seeds = {5};

  SweepResult flood = run_experiment(cfg);
  REQUIRE(flood.rows.size() == 1);
  REQUIRE(flood.rows[0].metrics.messages_total >= 16ull * 16ull);  // >= n^2
  REQUIRE(flood.rows[0].metrics.all_awake);
  REQUIRE(flood.rows[0].awake_distance == 1);

  cfg.protocol = "advice:basic-bfs";
  SweepResult basic = run_experiment(cfg);
  REQUIRE(basic.rows[0].metrics.messages_total <= 2ull * (3 * 16 - 1));
  REQUIRE(basic.rows[0].metrics.all_awake);
}

TEST_CASE("rows serialize with the exact key set, reproducibly", "[harness]") {
  ExperimentConfig cfg = base_config();
  SweepResult a = run_experiment(cfg);
  SweepResult b = run_experiment(cfg);
  REQUIRE(to_jsonl(a) == to_jsonl(b));

  auto j = ordered_json::parse(row_json(a.rows[0]).dump());
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  REQUIRE(keys == std::vector<std::string>{"messages_total", "time_units", "last_receipt_tick",
                                           "max_message_bits", "advice_max_bits",
                                           "advice_avg_bits", "awake_distance", "all_awake",
                                           "seed", "n", "m", "protocol", "scheme"});
  REQUIRE(a.rows[0].metrics.messages_total == 2 * a.rows[0].m);  // flooding identity
}

TEST_CASE("sweep aggregates recompute from rows", "[harness]") {
  ExperimentConfig cfg = base_config();
  SweepResult res = run_experiment(cfg);
  double mean = 0;
  for (const auto& r : res.rows) mean += static_cast<double>(r.metrics.messages_total);
  mean /= static_cast<double>(res.rows.size());
  REQUIRE(res.mean_messages == Catch::Approx(mean));
  REQUIRE(res.all_awake_count == res.rows.size());
}

TEST_CASE("parallel and sequential execution agree", "[harness]") {
  ExperimentConfig cfg = base_config();
  cfg.seeds = {9, 8, 7, 6, 5, 4, 3, 2, 1};
  cfg.threads = 1;
  std::string sequential = to_jsonl(run_experiment(cfg));
  cfg.threads = 4;
  std::string parallel = to_jsonl(run_experiment(cfg));
  REQUIRE(sequential == parallel);
}

TEST_CASE("scaling sweep emits normalized columns", "[harness]") {
  ExperimentConfig cfg = base_config();
  auto table = scaling_sweep(cfg, {32, 64}, 3);
  REQUIRE(table.size() == 2);
  for (const auto& row : table) {
    // flooding identity: mean messages == 2m at every size
    REQUIRE(row.mean_messages == Catch::Approx(2.0 * static_cast<double>(row.m)));
    double nln = row.n * std::log(static_cast<double>(row.n));
    REQUIRE(row.messages_norm == Catch::Approx(row.mean_messages / nln));
  }
  std::ostringstream os;
  write_scaling_csv(table, os);
  REQUIRE(os.str().find("messages_per_nlnn") != std::string::npos);

  REQUIRE_THROWS_AS(scaling_sweep(cfg, {64, 32}, 2), ConfigError);
}

TEST_CASE("staggered schedules are deterministic per seed and disjoint", "[harness]") {
  ExperimentConfig cfg = base_config();
  cfg.n = 64;
  cfg.m = 160;
  cfg.wake = WakeSpec::parse("staggered:3x4@64");
  cfg.seeds = {11};
  SweepResult a = run_experiment(cfg);
  SweepResult b = run_experiment(cfg);
  REQUIRE(to_jsonl(a) == to_jsonl(b));
}

TEST_CASE("file-backed instances run through the harness", "[harness]") {
  auto [net, sched] = generate_lb_family_g(6, 9, Knowledge::KT0);
  const std::string graph_path = "harness_g6.graph.txt";
  const std::string sched_path = "harness_g6.wake.txt";
  net.save(graph_path);
  save_schedule(sched, sched_path);

  ExperimentConfig cfg;
  cfg.instance = ExperimentConfig::Instance::File;
  cfg.graph_file = graph_path;
  cfg.protocol = "advice:scheme-b";
  cfg.tau = 2;
  cfg.delay_mode = DelayPolicy::Mode::Constant;
  cfg.delay_constant = 2;
  cfg.wake.kind = WakeSpec::Kind::File;
  cfg.wake.file = sched_path;
  cfg.seeds = {1, 2};

  SweepResult res = run_experiment(cfg);
  REQUIRE(res.rows.size() == 2);
  for (const auto& r : res.rows) {
    REQUIRE(r.metrics.all_awake);
    REQUIRE(r.n == 18);
    REQUIRE(r.scheme == "scheme-b");
    // same file loaded for both seeds: identical instance, identical schedule
    REQUIRE(r.metrics.messages_total == res.rows[0].metrics.messages_total);
  }
  std::remove(graph_path.c_str());
  std::remove(sched_path.c_str());
}

TEST_CASE("delay table dump is independent of runs", "[harness]") {
  Network net = generate_random_connected(12, 30, 4, Knowledge::KT1);
  DelayPolicy policy = DelayPolicy::make_uniform(8, 1234);
  auto dump = [&]() {
    std::ostringstream os;
    dump_delay_table(net, policy, 4, os);
    return os.str();
  };
  std::string before = dump();
  run(net, dfs_rank_runtime(), {{{0, 0}}}, policy, nullptr, 111);
  std::string between = dump();
  run(net, dfs_rank_runtime(), {{{0, 0}}}, policy, nullptr, 222);
  REQUIRE(before == between);
  REQUIRE(before == dump());

  // the dump parses back as a worst-case table
  std::istringstream is(before);
  DelayPolicy parsed = DelayPolicy::load_table(8, is);
  REQUIRE(assign_delay(parsed, 0, net.neighbors(0)[0], 0) ==
          assign_delay(policy, 0, net.neighbors(0)[0], 0));
}
