#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "wakeup/advice.hpp"
#include "wakeup/error.hpp"
#include "wakeup/graph.hpp"
#include "wakeup/protocols.hpp"
#include "wakeup/sim.hpp"

namespace wakeup {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------

struct WakeSpec {
  enum class Kind {
    Explicit,      // entries below
    File,          // schedule file
    SingleNode,    // fixed node index, tick 0
    SingleRandom,  // one node drawn per seed, tick 0
    AllCenters,    // the generator-provided schedule (family G wakes all of V)
    Staggered,     // `groups` disjoint random groups of `group_size`, ticks 0, interval, ...
  };

  Kind kind = Kind::SingleRandom;
  std::vector<WakeEntry> entries;
  std::string file;
  NodeIndex node = 0;
  std::uint32_t groups = 3;
  std::uint32_t group_size = 1;
  std::uint64_t interval = 1;

  // Grammar: explicit:<n>@<t>[,...] | file:<path> | node:<idx> | random |
  //          all-centers | staggered:<groups>x<size>@<interval>
  static WakeSpec parse(const std::string& s) {
    WakeSpec w;
    if (s == "random") {
      w.kind = Kind::SingleRandom;
    } else if (s == "all-centers") {
      w.kind = Kind::AllCenters;
    } else if (s.rfind("node:", 0) == 0) {
      w.kind = Kind::SingleNode;
      w.node = static_cast<NodeIndex>(std::stoul(s.substr(5)));
    } else if (s.rfind("file:", 0) == 0) {
      w.kind = Kind::File;
      w.file = s.substr(5);
    } else if (s.rfind("explicit:", 0) == 0) {
      w.kind = Kind::Explicit;
      std::stringstream ss(s.substr(9));
      std::string item;
      while (std::getline(ss, item, ',')) {
        auto at = item.find('@');
        if (at == std::string::npos) throw ConfigError("bad wake entry: " + item);
        w.entries.push_back({static_cast<NodeIndex>(std::stoul(item.substr(0, at))),
                             std::stoull(item.substr(at + 1))});
      }
    } else if (s.rfind("staggered:", 0) == 0) {
      w.kind = Kind::Staggered;
      std::string body = s.substr(10);
      auto x = body.find('x');
      auto at = body.find('@');
      if (x == std::string::npos || at == std::string::npos || at < x) {
        throw ConfigError("bad staggered wake spec: " + s);
      }
      w.groups = static_cast<std::uint32_t>(std::stoul(body.substr(0, x)));
      w.group_size = static_cast<std::uint32_t>(std::stoul(body.substr(x + 1, at - x - 1)));
      w.interval = std::stoull(body.substr(at + 1));
    } else {
      throw ConfigError("unknown wake spec: " + s);
    }
    return w;
  }
};

struct ExperimentConfig {
  enum class Instance { RandomConnected, FamilyG, File };

  Instance instance = Instance::RandomConnected;
  std::uint32_t n = 0;
  std::uint64_t m = 0;            // RandomConnected
  bool g_random_ids = false;      // FamilyG id permutation option
  std::string graph_file;
  Knowledge knowledge = Knowledge::KT0;

  std::string protocol = "flooding";
  int dfs_c = 4;

  std::uint64_t tau = 1;
  DelayPolicy::Mode delay_mode = DelayPolicy::Mode::Constant;
  std::uint64_t delay_constant = 1;
  std::string delay_table_file;

  WakeSpec wake;
  std::vector<std::uint64_t> seeds;
  std::optional<int> congest_limit;
  bool strict = false;        // faults and congest violations become fatal
  bool audit_tokens = true;   // dfs-rank structural assertions
  std::size_t threads = 0;    // 0 = hardware choice

  void validate() const {
    if (seeds.empty()) throw ConfigError("config: seed list must be nonempty");
    ProtocolId proto = ProtocolId::parse(protocol);
    if (proto.needs_kt1() && knowledge != Knowledge::KT1 && instance != Instance::File) {
      throw ConfigError("config: dfs-rank requires the KT1 knowledge model");
    }
    if (instance == Instance::RandomConnected) {
      if (n < 2) throw ConfigError("config: n must be >= 2");
      std::uint64_t max_m = static_cast<std::uint64_t>(n) * (n - 1) / 2;
      if (m < n - 1 || m > max_m) throw ConfigError("config: infeasible (n, m)");
    }
    if (instance == Instance::FamilyG && n < 1) throw ConfigError("config: family G needs n >= 1");
    if (instance == Instance::File && graph_file.empty()) {
      throw ConfigError("config: instance file missing");
    }
    if (wake.kind == WakeSpec::Kind::AllCenters && instance != Instance::FamilyG) {
      throw ConfigError("config: all-centers wake spec is only defined for family G");
    }
    if (delay_mode == DelayPolicy::Mode::Constant && (delay_constant < 1 || delay_constant > tau)) {
      throw ConfigError("config: constant delay must lie in [1, tau]");
    }
  }
};

// ---------------------------------------------------------------------
// Per-run materialization
// ---------------------------------------------------------------------

struct RunRecord {
  std::uint64_t seed = 0;
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  std::string protocol;
  std::string scheme;
  std::uint32_t awake_distance = 0;
  RunMetrics metrics;
};

struct PreparedRun {
  Network net;
  WakeSchedule schedule;
  DelayPolicy delays;
  std::shared_ptr<std::vector<BitString>> advice;  // null for advice-free protocols
  std::uint64_t algo_seed = 0;
};

namespace detail {

inline WakeSchedule materialize_wake(const WakeSpec& spec, const Network& net,
                                     const WakeSchedule& generated, std::uint64_t wake_seed) {
  WakeSchedule out;
  switch (spec.kind) {
    case WakeSpec::Kind::Explicit:
      out.entries = spec.entries;
      break;
    case WakeSpec::Kind::File:
      out = load_schedule(spec.file);
      break;
    case WakeSpec::Kind::SingleNode:
      out.entries = {{spec.node, 0}};
      break;
    case WakeSpec::Kind::SingleRandom: {
      Rng rng(mix64(wake_seed, 0x3a7e));
      out.entries = {{static_cast<NodeIndex>(rng.below(net.n())), 0}};
      break;
    }
    case WakeSpec::Kind::AllCenters:
      out = generated;
      break;
    case WakeSpec::Kind::Staggered: {
      Rng rng(mix64(wake_seed, 0x57a6));
      std::vector<NodeIndex> nodes(net.n());
      for (NodeIndex v = 0; v < net.n(); ++v) nodes[v] = v;
      rng.shuffle(nodes);
      std::size_t need = std::min<std::size_t>(net.n(),
                                               static_cast<std::size_t>(spec.groups) * spec.group_size);
      for (std::size_t i = 0; i < need; ++i) {
        std::uint64_t tick = (i / spec.group_size) * spec.interval;
        out.entries.push_back({nodes[i], tick});
      }
      break;
    }
  }
  out.validate(net.n());
  return out;
}

}  // namespace detail

inline PreparedRun prepare_run(const ExperimentConfig& cfg, std::uint64_t seed) {
  const std::uint64_t instance_seed = mix64(seed, 1);
  const std::uint64_t adversary_seed = mix64(seed, 2);
  const std::uint64_t algo_seed = mix64(seed, 3);
  const std::uint64_t wake_seed = mix64(seed, 4);

  PreparedRun run;
  run.algo_seed = algo_seed;
  WakeSchedule generated;
  switch (cfg.instance) {
    case ExperimentConfig::Instance::RandomConnected:
      run.net = generate_random_connected(cfg.n, cfg.m, instance_seed, cfg.knowledge);
      break;
    case ExperimentConfig::Instance::FamilyG: {
      auto [net, sched] = generate_lb_family_g(cfg.n, instance_seed, cfg.knowledge,
                                               cfg.g_random_ids);
      run.net = std::move(net);
      generated = std::move(sched);
      break;
    }
    case ExperimentConfig::Instance::File:
      run.net = Network::load(cfg.graph_file);
      break;
  }

  switch (cfg.delay_mode) {
    case DelayPolicy::Mode::Constant:
      run.delays = DelayPolicy::make_constant(cfg.tau, cfg.delay_constant);
      break;
    case DelayPolicy::Mode::Uniform:
      run.delays = DelayPolicy::make_uniform(cfg.tau, adversary_seed);
      break;
    case DelayPolicy::Mode::Table: {
      std::ifstream is(cfg.delay_table_file);
      if (!is) throw Error("cannot open " + cfg.delay_table_file);
      run.delays = DelayPolicy::load_table(cfg.tau, is);
      break;
    }
  }

  run.schedule = detail::materialize_wake(cfg.wake, run.net, generated, wake_seed);

  ProtocolId proto = ProtocolId::parse(cfg.protocol);
  if (proto.needs_kt1() && run.net.knowledge() != Knowledge::KT1) {
    throw ConfigError("dfs-rank requires a KT1 instance");
  }
  if (proto.needs_advice()) {
    AdviceMap advice = compute_advice(run.net, proto.scheme, instance_seed);
    run.advice = std::make_shared<std::vector<BitString>>(std::move(advice.bits));
  }
  return run;
}

inline RunRecord execute_run(const ExperimentConfig& cfg, std::uint64_t seed) {
  PreparedRun prep = prepare_run(cfg, seed);
  ProtocolId proto = ProtocolId::parse(cfg.protocol);

  DfsRankOptions dfs;
  dfs.c = cfg.dfs_c;
  if (cfg.audit_tokens && proto.kind == ProtocolId::Kind::DfsRank) {
    dfs.audit = std::make_shared<TokenTreeAudit>();
    dfs.fault_on_violation = true;
  }

  SimOptions opts;
  opts.congest_limit_bits = cfg.congest_limit;
  opts.congest_fatal = cfg.strict && cfg.congest_limit.has_value();

  RunRecord rec;
  rec.seed = seed;
  rec.n = prep.net.n();
  rec.m = prep.net.m();
  rec.protocol = proto.str();
  rec.scheme = proto.needs_advice() ? proto.scheme.str() : "";
  rec.awake_distance = awake_distance(prep.net, prep.schedule.nodes());
  rec.metrics = run(prep.net, make_runtime_factory(proto, dfs), prep.schedule, prep.delays,
                    prep.advice.get(), prep.algo_seed, opts);
  if (dfs.audit && dfs.audit->violations() > 0) {
    throw ProtocolFault("token tree audit failed: " + dfs.audit->reports().front());
  }
  return rec;
}

// ---------------------------------------------------------------------
// Sweeps and serialization
// ---------------------------------------------------------------------

struct SweepResult {
  std::vector<RunRecord> rows;  // ordered by seed

  double mean_messages = 0.0;
  std::uint64_t max_messages = 0;
  double mean_time_units = 0.0;
  double max_time_units = 0.0;
  std::uint64_t max_forwards = 0;
  std::uint64_t advice_max_bits = 0;
  double advice_avg_bits = 0.0;
  std::size_t all_awake_count = 0;

  void finalize() {
    if (rows.empty()) return;
    double msg_total = 0.0, time_total = 0.0, advice_total = 0.0;
    for (const auto& r : rows) {
      msg_total += static_cast<double>(r.metrics.messages_total);
      max_messages = std::max(max_messages, r.metrics.messages_total);
      time_total += r.metrics.time_units;
      max_time_units = std::max(max_time_units, r.metrics.time_units);
      max_forwards = std::max(max_forwards, r.metrics.max_forwards());
      advice_max_bits = std::max(advice_max_bits, r.metrics.advice_max_bits);
      advice_total += r.metrics.advice_avg_bits;
      if (r.metrics.all_awake) ++all_awake_count;
    }
    mean_messages = msg_total / static_cast<double>(rows.size());
    mean_time_units = time_total / static_cast<double>(rows.size());
    advice_avg_bits = advice_total / static_cast<double>(rows.size());
  }
};

// Runs are independent; execute them on a small pool and merge by index so
// the output ordering is canonical regardless of scheduling.
inline SweepResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  SweepResult result;
  result.rows.resize(cfg.seeds.size());

  std::size_t workers = cfg.threads != 0
                            ? cfg.threads
                            : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  workers = std::min(workers, cfg.seeds.size());

  std::atomic<std::size_t> cursor{0};
  std::vector<std::string> failures(cfg.seeds.size());
  auto worker = [&]() {
    for (;;) {
      std::size_t i = cursor.fetch_add(1);
      if (i >= cfg.seeds.size()) return;
      try {
        result.rows[i] = execute_run(cfg, cfg.seeds[i]);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (!failures[i].empty()) {
      throw Error("run with seed " + std::to_string(cfg.seeds[i]) + " failed: " + failures[i]);
    }
  }
  result.finalize();
  return result;
}

inline ordered_json row_json(const RunRecord& r) {
  ordered_json j;
  j["messages_total"] = r.metrics.messages_total;
  j["time_units"] = r.metrics.time_units;
  j["last_receipt_tick"] = r.metrics.last_receipt_tick;
  j["max_message_bits"] = r.metrics.max_message_bits;
  j["advice_max_bits"] = r.metrics.advice_max_bits;
  j["advice_avg_bits"] = r.metrics.advice_avg_bits;
  j["awake_distance"] = r.awake_distance;
  j["all_awake"] = r.metrics.all_awake;
  j["seed"] = r.seed;
  j["n"] = r.n;
  j["m"] = r.m;
  j["protocol"] = r.protocol;
  j["scheme"] = r.scheme;
  return j;
}

inline std::string to_jsonl(const SweepResult& result) {
  std::string out;
  for (const auto& r : result.rows) {
    out += row_json(r).dump();
    out += '\n';
  }
  return out;
}

inline ordered_json summary_json(const SweepResult& result) {
  ordered_json j;
  j["runs"] = result.rows.size();
  j["all_awake_count"] = result.all_awake_count;
  j["mean_messages"] = result.mean_messages;
  j["max_messages"] = result.max_messages;
  j["mean_time_units"] = result.mean_time_units;
  j["max_time_units"] = result.max_time_units;
  j["max_node_forwards"] = result.max_forwards;
  j["advice_max_bits"] = result.advice_max_bits;
  j["advice_avg_bits"] = result.advice_avg_bits;
  return j;
}

// ---------------------------------------------------------------------
// Scaling sweep: one line per size with columns normalized by n ln n for
// trend inspection.
// ---------------------------------------------------------------------

struct ScalingRow {
  std::uint32_t n = 0;
  std::uint64_t m = 0;
  double mean_messages = 0.0;
  double mean_time_units = 0.0;
  std::uint64_t max_node_forwards = 0;
  double messages_norm = 0.0;   // mean_messages / (n ln n)
  double time_norm = 0.0;       // mean_time_units / (n ln n)
};

inline std::vector<ScalingRow> scaling_sweep(ExperimentConfig base,
                                             const std::vector<std::uint32_t>& sizes,
                                             std::uint32_t seeds_per_size,
                                             double edge_factor = 3.0) {
  if (!std::is_sorted(sizes.begin(), sizes.end())) {
    throw ConfigError("scaling_sweep: sizes must be ascending");
  }
  std::vector<ScalingRow> table;
  for (std::uint32_t size : sizes) {
    ExperimentConfig cfg = base;
    cfg.instance = ExperimentConfig::Instance::RandomConnected;
    cfg.n = size;
    std::uint64_t max_m = static_cast<std::uint64_t>(size) * (size - 1) / 2;
    cfg.m = std::min<std::uint64_t>(max_m,
                                    std::max<std::uint64_t>(size - 1,
                                                            static_cast<std::uint64_t>(edge_factor * size)));
    cfg.seeds.clear();
    for (std::uint32_t s = 0; s < seeds_per_size; ++s) cfg.seeds.push_back(mix64(size, s));
    SweepResult res = run_experiment(cfg);

    ScalingRow row;
    row.n = size;
    row.m = cfg.m;
    row.mean_messages = res.mean_messages;
    row.mean_time_units = res.mean_time_units;
    row.max_node_forwards = res.max_forwards;
    const double nln = static_cast<double>(size) * std::log(static_cast<double>(size));
    row.messages_norm = res.mean_messages / nln;
    row.time_norm = res.mean_time_units / nln;
    table.push_back(row);
  }
  return table;
}

inline void write_scaling_csv(const std::vector<ScalingRow>& table, std::ostream& os) {
  os << "n,m,mean_messages,mean_time_units,max_node_forwards,messages_per_nlnn,time_per_nlnn\n";
  for (const auto& r : table) {
    os << r.n << ',' << r.m << ',' << r.mean_messages << ',' << r.mean_time_units << ','
       << r.max_node_forwards << ',' << r.messages_norm << ',' << r.time_norm << '\n';
  }
}

// Raw delay assignments for every directed channel and message index below
// `depth`, in the delay-table file format. Oblivious by construction: the
// dump depends only on the policy and topology, never on the algorithm.
inline void dump_delay_table(const Network& net, const DelayPolicy& policy, std::uint64_t depth,
                             std::ostream& os) {
  for (NodeIndex v = 0; v < net.n(); ++v) {
    for (NodeIndex u : net.neighbors(v)) {
      for (std::uint64_t k = 0; k < depth; ++k) {
        os << v << ' ' << u << ' ' << k << ' ' << assign_delay(policy, v, u, k) << '\n';
      }
    }
  }
}

}  // namespace wakeup
