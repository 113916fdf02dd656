// Command-line front end: instance generation, single experiments, scaling
// sweeps, spanner construction and advice inspection.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wakeup/advice.hpp"
#include "wakeup/harness.hpp"
#include "wakeup/protocols.hpp"
#include "wakeup/spanner.hpp"

using namespace wakeup;
using nlohmann::json;

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    auto dots = tok.find("..");
    if (dots != std::string::npos) {
      std::uint64_t lo = std::stoull(tok.substr(0, dots));
      std::uint64_t hi = std::stoull(tok.substr(dots + 2));
      for (std::uint64_t v = lo; v <= hi; ++v) seeds.push_back(v);
    } else if (!tok.empty()) {
      seeds.push_back(std::stoull(tok));
    }
  }
  return seeds;
}

Knowledge parse_knowledge(const std::string& s) {
  if (s == "KT0" || s == "kt0") return Knowledge::KT0;
  if (s == "KT1" || s == "kt1") return Knowledge::KT1;
  throw ConfigError("unknown knowledge model: " + s);
}

void apply_delay_string(ExperimentConfig& cfg, const std::string& s) {
  if (s == "uniform") {
    cfg.delay_mode = DelayPolicy::Mode::Uniform;
  } else if (s.rfind("constant:", 0) == 0) {
    cfg.delay_mode = DelayPolicy::Mode::Constant;
    cfg.delay_constant = std::stoull(s.substr(9));
  } else if (s.rfind("table:", 0) == 0) {
    cfg.delay_mode = DelayPolicy::Mode::Table;
    cfg.delay_table_file = s.substr(6);
  } else {
    throw ConfigError("unknown delay mode: " + s + " (constant:<d> | uniform | table:<file>)");
  }
}

std::string delay_string(const ExperimentConfig& cfg) {
  switch (cfg.delay_mode) {
    case DelayPolicy::Mode::Constant: return "constant:" + std::to_string(cfg.delay_constant);
    case DelayPolicy::Mode::Uniform: return "uniform";
    case DelayPolicy::Mode::Table: return "table:" + cfg.delay_table_file;
  }
  return "?";
}

struct InstanceFlags {
  std::string random;   // "n,m"
  std::uint32_t family_g = 0;
  std::uint32_t family_g_girth = 0;
  bool g_random_ids = false;
  std::string file;
  std::string knowledge = "KT0";

  void attach(CLI::App* app) {
    app->add_option("--random", random, "random connected instance, n,m");
    app->add_option("--family-g", family_g, "lower-bound family instance of 3n nodes");
    app->add_option("--family-g-girth", family_g_girth,
                    "high-girth variant of the lower-bound family (not supported)");
    app->add_flag("--g-random-ids", g_random_ids,
                  "draw the family-G id permutation from the seed instead of identity");
    app->add_option("--graph", file, "load instance from a graph file");
    app->add_option("--knowledge", knowledge, "KT0 or KT1 (generated instances)");
  }

  void apply(ExperimentConfig& cfg) const {
    if (family_g_girth > 0) {
      throw ConfigError(
          "the high-girth variant of the lower-bound family has no generator here; "
          "use --family-g (no approximate substitute is offered)");
    }
    int given = (!random.empty() ? 1 : 0) + (family_g > 0 ? 1 : 0) + (!file.empty() ? 1 : 0);
    if (given != 1) throw ConfigError("choose exactly one of --random, --family-g, --graph");
    cfg.knowledge = parse_knowledge(knowledge);
    if (!random.empty()) {
      auto comma = random.find(',');
      if (comma == std::string::npos) throw ConfigError("--random expects n,m");
      cfg.instance = ExperimentConfig::Instance::RandomConnected;
      cfg.n = static_cast<std::uint32_t>(std::stoul(random.substr(0, comma)));
      cfg.m = std::stoull(random.substr(comma + 1));
    } else if (family_g > 0) {
      cfg.instance = ExperimentConfig::Instance::FamilyG;
      cfg.n = family_g;
      cfg.g_random_ids = g_random_ids;
    } else {
      cfg.instance = ExperimentConfig::Instance::File;
      cfg.graph_file = file;
    }
  }

  Network make(std::uint64_t seed) const {
    ExperimentConfig cfg;
    apply(cfg);
    switch (cfg.instance) {
      case ExperimentConfig::Instance::RandomConnected:
        return generate_random_connected(cfg.n, cfg.m, seed, cfg.knowledge);
      case ExperimentConfig::Instance::FamilyG:
        return generate_lb_family_g(cfg.n, seed, cfg.knowledge, cfg.g_random_ids).first;
      default:
        return Network::load(cfg.graph_file);
    }
  }
};

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  const std::string instance = j.value("instance", "random");
  if (instance == "random") {
    cfg.instance = ExperimentConfig::Instance::RandomConnected;
  } else if (instance == "family-g") {
    cfg.instance = ExperimentConfig::Instance::FamilyG;
  } else if (instance == "file") {
    cfg.instance = ExperimentConfig::Instance::File;
  } else {
    throw ConfigError("config: unknown instance kind " + instance);
  }
  cfg.n = j.value("n", 0u);
  cfg.m = j.value("m", 0ull);
  cfg.g_random_ids = j.value("g_random_ids", false);
  cfg.graph_file = j.value("graph_file", "");
  cfg.knowledge = parse_knowledge(j.value("knowledge", "KT0"));
  cfg.protocol = j.value("protocol", "flooding");
  cfg.dfs_c = j.value("dfs_c", 4);
  cfg.tau = j.value("tau", 1ull);
  apply_delay_string(cfg, j.value("delay", "constant:1"));
  cfg.wake = WakeSpec::parse(j.value("wake", "random"));
  if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("congest_limit")) cfg.congest_limit = j["congest_limit"].get<int>();
  cfg.strict = j.value("strict", false);
  cfg.threads = j.value("threads", std::size_t{0});
  return cfg;
}

void write_or_print(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;  // data on stdout, chatter on stderr
    return;
  }
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << content;
}

int cmd_gen(const InstanceFlags& inst, std::uint64_t seed, const std::string& out,
            const std::string& schedule_out) {
  ExperimentConfig cfg;
  inst.apply(cfg);
  if (cfg.instance == ExperimentConfig::Instance::File) {
    throw ConfigError("gen: nothing to generate from --graph");
  }
  if (cfg.instance == ExperimentConfig::Instance::RandomConnected) {
    Network net = generate_random_connected(cfg.n, cfg.m, seed, cfg.knowledge);
    net.save(out);
    std::cerr << "wrote " << out << ": n=" << net.n() << " m=" << net.m() << '\n';
  } else {
    auto [net, sched] = generate_lb_family_g(cfg.n, seed, cfg.knowledge, cfg.g_random_ids);
    net.save(out);
    std::cerr << "wrote " << out << ": n=" << net.n() << " m=" << net.m() << '\n';
    if (!schedule_out.empty()) {
      save_schedule(sched, schedule_out);
      std::cerr << "wrote " << schedule_out << ": " << sched.entries.size()
                << " center wake-ups\n";
    }
  }
  return 0;
}

int cmd_run(ExperimentConfig cfg, const std::string& out, const std::string& trace_path,
            const std::string& dump_delays, std::uint64_t delay_depth) {
  cfg.validate();
  if (!trace_path.empty()) {
    // trace a single run (the first seed) with the configured policy
    PreparedRun prep = prepare_run(cfg, cfg.seeds.front());
    ProtocolId proto = ProtocolId::parse(cfg.protocol);
    std::ofstream trace(trace_path);
    if (!trace) throw Error("cannot open " + trace_path + " for writing");
    SimOptions opts;
    opts.congest_limit_bits = cfg.congest_limit;
    opts.congest_fatal = cfg.strict && cfg.congest_limit.has_value();
    opts.trace = &trace;
    DfsRankOptions dfs;
    dfs.c = cfg.dfs_c;
    run(prep.net, make_runtime_factory(proto, dfs), prep.schedule, prep.delays,
        prep.advice.get(), prep.algo_seed, opts);
    std::cerr << "trace written to " << trace_path << '\n';
  }
  if (!dump_delays.empty()) {
    PreparedRun prep = prepare_run(cfg, cfg.seeds.front());
    std::ofstream os(dump_delays);
    if (!os) throw Error("cannot open " + dump_delays + " for writing");
    dump_delay_table(prep.net, prep.delays, delay_depth, os);
    std::cerr << "delay table written to " << dump_delays << '\n';
  }
  SweepResult result = run_experiment(cfg);
  write_or_print(out, to_jsonl(result));
  std::cerr << summary_json(result).dump(2) << '\n';
  if (!out.empty() && out != "-") {
    std::ofstream os(out + ".summary.json");
    if (!os) throw Error("cannot open " + out + ".summary.json for writing");
    os << summary_json(result).dump(2) << '\n';
  }
  if (cfg.strict && result.all_awake_count != result.rows.size()) {
    std::cerr << "strict: not every run woke all nodes\n";
    return 3;
  }
  return 0;
}

int cmd_sweep(ExperimentConfig base, const std::string& sizes_str, std::uint32_t seeds_per_size,
              double edge_factor, const std::string& out) {
  std::vector<std::uint32_t> sizes;
  for (std::uint64_t v : parse_seed_list(sizes_str)) sizes.push_back(static_cast<std::uint32_t>(v));
  if (sizes.empty()) throw ConfigError("sweep: --sizes is required");
  auto table = scaling_sweep(base, sizes, seeds_per_size, edge_factor);
  std::ostringstream os;
  write_scaling_csv(table, os);
  write_or_print(out, os.str());
  return 0;
}

int cmd_spanner(const InstanceFlags& inst, std::uint64_t instance_seed, std::uint32_t k,
                const std::string& seeds_str, const std::string& export_path, bool verify,
                std::size_t apsp_limit) {
  Network net = inst.make(instance_seed);
  std::vector<std::uint64_t> seeds = parse_seed_list(seeds_str);
  if (seeds.empty()) seeds.push_back(1);

  SpannerSizeStats stats = spanner_size_report(net, k, seeds);
  std::cerr << "n=" << net.n() << " m=" << net.m() << " k=" << k << " builds=" << seeds.size()
            << '\n';
  std::cerr << "edges: mean=" << stats.mean_edges << " max=" << stats.max_edges
            << "  max outgoing-inter per node: " << stats.max_outgoing_per_node << '\n';

  bool all_ok = true;
  if (verify) {
    for (std::uint64_t seed : seeds) {
      SpannerBuild b = build_spanner(net, k, seed);
      bool ok = verify_stretch(net, b.edge_set(), k, apsp_limit);
      if (!ok) {
        std::cerr << "stretch FAILED for seed " << seed << '\n';
        all_ok = false;
      }
    }
    if (all_ok) std::cerr << "stretch <= " << (2 * k - 1) << " verified for all builds\n";
  }
  if (!export_path.empty()) {
    SpannerBuild b = build_spanner(net, k, seeds.front());
    std::ofstream os(export_path);
    if (!os) throw Error("cannot open " + export_path + " for writing");
    save_spanner(b, os);
    std::cerr << "edge list written to " << export_path << '\n';
  }
  return all_ok ? 0 : 4;
}

int cmd_advice(const InstanceFlags& inst, std::uint64_t instance_seed, const std::string& scheme_str,
               std::uint64_t scheme_seed, const std::string& out) {
  Network net = inst.make(instance_seed);
  SchemeId scheme = SchemeId::parse(scheme_str);
  AdviceMap advice = compute_advice(net, scheme, scheme_seed);
  std::cerr << "scheme " << scheme.str() << " on n=" << net.n() << " m=" << net.m() << '\n';
  std::cerr << "advice bits: max=" << advice.max_bits() << " avg=" << advice.avg_bits()
            << " total=" << advice.total_bits() << '\n';
  if (!out.empty()) {
    advice.save(out);
    std::cerr << "advice map written to " << out << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asynchronous wake-up testbed: simulator, protocols, advising oracles"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate an instance file");
  InstanceFlags gen_inst;
  gen_inst.attach(gen);
  std::uint64_t gen_seed = 1;
  std::string gen_out = "graph.txt", gen_sched;
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "graph file to write");
  gen->add_option("--schedule-out", gen_sched, "wake schedule file (family G)");

  // ---- run ----
  auto* runc = app.add_subcommand("run", "run one experiment over a seed list");
  InstanceFlags run_inst;
  run_inst.attach(runc);
  std::string run_config, run_protocol = "flooding", run_delay = "constant:1";
  std::string run_wake = "random", run_seeds = "1", run_out, run_trace, run_dump;
  std::uint64_t run_tau = 1, run_delay_depth = 8;
  int run_congest = -1, run_dfs_c = 4;
  bool run_strict = false;
  std::size_t run_threads = 0;
  runc->add_option("--config", run_config, "load an experiment config (JSON) first");
  runc->add_option("--protocol", run_protocol, "flooding | dfs-rank | advice:<scheme>");
  runc->add_option("--tau", run_tau, "delay upper bound (one time unit)");
  runc->add_option("--delay", run_delay, "constant:<d> | uniform | table:<file>");
  runc->add_option("--wake", run_wake,
                   "explicit:<n>@<t>,... | file:<path> | node:<i> | random | all-centers | "
                   "staggered:<g>x<s>@<i>");
  runc->add_option("--seeds", run_seeds, "seed list, e.g. 1,2,5..20");
  runc->add_option("--congest-limit", run_congest, "bits; audit messages against CONGEST");
  runc->add_flag("--strict", run_strict, "abort on congest violations / failed invariants");
  runc->add_option("--dfs-c", run_dfs_c, "rank range exponent for dfs-rank");
  runc->add_option("--threads", run_threads, "worker threads (0 = auto)");
  runc->add_option("--out", run_out, "JSON-lines output path ('-' for stdout)");
  runc->add_option("--trace", run_trace, "write an event trace of the first seed's run");
  runc->add_option("--dump-delays", run_dump, "write the raw delay table of the first seed");
  runc->add_option("--delay-depth", run_delay_depth, "msg indices per channel in the dump");

  // ---- sweep ----
  auto* sweep = app.add_subcommand("sweep", "scaling sweep over instance sizes");
  std::string sweep_protocol = "dfs-rank", sweep_sizes = "128,256,512,1024";
  std::string sweep_wake = "staggered:3x8@256", sweep_delay = "uniform", sweep_out;
  std::uint32_t sweep_seeds = 30;
  std::uint64_t sweep_tau = 4;
  double sweep_edge_factor = 3.0;
  std::string sweep_knowledge = "KT1";
  sweep->add_option("--protocol", sweep_protocol, "protocol id");
  sweep->add_option("--sizes", sweep_sizes, "comma/range list of n values, ascending");
  sweep->add_option("--seeds-per-size", sweep_seeds, "runs per size");
  sweep->add_option("--edge-factor", sweep_edge_factor, "m = edge-factor * n");
  sweep->add_option("--tau", sweep_tau, "delay upper bound");
  sweep->add_option("--delay", sweep_delay, "delay mode");
  sweep->add_option("--wake", sweep_wake, "wake spec");
  sweep->add_option("--knowledge", sweep_knowledge, "KT0 or KT1");
  sweep->add_option("--out", sweep_out, "CSV output path ('-' for stdout)");

  // ---- spanner ----
  auto* span = app.add_subcommand("spanner", "build, verify and size-report spanners");
  InstanceFlags span_inst;
  span_inst.attach(span);
  std::uint64_t span_instance_seed = 1;
  std::uint32_t span_k = 2;
  std::string span_seeds = "1..10", span_export;
  bool span_verify = false;
  std::size_t span_apsp = 500;
  span->add_option("--seed", span_instance_seed, "instance generator seed");
  span->add_option("--k", span_k, "stretch parameter: (2k-1)-spanner");
  span->add_option("--build-seeds", span_seeds, "spanner build seeds");
  span->add_option("--export", span_export, "write edge list (u v kind iteration)");
  span->add_flag("--verify", span_verify, "check the stretch bound via the APSP oracle");
  span->add_option("--apsp-limit", span_apsp, "max n accepted by the stretch oracle");

  // ---- advice ----
  auto* adv = app.add_subcommand("advice", "compute and inspect an advice map");
  InstanceFlags adv_inst;
  adv_inst.attach(adv);
  std::uint64_t adv_instance_seed = 1, adv_scheme_seed = 1;
  std::string adv_scheme = "basic-bfs", adv_out;
  adv->add_option("--seed", adv_instance_seed, "instance generator seed");
  adv->add_option("--scheme", adv_scheme, "basic-bfs | scheme-a | scheme-b | spanner:<k>");
  adv->add_option("--scheme-seed", adv_scheme_seed, "randomness for spanner builds");
  adv->add_option("--out", adv_out, "advice map file (node bit_len hex)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(gen_inst, gen_seed, gen_out, gen_sched);
    if (runc->parsed()) {
      ExperimentConfig cfg;
      if (!run_config.empty()) {
        std::ifstream is(run_config);
        if (!is) throw Error("cannot open " + run_config);
        cfg = config_from_json(json::parse(is));
      }
      if (run_config.empty() || runc->count("--protocol")) cfg.protocol = run_protocol;
      if (run_config.empty() || runc->count("--tau")) cfg.tau = run_tau;
      if (run_config.empty() || runc->count("--delay")) apply_delay_string(cfg, run_delay);
      if (run_config.empty() || runc->count("--wake")) cfg.wake = WakeSpec::parse(run_wake);
      if (run_config.empty() || runc->count("--seeds")) cfg.seeds = parse_seed_list(run_seeds);
      if (runc->count("--congest-limit") && run_congest >= 0) cfg.congest_limit = run_congest;
      if (run_config.empty() || runc->count("--strict")) cfg.strict = run_strict;
      if (run_config.empty() || runc->count("--dfs-c")) cfg.dfs_c = run_dfs_c;
      if (run_config.empty() || runc->count("--threads")) cfg.threads = run_threads;
      bool instance_flags_given = runc->count("--random") || runc->count("--family-g") ||
                                  runc->count("--graph");
      if (run_config.empty() || instance_flags_given) run_inst.apply(cfg);
      std::cerr << "protocol=" << cfg.protocol << " delay=" << delay_string(cfg)
                << " tau=" << cfg.tau << " runs=" << cfg.seeds.size() << '\n';
      return cmd_run(cfg, run_out, run_trace, run_dump, run_delay_depth);
    }
    if (sweep->parsed()) {
      ExperimentConfig base;
      base.protocol = sweep_protocol;
      base.tau = sweep_tau;
      apply_delay_string(base, sweep_delay);
      base.wake = WakeSpec::parse(sweep_wake);
      base.knowledge = parse_knowledge(sweep_knowledge);
      return cmd_sweep(base, sweep_sizes, sweep_seeds, sweep_edge_factor, sweep_out);
    }
    if (span->parsed()) {
      return cmd_spanner(span_inst, span_instance_seed, span_k, span_seeds, span_export,
                         span_verify, span_apsp);
    }
    if (adv->parsed()) {
      return cmd_advice(adv_inst, adv_instance_seed, adv_scheme, adv_scheme_seed, adv_out);
    }
  } catch (const ProtocolFault& e) {
    std::cerr << "protocol fault: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
