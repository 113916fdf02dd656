#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "wakeup/bits.hpp"
#include "wakeup/error.hpp"
#include "wakeup/graph.hpp"
#include "wakeup/rng.hpp"

namespace wakeup {

// ---------------------------------------------------------------------
// Message payloads. The simulator treats them as opaque; protocols attach
// an honest bit size to every send for CONGEST/LOCAL accounting.
// ---------------------------------------------------------------------

struct WakePayload {};

struct NextReplyPayload {
  std::uint32_t tag = 0;
  std::optional<Port> port_a;  // ports at the receiving parent
  std::optional<Port> port_b;
};

struct TokenPayload {
  std::uint64_t rank = 0;
  NodeId origin = 0;
  std::vector<NodeId> visited;  // append-on-visit, origin first
};

using Payload = std::variant<WakePayload, NextReplyPayload, TokenPayload>;

inline const char* payload_kind(const Payload& p) {
  switch (p.index()) {
    case 0: return "wake";
    case 1: return "next_reply";
    default: return "token";
  }
}

struct Message {
  Payload payload;
  int size_bits = 1;
  Port arrival_port = 0;  // port at the receiver, filled in on delivery
};

// ---------------------------------------------------------------------
// Adversarial delays. The delay of the k-th message on a directed channel
// is a pure function of (channel, k, adversary seed): the adversary fixes
// everything before the execution and never sees algorithm randomness.
// ---------------------------------------------------------------------

struct DelayPolicy {
  enum class Mode { Constant, Uniform, Table };

  std::uint64_t tau = 1;
  Mode mode = Mode::Constant;
  std::uint64_t constant = 1;       // Constant
  std::uint64_t adversary_seed = 0; // Uniform
  // Table: explicit per-(channel, msg_index) delays, missing entries
  // default to tau (the worst the adversary may do).
  std::map<std::tuple<NodeIndex, NodeIndex, std::uint64_t>, std::uint64_t> table;

  static DelayPolicy make_constant(std::uint64_t tau, std::uint64_t d) {
    if (tau < 1 || d < 1 || d > tau) throw ConfigError("delay policy: need 1 <= d <= tau");
    DelayPolicy p;
    p.tau = tau;
    p.mode = Mode::Constant;
    p.constant = d;
    return p;
  }

  static DelayPolicy make_uniform(std::uint64_t tau, std::uint64_t adversary_seed) {
    if (tau < 1) throw ConfigError("delay policy: tau must be >= 1");
    DelayPolicy p;
    p.tau = tau;
    p.mode = Mode::Uniform;
    p.adversary_seed = adversary_seed;
    return p;
  }

  static DelayPolicy make_table(std::uint64_t tau,
                                std::map<std::tuple<NodeIndex, NodeIndex, std::uint64_t>,
                                         std::uint64_t> table) {
    if (tau < 1) throw ConfigError("delay policy: tau must be >= 1");
    for (const auto& [key, d] : table) {
      if (d < 1 || d > tau) throw ConfigError("delay table: delays must lie in [1, tau]");
    }
    DelayPolicy p;
    p.tau = tau;
    p.mode = Mode::Table;
    p.table = std::move(table);
    return p;
  }

  // Table file: lines "u v msg_index delay".
  static DelayPolicy load_table(std::uint64_t tau, std::istream& is) {
    std::map<std::tuple<NodeIndex, NodeIndex, std::uint64_t>, std::uint64_t> table;
    NodeIndex u, v;
    std::uint64_t k, d;
    while (is >> u >> v >> k >> d) table[{u, v, k}] = d;
    return make_table(tau, std::move(table));
  }
};

// Raw delay in [1, tau] of the msg_index-th message sent on directed
// channel src->dst. Deterministic in (policy, channel, msg_index) only.
inline std::uint64_t assign_delay(const DelayPolicy& policy, NodeIndex src, NodeIndex dst,
                                  std::uint64_t msg_index) {
  switch (policy.mode) {
    case DelayPolicy::Mode::Constant:
      return policy.constant;
    case DelayPolicy::Mode::Uniform: {
      std::uint64_t h = mix64(policy.adversary_seed,
                              (static_cast<std::uint64_t>(src) << 32) | dst, msg_index);
      return 1 + h % policy.tau;
    }
    case DelayPolicy::Mode::Table: {
      auto it = policy.table.find({src, dst, msg_index});
      return it == policy.table.end() ? policy.tau : it->second;
    }
  }
  return policy.tau;
}

// ---------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------

struct RunMetrics {
  std::uint64_t messages_total = 0;
  std::uint64_t last_receipt_tick = 0;
  double time_units = 0.0;  // last_receipt_tick / tau
  int max_message_bits = 0;
  std::map<NodeIndex, std::uint64_t> per_node_forwards;  // distinct tokens forwarded
  std::uint64_t advice_max_bits = 0;
  double advice_avg_bits = 0.0;
  bool all_awake = false;
  // extras, not part of the JSON row schema
  std::uint64_t all_awake_tick = 0;  // tick the last node woke (0 if never)
  std::uint64_t congest_violations = 0;

  std::uint64_t max_forwards() const {
    std::uint64_t out = 0;
    for (const auto& [node, c] : per_node_forwards) out = std::max(out, c);
    return out;
  }
};

// ---------------------------------------------------------------------
// Node runtimes
// ---------------------------------------------------------------------

class Context;

// Protocol state machine. Local computation is instantaneous: handlers may
// send any number of messages, all stamped with the current tick.
class NodeRuntime {
 public:
  virtual ~NodeRuntime() = default;
  virtual void on_adversary_wake(Context& ctx) = 0;
  virtual void on_message(Context& ctx, const Message& msg) = 0;
};

// Built once per run; index is the node the runtime will drive.
using RuntimeFactory = std::function<std::unique_ptr<NodeRuntime>(const Network&, NodeIndex)>;

struct SimOptions {
  std::optional<int> congest_limit_bits;
  bool congest_fatal = false;
  std::ostream* trace = nullptr;  // one line per delivery: tick src dst kind bits
};

class Simulation;

// What a node may see and do. KT0 nodes get ports, their own degree and
// ID; neighbor IDs are gated behind the KT1 flag.
class Context {
 public:
  NodeIndex self() const { return self_; }
  NodeId id() const;
  std::uint32_t degree() const;
  Knowledge knowledge() const;
  std::uint32_t n() const;
  std::uint64_t tick() const;

  NodeId neighbor_id(Port port) const;   // KT1 only
  Port port_to_id(NodeId id) const;      // KT1 only

  const BitString* advice() const;       // nullptr when the run has none
  Rng& rng();

  void send(Port port, Payload payload, int size_bits);
  void record_token_forward(std::uint64_t rank, NodeId origin);

 private:
  friend class Simulation;
  Context(Simulation& sim, NodeIndex self) : sim_(sim), self_(self) {}
  Simulation& sim_;
  NodeIndex self_;
};

// ---------------------------------------------------------------------
// The simulator: a single-threaded deterministic event loop. Events are
// totally ordered by (tick, adversary-before-deliveries, sequence).
// ---------------------------------------------------------------------

class Simulation {
 public:
  Simulation(const Network& net, const RuntimeFactory& factory, WakeSchedule schedule,
             DelayPolicy delays, const std::vector<BitString>* advice, std::uint64_t rng_seed,
             SimOptions options = {})
      : net_(net),
        schedule_(std::move(schedule)),
        delays_(std::move(delays)),
        advice_(advice),
        rng_seed_(rng_seed),
        options_(options) {
    schedule_.validate(net.n());
    if (advice_ && advice_->size() != net.n()) {
      throw ConfigError("simulation: advice map must cover every node");
    }
    awake_.assign(net.n(), false);
    runtimes_.reserve(net.n());
    for (NodeIndex v = 0; v < net.n(); ++v) runtimes_.push_back(factory(net, v));
    node_rngs_.reserve(net.n());
    for (NodeIndex v = 0; v < net.n(); ++v) node_rngs_.emplace_back(mix64(rng_seed_, v, 0xa150));
  }

  RunMetrics run() {
    for (std::size_t i = 0; i < schedule_.entries.size(); ++i) {
      const auto& e = schedule_.entries[i];
      queue_.push(Event{e.tick, /*adversary=*/true, i, e.node, e.node, Message{}});
    }
    while (!queue_.empty()) {
      Event ev = queue_.top();
      queue_.pop();
      tick_ = ev.tick;
      if (ev.adversary) {
        if (!awake_[ev.dst]) {
          mark_awake(ev.dst);
          Context ctx(*this, ev.dst);
          runtimes_[ev.dst]->on_adversary_wake(ctx);
        }
        // waking an already-awake node is a no-op
        continue;
      }
      metrics_.last_receipt_tick = std::max(metrics_.last_receipt_tick, ev.tick);
      if (options_.trace) {
        *options_.trace << ev.tick << ' ' << ev.src << ' ' << ev.dst << ' '
                        << payload_kind(ev.msg.payload) << ' ' << ev.msg.size_bits << '\n';
      }
      if (!awake_[ev.dst]) mark_awake(ev.dst);
      Context ctx(*this, ev.dst);
      runtimes_[ev.dst]->on_message(ctx, ev.msg);
    }
    metrics_.time_units =
        static_cast<double>(metrics_.last_receipt_tick) / static_cast<double>(delays_.tau);
    metrics_.all_awake = awake_count_ == net_.n();
    if (advice_) {
      std::uint64_t total = 0;
      for (const auto& a : *advice_) {
        metrics_.advice_max_bits = std::max<std::uint64_t>(metrics_.advice_max_bits, a.size_bits());
        total += a.size_bits();
      }
      metrics_.advice_avg_bits = static_cast<double>(total) / static_cast<double>(net_.n());
    }
    for (const auto& [node, keys] : forwarded_tokens_) {
      metrics_.per_node_forwards[node] = keys.size();
    }
    return metrics_;
  }

  const Network& net() const { return net_; }
  NodeRuntime& runtime(NodeIndex v) { return *runtimes_[v]; }
  bool node_awake(NodeIndex v) const { return awake_[v]; }
  std::uint64_t now() const { return tick_; }

 private:
  friend class Context;

  struct Event {
    std::uint64_t tick;
    bool adversary;
    std::uint64_t seq;
    NodeIndex src;
    NodeIndex dst;
    Message msg;
  };

  struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
      // priority_queue is a max-heap; invert for (tick, kind, seq) pops.
      if (a.tick != b.tick) return a.tick > b.tick;
      if (a.adversary != b.adversary) return b.adversary;  // adversary wakes first
      return a.seq > b.seq;
    }
  };

  void mark_awake(NodeIndex v) {
    awake_[v] = true;  // never transitions back
    ++awake_count_;
    if (awake_count_ == net_.n()) metrics_.all_awake_tick = tick_;
  }

  void do_send(NodeIndex src, Port port, Payload payload, int size_bits) {
    if (size_bits < 1) throw ProtocolFault("message size must be at least 1 bit");
    NodeIndex dst = net_.port_target(src, port);  // ProtocolFault on bad port
    ++metrics_.messages_total;
    metrics_.max_message_bits = std::max(metrics_.max_message_bits, size_bits);
    if (options_.congest_limit_bits && size_bits > *options_.congest_limit_bits) {
      ++metrics_.congest_violations;
      if (options_.congest_fatal) {
        throw ProtocolFault("CONGEST violation: " + std::to_string(size_bits) + " bits from node " +
                            std::to_string(src));
      }
    }
    auto& ch = channels_[{src, dst}];
    std::uint64_t raw = assign_delay(delays_, src, dst, ch.sent);
    ++ch.sent;
    std::uint64_t deliver = std::max(tick_ + raw, ch.last_delivery);  // FIFO repair
    ch.last_delivery = deliver;
    Message msg{std::move(payload), size_bits, net_.port_of(dst, src)};
    queue_.push(Event{deliver, false, next_seq_++, src, dst, std::move(msg)});
  }

  const Network& net_;
  WakeSchedule schedule_;
  DelayPolicy delays_;
  const std::vector<BitString>* advice_;
  std::uint64_t rng_seed_;
  SimOptions options_;

  struct ChannelState {
    std::uint64_t sent = 0;
    std::uint64_t last_delivery = 0;
  };

  std::vector<std::unique_ptr<NodeRuntime>> runtimes_;
  std::vector<Rng> node_rngs_;
  std::vector<bool> awake_;
  std::size_t awake_count_ = 0;
  std::map<std::pair<NodeIndex, NodeIndex>, ChannelState> channels_;
  std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t tick_ = 0;
  RunMetrics metrics_;
  std::map<NodeIndex, std::set<std::pair<std::uint64_t, NodeId>>> forwarded_tokens_;
};

inline NodeId Context::id() const { return sim_.net_.id(self_); }
inline std::uint32_t Context::degree() const { return sim_.net_.degree(self_); }
inline Knowledge Context::knowledge() const { return sim_.net_.knowledge(); }
inline std::uint32_t Context::n() const { return static_cast<std::uint32_t>(sim_.net_.n()); }
inline std::uint64_t Context::tick() const { return sim_.tick_; }

inline NodeId Context::neighbor_id(Port port) const {
  if (knowledge() != Knowledge::KT1) {
    throw ProtocolFault("neighbor IDs are only available under KT1");
  }
  return sim_.net_.id(sim_.net_.port_target(self_, port));
}

inline Port Context::port_to_id(NodeId id) const {
  if (knowledge() != Knowledge::KT1) {
    throw ProtocolFault("neighbor IDs are only available under KT1");
  }
  for (Port p = 1; p <= degree(); ++p) {
    if (sim_.net_.id(sim_.net_.port_target(self_, p)) == id) return p;
  }
  throw ProtocolFault("port_to_id: " + std::to_string(id) + " is not a neighbor");
}

inline const BitString* Context::advice() const {
  return sim_.advice_ ? &(*sim_.advice_)[self_] : nullptr;
}

inline Rng& Context::rng() { return sim_.node_rngs_[self_]; }

inline void Context::send(Port port, Payload payload, int size_bits) {
  sim_.do_send(self_, port, std::move(payload), size_bits);
}

inline void Context::record_token_forward(std::uint64_t rank, NodeId origin) {
  sim_.forwarded_tokens_[self_].insert({rank, origin});
}

// One-shot convenience wrapper.
inline RunMetrics run(const Network& net, const RuntimeFactory& factory, WakeSchedule schedule,
                      DelayPolicy delays, const std::vector<BitString>* advice,
                      std::uint64_t rng_seed, SimOptions options = {}) {
  Simulation sim(net, factory, std::move(schedule), std::move(delays), advice, rng_seed, options);
  return sim.run();
}

}  // namespace wakeup
