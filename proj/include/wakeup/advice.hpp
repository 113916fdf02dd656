#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wakeup/bits.hpp"
#include "wakeup/error.hpp"
#include "wakeup/graph.hpp"
#include "wakeup/sim.hpp"
#include "wakeup/spanner.hpp"

namespace wakeup {

// ---------------------------------------------------------------------
// Advice container. Computed from the network alone: oracles never see
// the wake schedule.
// ---------------------------------------------------------------------

struct AdviceMap {
  std::vector<BitString> bits;

  std::uint64_t max_bits() const {
    std::uint64_t out = 0;
    for (const auto& b : bits) out = std::max<std::uint64_t>(out, b.size_bits());
    return out;
  }

  std::uint64_t total_bits() const {
    std::uint64_t out = 0;
    for (const auto& b : bits) out += b.size_bits();
    return out;
  }

  double avg_bits() const {
    return bits.empty() ? 0.0 : static_cast<double>(total_bits()) / static_cast<double>(bits.size());
  }

  // One line per node: "node_index bit_len hex".
  void save(std::ostream& os) const {
    for (std::size_t v = 0; v < bits.size(); ++v) {
      os << v << ' ' << bits[v].size_bits() << ' '
         << (bits[v].empty() ? "-" : bits[v].to_hex()) << '\n';
    }
  }

  void save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    save(os);
  }

  static AdviceMap load(std::istream& is) {
    AdviceMap map;
    std::size_t idx, len;
    std::string hex;
    while (is >> idx >> len >> hex) {
      if (idx != map.bits.size()) throw Error("advice file: node lines out of order");
      map.bits.push_back(hex == "-" ? BitString{} : BitString::from_hex(hex, len));
    }
    return map;
  }

  static AdviceMap load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open " + path);
    return load(is);
  }
};

// Width of a fixed-size port field at a node of the given degree. Ports are
// stored as port-1, so deg values fit in bit_width(deg-1) bits.
inline int port_field_width(std::uint32_t deg) {
  return deg <= 1 ? 1 : std::bit_width(deg - 1u);
}

// ---------------------------------------------------------------------
// Child encoding (CEN). One record per (node, instance tag); the fields of
// a record may be filled by different invocations (a node is the parent of
// one instance and a child of another).
// ---------------------------------------------------------------------

struct CenRecord {
  std::uint32_t tag = 0;
  std::optional<Port> parent_port;  // p: port at the owner, towards the parent
  std::optional<Port> first_child;  // fc: port at the owner, towards child u_1
  std::optional<Port> next_a;       // next: pair of ports at the owner's PARENT
  std::optional<Port> next_b;
};

using CenRecordMap = std::vector<std::map<std::uint32_t, CenRecord>>;

// CEN(v, C): fc_v = port_v^-1(u_1); p_{u_i} = port_{u_i}^-1(v); and
// next_{u_i} = <port_v^-1(u_{2i}), port_v^-1(u_{2i+1})> for
// i <= ceil((|C|-1)/2), missing children leaving slots empty. The
// enumeration order of C is the caller's choice and is part of the scheme.
inline void cen_encode(const Network& net, NodeIndex v, const std::vector<NodeIndex>& children,
                       std::uint32_t tag, CenRecordMap& records) {
  for (NodeIndex u : children) {
    if (!net.adjacent(v, u)) {
      throw Error("cen_encode: child " + std::to_string(u) + " is not a neighbor of " +
                  std::to_string(v));
    }
  }
  auto rec_of = [&](NodeIndex w) -> CenRecord& {
    auto [it, fresh] = records[w].try_emplace(tag, CenRecord{tag, {}, {}, {}, {}});
    return it->second;
  };

  CenRecord& vr = rec_of(v);
  if (!children.empty()) {
    if (vr.first_child) throw Error("cen_encode: fc already assigned at node " + std::to_string(v));
    vr.first_child = net.port_of(v, children[0]);
  }

  const std::size_t c = children.size();
  for (std::size_t i = 1; i <= c; ++i) {
    CenRecord& ur = rec_of(children[i - 1]);
    if (ur.parent_port) {
      throw Error("cen_encode: parent port already assigned at node " +
                  std::to_string(children[i - 1]));
    }
    ur.parent_port = net.port_of(children[i - 1], v);
    if (i <= c / 2) {  // == ceil((c-1)/2): the child has next siblings to name
      if (2 * i <= c) ur.next_a = net.port_of(v, children[2 * i - 1]);
      if (2 * i + 1 <= c) ur.next_b = net.port_of(v, children[2 * i]);
    }
  }
}

// Record wire format, per node: repeat { 1-bit continue, record } 0-bit.
// record = nat(tag), then the p / fc / next fields in order, each with a
// 2-bit kind header (00 empty, 01 port, 10 pair). p and fc are ports at the
// owner and use a fixed width derived from the owner's degree; next holds
// ports at the parent, whose degree the owner does not know, so those are
// self-delimiting nats. Pair slots carry a presence bit each.
inline void serialize_cen_records(const Network& net, NodeIndex v,
                                  const std::map<std::uint32_t, CenRecord>& recs, BitString& out) {
  const int w = port_field_width(net.degree(v));
  for (const auto& [tag, rec] : recs) {
    out.push_bit(true);
    out.push_nat(tag);
    auto own_port_field = [&](const std::optional<Port>& p) {
      if (p) {
        out.push_bits(0b01, 2);
        out.push_bits(*p - 1, w);
      } else {
        out.push_bits(0b00, 2);
      }
    };
    own_port_field(rec.parent_port);
    own_port_field(rec.first_child);
    if (rec.next_a || rec.next_b) {
      out.push_bits(0b10, 2);
      for (const auto& slot : {rec.next_a, rec.next_b}) {
        if (slot) {
          out.push_bit(true);
          out.push_nat(*slot - 1);
        } else {
          out.push_bit(false);
        }
      }
    } else {
      out.push_bits(0b00, 2);
    }
  }
  out.push_bit(false);
}

inline AdviceMap serialize_cen_records(const Network& net, const CenRecordMap& records) {
  AdviceMap map;
  map.bits.resize(net.n());
  for (NodeIndex v = 0; v < net.n(); ++v) {
    serialize_cen_records(net, v, records[v], map.bits[v]);
  }
  return map;
}

inline std::vector<CenRecord> parse_cen_records(const BitString& advice, std::uint32_t degree,
                                                NodeIndex node) {
  std::vector<CenRecord> recs;
  try {
    BitReader r(advice);
    const int w = port_field_width(degree);
    while (r.read_bit()) {
      CenRecord rec;
      rec.tag = static_cast<std::uint32_t>(r.read_nat());
      auto own_port_field = [&]() -> std::optional<Port> {
        const auto kind = r.read_bits(2);
        if (kind == 0b00) return std::nullopt;
        if (kind != 0b01) throw DecodeFault("unexpected field kind");
        Port p = static_cast<Port>(r.read_bits(w)) + 1;
        if (p > degree) throw DecodeFault("port out of range");
        return p;
      };
      rec.parent_port = own_port_field();
      rec.first_child = own_port_field();
      const auto kind = r.read_bits(2);
      if (kind == 0b10) {
        if (r.read_bit()) rec.next_a = static_cast<Port>(r.read_nat()) + 1;
        if (r.read_bit()) rec.next_b = static_cast<Port>(r.read_nat()) + 1;
      } else if (kind != 0b00) {
        throw DecodeFault("unexpected field kind");
      }
      recs.push_back(rec);
    }
    if (!r.at_end()) throw DecodeFault("trailing bits");
  } catch (const DecodeFault& e) {
    throw DecodeFault("node " + std::to_string(node) + ": malformed CEN advice (" + e.what() + ")");
  }
  return recs;
}

// ---------------------------------------------------------------------
// Scheme identifiers
// ---------------------------------------------------------------------

struct SchemeId {
  enum class Kind { BasicBfs, SchemeA, SchemeB, Spanner };
  Kind kind = Kind::BasicBfs;
  std::uint32_t k = 0;  // Spanner only

  static SchemeId parse(const std::string& s) {
    if (s == "basic-bfs") return {Kind::BasicBfs, 0};
    if (s == "scheme-a") return {Kind::SchemeA, 0};
    if (s == "scheme-b") return {Kind::SchemeB, 0};
    if (s.rfind("spanner:", 0) == 0) {
      std::uint32_t k = 0;
      try {
        k = static_cast<std::uint32_t>(std::stoul(s.substr(8)));
      } catch (...) {
        throw ConfigError("bad spanner scheme id: " + s);
      }
      if (k < 1) throw ConfigError("spanner scheme needs k >= 1");
      return {Kind::Spanner, k};
    }
    throw ConfigError("unknown scheme id: " + s);
  }

  std::string str() const {
    switch (kind) {
      case Kind::BasicBfs: return "basic-bfs";
      case Kind::SchemeA: return "scheme-a";
      case Kind::SchemeB: return "scheme-b";
      case Kind::Spanner: return "spanner:" + std::to_string(k);
    }
    return "?";
  }
};

// ---------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------

namespace detail {

inline NodeIndex smallest_id_node(const Network& net) {
  NodeIndex best = 0;
  for (NodeIndex v = 1; v < net.n(); ++v) {
    if (net.id(v) < net.id(best)) best = v;
  }
  return best;
}

// Tree-incident ports of v, ascending.
inline std::vector<Port> tree_ports(const Network& net, const BfsTree& tree,
                                    const std::vector<std::vector<NodeIndex>>& children,
                                    NodeIndex v) {
  std::vector<Port> ports;
  if (tree.parent[v] >= 0) ports.push_back(net.port_of(v, static_cast<NodeIndex>(tree.parent[v])));
  for (NodeIndex u : children[v]) ports.push_back(net.port_of(v, u));
  std::sort(ports.begin(), ports.end());
  return ports;
}

}  // namespace detail

// Basic scheme: every node learns n plus its BFS-tree ports, either as an
// explicit port list (tree degree <= n/ln n) or as an n-bit port bitmap.
inline AdviceMap oracle_basic_bfs(const Network& net) {
  if (!is_connected(net)) throw Error("oracle_basic_bfs: graph must be connected");
  const std::size_t n = net.n();
  BfsTree tree = bfs_tree(net, detail::smallest_id_node(net));
  auto children = tree.children();
  const double threshold = static_cast<double>(n) / std::log(static_cast<double>(std::max<std::size_t>(n, 2)));

  AdviceMap map;
  map.bits.resize(n);
  for (NodeIndex v = 0; v < n; ++v) {
    auto ports = detail::tree_ports(net, tree, children, v);
    BitString& a = map.bits[v];
    a.push_nat(n);
    if (static_cast<double>(ports.size()) <= threshold) {
      a.push_bit(false);
      a.push_nat(ports.size());
      const int w = port_field_width(net.degree(v));
      for (Port p : ports) a.push_bits(p - 1, w);
    } else {
      a.push_bit(true);
      std::vector<bool> bitmap(n, false);
      for (Port p : ports) bitmap[p - 1] = true;
      for (bool b : bitmap) a.push_bit(b);
    }
  }
  return map;
}

// sqrt(n) scheme: low tree-degree nodes get their tree-port list, high ones
// a single 1 bit and broadcast over every incident edge.
inline AdviceMap oracle_scheme_a(const Network& net) {
  if (!is_connected(net)) throw Error("oracle_scheme_a: graph must be connected");
  const std::size_t n = net.n();
  BfsTree tree = bfs_tree(net, detail::smallest_id_node(net));
  auto children = tree.children();

  AdviceMap map;
  map.bits.resize(n);
  for (NodeIndex v = 0; v < n; ++v) {
    auto ports = detail::tree_ports(net, tree, children, v);
    BitString& a = map.bits[v];
    if (ports.size() * ports.size() <= n) {  // deg_T(v) <= sqrt(n)
      a.push_bit(false);
      a.push_nat(ports.size());
      const int w = port_field_width(net.degree(v));
      for (Port p : ports) a.push_bits(p - 1, w);
    } else {
      a.push_bit(true);
    }
  }
  return map;
}

// CEN scheme: one child-encoding instance per BFS-tree node with children.
// The tree's parent/child roles already disambiguate every record, so all
// instances share tag 0.
inline AdviceMap oracle_scheme_b(const Network& net) {
  if (!is_connected(net)) throw Error("oracle_scheme_b: graph must be connected");
  BfsTree tree = bfs_tree(net, detail::smallest_id_node(net));
  auto children = tree.children();

  CenRecordMap records(net.n());
  for (NodeIndex v = 0; v < net.n(); ++v) {
    if (children[v].empty()) continue;
    std::vector<NodeIndex> c = children[v];
    std::sort(c.begin(), c.end(), [&](NodeIndex a, NodeIndex b) { return net.id(a) < net.id(b); });
    cen_encode(net, v, c, /*tag=*/0, records);
  }
  return serialize_cen_records(net, records);
}

struct SpannerAdvice {
  AdviceMap advice;
  SpannerBuild build;
  std::uint32_t instance_count = 0;
};

// Spanner scheme: encode every intra-cluster parent->children set and every
// incoming-inter-cluster edge set as its own CEN instance. Tags are
// consecutive integers in (parent id, intra-before-inter) order, carried in
// replies so nodes participating in many instances route them correctly.
inline SpannerAdvice oracle_spanner_scheme(const Network& net, std::uint32_t k,
                                           std::uint64_t seed) {
  if (!is_connected(net)) throw Error("oracle_spanner_scheme: graph must be connected");
  SpannerAdvice out;
  out.build = build_spanner(net, k, seed);

  std::vector<std::set<NodeIndex>> intra_children(net.n());
  std::vector<std::set<NodeIndex>> inter_children(net.n());
  for (const auto& e : out.build.edges) {
    if (e.kind == SpannerEdgeKind::IntraCluster) {
      intra_children[e.v].insert(e.u);
    } else {
      inter_children[e.v].insert(e.u);
    }
  }

  std::vector<NodeIndex> by_id(net.n());
  for (NodeIndex v = 0; v < net.n(); ++v) by_id[v] = v;
  std::sort(by_id.begin(), by_id.end(),
            [&](NodeIndex a, NodeIndex b) { return net.id(a) < net.id(b); });

  CenRecordMap records(net.n());
  std::uint32_t tag = 0;
  for (NodeIndex v : by_id) {
    for (const auto* group : {&intra_children[v], &inter_children[v]}) {
      if (group->empty()) continue;
      std::vector<NodeIndex> c(group->begin(), group->end());
      std::sort(c.begin(), c.end(),
                [&](NodeIndex a, NodeIndex b) { return net.id(a) < net.id(b); });
      cen_encode(net, v, c, tag++, records);
    }
  }
  out.instance_count = tag;
  out.advice = serialize_cen_records(net, records);
  return out;
}

inline AdviceMap compute_advice(const Network& net, const SchemeId& scheme, std::uint64_t seed) {
  switch (scheme.kind) {
    case SchemeId::Kind::BasicBfs: return oracle_basic_bfs(net);
    case SchemeId::Kind::SchemeA: return oracle_scheme_a(net);
    case SchemeId::Kind::SchemeB: return oracle_scheme_b(net);
    case SchemeId::Kind::Spanner: return oracle_spanner_scheme(net, scheme.k, seed).advice;
  }
  throw ConfigError("compute_advice: bad scheme");
}

// ---------------------------------------------------------------------
// Decoders
// ---------------------------------------------------------------------

inline constexpr int kWakeBits = 1;

inline int next_reply_bits(std::uint32_t tag, const std::optional<Port>& a,
                           const std::optional<Port>& b) {
  int bits = 2 + nat_bits(tag) + 2;  // kind header + tag + two presence bits
  if (a) bits += nat_bits(*a - 1);
  if (b) bits += nat_bits(*b - 1);
  return bits;
}

// basic-bfs / scheme-a: wake every advice-listed port once, on first wake.
class TreeAdviceRuntime : public NodeRuntime {
 public:
  explicit TreeAdviceRuntime(SchemeId::Kind kind) : kind_(kind) {}

  void on_adversary_wake(Context& ctx) override { activate(ctx); }

  void on_message(Context& ctx, const Message&) override { activate(ctx); }

 private:
  void activate(Context& ctx) {
    if (activated_) return;
    activated_ = true;
    for (Port p : decode_ports(ctx)) ctx.send(p, WakePayload{}, kWakeBits);
  }

  std::vector<Port> decode_ports(Context& ctx) const {
    const BitString* advice = ctx.advice();
    if (!advice) throw DecodeFault("node " + std::to_string(ctx.self()) + ": advice missing");
    std::vector<Port> ports;
    try {
      BitReader r(*advice);
      const std::uint32_t deg = ctx.degree();
      if (kind_ == SchemeId::Kind::BasicBfs) {
        const std::uint64_t n = r.read_nat();
        if (r.read_bit()) {
          // high tree degree: n-bit port bitmap
          for (std::uint64_t i = 0; i < n; ++i) {
            if (r.read_bit()) {
              if (i >= deg) throw DecodeFault("bitmap bit beyond degree");
              ports.push_back(static_cast<Port>(i + 1));
            }
          }
        } else {
          read_port_list(r, deg, ports);
        }
      } else {  // scheme-a
        if (r.read_bit()) {
          for (Port p = 1; p <= deg; ++p) ports.push_back(p);  // broadcast
        } else {
          read_port_list(r, deg, ports);
        }
      }
      if (!r.at_end()) throw DecodeFault("trailing bits");
    } catch (const DecodeFault& e) {
      throw DecodeFault("node " + std::to_string(ctx.self()) + ": malformed advice (" +
                        std::string(e.what()) + ")");
    }
    return ports;
  }

  static void read_port_list(BitReader& r, std::uint32_t deg, std::vector<Port>& ports) {
    const std::uint64_t count = r.read_nat();
    const int w = port_field_width(deg);
    for (std::uint64_t i = 0; i < count; ++i) {
      Port p = static_cast<Port>(r.read_bits(w)) + 1;
      if (p > deg) throw DecodeFault("port out of range");
      ports.push_back(p);
    }
  }

  SchemeId::Kind kind_;
  bool activated_ = false;
};

// scheme-b / spanner decoder. Per record: a node wakes its parent through p
// (suppressed when that parent has already messaged us) and requests child
// discovery through fc. A wake arriving on a record's p port is answered
// with NEXT_REPLY(tag, next); replies fan out wake requests to the two
// named ports. Each port emits at most one WAKE over the node's lifetime.
class CenRuntime : public NodeRuntime {
 public:
  struct Discovery {
    Port port;
    std::uint64_t tick;
  };

  void on_adversary_wake(Context& ctx) override { activate(ctx); }

  void on_message(Context& ctx, const Message& msg) override {
    ensure_parsed(ctx);
    received_from_[msg.arrival_port - 1] = true;
    activate(ctx);
    if (std::holds_alternative<WakePayload>(msg.payload)) {
      for (auto& rec : recs_) {
        if (rec.record.parent_port == msg.arrival_port && !rec.replied) {
          rec.replied = true;
          ctx.send(msg.arrival_port,
                   NextReplyPayload{rec.record.tag, rec.record.next_a, rec.record.next_b},
                   next_reply_bits(rec.record.tag, rec.record.next_a, rec.record.next_b));
        }
      }
    } else if (const auto* reply = std::get_if<NextReplyPayload>(&msg.payload)) {
      if (!parent_tags_.count(reply->tag)) {
        throw DecodeFault("node " + std::to_string(ctx.self()) + ": NEXT_REPLY for unknown tag " +
                          std::to_string(reply->tag));
      }
      for (const auto& port : {reply->port_a, reply->port_b}) {
        if (!port) continue;
        note_known(ctx, *port);
        send_wake(ctx, *port);
      }
    } else {
      throw ProtocolFault("node " + std::to_string(ctx.self()) +
                          ": unexpected token message under an advice scheme");
    }
  }

  // Ports this node has learned lead to its incident tree/spanner edges,
  // with the tick each one became known. Advice-resident ports (p, fc) are
  // stamped with the activation tick.
  const std::vector<Discovery>& known_ports() const { return known_; }

  std::set<Port> known_port_set() const {
    std::set<Port> out;
    for (const auto& d : known_) out.insert(d.port);
    return out;
  }

 private:
  struct RecState {
    CenRecord record;
    bool replied = false;
  };

  void ensure_parsed(Context& ctx) {
    if (parsed_) return;
    parsed_ = true;
    const BitString* advice = ctx.advice();
    if (!advice) throw DecodeFault("node " + std::to_string(ctx.self()) + ": advice missing");
    for (const CenRecord& rec : parse_cen_records(*advice, ctx.degree(), ctx.self())) {
      recs_.push_back({rec, false});
      if (rec.first_child) parent_tags_.insert(rec.tag);
    }
    wake_sent_.assign(ctx.degree(), false);
    received_from_.assign(ctx.degree(), false);
  }

  void activate(Context& ctx) {
    ensure_parsed(ctx);
    if (activated_) return;
    activated_ = true;
    for (const auto& rec : recs_) {
      if (rec.record.parent_port) note_known(ctx, *rec.record.parent_port);
      if (rec.record.first_child) note_known(ctx, *rec.record.first_child);
    }
    for (const auto& rec : recs_) {  // wake parents, unless they woke us
      if (rec.record.parent_port && !received_from_[*rec.record.parent_port - 1]) {
        send_wake(ctx, *rec.record.parent_port);
      }
    }
    for (const auto& rec : recs_) {  // start child discovery
      if (rec.record.first_child) send_wake(ctx, *rec.record.first_child);
    }
  }

  void send_wake(Context& ctx, Port port) {
    if (port < 1 || port > wake_sent_.size()) {
      throw DecodeFault("node " + std::to_string(ctx.self()) + ": advice names invalid port " +
                        std::to_string(port));
    }
    if (wake_sent_[port - 1]) return;
    wake_sent_[port - 1] = true;
    ctx.send(port, WakePayload{}, kWakeBits);
  }

  void note_known(Context& ctx, Port port) {
    if (!known_set_.insert(port).second) return;
    known_.push_back({port, ctx.tick()});
  }

  bool parsed_ = false;
  bool activated_ = false;
  std::vector<RecState> recs_;
  std::set<std::uint32_t> parent_tags_;
  std::vector<bool> wake_sent_;
  std::vector<bool> received_from_;
  std::vector<Discovery> known_;
  std::set<Port> known_set_;
};

inline RuntimeFactory advice_runtime_factory(const SchemeId& scheme) {
  switch (scheme.kind) {
    case SchemeId::Kind::BasicBfs:
    case SchemeId::Kind::SchemeA: {
      auto kind = scheme.kind;
      return [kind](const Network&, NodeIndex) {
        return std::make_unique<TreeAdviceRuntime>(kind);
      };
    }
    case SchemeId::Kind::SchemeB:
    case SchemeId::Kind::Spanner:
      return [](const Network&, NodeIndex) { return std::make_unique<CenRuntime>(); };
  }
  throw ConfigError("advice_runtime_factory: bad scheme");
}

}  // namespace wakeup
