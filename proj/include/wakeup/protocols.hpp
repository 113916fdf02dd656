#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "wakeup/advice.hpp"
#include "wakeup/error.hpp"
#include "wakeup/graph.hpp"
#include "wakeup/sim.hpp"

namespace wakeup {

// ---------------------------------------------------------------------
// Flooding: on first awakening, broadcast one wake message per incident
// port, exactly once per port per lifetime.
// ---------------------------------------------------------------------

class FloodingRuntime : public NodeRuntime {
 public:
  void on_adversary_wake(Context& ctx) override { activate(ctx); }
  void on_message(Context& ctx, const Message&) override { activate(ctx); }

 private:
  void activate(Context& ctx) {
    if (activated_) return;
    activated_ = true;
    for (Port p = 1; p <= ctx.degree(); ++p) ctx.send(p, WakePayload{}, kWakeBits);
  }
  bool activated_ = false;
};

inline RuntimeFactory flooding_runtime() {
  return [](const Network&, NodeIndex) { return std::make_unique<FloodingRuntime>(); };
}

// ---------------------------------------------------------------------
// Randomized DFS-rank wake-up for KT1 LOCAL. Adversary-woken nodes draw a
// rank from [n^c] and launch a DFS token carrying (rank, origin id, visited
// id list). A token beating the receiver's best-seen (rank, id) pair is
// forwarded depth-first (smallest unvisited neighbor id, backtracking to
// the recorded DFS parent); anything else is discarded on arrival, stale
// backtracks included.
// ---------------------------------------------------------------------

// Cross-checks structural properties while a run executes: token paths
// must be trees, so a fresh visit may never hit a node already on the
// token's list and every token edge is used at most twice.
class TokenTreeAudit {
 public:
  void on_traverse(std::uint64_t rank, NodeId origin, NodeId from, NodeId to) {
    auto key = std::tuple{rank, origin, std::min(from, to), std::max(from, to)};
    if (++edge_uses_[key] > 2) {
      ++violations_;
      note("token (" + std::to_string(rank) + "," + std::to_string(origin) + ") used edge " +
           std::to_string(from) + "-" + std::to_string(to) + " more than twice");
    }
  }

  void on_violation(const std::string& what) {
    ++violations_;
    note(what);
  }

  std::uint64_t violations() const { return violations_; }
  const std::vector<std::string>& reports() const { return reports_; }

 private:
  void note(const std::string& what) {
    if (reports_.size() < 16) reports_.push_back(what);
  }

  std::map<std::tuple<std::uint64_t, NodeId, NodeId, NodeId>, int> edge_uses_;
  std::uint64_t violations_ = 0;
  std::vector<std::string> reports_;
};

struct DfsRankOptions {
  int c = 4;  // rank range exponent: ranks are uniform in [1, n^c]
  std::shared_ptr<TokenTreeAudit> audit;  // optional, shared across one run
  bool fault_on_violation = true;
};

class DfsRankRuntime : public NodeRuntime {
 public:
  explicit DfsRankRuntime(DfsRankOptions opts) : opts_(std::move(opts)) {}

  void on_adversary_wake(Context& ctx) override {
    if (ctx.knowledge() != Knowledge::KT1) {
      throw ConfigError("dfs-rank requires the KT1 knowledge model");
    }
    // Only adversary-woken nodes create a rank and start a traversal.
    const std::uint64_t range = rank_range(ctx.n(), opts_.c);
    const std::uint64_t rank = ctx.rng().between(1, range);
    best_ = {rank, ctx.id()};
    TokenPayload token{rank, ctx.id(), {ctx.id()}};
    advance(ctx, std::move(token));
  }

  void on_message(Context& ctx, const Message& msg) override {
    const auto* token = std::get_if<TokenPayload>(&msg.payload);
    if (!token) {
      throw ProtocolFault("dfs-rank: unexpected non-token message at node " +
                          std::to_string(ctx.self()));
    }
    const std::pair<std::uint64_t, NodeId> key{token->rank, token->origin};
    if (key < best_) return;  // case (b): discard, stale backtracks included

    if (key > best_) {
      // case (a): fresh visit
      if (std::find(token->visited.begin(), token->visited.end(), ctx.id()) !=
          token->visited.end()) {
        structural_violation("token revisited node id " + std::to_string(ctx.id()));
        return;
      }
      best_ = key;
      dfs_parent_[key] = ctx.neighbor_id(msg.arrival_port);
      TokenPayload forwarded = *token;
      forwarded.visited.push_back(ctx.id());
      advance(ctx, std::move(forwarded));
      return;
    }

    // key == best_: our own traversal returning from a child
    if (std::find(token->visited.begin(), token->visited.end(), ctx.id()) ==
        token->visited.end()) {
      structural_violation("backtrack reached node id " + std::to_string(ctx.id()) +
                           " that never accepted the token");
      return;
    }
    advance(ctx, TokenPayload{*token});
  }

  std::pair<std::uint64_t, NodeId> best() const { return best_; }

  static std::uint64_t rank_range(std::uint64_t n, int c) {
    std::uint64_t range = 1;
    for (int i = 0; i < c; ++i) {
      if (range > (1ull << 62) / std::max<std::uint64_t>(n, 2)) return 1ull << 62;
      range *= n;
    }
    return std::max<std::uint64_t>(range, 2);
  }

 private:
  // Forward to the smallest-id unvisited neighbor, else backtrack to the
  // DFS parent of this traversal; the origin retires the token instead.
  void advance(Context& ctx, TokenPayload token) {
    const std::pair<std::uint64_t, NodeId> key{token.rank, token.origin};
    std::unordered_set<NodeId> seen(token.visited.begin(), token.visited.end());
    std::optional<NodeId> next;
    for (Port p = 1; p <= ctx.degree(); ++p) {
      NodeId nid = ctx.neighbor_id(p);
      if (seen.count(nid)) continue;
      if (!next || nid < *next) next = nid;
    }
    NodeId target;
    if (next) {
      target = *next;
    } else {
      auto it = dfs_parent_.find(key);
      if (it == dfs_parent_.end()) return;  // origin with nothing left: retire
      target = it->second;
    }
    ctx.record_token_forward(token.rank, token.origin);
    if (opts_.audit) opts_.audit->on_traverse(token.rank, token.origin, ctx.id(), target);
    const int bits = token_bits(ctx.n(), opts_.c, token.visited.size());
    ctx.send(ctx.port_to_id(target), std::move(token), bits);
  }

  void structural_violation(const std::string& what) {
    if (opts_.audit) opts_.audit->on_violation(what);
    if (opts_.fault_on_violation) throw ProtocolFault("dfs-rank: " + what);
  }

  static int token_bits(std::uint64_t n, int c, std::size_t visited) {
    const int id_bits = std::max(1, static_cast<int>(std::bit_width(std::max<std::uint64_t>(n, 2) - 1)));
    const int rank_bits = static_cast<int>(std::bit_width(rank_range(n, c)));
    return 2 + rank_bits + id_bits * static_cast<int>(visited + 1);
  }

  DfsRankOptions opts_;
  std::pair<std::uint64_t, NodeId> best_{0, 0};
  std::map<std::pair<std::uint64_t, NodeId>, NodeId> dfs_parent_;
};

inline RuntimeFactory dfs_rank_runtime(DfsRankOptions opts = {}) {
  return [opts](const Network&, NodeIndex) { return std::make_unique<DfsRankRuntime>(opts); };
}

// ---------------------------------------------------------------------
// Protocol dispatch by string id: "flooding", "dfs-rank",
// "advice:<scheme>".
// ---------------------------------------------------------------------

struct ProtocolId {
  enum class Kind { Flooding, DfsRank, Advice };
  Kind kind = Kind::Flooding;
  SchemeId scheme;  // Advice only

  static ProtocolId parse(const std::string& s) {
    if (s == "flooding") return {Kind::Flooding, {}};
    if (s == "dfs-rank") return {Kind::DfsRank, {}};
    if (s.rfind("advice:", 0) == 0) return {Kind::Advice, SchemeId::parse(s.substr(7))};
    throw ConfigError("unknown protocol id: " + s);
  }

  std::string str() const {
    switch (kind) {
      case Kind::Flooding: return "flooding";
      case Kind::DfsRank: return "dfs-rank";
      case Kind::Advice: return "advice:" + scheme.str();
    }
    return "?";
  }

  bool needs_advice() const { return kind == Kind::Advice; }
  bool needs_kt1() const { return kind == Kind::DfsRank; }
};

inline RuntimeFactory make_runtime_factory(const ProtocolId& protocol, DfsRankOptions dfs = {}) {
  switch (protocol.kind) {
    case ProtocolId::Kind::Flooding: return flooding_runtime();
    case ProtocolId::Kind::DfsRank: return dfs_rank_runtime(dfs);
    case ProtocolId::Kind::Advice: return advice_runtime_factory(protocol.scheme);
  }
  throw ConfigError("make_runtime_factory: bad protocol");
}

}  // namespace wakeup
