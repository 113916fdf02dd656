#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <fstream>
#include <limits>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wakeup/error.hpp"
#include "wakeup/rng.hpp"

namespace wakeup {

// Nodes are addressed by a dense 0-based index; their protocol-visible
// integer IDs live in Network::id(). Ports are 1-based, matching the
// port_v : [deg(v)] -> N_v convention.
using NodeIndex = std::uint32_t;
using NodeId = std::uint64_t;
using Port = std::uint32_t;

inline constexpr std::uint32_t kUnreachable = std::numeric_limits<std::uint32_t>::max();

enum class Knowledge { KT0, KT1 };

inline std::string to_string(Knowledge k) { return k == Knowledge::KT0 ? "KT0" : "KT1"; }

struct WakeEntry {
  NodeIndex node;
  std::uint64_t tick;
};

// Fixed before execution starts; the adversary is oblivious.
struct WakeSchedule {
  std::vector<WakeEntry> entries;

  void validate(std::size_t n) const {
    if (entries.empty()) throw ConfigError("wake schedule: adversary must wake at least one node");
    for (const auto& e : entries) {
      if (e.node >= n) throw ConfigError("wake schedule: node index out of range");
    }
  }

  std::vector<NodeIndex> nodes() const {
    std::vector<NodeIndex> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.node);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

// Undirected simple graph plus per-node bijective port mappings, protocol
// IDs and the knowledge-model flag.
class Network {
 public:
  // port_rows[v][p-1] = neighbor index reached through port p at v.
  static Network build(std::vector<std::vector<NodeIndex>> port_rows,
                       std::vector<NodeId> ids, Knowledge knowledge) {
    Network net;
    net.ports_ = std::move(port_rows);
    net.ids_ = std::move(ids);
    net.knowledge_ = knowledge;
    net.finish_and_validate();
    return net;
  }

  std::size_t n() const { return ports_.size(); }
  std::size_t m() const { return m_; }
  Knowledge knowledge() const { return knowledge_; }
  void set_knowledge(Knowledge k) { knowledge_ = k; }

  std::uint32_t degree(NodeIndex v) const { return static_cast<std::uint32_t>(ports_[v].size()); }
  NodeId id(NodeIndex v) const { return ids_[v]; }

  // Neighbors in port order: element p-1 is reached through port p.
  std::span<const NodeIndex> neighbors(NodeIndex v) const { return ports_[v]; }

  NodeIndex port_target(NodeIndex v, Port port) const {
    if (port < 1 || port > ports_[v].size()) {
      throw ProtocolFault("invalid port " + std::to_string(port) + " at node " + std::to_string(v));
    }
    return ports_[v][port - 1];
  }

  // port^{-1}_v(u): the port at v whose edge leads to neighbor u.
  Port port_of(NodeIndex v, NodeIndex u) const {
    const auto& row = inv_[v];
    auto it = std::lower_bound(row.begin(), row.end(), std::pair<NodeIndex, Port>{u, 0});
    if (it == row.end() || it->first != u) {
      throw Error("port_of: " + std::to_string(u) + " is not a neighbor of " + std::to_string(v));
    }
    return it->second;
  }

  bool adjacent(NodeIndex v, NodeIndex u) const {
    const auto& row = inv_[v];
    auto it = std::lower_bound(row.begin(), row.end(), std::pair<NodeIndex, Port>{u, 0});
    return it != row.end() && it->first == u;
  }

  NodeIndex index_of_id(NodeId id) const {
    for (NodeIndex v = 0; v < ids_.size(); ++v) {
      if (ids_[v] == id) return v;
    }
    throw Error("index_of_id: unknown id " + std::to_string(id));
  }

  // --- file format ---------------------------------------------------
  // header:  n m knowledge
  // per node (index order):  id deg p1 p2 ... pdeg
  // where pj is the node index reached by port j.
  void save(std::ostream& os) const {
    os << n() << ' ' << m() << ' ' << to_string(knowledge_) << '\n';
    for (NodeIndex v = 0; v < n(); ++v) {
      os << ids_[v] << ' ' << degree(v);
      for (NodeIndex u : ports_[v]) os << ' ' << u;
      os << '\n';
    }
  }

  void save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    save(os);
  }

  static Network load(std::istream& is) {
    std::size_t n = 0, m = 0;
    std::string kw;
    if (!(is >> n >> m >> kw)) throw Error("graph file: bad header");
    Knowledge knowledge;
    if (kw == "KT0") {
      knowledge = Knowledge::KT0;
    } else if (kw == "KT1") {
      knowledge = Knowledge::KT1;
    } else {
      throw Error("graph file: unknown knowledge model '" + kw + "'");
    }
    std::vector<std::vector<NodeIndex>> rows(n);
    std::vector<NodeId> ids(n);
    for (std::size_t v = 0; v < n; ++v) {
      std::uint64_t deg = 0;
      if (!(is >> ids[v] >> deg)) throw Error("graph file: truncated node line");
      rows[v].resize(deg);
      for (std::uint64_t j = 0; j < deg; ++j) {
        if (!(is >> rows[v][j])) throw Error("graph file: truncated port list");
      }
    }
    Network net = build(std::move(rows), std::move(ids), knowledge);
    if (net.m() != m) throw Error("graph file: header edge count does not match port lists");
    return net;
  }

  static Network load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open " + path);
    return load(is);
  }

 private:
  void finish_and_validate() {
    const std::size_t nn = ports_.size();
    if (nn == 0) throw ConfigError("network must have at least one node");
    if (ids_.size() != nn) throw Error("network: one id per node required");

    std::size_t degsum = 0;
    inv_.assign(nn, {});
    for (NodeIndex v = 0; v < nn; ++v) {
      degsum += ports_[v].size();
      inv_[v].reserve(ports_[v].size());
      for (Port p = 1; p <= ports_[v].size(); ++p) {
        NodeIndex u = ports_[v][p - 1];
        if (u >= nn) throw Error("network: port target out of range");
        if (u == v) throw Error("network: self loop at node " + std::to_string(v));
        inv_[v].emplace_back(u, p);
      }
      std::sort(inv_[v].begin(), inv_[v].end());
      for (std::size_t j = 1; j < inv_[v].size(); ++j) {
        if (inv_[v][j].first == inv_[v][j - 1].first) {
          throw Error("network: port map at node " + std::to_string(v) + " is not a bijection");
        }
      }
    }
    if (degsum % 2 != 0) throw Error("network: odd degree sum");
    m_ = degsum / 2;

    // undirected: u in N(v) <=> v in N(u)
    for (NodeIndex v = 0; v < nn; ++v) {
      for (NodeIndex u : ports_[v]) {
        if (!adjacent(u, v)) throw Error("network: edge not symmetric");
      }
    }

    std::vector<NodeId> sorted_ids = ids_;
    std::sort(sorted_ids.begin(), sorted_ids.end());
    if (std::adjacent_find(sorted_ids.begin(), sorted_ids.end()) != sorted_ids.end()) {
      throw Error("network: node ids must be distinct");
    }
    if (!sorted_ids.empty() && sorted_ids.front() < 1) throw Error("network: node ids must be >= 1");
  }

  std::vector<std::vector<NodeIndex>> ports_;
  std::vector<std::vector<std::pair<NodeIndex, Port>>> inv_;  // per node, sorted by neighbor
  std::vector<NodeId> ids_;
  Knowledge knowledge_ = Knowledge::KT0;
  std::size_t m_ = 0;
};

namespace detail {

inline std::vector<std::vector<NodeIndex>> rows_from_edges(
    std::size_t n, const std::vector<std::pair<NodeIndex, NodeIndex>>& edges, Rng& rng) {
  std::vector<std::vector<NodeIndex>> rows(n);
  for (auto [a, b] : edges) {
    rows[a].push_back(b);
    rows[b].push_back(a);
  }
  for (auto& row : rows) rng.shuffle(row);  // port maps uniformly random
  return rows;
}

}  // namespace detail

// Benchmark instances: connected simple graph, uniformly random port maps,
// IDs a random permutation of [1..n].
inline Network generate_random_connected(std::uint32_t n, std::uint64_t m, std::uint64_t seed,
                                         Knowledge knowledge = Knowledge::KT0) {
  if (n < 2) throw ConfigError("generate_random_connected: n must be >= 2");
  const std::uint64_t max_m = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  if (m < n - 1 || m > max_m) {
    throw ConfigError("generate_random_connected: m must lie in [n-1, n(n-1)/2]");
  }

  Rng rng(mix64(seed, 0xc0ffee));
  std::vector<NodeIndex> order(n);
  for (NodeIndex v = 0; v < n; ++v) order[v] = v;
  rng.shuffle(order);

  std::set<std::pair<NodeIndex, NodeIndex>> edge_set;
  auto norm = [](NodeIndex a, NodeIndex b) {
    return a < b ? std::pair{a, b} : std::pair{b, a};
  };
  std::vector<std::pair<NodeIndex, NodeIndex>> edges;
  edges.reserve(m);
  for (std::uint32_t i = 1; i < n; ++i) {  // random recursive spanning tree
    NodeIndex a = order[i];
    NodeIndex b = order[rng.below(i)];
    edges.push_back(norm(a, b));
    edge_set.insert(edges.back());
  }

  std::uint64_t extra = m - (n - 1);
  if (extra > 0 && extra * 2 > max_m - (n - 1)) {
    // dense request: enumerate the complement and take a random prefix
    std::vector<std::pair<NodeIndex, NodeIndex>> pool;
    pool.reserve(max_m - (n - 1));
    for (NodeIndex a = 0; a < n; ++a) {
      for (NodeIndex b = a + 1; b < n; ++b) {
        if (!edge_set.count({a, b})) pool.emplace_back(a, b);
      }
    }
    rng.shuffle(pool);
    for (std::uint64_t i = 0; i < extra; ++i) edges.push_back(pool[i]);
  } else {
    while (extra > 0) {
      NodeIndex a = static_cast<NodeIndex>(rng.below(n));
      NodeIndex b = static_cast<NodeIndex>(rng.below(n));
      if (a == b) continue;
      auto e = norm(a, b);
      if (edge_set.insert(e).second) {
        edges.push_back(e);
        --extra;
      }
    }
  }

  auto rows = detail::rows_from_edges(n, edges, rng);
  std::vector<NodeId> ids(n);
  for (NodeIndex v = 0; v < n; ++v) ids[v] = v + 1;
  rng.shuffle(ids);
  return Network::build(std::move(rows), std::move(ids), knowledge);
}

// The 3n-node adversarial family: U x V complete bipartite plus a perfect
// matching V-W. Center nodes (all of V) are the ones the schedule wakes at
// tick 0. Node layout: u_i = i, v_i = n+i, w_i = 2n+i (0-based i).
// IDs default to the identity permutation of [3n]; pass random_ids to draw
// a seeded permutation instead.
inline std::pair<Network, WakeSchedule> generate_lb_family_g(std::uint32_t n, std::uint64_t seed,
                                                             Knowledge knowledge = Knowledge::KT0,
                                                             bool random_ids = false) {
  if (n < 1) throw ConfigError("generate_lb_family_g: n must be >= 1");
  Rng rng(mix64(seed, 0x9 /* family tag */));
  const std::uint32_t total = 3 * n;
  std::vector<std::pair<NodeIndex, NodeIndex>> edges;
  edges.reserve(static_cast<std::size_t>(n) * n + n);
  for (NodeIndex i = 0; i < n; ++i) {
    for (NodeIndex j = 0; j < n; ++j) edges.emplace_back(i, n + j);  // u_i - v_j
    edges.emplace_back(n + i, 2 * n + i);                            // v_i - w_i
  }
  auto rows = detail::rows_from_edges(total, edges, rng);
  std::vector<NodeId> ids(total);
  for (NodeIndex v = 0; v < total; ++v) ids[v] = v + 1;
  if (random_ids) rng.shuffle(ids);
  Network net = Network::build(std::move(rows), std::move(ids), knowledge);

  WakeSchedule sched;
  for (NodeIndex i = 0; i < n; ++i) sched.entries.push_back({n + i, 0});
  return {std::move(net), std::move(sched)};
}

// Multi-source BFS hop distances; kUnreachable marks separated nodes.
inline std::vector<std::uint32_t> hop_distances(const Network& net,
                                                std::span<const NodeIndex> sources) {
  std::vector<std::uint32_t> dist(net.n(), kUnreachable);
  std::deque<NodeIndex> queue;
  for (NodeIndex s : sources) {
    if (dist[s] == kUnreachable) {
      dist[s] = 0;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    NodeIndex v = queue.front();
    queue.pop_front();
    for (NodeIndex u : net.neighbors(v)) {
      if (dist[u] == kUnreachable) {
        dist[u] = dist[v] + 1;
        queue.push_back(u);
      }
    }
  }
  return dist;
}

inline bool is_connected(const Network& net) {
  NodeIndex root = 0;
  auto dist = hop_distances(net, std::span<const NodeIndex>(&root, 1));
  return std::find(dist.begin(), dist.end(), kUnreachable) == dist.end();
}

struct BfsTree {
  NodeIndex root = 0;
  std::vector<std::int64_t> parent;   // -1 at the root
  std::vector<std::uint32_t> depth;   // == dist(root, v)

  std::vector<std::vector<NodeIndex>> children() const {
    std::vector<std::vector<NodeIndex>> ch(parent.size());
    for (NodeIndex v = 0; v < parent.size(); ++v) {
      if (parent[v] >= 0) ch[static_cast<NodeIndex>(parent[v])].push_back(v);
    }
    return ch;
  }

  std::uint32_t tree_degree(NodeIndex v) const {
    std::uint32_t d = parent[v] >= 0 ? 1u : 0u;
    for (NodeIndex u = 0; u < parent.size(); ++u) {
      if (parent[u] == static_cast<std::int64_t>(v)) ++d;
    }
    return d;
  }
};

// Parent-pointer BFS tree with depth(v) = dist(root, v). Ties between
// equal-depth parent candidates go to the smallest neighbor ID so the
// oracle output is reproducible.
inline BfsTree bfs_tree(const Network& net, NodeIndex root) {
  if (root >= net.n()) throw Error("bfs_tree: root out of range");
  auto dist = hop_distances(net, std::span<const NodeIndex>(&root, 1));
  if (std::find(dist.begin(), dist.end(), kUnreachable) != dist.end()) {
    throw Error("bfs_tree: graph is disconnected");
  }
  BfsTree tree;
  tree.root = root;
  tree.depth = dist;
  tree.parent.assign(net.n(), -1);
  for (NodeIndex v = 0; v < net.n(); ++v) {
    if (v == root) continue;
    NodeIndex best = kUnreachable;
    for (NodeIndex u : net.neighbors(v)) {
      if (dist[u] + 1 != dist[v]) continue;
      if (best == kUnreachable || net.id(u) < net.id(best)) best = u;
    }
    tree.parent[v] = best;
  }
  return tree;
}

// rho_awake(G, A0) = max_u dist(A0, u).
inline std::uint32_t awake_distance(const Network& net, const std::vector<NodeIndex>& awake) {
  if (awake.empty()) throw ConfigError("awake_distance: awake set must be nonempty");
  auto dist = hop_distances(net, awake);
  std::uint32_t out = 0;
  for (std::uint32_t d : dist) {
    if (d == kUnreachable) throw Error("awake_distance: node unreachable from awake set");
    out = std::max(out, d);
  }
  return out;
}

inline std::uint32_t diameter(const Network& net) {
  std::uint32_t out = 0;
  for (NodeIndex v = 0; v < net.n(); ++v) {
    auto dist = hop_distances(net, std::span<const NodeIndex>(&v, 1));
    for (std::uint32_t d : dist) {
      if (d == kUnreachable) throw Error("diameter: graph is disconnected");
      out = std::max(out, d);
    }
  }
  return out;
}

// --- wake schedule file: lines "node_index tick" -----------------------
inline void save_schedule(const WakeSchedule& sched, std::ostream& os) {
  for (const auto& e : sched.entries) os << e.node << ' ' << e.tick << '\n';
}

inline void save_schedule(const WakeSchedule& sched, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  save_schedule(sched, os);
}

inline WakeSchedule load_schedule(std::istream& is) {
  WakeSchedule sched;
  NodeIndex node;
  std::uint64_t tick;
  while (is >> node >> tick) sched.entries.push_back({node, tick});
  return sched;
}

inline WakeSchedule load_schedule(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  return load_schedule(is);
}

}  // namespace wakeup
