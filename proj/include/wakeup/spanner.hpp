#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "wakeup/error.hpp"
#include "wakeup/graph.hpp"
#include "wakeup/rng.hpp"

namespace wakeup {

enum class SpannerEdgeKind { IntraCluster, OutgoingInter };

// Directed view of a spanner edge as the advising scheme consumes it:
// IntraCluster u->v means v became u's parent when u joined v's cluster;
// OutgoingInter u->v means the defeated u kept one edge to v's old cluster.
struct SpannerEdge {
  NodeIndex u = 0;
  NodeIndex v = 0;
  SpannerEdgeKind kind = SpannerEdgeKind::IntraCluster;
  std::uint32_t iteration = 0;
  NodeIndex target_cluster = 0;  // leader of the cluster the edge points into
};

// Snapshot of the clustering after one iteration.
struct Clustering {
  std::uint32_t iteration = 0;
  std::vector<std::int64_t> leader;       // per node; -1 once retired
  std::vector<std::int64_t> tree_parent;  // within the cluster; -1 at the leader
};

struct SpannerBuild {
  std::uint32_t k = 1;
  std::vector<SpannerEdge> edges;
  std::vector<Clustering> history;                 // iterations 0..k
  std::vector<std::uint32_t> case_b_iteration;     // per node; each node settles exactly once
  std::vector<std::uint32_t> outgoing_inter_count; // per node, at its Case-B iteration

  std::set<std::pair<NodeIndex, NodeIndex>> edge_set() const {
    std::set<std::pair<NodeIndex, NodeIndex>> out;
    for (const auto& e : edges) {
      out.insert(e.u < e.v ? std::pair{e.u, e.v} : std::pair{e.v, e.u});
    }
    return out;
  }
};

// Randomized Baswana-Sen (2k-1)-spanner. Iterations 1..k-1 sample surviving
// clusters with probability n^{-1/k} (one coin per (leader, iteration));
// iteration k forces the empty clustering so every still-clustered node
// settles with Case B. Edges the construction decides on are removed from
// the working edge set, as are all edges of a node that ran Case B.
inline SpannerBuild build_spanner(const Network& net, std::uint32_t k, std::uint64_t seed) {
  if (k < 1) throw ConfigError("build_spanner: k must be >= 1");
  const std::size_t n = net.n();
  const double sample_p = std::exp(-std::log(static_cast<double>(n)) / static_cast<double>(k));

  std::vector<std::int64_t> cluster(n);   // current cluster leader, -1 retired
  std::vector<std::int64_t> parent(n, -1);
  for (NodeIndex v = 0; v < n; ++v) cluster[v] = v;

  std::vector<std::set<NodeIndex>> alive(n);
  for (NodeIndex v = 0; v < n; ++v) {
    alive[v] = std::set<NodeIndex>(net.neighbors(v).begin(), net.neighbors(v).end());
  }
  auto drop_edge = [&](NodeIndex a, NodeIndex b) {
    alive[a].erase(b);
    alive[b].erase(a);
  };

  SpannerBuild out;
  out.k = k;
  out.case_b_iteration.assign(n, 0);
  out.outgoing_inter_count.assign(n, 0);
  out.history.push_back({0, cluster, parent});

  std::set<std::pair<NodeIndex, NodeIndex>> chosen;
  auto add_edge = [&](NodeIndex a, NodeIndex b, SpannerEdgeKind kind, std::uint32_t iter,
                      NodeIndex target) {
    out.edges.push_back({a, b, kind, iter, target});
    chosen.insert(a < b ? std::pair{a, b} : std::pair{b, a});
  };

  for (std::uint32_t iter = 1; iter <= k; ++iter) {
    const std::vector<std::int64_t> old_cluster = cluster;

    std::set<std::int64_t> sampled;
    if (iter <= k - 1) {
      std::set<std::int64_t> live_leaders(old_cluster.begin(), old_cluster.end());
      live_leaders.erase(-1);
      for (std::int64_t leader : live_leaders) {
        double coin = static_cast<double>(mix64(seed, net.id(static_cast<NodeIndex>(leader)),
                                                iter)) *
                      0x1.0p-64;
        if (coin < sample_p) sampled.insert(leader);
      }
    }

    for (NodeIndex u = 0; u < n; ++u) {
      if (old_cluster[u] == -1) continue;            // settled earlier
      if (sampled.count(old_cluster[u])) continue;   // survives this iteration

      // u is defeated: look for a sampled-core neighbor
      NodeIndex join_via = kUnreachable;
      if (iter <= k - 1) {
        for (NodeIndex w : alive[u]) {
          if (old_cluster[w] == -1 || !sampled.count(old_cluster[w])) continue;
          if (join_via == kUnreachable || net.id(w) < net.id(join_via)) join_via = w;
        }
      }

      if (join_via != kUnreachable) {
        // Case A: join via exactly one edge, discard the other edges into
        // that cluster.
        add_edge(u, join_via, SpannerEdgeKind::IntraCluster, iter,
                 static_cast<NodeIndex>(old_cluster[join_via]));
        cluster[u] = old_cluster[join_via];
        parent[u] = join_via;
        std::vector<NodeIndex> into_cluster;
        for (NodeIndex w : alive[u]) {
          if (w != join_via && old_cluster[w] == old_cluster[join_via]) into_cluster.push_back(w);
        }
        for (NodeIndex w : into_cluster) drop_edge(u, w);
      } else {
        // Case B: one edge per adjacent old cluster (own cluster excluded,
        // its tree already connects u), then u's remaining edges retire.
        std::map<std::int64_t, NodeIndex> rep;
        for (NodeIndex w : alive[u]) {
          std::int64_t c = old_cluster[w];
          if (c == -1 || c == old_cluster[u]) continue;
          auto it = rep.find(c);
          if (it == rep.end() || net.id(w) < net.id(it->second)) rep[c] = w;
        }
        for (const auto& [c, w] : rep) {
          add_edge(u, w, SpannerEdgeKind::OutgoingInter, iter, static_cast<NodeIndex>(c));
        }
        out.case_b_iteration[u] = iter;
        out.outgoing_inter_count[u] = static_cast<std::uint32_t>(rep.size());
        std::vector<NodeIndex> rest(alive[u].begin(), alive[u].end());
        for (NodeIndex w : rest) drop_edge(u, w);
        cluster[u] = -1;
        parent[u] = -1;
      }
    }
    out.history.push_back({iter, cluster, parent});
  }
  return out;
}

// Edge-stretch criterion: every original edge must be spanned within 2k-1
// hops of the spanner, which is equivalent to all-pairs multiplicative
// stretch 2k-1.
inline bool verify_stretch(const Network& net, const std::set<std::pair<NodeIndex, NodeIndex>>& spanner,
                           std::uint32_t k, std::size_t apsp_node_limit = 500) {
  if (net.n() > apsp_node_limit) {
    throw ConfigError("verify_stretch: instance exceeds the APSP node limit");
  }
  const std::size_t n = net.n();
  for (const auto& [a, b] : spanner) {
    if (a >= n || b >= n || !net.adjacent(a, b)) {
      throw Error("verify_stretch: spanner contains a non-edge");
    }
  }
  std::vector<std::vector<NodeIndex>> adj(n);
  for (const auto& [a, b] : spanner) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  const std::uint64_t bound = 2ull * k - 1;
  std::vector<std::uint32_t> dist(n);
  std::vector<NodeIndex> queue;
  for (NodeIndex s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), kUnreachable);
    queue.clear();
    queue.push_back(s);
    dist[s] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      NodeIndex v = queue[head];
      if (dist[v] >= bound) break;  // deeper nodes cannot satisfy the bound anyway
      for (NodeIndex u : adj[v]) {
        if (dist[u] == kUnreachable) {
          dist[u] = dist[v] + 1;
          queue.push_back(u);
        }
      }
    }
    for (NodeIndex u : net.neighbors(s)) {
      if (dist[u] == kUnreachable || dist[u] > bound) return false;
    }
  }
  return true;
}

struct SpannerSizeStats {
  double mean_edges = 0.0;
  std::uint64_t max_edges = 0;
  std::uint32_t max_outgoing_per_node = 0;
};

inline SpannerSizeStats spanner_size_report(const Network& net, std::uint32_t k,
                                            const std::vector<std::uint64_t>& seeds) {
  SpannerSizeStats stats;
  if (seeds.empty()) return stats;
  double total = 0.0;
  for (std::uint64_t seed : seeds) {
    SpannerBuild b = build_spanner(net, k, seed);
    std::uint64_t sz = b.edge_set().size();
    total += static_cast<double>(sz);
    stats.max_edges = std::max(stats.max_edges, sz);
    for (std::uint32_t c : b.outgoing_inter_count) {
      stats.max_outgoing_per_node = std::max(stats.max_outgoing_per_node, c);
    }
  }
  stats.mean_edges = total / static_cast<double>(seeds.size());
  return stats;
}

// Export: one line per edge, "u v kind iteration".
inline void save_spanner(const SpannerBuild& build, std::ostream& os) {
  for (const auto& e : build.edges) {
    os << e.u << ' ' << e.v << ' '
       << (e.kind == SpannerEdgeKind::IntraCluster ? "intra" : "inter") << ' ' << e.iteration
       << '\n';
  }
}

}  // namespace wakeup
