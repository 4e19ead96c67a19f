// SPDX-License-Identifier: Apache-2.0
//
// Deterministic minimum-hop routing. Among all shortest paths from i to j the
// one with the lexicographically smallest router sequence is chosen, and the
// j -> i route is the same path reversed.
#pragma once

#include <span>
#include <vector>

#include "moela/error.hpp"
#include "moela/problem.hpp"

namespace moela {

struct Adjacency {
  // Sorted by neighbor id; second is the link index in Design::links.
  std::vector<std::vector<std::pair<int, int>>> next;

  Adjacency(int tiles, std::span<const Link> links) : next(tiles) {
    for (int k = 0; k < static_cast<int>(links.size()); ++k) {
      next[links[k].a].push_back({links[k].b, k});
      next[links[k].b].push_back({links[k].a, k});
    }
    for (auto& n : next) std::sort(n.begin(), n.end());
  }
};

/// All-pairs hop distances by one BFS per source; -1 marks unreachable.
inline std::vector<int> hop_distances(int tiles, const Adjacency& adj) {
  std::vector<int> dist(static_cast<std::size_t>(tiles) * tiles, -1);
  std::vector<int> queue(tiles);
  for (int s = 0; s < tiles; ++s) {
    int* row = dist.data() + static_cast<std::size_t>(s) * tiles;
    int head = 0, tail = 0;
    row[s] = 0;
    queue[tail++] = s;
    while (head < tail) {
      const int v = queue[head++];
      for (auto [u, k] : adj.next[v])
        if (row[u] < 0) {
          row[u] = row[v] + 1;
          queue[tail++] = u;
        }
    }
  }
  return dist;
}

class RoutingTable {
 public:
  int tiles() const { return tiles_; }
  int hops(int i, int j) const { return hops_[index(i, j)]; }
  double path_delay(int i, int j) const { return delay_[index(i, j)]; }

  /// Routers visited from i to j, both endpoints included; empty when i == j.
  std::span<const int> routers(int i, int j) const {
    const auto p = index(i, j);
    return {routers_.data() + router_off_[p], routers_.data() + router_off_[p + 1]};
  }
  /// Link indices traversed from i to j, in order.
  std::span<const int> links(int i, int j) const {
    const auto p = index(i, j);
    return {links_.data() + link_off_[p], links_.data() + link_off_[p + 1]};
  }
  int link_count() const { return link_count_; }

 private:
  friend RoutingTable build_routing(const ProblemInstance&, const Design&);

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * tiles_ + j; }

  int tiles_ = 0;
  int link_count_ = 0;
  std::vector<int> hops_;
  std::vector<double> delay_;
  std::vector<int> router_off_, routers_;
  std::vector<int> link_off_, links_;
};

inline RoutingTable build_routing(const ProblemInstance& inst, const Design& d) {
  const Geometry g(inst.spec);
  const int a = g.tile_count();
  if (static_cast<int>(d.placement.size()) != a)
    throw Error(ErrorCode::ShapeMismatch, "placement size does not match instance");
  const Adjacency adj(a, d.links);
  RoutingTable rt;
  rt.tiles_ = a;
  rt.link_count_ = static_cast<int>(d.links.size());
  rt.hops_ = hop_distances(a, adj);
  for (int v : rt.hops_)
    if (v < 0) throw Error(ErrorCode::Disconnected, "some tile pair has no route");

  std::vector<double> link_delay(d.links.size());
  for (std::size_t k = 0; k < d.links.size(); ++k)
    link_delay[k] = inst.latency.link_delay_per_unit * link_length(g, d.links[k]);

  // Forward paths for i < j into a scratch buffer; reverse ones are mirrored.
  const std::size_t pairs = static_cast<std::size_t>(a) * a;
  std::vector<int> fwd_off(pairs + 1, 0), fwd;  // router sequence per pair
  std::vector<int> fwd_links;                    // link k sits after router k
  fwd.reserve(pairs * 2);
  fwd_links.reserve(pairs * 2);
  rt.delay_.assign(pairs, 0.0);
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < a; ++j) {
      const auto p = rt.index(i, j);
      if (i < j) {
        const int* to_j = rt.hops_.data() + static_cast<std::size_t>(j) * a;
        int cur = i;
        double delay = 0.0;
        fwd.push_back(cur);
        fwd_links.push_back(-1);
        while (cur != j) {
          for (auto [u, k] : adj.next[cur])
            if (to_j[u] == to_j[cur] - 1) {
              cur = u;
              fwd_links.back() = k;
              delay += link_delay[k];
              break;
            }
          fwd.push_back(cur);
          fwd_links.push_back(-1);
        }
        rt.delay_[p] = delay;
        rt.delay_[rt.index(j, i)] = delay;
      }
      fwd_off[p + 1] = static_cast<int>(fwd.size());
    }

  rt.router_off_.assign(pairs + 1, 0);
  rt.link_off_.assign(pairs + 1, 0);
  rt.routers_.reserve(2 * fwd.size());
  rt.links_.reserve(2 * fwd.size());
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < a; ++j) {
      const auto p = rt.index(i, j);
      const auto src = i < j ? p : rt.index(j, i);
      const int lo = fwd_off[src], hi = fwd_off[src + 1];
      if (i < j) {
        for (int q = lo; q < hi; ++q) rt.routers_.push_back(fwd[q]);
        for (int q = lo; q + 1 < hi; ++q) rt.links_.push_back(fwd_links[q]);
      } else if (i > j) {
        for (int q = hi - 1; q >= lo; --q) rt.routers_.push_back(fwd[q]);
        for (int q = hi - 2; q >= lo; --q) rt.links_.push_back(fwd_links[q]);
      }
      rt.router_off_[p + 1] = static_cast<int>(rt.routers_.size());
      rt.link_off_[p + 1] = static_cast<int>(rt.links_.size());
    }
  return rt;
}

/// Link load u_k summed over ordered tile pairs.
inline std::vector<double> link_utilizations(const RoutingTable& rt, const ProblemInstance& inst,
                                             const Design& d) {
  std::vector<double> u(rt.link_count(), 0.0);
  const int a = rt.tiles();
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < a; ++j) {
      const double f = inst.flow(d.placement[i], d.placement[j]);
      if (f == 0.0) continue;
      for (int k : rt.links(i, j)) u[k] += f;
    }
  return u;
}

}  // namespace moela
