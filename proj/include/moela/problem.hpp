// SPDX-License-Identifier: Apache-2.0
//
// Design encoding for a 3D NoC platform: which PE sits on which tile and
// which tile pairs are joined by planar links or TSVs. Also the feasibility
// rules and the move / crossover / mutation operators shared by every search
// algorithm in the library.
//
// Tiles are numbered layer-major: tile = layer * n * n + y * n + x, and layer
// 0 is the one adjacent to the heat sink.
#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "moela/error.hpp"
#include "moela/rng.hpp"

namespace moela {

enum class PeKind : std::uint8_t { Cpu, Gpu, Llc };

constexpr std::string_view to_string(PeKind k) {
  switch (k) {
    case PeKind::Cpu: return "CPU";
    case PeKind::Gpu: return "GPU";
    case PeKind::Llc: return "LLC";
  }
  return "?";
}

struct PeCount {
  PeKind kind = PeKind::Gpu;
  int count = 0;
  friend bool operator==(const PeCount&, const PeCount&) = default;
};

struct PlatformSpec {
  int grid_n = 2;
  int layers = 1;
  std::vector<PeCount> pe_inventory;
  int planar_links = 0;
  int vertical_links = 0;
  int max_planar_length = 5;
  int max_router_degree = 7;

  int tiles_per_layer() const { return grid_n * grid_n; }
  int tile_count() const { return tiles_per_layer() * layers; }
  int link_count() const { return planar_links + vertical_links; }
  friend bool operator==(const PlatformSpec&, const PlatformSpec&) = default;
};

struct LatencyParams {
  double router_stages = 3.0;        // cycles per router traversal
  double link_delay_per_unit = 1.0;  // cycles per unit of wire
  friend bool operator==(const LatencyParams&, const LatencyParams&) = default;
};

struct EnergyParams {
  double link_energy = 1.0;    // J per flit per unit length
  double router_energy = 1.0;  // J per flit per router port
  friend bool operator==(const EnergyParams&, const EnergyParams&) = default;
};

struct ThermalParams {
  std::vector<double> layer_resistance;  // K/W, index 0 nearest the sink
  double base_resistance = 0.0;          // K/W
  friend bool operator==(const ThermalParams&, const ThermalParams&) = default;
};

struct ProblemInstance {
  PlatformSpec spec;
  std::vector<double> traffic;   // A x A, row-major, indexed by PE id
  std::vector<double> pe_power;  // W, indexed by PE id
  LatencyParams latency;
  EnergyParams energy;
  ThermalParams thermal;
  int objective_count = 5;

  double flow(int src_pe, int dst_pe) const {
    return traffic[static_cast<std::size_t>(src_pe) * spec.tile_count() + dst_pe];
  }

  /// PE ids are handed out in inventory order.
  std::vector<PeKind> pe_kinds() const {
    std::vector<PeKind> kinds;
    kinds.reserve(spec.tile_count());
    for (const auto& [kind, count] : spec.pe_inventory)
      for (int i = 0; i < count; ++i) kinds.push_back(kind);
    return kinds;
  }

  int count_of(PeKind kind) const {
    int n = 0;
    for (const auto& e : spec.pe_inventory)
      if (e.kind == kind) n += e.count;
    return n;
  }

  friend bool operator==(const ProblemInstance&, const ProblemInstance&) = default;
};

inline void validate(const ProblemInstance& inst) {
  const auto& s = inst.spec;
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidInstance, m); };
  if (s.grid_n < 2) fail("grid_n must be >= 2");
  if (s.layers < 1) fail("layers must be >= 1");
  if (s.planar_links < 0 || s.vertical_links < 0) fail("link budgets must be nonnegative");
  if (s.max_planar_length < 1) fail("max_planar_length must be >= 1");
  if (s.max_router_degree < 1) fail("max_router_degree must be >= 1");
  int total = 0;
  for (const auto& e : s.pe_inventory) {
    if (e.count < 0) fail("negative PE count");
    total += e.count;
  }
  const int a = s.tile_count();
  if (total != a)
    fail("PE inventory sums to " + std::to_string(total) + ", expected " + std::to_string(a));
  if (inst.traffic.size() != static_cast<std::size_t>(a) * a) fail("traffic matrix must be A x A");
  for (int i = 0; i < a; ++i) {
    if (inst.flow(i, i) != 0.0) fail("traffic diagonal must be zero");
    for (int j = 0; j < a; ++j)
      if (!(inst.flow(i, j) >= 0.0) || !std::isfinite(inst.flow(i, j)))
        fail("traffic entries must be finite and >= 0");
  }
  if (inst.pe_power.size() != static_cast<std::size_t>(a)) fail("pe_power must have A entries");
  for (double p : inst.pe_power)
    if (!(p >= 0.0) || !std::isfinite(p)) fail("PE power must be finite and >= 0");
  if (inst.thermal.layer_resistance.size() != static_cast<std::size_t>(s.layers))
    fail("layer_resistance must have one entry per layer");
  for (double r : inst.thermal.layer_resistance)
    if (!(r > 0.0)) fail("layer resistances must be > 0");
  if (!(inst.thermal.base_resistance >= 0.0)) fail("base resistance must be >= 0");
  if (inst.objective_count < 3 || inst.objective_count > 5) fail("objective_count must be 3, 4 or 5");
}

/// Stable hash over every field of the instance.
inline std::uint64_t instance_digest(const ProblemInstance& inst) {
  std::string bytes;
  auto put = [&bytes](const auto& v) {
    bytes.append(reinterpret_cast<const char*>(&v), sizeof(v));
  };
  const auto& s = inst.spec;
  put(s.grid_n);
  put(s.layers);
  for (const auto& e : s.pe_inventory) {
    put(static_cast<int>(e.kind));
    put(e.count);
  }
  put(s.planar_links);
  put(s.vertical_links);
  put(s.max_planar_length);
  put(s.max_router_degree);
  for (double v : inst.traffic) put(v);
  for (double v : inst.pe_power) put(v);
  put(inst.latency.router_stages);
  put(inst.latency.link_delay_per_unit);
  put(inst.energy.link_energy);
  put(inst.energy.router_energy);
  for (double v : inst.thermal.layer_resistance) put(v);
  put(inst.thermal.base_resistance);
  put(inst.objective_count);
  return fnv1a(bytes);
}

// ---------------------------------------------------------------------------
// Geometry

struct TileCoord {
  int x = 0;
  int y = 0;
  int layer = 0;
};

class Geometry {
 public:
  explicit Geometry(const PlatformSpec& spec) : n_(spec.grid_n), layers_(spec.layers) {}

  int grid_n() const { return n_; }
  int layers() const { return layers_; }
  int tiles_per_layer() const { return n_ * n_; }
  int tile_count() const { return n_ * n_ * layers_; }

  TileCoord coord(int tile) const {
    const int per = n_ * n_;
    return {tile % n_, (tile % per) / n_, tile / per};
  }
  int tile(TileCoord c) const { return c.layer * n_ * n_ + c.y * n_ + c.x; }
  int stack(int tile) const { return tile % (n_ * n_); }
  int layer(int tile) const { return tile / (n_ * n_); }

  bool on_perimeter(int tile) const {
    const auto c = coord(tile);
    return c.x == 0 || c.y == 0 || c.x == n_ - 1 || c.y == n_ - 1;
  }

  int perimeter_tiles_per_layer() const { return n_ == 1 ? 1 : 4 * (n_ - 1); }

 private:
  int n_;
  int layers_;
};

/// Undirected tile pair, always stored with a < b.
struct Link {
  int a = 0;
  int b = 0;
  auto operator<=>(const Link&) const = default;
};

inline Link make_link(int u, int v) { return u < v ? Link{u, v} : Link{v, u}; }

enum class LinkClass { Planar, Vertical, Invalid };

inline LinkClass classify(const Geometry& g, Link l) {
  const auto p = g.coord(l.a);
  const auto q = g.coord(l.b);
  if (l.a == l.b) return LinkClass::Invalid;
  if (p.layer == q.layer) return LinkClass::Planar;
  if (p.x == q.x && p.y == q.y && std::abs(p.layer - q.layer) == 1) return LinkClass::Vertical;
  return LinkClass::Invalid;
}

/// Manhattan length within a layer; a TSV is one unit.
inline int link_length(const Geometry& g, Link l) {
  const auto p = g.coord(l.a);
  const auto q = g.coord(l.b);
  if (p.layer != q.layer) return 1;
  return std::abs(p.x - q.x) + std::abs(p.y - q.y);
}

// ---------------------------------------------------------------------------
// Design

struct Design {
  std::vector<int> placement;  // tile -> PE id
  std::vector<Link> links;     // sorted, link index k = position

  friend bool operator==(const Design&, const Design&) = default;

  /// Canonical byte encoding; equal keys iff equal designs.
  std::string key() const {
    std::string k;
    k.reserve(2 * placement.size() + 4 * links.size() + 1);
    auto put = [&k](int v) {
      k.push_back(static_cast<char>(v & 0xff));
      k.push_back(static_cast<char>((v >> 8) & 0xff));
    };
    for (int p : placement) put(p);
    k.push_back('|');
    for (const auto& l : links) {
      put(l.a);
      put(l.b);
    }
    return k;
  }

  std::uint64_t digest() const { return fnv1a(key()); }
};

struct ConstraintReport {
  bool connected = true;
  bool planar_length_ok = true;
  bool degree_ok = true;
  bool vertical_multiplicity_ok = true;
  bool llc_on_edge = true;
  std::vector<std::string> violations;

  bool feasible() const {
    return connected && planar_length_ok && degree_ok && vertical_multiplicity_ok && llc_on_edge;
  }
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(n), size_(n, 1), count_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    --count_;
    return true;
  }
  int components() const { return count_; }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
  int count_;
};

inline std::vector<int> degrees(int tiles, std::span<const Link> links) {
  std::vector<int> deg(tiles, 0);
  for (const auto& l : links) {
    ++deg[l.a];
    ++deg[l.b];
  }
  return deg;
}

inline int component_count(int tiles, std::span<const Link> links) {
  DisjointSets ds(tiles);
  for (const auto& l : links) ds.unite(l.a, l.b);
  return ds.components();
}

/// Component label per tile.
inline std::vector<int> component_labels(int tiles, std::span<const Link> links) {
  DisjointSets ds(tiles);
  for (const auto& l : links) ds.unite(l.a, l.b);
  std::vector<int> label(tiles);
  for (int t = 0; t < tiles; ++t) label[t] = ds.find(t);
  return label;
}

/// is_bridge[k] for every link index k (Tarjan low-link, iterative).
inline std::vector<bool> find_bridges(int tiles, std::span<const Link> links) {
  std::vector<std::vector<std::pair<int, int>>> adj(tiles);
  for (int k = 0; k < static_cast<int>(links.size()); ++k) {
    adj[links[k].a].push_back({links[k].b, k});
    adj[links[k].b].push_back({links[k].a, k});
  }
  std::vector<bool> bridge(links.size(), false);
  std::vector<int> disc(tiles, -1), low(tiles, 0);
  int timer = 0;
  struct Frame {
    int v;
    int parent_edge;
    std::size_t next;
  };
  std::vector<Frame> stack;
  for (int root = 0; root < tiles; ++root) {
    if (disc[root] != -1) continue;
    disc[root] = low[root] = timer++;
    stack.push_back({root, -1, 0});
    while (!stack.empty()) {
      auto& f = stack.back();
      if (f.next < adj[f.v].size()) {
        auto [to, edge] = adj[f.v][f.next++];
        if (edge == f.parent_edge) continue;
        if (disc[to] == -1) {
          disc[to] = low[to] = timer++;
          stack.push_back({to, edge, 0});
        } else {
          low[f.v] = std::min(low[f.v], disc[to]);
        }
      } else {
        const Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          auto& up = stack.back();
          low[up.v] = std::min(low[up.v], low[done.v]);
          if (low[done.v] > disc[up.v]) bridge[done.parent_edge] = true;
        }
      }
    }
  }
  return bridge;
}

inline bool contains(std::span<const Link> sorted, Link l) {
  return std::binary_search(sorted.begin(), sorted.end(), l);
}

inline void insert_sorted(std::vector<Link>& links, Link l) {
  links.insert(std::lower_bound(links.begin(), links.end(), l), l);
}

inline bool pe_placement_ok(const Geometry& g, std::span<const PeKind> kinds, int pe, int tile) {
  return kinds[pe] != PeKind::Llc || g.on_perimeter(tile);
}

/// Every feasible link of the given class, in ascending order.
inline std::vector<Link> candidate_links(const PlatformSpec& spec, LinkClass cls) {
  const Geometry g(spec);
  std::vector<Link> out;
  const int per = g.tiles_per_layer();
  if (cls == LinkClass::Vertical) {
    for (int t = 0; t + per < g.tile_count(); ++t) out.push_back({t, t + per});
    return out;
  }
  for (int layer = 0; layer < g.layers(); ++layer)
    for (int i = 0; i < per; ++i)
      for (int j = i + 1; j < per; ++j) {
        Link l{layer * per + i, layer * per + j};
        if (link_length(g, l) <= spec.max_planar_length) out.push_back(l);
      }
  return out;
}

/// Uniformly drawn candidate link of a class, or nullopt when the class has
/// no geometric candidates at all.
inline std::optional<Link> sample_link(const PlatformSpec& spec, LinkClass cls, Rng& rng) {
  const Geometry g(spec);
  const int per = g.tiles_per_layer();
  if (cls == LinkClass::Vertical) {
    if (g.layers() < 2) return std::nullopt;
    const int t = uniform_int(rng, 0, per * (g.layers() - 1) - 1);
    return Link{t, t + per};
  }
  for (int tries = 0; tries < 64; ++tries) {
    const int layer = uniform_int(rng, 0, g.layers() - 1);
    const int i = uniform_int(rng, 0, per - 1);
    const int j = uniform_int(rng, 0, per - 1);
    if (i == j) continue;
    Link l = make_link(layer * per + i, layer * per + j);
    if (link_length(g, l) <= spec.max_planar_length) return l;
  }
  return std::nullopt;
}

inline int planar_count(const Geometry& g, std::span<const Link> links) {
  int n = 0;
  for (const auto& l : links) n += classify(g, l) == LinkClass::Planar;
  return n;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Constraint checking

inline ConstraintReport check_constraints(const ProblemInstance& inst, const Design& d) {
  const auto& spec = inst.spec;
  const Geometry g(spec);
  const int a = spec.tile_count();
  auto shape = [](const std::string& m) { throw Error(ErrorCode::ShapeMismatch, m); };

  if (static_cast<int>(d.placement.size()) != a)
    shape("placement has " + std::to_string(d.placement.size()) + " tiles, expected " +
          std::to_string(a));
  {
    std::vector<bool> seen(a, false);
    for (int pe : d.placement) {
      if (pe < 0 || pe >= a || seen[pe]) shape("placement is not a permutation of PE ids");
      seen[pe] = true;
    }
  }
  if (static_cast<int>(d.links.size()) != spec.link_count())
    shape("design has " + std::to_string(d.links.size()) + " links, expected " +
          std::to_string(spec.link_count()));
  int planar = 0, vertical = 0;
  for (const auto& l : d.links) {
    if (l.a < 0 || l.b < 0 || l.a >= a || l.b >= a || l.a >= l.b)
      shape("link endpoints out of range or unordered");
    switch (classify(g, l)) {
      case LinkClass::Planar: ++planar; break;
      case LinkClass::Vertical: ++vertical; break;
      case LinkClass::Invalid:
        shape("link " + std::to_string(l.a) + "-" + std::to_string(l.b) +
              " is neither planar nor vertically aligned");
    }
  }
  if (planar != spec.planar_links || vertical != spec.vertical_links)
    shape("link class counts do not match the planar/vertical budgets");

  ConstraintReport r;
  auto violate = [&r](bool& flag, std::string msg) {
    flag = false;
    r.violations.push_back(std::move(msg));
  };

  std::vector<Link> sorted = d.links;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 1; k < sorted.size(); ++k)
    if (sorted[k] == sorted[k - 1]) {
      if (classify(g, sorted[k]) == LinkClass::Vertical)
        violate(r.vertical_multiplicity_ok, "duplicate vertical link " + std::to_string(sorted[k].a) +
                                                "-" + std::to_string(sorted[k].b));
      else
        shape("duplicate planar link");
    }

  const int comps = detail::component_count(a, sorted);
  if (comps != 1) violate(r.connected, "tile graph has " + std::to_string(comps) + " components");

  for (const auto& l : sorted) {
    if (classify(g, l) != LinkClass::Planar) continue;
    const int len = link_length(g, l);
    if (len > spec.max_planar_length)
      violate(r.planar_length_ok, "planar link " + std::to_string(l.a) + "-" + std::to_string(l.b) +
                                      " has length " + std::to_string(len));
  }

  const auto deg = detail::degrees(a, sorted);
  for (int t = 0; t < a; ++t)
    if (deg[t] > spec.max_router_degree)
      violate(r.degree_ok, "router " + std::to_string(t) + " has degree " + std::to_string(deg[t]));

  const auto kinds = inst.pe_kinds();
  for (int t = 0; t < a; ++t)
    if (kinds[d.placement[t]] == PeKind::Llc && !g.on_perimeter(t))
      violate(r.llc_on_edge, "LLC " + std::to_string(d.placement[t]) + " on interior tile " +
                                 std::to_string(t));
  return r;
}

// ---------------------------------------------------------------------------
// Operators

inline constexpr int kMoveRetries = 64;

namespace detail {

inline void check_instance_feasible(const ProblemInstance& inst) {
  const auto& s = inst.spec;
  const Geometry g(s);
  const int a = s.tile_count();
  auto infeasible = [](const std::string& m) { throw Error(ErrorCode::InstanceInfeasible, m); };
  if (s.link_count() < a - 1)
    infeasible("link budget " + std::to_string(s.link_count()) + " below spanning minimum " +
               std::to_string(a - 1));
  if (inst.count_of(PeKind::Llc) > g.perimeter_tiles_per_layer() * s.layers)
    infeasible("more LLCs than perimeter tiles");
  if (s.layers > 1 && s.vertical_links < s.layers - 1)
    infeasible("too few vertical links to connect every layer");
  if (s.vertical_links > g.tiles_per_layer() * (s.layers - 1))
    infeasible("vertical budget exceeds available TSV positions");
  if (s.planar_links > static_cast<int>(candidate_links(s, LinkClass::Planar).size()))
    infeasible("planar budget exceeds available planar positions");
  if (2L * s.link_count() > static_cast<long>(s.max_router_degree) * a)
    infeasible("link budget exceeds aggregate router degree");
}

inline std::vector<int> random_placement(const ProblemInstance& inst, std::span<const PeKind> kinds,
                                         Rng& rng) {
  const Geometry g(inst.spec);
  const int a = g.tile_count();
  std::vector<int> llcs, others, edge, interior;
  for (int pe = 0; pe < a; ++pe) (kinds[pe] == PeKind::Llc ? llcs : others).push_back(pe);
  for (int t = 0; t < a; ++t) (g.on_perimeter(t) ? edge : interior).push_back(t);
  std::shuffle(llcs.begin(), llcs.end(), rng);
  std::shuffle(others.begin(), others.end(), rng);
  std::shuffle(edge.begin(), edge.end(), rng);
  std::vector<int> placement(a, -1);
  std::size_t e = 0;
  for (int pe : llcs) placement[edge[e++]] = pe;
  std::vector<int> free_tiles(edge.begin() + static_cast<long>(e), edge.end());
  free_tiles.insert(free_tiles.end(), interior.begin(), interior.end());
  std::shuffle(free_tiles.begin(), free_tiles.end(), rng);
  for (std::size_t i = 0; i < others.size(); ++i) placement[free_tiles[i]] = others[i];
  return placement;
}

/// Randomized Kruskal spanning structure then random fill to the budgets.
inline std::optional<std::vector<Link>> random_links(const PlatformSpec& spec, Rng& rng) {
  const Geometry g(spec);
  const int a = g.tile_count();
  auto cands = candidate_links(spec, LinkClass::Planar);
  auto vert = candidate_links(spec, LinkClass::Vertical);
  cands.insert(cands.end(), vert.begin(), vert.end());
  std::shuffle(cands.begin(), cands.end(), rng);

  std::vector<int> deg(a, 0);
  std::vector<bool> used(cands.size(), false);
  int budget[2] = {spec.planar_links, spec.vertical_links};
  auto cls_index = [&g](Link l) { return classify(g, l) == LinkClass::Planar ? 0 : 1; };
  DisjointSets ds(a);
  std::vector<Link> links;
  for (std::size_t i = 0; i < cands.size() && ds.components() > 1; ++i) {
    const Link l = cands[i];
    const int c = cls_index(l);
    if (budget[c] == 0 || deg[l.a] >= spec.max_router_degree || deg[l.b] >= spec.max_router_degree)
      continue;
    if (!ds.unite(l.a, l.b)) continue;
    used[i] = true;
    --budget[c];
    ++deg[l.a];
    ++deg[l.b];
    links.push_back(l);
  }
  if (ds.components() > 1) return std::nullopt;
  for (std::size_t i = 0; i < cands.size() && budget[0] + budget[1] > 0; ++i) {
    if (used[i]) continue;
    const Link l = cands[i];
    const int c = cls_index(l);
    if (budget[c] == 0 || deg[l.a] >= spec.max_router_degree || deg[l.b] >= spec.max_router_degree)
      continue;
    --budget[c];
    ++deg[l.a];
    ++deg[l.b];
    links.push_back(l);
  }
  if (budget[0] + budget[1] > 0) return std::nullopt;
  std::sort(links.begin(), links.end());
  return links;
}

inline std::optional<Design> attempt_swap(const ProblemInstance& inst, const Design& d,
                                          std::span<const PeKind> kinds, Rng& rng) {
  const Geometry g(inst.spec);
  const int a = g.tile_count();
  const int i = uniform_int(rng, 0, a - 1);
  const int j = uniform_int(rng, 0, a - 1);
  if (i == j) return std::nullopt;
  if (!pe_placement_ok(g, kinds, d.placement[i], j) || !pe_placement_ok(g, kinds, d.placement[j], i))
    return std::nullopt;
  Design out = d;
  std::swap(out.placement[i], out.placement[j]);
  return out;
}

inline std::optional<Design> attempt_rewire(const ProblemInstance& inst, const Design& d, Rng& rng) {
  const auto& spec = inst.spec;
  const Geometry g(spec);
  if (d.links.empty()) return std::nullopt;
  const int k = uniform_int(rng, 0, static_cast<int>(d.links.size()) - 1);
  const Link old = d.links[k];
  const LinkClass cls = classify(g, old);
  if (cls == LinkClass::Vertical && spec.vertical_links >= g.tiles_per_layer() * (g.layers() - 1))
    return std::nullopt;
  const auto fresh = sample_link(spec, cls, rng);
  if (!fresh || *fresh == old || contains(d.links, *fresh)) return std::nullopt;
  auto deg = degrees(g.tile_count(), d.links);
  --deg[old.a];
  --deg[old.b];
  if (deg[fresh->a] >= spec.max_router_degree || deg[fresh->b] >= spec.max_router_degree)
    return std::nullopt;
  Design out;
  out.placement = d.placement;
  out.links = d.links;
  out.links.erase(out.links.begin() + k);
  insert_sorted(out.links, *fresh);
  if (component_count(g.tile_count(), out.links) != 1) return std::nullopt;
  return out;
}

template <typename Attempt>
std::optional<Design> retry(Attempt&& attempt) {
  for (int i = 0; i < kMoveRetries; ++i)
    if (auto r = attempt()) return r;
  return std::nullopt;
}

/// Partially-mapped crossover on tile -> PE permutations.
inline std::vector<int> pmx(std::span<const int> a, std::span<const int> b, Rng& rng) {
  const int n = static_cast<int>(a.size());
  int c1 = uniform_int(rng, 0, n);
  int c2 = uniform_int(rng, 0, n);
  if (c1 > c2) std::swap(c1, c2);
  std::vector<int> pos_in_a(n);
  for (int t = 0; t < n; ++t) pos_in_a[a[t]] = t;
  std::vector<bool> in_segment(n, false);
  std::vector<int> child(n, -1);
  for (int t = c1; t < c2; ++t) {
    child[t] = a[t];
    in_segment[a[t]] = true;
  }
  for (int t = 0; t < n; ++t) {
    if (t >= c1 && t < c2) continue;
    int v = b[t];
    while (in_segment[v]) v = b[pos_in_a[v]];
    child[t] = v;
  }
  return child;
}

inline void repair_llc_edge(const Geometry& g, std::span<const PeKind> kinds,
                            std::vector<int>& placement, Rng& rng) {
  std::vector<int> misplaced, swappable;
  for (int t = 0; t < g.tile_count(); ++t) {
    const bool llc = kinds[placement[t]] == PeKind::Llc;
    if (llc && !g.on_perimeter(t)) misplaced.push_back(t);
    if (!llc && g.on_perimeter(t)) swappable.push_back(t);
  }
  std::shuffle(swappable.begin(), swappable.end(), rng);
  for (std::size_t i = 0; i < misplaced.size(); ++i)
    std::swap(placement[misplaced[i]], placement[swappable[i]]);
}

/// Joins components by swapping a non-bridge link for the shortest feasible
/// link of the same class between two components. Links in `protect` are
/// only removed when nothing else is removable.
inline bool repair_connectivity(const PlatformSpec& spec, std::vector<Link>& links,
                                std::span<const Link> protect, Rng& rng) {
  const Geometry g(spec);
  const int a = g.tile_count();
  for (int guard = 0; guard <= a; ++guard) {
    const auto label = component_labels(a, links);
    if (std::all_of(label.begin(), label.end(), [&](int c) { return c == label[0]; })) return true;
    const auto bridge = find_bridges(a, links);

    struct Option {
      int length;
      std::size_t remove;
      Link add;
    };
    std::optional<Option> best;
    for (LinkClass cls : {LinkClass::Planar, LinkClass::Vertical}) {
      std::vector<std::size_t> preferred, fallback;
      for (std::size_t k = 0; k < links.size(); ++k) {
        if (bridge[k] || classify(g, links[k]) != cls) continue;
        (contains(protect, links[k]) ? fallback : preferred).push_back(k);
      }
      auto& pool = preferred.empty() ? fallback : preferred;
      if (pool.empty()) continue;
      const std::size_t rm = pool[uniform_int(rng, 0, static_cast<int>(pool.size()) - 1)];
      auto deg = degrees(a, links);
      --deg[links[rm].a];
      --deg[links[rm].b];
      std::vector<Link> joins;
      int best_len = 1 << 30;
      for (const Link& l : candidate_links(spec, cls)) {
        if (label[l.a] == label[l.b] || contains(links, l)) continue;
        if (deg[l.a] >= spec.max_router_degree || deg[l.b] >= spec.max_router_degree) continue;
        const int len = link_length(g, l);
        if (len < best_len) {
          best_len = len;
          joins.clear();
        }
        if (len == best_len) joins.push_back(l);
      }
      if (joins.empty()) continue;
      const Link add = joins[uniform_int(rng, 0, static_cast<int>(joins.size()) - 1)];
      if (!best || best_len < best->length) best = Option{best_len, rm, add};
    }
    if (!best) return false;
    links.erase(links.begin() + static_cast<long>(best->remove));
    insert_sorted(links, best->add);
  }
  return false;
}

inline std::optional<std::vector<Link>> crossover_links(const PlatformSpec& spec, const Design& a,
                                                        const Design& b, Rng& rng) {
  const Geometry g(spec);
  const int tiles = g.tile_count();
  std::vector<Link> shared, diff;
  std::set_intersection(a.links.begin(), a.links.end(), b.links.begin(), b.links.end(),
                        std::back_inserter(shared));
  std::set_symmetric_difference(a.links.begin(), a.links.end(), b.links.begin(), b.links.end(),
                                std::back_inserter(diff));
  std::shuffle(diff.begin(), diff.end(), rng);

  std::vector<Link> links = shared;
  auto deg = degrees(tiles, links);
  int need[2] = {spec.planar_links, spec.vertical_links};
  auto cls_index = [&g](Link l) { return classify(g, l) == LinkClass::Planar ? 0 : 1; };
  for (const auto& l : links) --need[cls_index(l)];
  auto try_add = [&](Link l) {
    const int c = cls_index(l);
    if (need[c] == 0 || deg[l.a] >= spec.max_router_degree || deg[l.b] >= spec.max_router_degree)
      return;
    --need[c];
    ++deg[l.a];
    ++deg[l.b];
    links.push_back(l);
  };
  for (const auto& l : diff) try_add(l);
  std::sort(links.begin(), links.end());
  for (int c = 0; c < 2; ++c) {
    const LinkClass cls = c == 0 ? LinkClass::Planar : LinkClass::Vertical;
    for (int tries = 0; need[c] > 0 && tries < 64 * kMoveRetries; ++tries) {
      auto l = sample_link(spec, cls, rng);
      if (!l || contains(links, *l)) continue;
      const int before = need[c];
      try_add(*l);
      if (need[c] != before) std::sort(links.begin(), links.end());
    }
    if (need[c] > 0) return std::nullopt;
  }
  if (!repair_connectivity(spec, links, shared, rng)) return std::nullopt;
  return links;
}

}  // namespace detail

/// A random design satisfying every feasibility rule.
inline Design random_design(const ProblemInstance& inst, std::uint64_t seed) {
  validate(inst);
  detail::check_instance_feasible(inst);
  auto rng = make_rng(seed);
  const auto kinds = inst.pe_kinds();
  for (int attempt = 0; attempt < 256; ++attempt) {
    auto links = detail::random_links(inst.spec, rng);
    if (!links) continue;
    Design d;
    d.placement = detail::random_placement(inst, kinds, rng);
    d.links = std::move(*links);
    return d;
  }
  throw Error(ErrorCode::InstanceInfeasible, "no feasible link set found after 256 attempts");
}

/// One tile swap or one link rewire. Throws NoFeasibleMove after
/// kMoveRetries rejected candidates.
inline Design neighbor_move(const ProblemInstance& inst, const Design& d, std::uint64_t seed) {
  auto rng = make_rng(seed);
  const auto kinds = inst.pe_kinds();
  for (int i = 0; i < kMoveRetries; ++i) {
    const bool swap = uniform01(rng) < 0.5;
    auto r = swap ? detail::attempt_swap(inst, d, kinds, rng) : detail::attempt_rewire(inst, d, rng);
    if (r) return std::move(*r);
  }
  throw Error(ErrorCode::NoFeasibleMove, "no feasible neighbor within retry bound");
}

inline Design crossover(const ProblemInstance& inst, const Design& a, const Design& b,
                        std::uint64_t seed) {
  auto rng = make_rng(seed);
  const Geometry g(inst.spec);
  const auto kinds = inst.pe_kinds();
  Design child;
  child.placement = detail::pmx(a.placement, b.placement, rng);
  detail::repair_llc_edge(g, kinds, child.placement, rng);
  auto links = detail::crossover_links(inst.spec, a, b, rng);
  // Placement and links are independent, so falling back to a parent's link
  // set keeps the child feasible.
  child.links = links ? std::move(*links) : a.links;
  return child;
}

inline constexpr double kMutationSwapProb = 0.4;
inline constexpr double kMutationRewireProb = 0.4;

inline Design mutate(const ProblemInstance& inst, const Design& d, std::uint64_t seed) {
  auto rng = make_rng(seed);
  const bool do_swap = uniform01(rng) < kMutationSwapProb;
  const bool do_rewire = uniform01(rng) < kMutationRewireProb;
  Design out = d;
  if (do_swap) {
    const auto kinds = inst.pe_kinds();
    if (auto r = detail::retry([&] { return detail::attempt_swap(inst, out, kinds, rng); }))
      out = std::move(*r);
  }
  if (do_rewire) {
    if (auto r = detail::retry([&] { return detail::attempt_rewire(inst, out, rng); }))
      out = std::move(*r);
  }
  return out;
}

}  // namespace moela
