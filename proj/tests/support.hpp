// SPDX-License-Identifier: Apache-2.0
// Shared fixtures for the test suites.
#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "moela/harness.hpp"

namespace moela::testing {

inline ProblemInstance make_instance(int n, int layers, int gpus, int cpus, int llcs, int planar, int vertical,
                                     std::uint64_t seed = 1, int objectives = 5,
                                     TrafficModel traffic = TrafficModel::UniformRandom) {
  InstanceRecipe r;
  r.grid_n = n;
  r.layers = layers;
  r.gpus = gpus;
  r.cpus = cpus;
  r.llcs = llcs;
  r.planar_links = planar;
  r.vertical_links = vertical;
  r.seed = seed;
  r.objective_count = objectives;
  r.traffic = traffic;
  return generate_instance(r);
}

// 3x3x2: 10 GPU, 4 CPU, 4 LLC, 24 planar + 6 vertical links.
inline ProblemInstance small_instance(std::uint64_t seed = 1, int objectives = 5) {
  return make_instance(3, 2, 10, 4, 4, 24, 6, seed, objectives);
}

// 3x3x3: 15 GPU, 6 CPU, 6 LLC, 36 planar + 12 vertical links.
inline ProblemInstance medium_instance(std::uint64_t seed = 1, int objectives = 5,
                                       TrafficModel traffic = TrafficModel::UniformRandom) {
  return make_instance(3, 3, 15, 6, 6, 36, 12, seed, objectives, traffic);
}

inline ProblemInstance full_scale_instance(std::uint64_t seed = 1) { return generate_instance(full_scale_recipe(seed)); }

// Every planar nearest-neighbour link of an n x n single layer.
inline std::vector<Link> mesh_links(int n) {
  std::vector<Link> links;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const int t = y * n + x;
      if (x + 1 < n) links.push_back(make_link(t, t + 1));
      if (y + 1 < n) links.push_back(make_link(t, t + n));
    }
  std::sort(links.begin(), links.end());
  return links;
}

// Placement whose LLCs (the last PE ids) sit on perimeter tiles.
inline std::vector<int> edge_placement(const ProblemInstance& inst) {
  const Geometry g(inst.spec);
  const auto kinds = inst.pe_kinds();
  std::vector<int> llcs, others, edge, interior;
  for (int pe = 0; pe < g.tile_count(); ++pe) (kinds[pe] == PeKind::Llc ? llcs : others).push_back(pe);
  for (int t = 0; t < g.tile_count(); ++t) (g.on_perimeter(t) ? edge : interior).push_back(t);
  std::vector<int> placement(g.tile_count());
  std::size_t e = 0;
  for (int pe : llcs) placement[edge[e++]] = pe;
  std::vector<int> rest(edge.begin() + static_cast<long>(e), edge.end());
  rest.insert(rest.end(), interior.begin(), interior.end());
  for (std::size_t i = 0; i < others.size(); ++i) placement[rest[i]] = others[i];
  return placement;
}

inline std::vector<PeKind> kinds_in_placement(const ProblemInstance& inst, const Design& d) {
  const auto kinds = inst.pe_kinds();
  std::vector<PeKind> out;
  for (int pe : d.placement) out.push_back(kinds[pe]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace moela::testing
