// SPDX-License-Identifier: Apache-2.0
//
// The five objective models and the memoizing evaluator. Objective order is
// fixed: Mean, Variance, Latency, Energy, Thermal; a 3-objective run keeps
// the first three, a 4-objective run the first four. All are minimized.
#pragma once

#include <atomic>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "moela/error.hpp"
#include "moela/problem.hpp"
#include "moela/routing.hpp"

namespace moela {

using ObjectiveVector = std::vector<double>;

enum class Objective { Mean = 0, Variance = 1, Latency = 2, Energy = 3, Thermal = 4 };

inline constexpr const char* kObjectiveNames[] = {"mean", "variance", "latency", "energy",
                                                  "thermal"};

inline double mean_traffic(std::span<const double> u) {
  if (u.empty()) throw Error(ErrorCode::EmptyLinks, "mean of an empty link set");
  double s = 0.0;
  for (double v : u) s += v;
  return s / static_cast<double>(u.size());
}

/// Population variance (divides by L).
inline double variance_traffic(std::span<const double> u) {
  const double m = mean_traffic(u);
  double s = 0.0;
  for (double v : u) s += (v - m) * (v - m);
  return s / static_cast<double>(u.size());
}

/// Average CPU -> LLC latency weighted by CPU -> LLC traffic.
inline double cpu_latency(const ProblemInstance& inst, const Design& d, const RoutingTable& rt) {
  const auto kinds = inst.pe_kinds();
  std::vector<int> cpu_tiles, llc_tiles;
  for (int t = 0; t < static_cast<int>(d.placement.size()); ++t) {
    const auto k = kinds[d.placement[t]];
    if (k == PeKind::Cpu) cpu_tiles.push_back(t);
    if (k == PeKind::Llc) llc_tiles.push_back(t);
  }
  if (cpu_tiles.empty() || llc_tiles.empty())
    throw Error(ErrorCode::NoCpuOrLlc, "latency needs at least one CPU and one LLC");
  const double r = inst.latency.router_stages;
  double s = 0.0;
  for (int i : cpu_tiles)
    for (int j : llc_tiles) {
      const double f = inst.flow(d.placement[i], d.placement[j]);
      s += (r * rt.hops(i, j) + rt.path_delay(i, j)) * f;
    }
  return s / (static_cast<double>(cpu_tiles.size()) * static_cast<double>(llc_tiles.size()));
}

/// Link energy plus router energy; every router a flit enters, source and
/// destination included, is charged E_r times its port count.
inline double energy(const ProblemInstance& inst, const Design& d, const RoutingTable& rt) {
  const Geometry g(inst.spec);
  const int a = rt.tiles();
  std::vector<double> link_cost(d.links.size());
  for (std::size_t k = 0; k < d.links.size(); ++k)
    link_cost[k] = link_length(g, d.links[k]) * inst.energy.link_energy;
  const auto deg = detail::degrees(a, d.links);
  std::vector<double> router_cost(a);
  for (int t = 0; t < a; ++t) router_cost[t] = inst.energy.router_energy * deg[t];
  double e = 0.0;
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < a; ++j) {
      const double f = inst.flow(d.placement[i], d.placement[j]);
      if (f == 0.0) continue;
      double c = 0.0;
      for (int k : rt.links(i, j)) c += link_cost[k];
      for (int t : rt.routers(i, j)) c += router_cost[t];
      e += f * c;
    }
  return e;
}

/// Temperature of the core `layer` levels from the sink (1-based) in a
/// single-tile stack, given per-level powers and vertical resistances.
inline double stack_temperature(std::span<const double> power, std::span<const double> resistance,
                                double base_resistance, int layer) {
  if (layer < 1 || layer > static_cast<int>(power.size()) || power.size() != resistance.size())
    throw Error(ErrorCode::IndexOutOfRange, "layer " + std::to_string(layer) + " out of range");
  double t = 0.0, cumulative_r = 0.0, total_p = 0.0;
  for (int i = 0; i < layer; ++i) {
    cumulative_r += resistance[i];
    t += power[i] * cumulative_r;
    total_p += power[i];
  }
  return t + base_resistance * total_p;
}

inline std::vector<double> stack_powers(const ProblemInstance& inst, const Design& d, int stack) {
  const Geometry g(inst.spec);
  if (stack < 0 || stack >= g.tiles_per_layer())
    throw Error(ErrorCode::IndexOutOfRange, "stack " + std::to_string(stack) + " out of range");
  std::vector<double> p(g.layers());
  for (int l = 0; l < g.layers(); ++l)
    p[l] = inst.pe_power[d.placement[l * g.tiles_per_layer() + stack]];
  return p;
}

inline double stack_temperature(const ProblemInstance& inst, const Design& d, int stack, int layer) {
  return stack_temperature(stack_powers(inst, d, stack), inst.thermal.layer_resistance,
                           inst.thermal.base_resistance, layer);
}

/// Peak temperature times the worst in-layer temperature spread.
inline double thermal(const ProblemInstance& inst, const Design& d) {
  const Geometry g(inst.spec);
  const int stacks = g.tiles_per_layer(), layers = g.layers();
  std::vector<double> t(static_cast<std::size_t>(stacks) * layers);
  for (int n = 0; n < stacks; ++n) {
    const auto p = stack_powers(inst, d, n);
    double cumulative_r = 0.0, acc = 0.0, total_p = 0.0;
    for (int k = 0; k < layers; ++k) {
      cumulative_r += inst.thermal.layer_resistance[k];
      acc += p[k] * cumulative_r;
      total_p += p[k];
      t[static_cast<std::size_t>(k) * stacks + n] = acc + inst.thermal.base_resistance * total_p;
    }
  }
  double peak = 0.0, spread = 0.0;
  for (int k = 0; k < layers; ++k) {
    const auto row = std::span<const double>(t).subspan(static_cast<std::size_t>(k) * stacks, stacks);
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    peak = std::max(peak, *hi);
    spread = std::max(spread, *hi - *lo);
  }
  return peak * spread;
}

/// Memo table keyed by the design's canonical encoding. Safe for concurrent
/// use; the counter only moves on the first insertion of a key.
class EvalCache {
 public:
  EvalCache() = default;
  EvalCache(const EvalCache&) = delete;
  EvalCache& operator=(const EvalCache&) = delete;

  std::optional<ObjectiveVector> find(const std::string& key) const {
    std::shared_lock lock(mutex_);
    auto it = table_.find(key);
    if (it == table_.end()) return std::nullopt;
    return it->second;
  }

  /// Returns true if the key was new.
  bool insert(const std::string& key, const ObjectiveVector& value) {
    std::unique_lock lock(mutex_);
    auto [it, fresh] = table_.insert_or_assign(key, value);
    if (fresh) count_.fetch_add(1, std::memory_order_relaxed);
    return fresh;
  }

  std::uint64_t eval_count() const { return count_.load(std::memory_order_relaxed); }
  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return table_.size();
  }

  /// Entries sorted by key, for checkpointing.
  std::vector<std::pair<std::string, ObjectiveVector>> entries() const {
    std::shared_lock lock(mutex_);
    std::vector<std::pair<std::string, ObjectiveVector>> out(table_.begin(), table_.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  void restore(std::vector<std::pair<std::string, ObjectiveVector>> entries, std::uint64_t count) {
    std::unique_lock lock(mutex_);
    table_.clear();
    for (auto& [k, v] : entries) table_.emplace(std::move(k), std::move(v));
    count_.store(count, std::memory_order_relaxed);
  }

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, ObjectiveVector> table_;
  std::atomic<std::uint64_t> count_{0};
};

/// Objectives computed from scratch, no memoization.
inline ObjectiveVector compute_objectives(const ProblemInstance& inst, const Design& d) {
  const auto rt = build_routing(inst, d);
  const auto u = link_utilizations(rt, inst, d);
  ObjectiveVector v;
  v.reserve(inst.objective_count);
  v.push_back(mean_traffic(u));
  v.push_back(variance_traffic(u));
  v.push_back(cpu_latency(inst, d, rt));
  if (inst.objective_count >= 4) v.push_back(energy(inst, d, rt));
  if (inst.objective_count >= 5) v.push_back(thermal(inst, d));
  return v;
}

inline ObjectiveVector evaluate(const ProblemInstance& inst, const Design& d, EvalCache& cache) {
  auto key = d.key();
  if (auto hit = cache.find(key)) return std::move(*hit);
  auto v = compute_objectives(inst, d);
  cache.insert(key, v);
  return v;
}

/// Energy x latency; a model-based stand-in for simulated EDP.
inline double proxy_edp(std::span<const double> v) {
  if (v.size() < 4) throw Error(ErrorCode::MissingComponent, "proxy EDP needs the energy objective");
  return v[static_cast<int>(Objective::Energy)] * v[static_cast<int>(Objective::Latency)];
}

}  // namespace moela
