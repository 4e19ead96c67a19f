// SPDX-License-Identifier: Apache-2.0
//
// Synthetic instances and run comparison.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "moela/engine.hpp"
#include "moela/moo.hpp"
#include "moela/objectives.hpp"
#include "moela/problem.hpp"

namespace moela {

enum class TrafficModel { UniformRandom, Hotspot, CpuLlcHeavy };
enum class PowerModel { Jittered, Nominal };

constexpr std::string_view to_string(TrafficModel t) {
  switch (t) {
    case TrafficModel::UniformRandom: return "uniform-random";
    case TrafficModel::Hotspot: return "hotspot";
    case TrafficModel::CpuLlcHeavy: return "cpu-llc-heavy";
  }
  return "?";
}

constexpr std::string_view to_string(PowerModel p) {
  switch (p) {
    case PowerModel::Jittered: return "jittered";
    case PowerModel::Nominal: return "nominal";
  }
  return "?";
}

inline TrafficModel parse_traffic_model(std::string_view s) {
  if (s == "uniform-random") return TrafficModel::UniformRandom;
  if (s == "hotspot") return TrafficModel::Hotspot;
  if (s == "cpu-llc-heavy") return TrafficModel::CpuLlcHeavy;
  throw Error(ErrorCode::BadRecipe, "unknown traffic model '" + std::string(s) + "'");
}

inline PowerModel parse_power_model(std::string_view s) {
  if (s == "jittered") return PowerModel::Jittered;
  if (s == "nominal") return PowerModel::Nominal;
  throw Error(ErrorCode::BadRecipe, "unknown power model '" + std::string(s) + "'");
}

inline constexpr double kGpuPower = 2.5;
inline constexpr double kCpuPower = 5.0;
inline constexpr double kLlcPower = 1.0;
inline constexpr double kPowerJitter = 0.2;
inline constexpr double kHotspotShare = 0.8;
inline constexpr double kHotspotFraction = 0.1;
inline constexpr double kCoherenceBoost = 10.0;

struct InstanceRecipe {
  int grid_n = 3;
  int layers = 2;
  int gpus = 10;
  int cpus = 4;
  int llcs = 4;
  int planar_links = 24;
  int vertical_links = 6;
  int max_planar_length = 5;
  int max_router_degree = 7;
  TrafficModel traffic = TrafficModel::UniformRandom;
  double f_max = 1.0;
  PowerModel power = PowerModel::Jittered;
  double layer_resistance = 1.0;
  double base_resistance = 0.5;
  LatencyParams latency;
  EnergyParams energy;
  int objective_count = 5;
  std::uint64_t seed = 1;
  friend bool operator==(const InstanceRecipe&, const InstanceRecipe&) = default;
};

/// 4x4x4 platform with 40 GPUs, 8 CPUs and 16 LLCs, 96 planar links and 48 TSVs.
inline InstanceRecipe full_scale_recipe(std::uint64_t seed = 1) {
  InstanceRecipe r;
  r.grid_n = 4;
  r.layers = 4;
  r.gpus = 40;
  r.cpus = 8;
  r.llcs = 16;
  r.planar_links = 96;
  r.vertical_links = 48;
  r.seed = seed;
  return r;
}

inline ProblemInstance generate_instance(const InstanceRecipe& r) {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::BadRecipe, m); };
  if (r.grid_n < 2 || r.layers < 1) bad("grid must be at least 2x2x1");
  if (r.gpus < 0 || r.cpus < 0 || r.llcs < 0) bad("PE counts must be nonnegative");
  if (r.gpus + r.cpus + r.llcs != r.grid_n * r.grid_n * r.layers) bad("PE mix must fill every tile");
  if (r.planar_links < 0 || r.vertical_links < 0) bad("link budgets must be nonnegative");
  if (!(r.f_max >= 0.0) || !std::isfinite(r.f_max)) bad("f_max must be finite and >= 0");
  if (!(r.layer_resistance > 0.0) || !(r.base_resistance >= 0.0)) bad("invalid thermal resistances");
  if (r.objective_count < 3 || r.objective_count > 5) bad("objective_count must be 3, 4 or 5");

  ProblemInstance inst;
  auto& s = inst.spec;
  s.grid_n = r.grid_n;
  s.layers = r.layers;
  s.pe_inventory = {{PeKind::Gpu, r.gpus}, {PeKind::Cpu, r.cpus}, {PeKind::Llc, r.llcs}};
  s.planar_links = r.planar_links;
  s.vertical_links = r.vertical_links;
  s.max_planar_length = r.max_planar_length;
  s.max_router_degree = r.max_router_degree;
  inst.latency = r.latency;
  inst.energy = r.energy;
  inst.thermal.layer_resistance.assign(r.layers, r.layer_resistance);
  inst.thermal.base_resistance = r.base_resistance;
  inst.objective_count = r.objective_count;

  const int a = s.tile_count();
  const auto kinds = inst.pe_kinds();
  auto rng = make_rng(derive_seed(r.seed, {0x7aff1cULL}));
  std::uniform_real_distribution<double> flow(0.0, 1.0);
  inst.traffic.assign(static_cast<std::size_t>(a) * a, 0.0);
  auto at = [&](int i, int j) -> double& { return inst.traffic[static_cast<std::size_t>(i) * a + j]; };
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < a; ++j)
      if (i != j) at(i, j) = r.f_max * flow(rng);

  if (r.traffic == TrafficModel::Hotspot) {
    std::vector<int> ids(a);
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);
    const int hot = std::max(1, static_cast<int>(std::ceil(kHotspotFraction * a)));
    std::vector<bool> is_hot(a, false);
    for (int k = 0; k < hot; ++k) is_hot[ids[k]] = true;
    double to_hot = 0.0, to_cold = 0.0;
    for (int i = 0; i < a; ++i)
      for (int j = 0; j < a; ++j) (is_hot[j] ? to_hot : to_cold) += at(i, j);
    const double total = to_hot + to_cold;
    if (total > 0.0) {
      const double hot_scale = to_hot > 0.0 ? kHotspotShare * total / to_hot : 0.0;
      const double cold_scale = to_cold > 0.0 ? (1.0 - kHotspotShare) * total / to_cold : 0.0;
      for (int i = 0; i < a; ++i)
        for (int j = 0; j < a; ++j) at(i, j) *= is_hot[j] ? hot_scale : cold_scale;
    }
  } else if (r.traffic == TrafficModel::CpuLlcHeavy) {
    for (int i = 0; i < a; ++i)
      for (int j = 0; j < a; ++j) {
        const bool pair = (kinds[i] == PeKind::Cpu && kinds[j] == PeKind::Llc) ||
                          (kinds[i] == PeKind::Llc && kinds[j] == PeKind::Cpu);
        if (pair) at(i, j) *= kCoherenceBoost;
      }
  }

  inst.pe_power.resize(a);
  for (int i = 0; i < a; ++i) {
    const double nominal = kinds[i] == PeKind::Gpu ? kGpuPower : kinds[i] == PeKind::Cpu ? kCpuPower : kLlcPower;
    const double jitter = r.power == PowerModel::Jittered ? 1.0 + kPowerJitter * (2.0 * flow(rng) - 1.0) : 1.0;
    inst.pe_power[i] = nominal * jitter;
  }
  validate(inst);
  return inst;
}

// ---------------------------------------------------------------------------
// Comparison report

struct RunSummary {
  RunLog log;
  std::vector<ObjectiveVector> population;  // final objective vectors; may be empty
};

/// A metric value or the reason it could not be computed.
struct MetricValue {
  std::optional<double> value;
  std::string error;
  friend bool operator==(const MetricValue&, const MetricValue&) = default;
};

struct BaselineMetrics {
  std::string algorithm;
  std::uint64_t seed = 0;
  MetricValue speedup;
  MetricValue speedup_wallclock;
  MetricValue phv_baseline;
  MetricValue phv_moela;
  MetricValue phv_improvement;
  MetricValue edp_baseline;
  MetricValue edp_moela;
  MetricValue edp_improvement;
  friend bool operator==(const BaselineMetrics&, const BaselineMetrics&) = default;
};

struct MetricsReport {
  std::uint64_t instance_digest = 0;
  int objectives = 0;
  std::uint64_t moela_seed = 0;
  std::vector<BaselineMetrics> baselines;
  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

namespace detail {

template <typename F>
void fill_metric(MetricValue& out, F&& f) {
  try {
    out.value = f();
  } catch (const Error& e) {
    out.error = std::string(to_string(e.code())) + ": " + e.what();
  }
}

}  // namespace detail

inline MetricsReport compare_runs(const RunSummary& moela, std::span<const RunSummary> baselines) {
  for (const auto& b : baselines)
    if (b.log.instance_digest != moela.log.instance_digest || b.log.objectives != moela.log.objectives)
      throw Error(ErrorCode::MixedInstances, "runs were made on different instances");
  MetricsReport rep;
  rep.instance_digest = moela.log.instance_digest;
  rep.objectives = moela.log.objectives;
  rep.moela_seed = moela.log.seed;
  const auto mt = moela.log.trace();
  for (const auto& b : baselines) {
    BaselineMetrics m;
    m.algorithm = b.log.algorithm;
    m.seed = b.log.seed;
    const auto bt = b.log.trace();
    std::optional<SpeedupResult> sp;
    detail::fill_metric(m.speedup, [&] {
      sp = speedup_factor(bt, mt);
      if (sp->never_reached) throw Error(ErrorCode::NeverReached, "MOELA never reached the baseline's converged PHV");
      return sp->factor;
    });
    detail::fill_metric(m.speedup_wallclock, [&] {
      if (!sp) throw Error(ErrorCode::EmptyPopulation, "empty PHV trace");
      if (sp->never_reached) throw Error(ErrorCode::NeverReached, "MOELA never reached the baseline's converged PHV");
      return sp->wallclock_factor;
    });
    auto final_phv = [](const RunLog& log) {
      if (log.records.empty()) throw Error(ErrorCode::EmptyPopulation, "empty PHV trace");
      return log.records.back().phv;
    };
    detail::fill_metric(m.phv_baseline, [&] { return final_phv(b.log); });
    detail::fill_metric(m.phv_moela, [&] { return final_phv(moela.log); });
    detail::fill_metric(m.phv_improvement, [&] { return phv_improvement(final_phv(b.log), final_phv(moela.log)); });

    std::optional<EdpSelection> edp;
    auto selection = [&]() -> const EdpSelection& {
      if (!edp) {
        if (moela.log.objectives < 5)
          throw Error(ErrorCode::MissingComponent, "EDP selection needs the thermal objective");
        const auto thermal = [](const Point& v) { return v[static_cast<int>(Objective::Thermal)]; };
        const auto edp_of = [](const Point& v) { return proxy_edp(v); };
        edp = edp_improvement(std::span<const Point>(b.population), std::span<const Point>(moela.population),
                              thermal, edp_of);
      }
      return *edp;
    };
    detail::fill_metric(m.edp_baseline, [&] { return selection().baseline_edp; });
    detail::fill_metric(m.edp_moela, [&] { return selection().moela_edp; });
    detail::fill_metric(m.edp_improvement, [&] { return selection().improvement; });
    rep.baselines.push_back(std::move(m));
  }
  return rep;
}

/// Tab-separated rows: baseline, seed, metric, value, error.
inline std::string metrics_table(const MetricsReport& rep) {
  std::ostringstream out;
  out.precision(17);
  out << "baseline\tseed\tmetric\tvalue\terror\n";
  for (const auto& b : rep.baselines) {
    const std::pair<const char*, const MetricValue*> rows[] = {
        {"speedup", &b.speedup},           {"speedup_wallclock", &b.speedup_wallclock},
        {"phv_baseline", &b.phv_baseline}, {"phv_moela", &b.phv_moela},
        {"phv_improvement", &b.phv_improvement}, {"edp_baseline", &b.edp_baseline},
        {"edp_moela", &b.edp_moela},       {"edp_improvement", &b.edp_improvement},
    };
    for (const auto& [name, v] : rows) {
      out << b.algorithm << '\t' << b.seed << '\t' << name << '\t';
      if (v->value) out << *v->value;
      out << '\t' << v->error << '\n';
    }
  }
  return out.str();
}

}  // namespace moela
