// SPDX-License-Identifier: Apache-2.0
//
// Multi-objective building blocks: simplex-lattice weights, Tchebycheff and
// weighted-sum scalarizations, Pareto dominance, exact and Monte-Carlo
// hypervolume, and the run-comparison metrics.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "moela/error.hpp"
#include "moela/rng.hpp"

namespace moela {

using Point = std::vector<double>;
using WeightVector = std::vector<double>;
using ReferencePoint = std::vector<double>;

namespace detail {
inline void require_same_dims(std::size_t a, std::size_t b) {
  if (a != b)
    throw Error(ErrorCode::DimMismatch,
                "dimension " + std::to_string(a) + " vs " + std::to_string(b));
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Weight vectors

namespace detail {

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline void compositions(int remaining, int dims, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (dims == 1) {
    cur.push_back(remaining);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int i = 0; i <= remaining; ++i) {
    cur.push_back(i);
    compositions(remaining - i, dims - 1, cur, out);
    cur.pop_back();
  }
}

}  // namespace detail

/// Das-Dennis lattice at the coarsest resolution giving at least `count`
/// directions, thinned to exactly `count` by farthest-point selection seeded
/// with the unit vectors. Output is sorted lexicographically.
inline std::vector<WeightVector> weight_vectors(int count, int dims) {
  if (dims < 2 || count < dims)
    throw Error(ErrorCode::BadDims, "need count >= dims >= 2, got count=" + std::to_string(count) +
                                        " dims=" + std::to_string(dims));
  int h = 1;
  while (detail::binomial(h + dims - 1, dims - 1) < count) ++h;
  std::vector<std::vector<int>> parts;
  std::vector<int> cur;
  detail::compositions(h, dims, cur, parts);  // already lexicographic
  std::vector<WeightVector> lattice;
  lattice.reserve(parts.size());
  for (const auto& p : parts) {
    WeightVector w(dims);
    double s = 0.0;
    for (int i = 0; i + 1 < dims; ++i) {
      w[i] = static_cast<double>(p[i]) / h;
      s += w[i];
    }
    w[dims - 1] = p[dims - 1] == 0 ? 0.0 : 1.0 - s;
    lattice.push_back(std::move(w));
  }
  if (static_cast<int>(lattice.size()) == count) return lattice;

  const std::size_t n = lattice.size();
  std::vector<bool> chosen(n, false);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  auto take = [&](std::size_t idx) {
    chosen[idx] = true;
    for (std::size_t j = 0; j < n; ++j) {
      double d = 0.0;
      for (int k = 0; k < dims; ++k) d += (lattice[j][k] - lattice[idx][k]) * (lattice[j][k] - lattice[idx][k]);
      nearest[j] = std::min(nearest[j], d);
    }
  };
  int taken = 0;
  for (std::size_t j = 0; j < n; ++j)
    if (std::count(parts[j].begin(), parts[j].end(), h) == 1) {
      take(j);
      ++taken;
    }
  while (taken < count) {
    std::size_t best = n;
    for (std::size_t j = 0; j < n; ++j)
      if (!chosen[j] && (best == n || nearest[j] > nearest[best])) best = j;
    take(best);
    ++taken;
  }
  std::vector<WeightVector> out;
  for (std::size_t j = 0; j < n; ++j)
    if (chosen[j]) out.push_back(lattice[j]);
  return out;
}

// ---------------------------------------------------------------------------
// Scalarizations

inline double tchebycheff(std::span<const double> obj, std::span<const double> w,
                          std::span<const double> z) {
  detail::require_same_dims(obj.size(), w.size());
  detail::require_same_dims(obj.size(), z.size());
  double g = 0.0;
  for (std::size_t i = 0; i < obj.size(); ++i) g = std::max(g, w[i] * std::abs(obj[i] - z[i]));
  return g;
}

inline double weighted_sum(std::span<const double> obj, std::span<const double> w,
                           std::span<const double> z) {
  detail::require_same_dims(obj.size(), w.size());
  detail::require_same_dims(obj.size(), z.size());
  double g = 0.0;
  for (std::size_t i = 0; i < obj.size(); ++i) g += w[i] * std::abs(obj[i] - z[i]);
  return g;
}

inline ReferencePoint update_ideal(std::span<const double> z, std::span<const double> obj) {
  detail::require_same_dims(z.size(), obj.size());
  ReferencePoint out(z.begin(), z.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(out[i], obj[i]);
  return out;
}

/// Running per-objective [min, max]; only ever widens.
struct ObjectiveBounds {
  Point lo;
  Point hi;

  bool empty() const { return lo.empty(); }

  void update(std::span<const double> obj) {
    if (lo.empty()) {
      lo.assign(obj.begin(), obj.end());
      hi.assign(obj.begin(), obj.end());
      return;
    }
    detail::require_same_dims(lo.size(), obj.size());
    for (std::size_t i = 0; i < obj.size(); ++i) {
      lo[i] = std::min(lo[i], obj[i]);
      hi[i] = std::max(hi[i], obj[i]);
    }
  }

  /// Maps into [0, 1] per objective; a degenerate range maps to 0.
  Point normalize(std::span<const double> obj) const {
    detail::require_same_dims(lo.size(), obj.size());
    Point out(obj.size());
    for (std::size_t i = 0; i < obj.size(); ++i) {
      const double range = hi[i] - lo[i];
      out[i] = range > 0.0 ? (obj[i] - lo[i]) / range : 0.0;
    }
    return out;
  }
};

/// Fixed per-objective divisor placing objectives on a common scale for
/// scalarization and hypervolume. Divisors are positive.
struct ObjectiveScale {
  Point divisor;

  Point apply(std::span<const double> obj) const {
    detail::require_same_dims(divisor.size(), obj.size());
    Point out(obj.size());
    for (std::size_t i = 0; i < obj.size(); ++i) out[i] = obj[i] / divisor[i];
    return out;
  }
};

// ---------------------------------------------------------------------------
// Dominance

inline bool dominates(std::span<const double> a, std::span<const double> b) {
  detail::require_same_dims(a.size(), b.size());
  bool strictly = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strictly = true;
  }
  return strictly;
}

/// Indices of the non-dominated members; of identical vectors only the first
/// is kept.
inline std::vector<std::size_t> pareto_indices(std::span<const Point> pts) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool keep = true;
    for (std::size_t j = 0; j < pts.size() && keep; ++j) {
      if (i == j) continue;
      if (dominates(pts[j], pts[i]) || (j < i && pts[j] == pts[i])) keep = false;
    }
    if (keep) out.push_back(i);
  }
  return out;
}

inline std::vector<Point> pareto_front(std::span<const Point> pts) {
  std::vector<Point> out;
  for (auto i : pareto_indices(pts)) out.push_back(pts[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Hypervolume

namespace detail {

inline double box_volume(std::span<const double> p, std::span<const double> ref) {
  double v = 1.0;
  for (std::size_t i = 0; i < p.size(); ++i) v *= ref[i] - p[i];
  return v;
}

inline std::vector<Point> nondominated(std::vector<Point> pts) {
  std::vector<bool> keep(pts.size(), true);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts.size() && keep[i]; ++j) {
      if (i == j) continue;
      bool weakly = true;
      for (std::size_t k = 0; k < pts[i].size() && weakly; ++k) weakly = pts[j][k] <= pts[i][k];
      if (weakly && (pts[j] != pts[i] || j < i)) keep[i] = false;
    }
  }
  std::vector<Point> out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (keep[i]) out.push_back(std::move(pts[i]));
  return out;
}

inline double hv2d(std::vector<Point> pts, std::span<const double> ref) {
  std::sort(pts.begin(), pts.end());
  double v = 0.0, prev_y = ref[1];
  for (const auto& p : pts) {
    if (p[1] >= prev_y) continue;
    v += (ref[0] - p[0]) * (prev_y - p[1]);
    prev_y = p[1];
  }
  return v;
}

inline double wfg(std::vector<Point> pts, std::span<const double> ref);

/// Volume dominated by p but not by any point in `others`.
inline double exclusive(std::span<const double> p, std::span<const Point> others,
                        std::span<const double> ref) {
  std::vector<Point> limited;
  limited.reserve(others.size());
  for (const auto& q : others) {
    Point l(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) l[k] = std::max(p[k], q[k]);
    limited.push_back(std::move(l));
  }
  return box_volume(p, ref) - wfg(nondominated(std::move(limited)), ref);
}

/// WFG recursion; assumes every point is strictly inside the reference box.
inline double wfg(std::vector<Point> pts, std::span<const double> ref) {
  if (pts.empty()) return 0.0;
  if (pts.size() == 1) return box_volume(pts[0], ref);
  if (ref.size() == 1) {
    double best = ref[0];
    for (const auto& p : pts) best = std::min(best, p[0]);
    return ref[0] - best;
  }
  if (ref.size() == 2) return hv2d(std::move(pts), ref);
  // Worst last-objective first keeps the limit sets small.
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.back() > b.back(); });
  double v = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    v += exclusive(pts[i], std::span<const Point>(pts).subspan(i + 1), ref);
  return v;
}

inline void check_inside(std::span<const Point> front, std::span<const double> ref) {
  for (const auto& p : front) {
    require_same_dims(p.size(), ref.size());
    for (std::size_t k = 0; k < p.size(); ++k)
      if (!(p[k] < ref[k])) throw Error(ErrorCode::PointBeyondRef, "point not strictly inside reference box");
  }
}

}  // namespace detail

inline constexpr int kMaxHypervolumeDims = 5;
inline constexpr double kReferenceCoordinate = 1.1;

/// Exact dominated hypervolume (WFG recursion).
inline double hypervolume(std::span<const Point> front, std::span<const double> ref) {
  if (ref.size() < 1 || ref.size() > kMaxHypervolumeDims)
    throw Error(ErrorCode::BadDims, "exact hypervolume supports 1..5 objectives");
  detail::check_inside(front, ref);
  return detail::wfg(detail::nondominated(std::vector<Point>(front.begin(), front.end())), ref);
}

/// Monte-Carlo estimate over the box [min(0, front), ref].
inline double hypervolume_mc(std::span<const Point> front, std::span<const double> ref,
                             std::uint64_t samples, std::uint64_t seed) {
  detail::check_inside(front, ref);
  if (front.empty() || samples == 0) return 0.0;
  const std::size_t m = ref.size();
  Point lo(m, 0.0);
  for (const auto& p : front)
    for (std::size_t k = 0; k < m; ++k) lo[k] = std::min(lo[k], p[k]);
  double box = 1.0;
  for (std::size_t k = 0; k < m; ++k) box *= ref[k] - lo[k];
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Point x(m);
  std::uint64_t hits = 0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    for (std::size_t k = 0; k < m; ++k) x[k] = lo[k] + unit(rng) * (ref[k] - lo[k]);
    for (const auto& p : front) {
      std::size_t k = 0;
      while (k < m && p[k] <= x[k]) ++k;
      if (k == m) {
        ++hits;
        break;
      }
    }
  }
  return box * static_cast<double>(hits) / static_cast<double>(samples);
}

/// Non-dominated set with an incrementally maintained hypervolume. The volume
/// never decreases; points outside the reference box are ignored.
class HypervolumeArchive {
 public:
  HypervolumeArchive() = default;
  explicit HypervolumeArchive(Point ref) : ref_(std::move(ref)) {}

  const Point& ref() const { return ref_; }
  const std::vector<Point>& points() const { return points_; }
  double volume() const { return volume_; }

  /// Returns true if the point entered the archive.
  bool insert(const Point& p) {
    detail::require_same_dims(p.size(), ref_.size());
    for (std::size_t k = 0; k < p.size(); ++k)
      if (!(p[k] < ref_[k])) return false;
    for (const auto& q : points_) {
      bool weakly = true;
      for (std::size_t k = 0; k < p.size() && weakly; ++k) weakly = q[k] <= p[k];
      if (weakly) return false;
    }
    volume_ += std::max(0.0, detail::exclusive(p, points_, ref_));
    std::erase_if(points_, [&](const Point& q) { return dominates(p, q); });
    points_.push_back(p);
    return true;
  }

  /// Rebuilds from a stored state without recomputing history.
  void restore(std::vector<Point> points, double volume) {
    points_ = std::move(points);
    volume_ = volume;
  }

 private:
  Point ref_;
  std::vector<Point> points_;
  double volume_ = 0.0;
};

// ---------------------------------------------------------------------------
// Comparison metrics

struct TracePoint {
  std::uint64_t evaluations = 0;
  double elapsed_ms = 0.0;
  double phv = 0.0;
};

inline constexpr double kConvergenceTolerance = 0.005;
inline constexpr int kConvergenceWindow = 5;

struct SpeedupResult {
  double factor = 0.0;  // on the evaluation axis
  double wallclock_factor = 0.0;
  bool never_reached = false;
  double target_phv = 0.0;
  std::uint64_t baseline_evaluations = 0;
  std::uint64_t moela_evaluations = 0;
};

/// Index of the record at which a PHV trace is judged converged: the first
/// record whose PHV improved by less than 0.5% over the preceding five
/// records, or the last record if that never happens.
inline std::size_t convergence_index(std::span<const TracePoint> trace) {
  for (std::size_t t = kConvergenceWindow; t < trace.size(); ++t) {
    const double before = trace[t - kConvergenceWindow].phv;
    if (before > 0.0 && trace[t].phv - before < kConvergenceTolerance * before) return t;
  }
  return trace.size() - 1;
}

/// Baseline time-to-converged-PHV over MOELA's time to match that PHV. Times
/// are first-reach times on the evaluation axis, with wall clock alongside.
inline SpeedupResult speedup_factor(std::span<const TracePoint> baseline,
                                    std::span<const TracePoint> moela) {
  if (baseline.empty() || moela.empty()) throw Error(ErrorCode::EmptyPopulation, "empty PHV trace");
  SpeedupResult r;
  r.target_phv = baseline[convergence_index(baseline)].phv;
  auto first_reach = [&](std::span<const TracePoint> tr) -> std::optional<std::size_t> {
    for (std::size_t t = 0; t < tr.size(); ++t)
      if (tr[t].phv >= r.target_phv) return t;
    return std::nullopt;
  };
  const auto b = *first_reach(baseline);
  const auto m = first_reach(moela);
  r.baseline_evaluations = baseline[b].evaluations;
  if (!m) {
    r.never_reached = true;
    return r;
  }
  r.moela_evaluations = moela[*m].evaluations;
  r.factor = r.moela_evaluations > 0
                 ? static_cast<double>(r.baseline_evaluations) / static_cast<double>(r.moela_evaluations)
                 : std::numeric_limits<double>::infinity();
  r.wallclock_factor = moela[*m].elapsed_ms > 0.0 ? baseline[b].elapsed_ms / moela[*m].elapsed_ms : 0.0;
  return r;
}

/// Relative PHV gain of MOELA over a baseline.
inline double phv_improvement(double phv_baseline, double phv_moela) {
  if (phv_baseline == 0.0) return phv_moela == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (phv_moela - phv_baseline) / phv_baseline;
}

struct EdpSelection {
  std::size_t baseline_index = 0;
  std::size_t moela_index = 0;
  double baseline_edp = 0.0;
  double moela_edp = 0.0;
  double threshold = 0.0;
  double improvement = 0.0;  // (EDP_baseline - EDP_moela) / EDP_moela
};

/// Picks from each population the lowest-EDP design whose temperature is
/// within 5% of the lowest temperature seen in either population (or the
/// coolest design when none qualifies) and compares their EDPs.
template <typename TempFn, typename EdpFn>
EdpSelection edp_improvement(std::span<const Point> baseline, std::span<const Point> moela,
                             TempFn&& temperature, EdpFn&& edp) {
  if (baseline.empty() || moela.empty()) throw Error(ErrorCode::EmptyPopulation, "empty population");
  double coolest = std::numeric_limits<double>::infinity();
  for (auto pop : {baseline, moela})
    for (const auto& v : pop) coolest = std::min(coolest, temperature(v));
  const double threshold = 1.05 * coolest;
  auto pick = [&](std::span<const Point> pop) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < pop.size(); ++i)
      if (temperature(pop[i]) <= threshold && (!best || edp(pop[i]) < edp(pop[*best]))) best = i;
    if (best) return *best;
    std::size_t c = 0;
    for (std::size_t i = 1; i < pop.size(); ++i)
      if (temperature(pop[i]) < temperature(pop[c])) c = i;
    return c;
  };
  EdpSelection s;
  s.threshold = threshold;
  s.baseline_index = pick(baseline);
  s.moela_index = pick(moela);
  s.baseline_edp = edp(baseline[s.baseline_index]);
  s.moela_edp = edp(moela[s.moela_index]);
  s.improvement = s.moela_edp != 0.0 ? (s.baseline_edp - s.moela_edp) / s.moela_edp : 0.0;
  return s;
}

}  // namespace moela
