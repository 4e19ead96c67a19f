// SPDX-License-Identifier: Apache-2.0
//
// Surrogate-guided local search: greedy descent on the weighted-sum
// scalarization, trajectory labeling for the learned evaluation function,
// and start-point selection from the forest's predictions.
#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <span>
#include <unordered_set>
#include <vector>

#include "moela/forest.hpp"
#include "moela/moo.hpp"
#include "moela/objectives.hpp"
#include "moela/problem.hpp"
#include "moela/routing.hpp"

namespace moela {

inline constexpr std::size_t kTrainingCapacity = 10000;

/// Most-recent-first bounded sample store; the oldest samples go first.
class TrainingSet {
 public:
  explicit TrainingSet(std::size_t capacity = kTrainingCapacity) : capacity_(capacity) {}

  void add(TrainingSample s) {
    samples_.push_back(std::move(s));
    while (samples_.size() > capacity_) samples_.pop_front();
  }

  std::size_t size() const { return samples_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::vector<TrainingSample> snapshot() const { return {samples_.begin(), samples_.end()}; }

 private:
  std::size_t capacity_;
  std::deque<TrainingSample> samples_;
};

// ---------------------------------------------------------------------------
// Features

inline constexpr int kDegreeBins = 8;
inline constexpr int kLengthBins = 5;
inline constexpr int kHopSamplePairs = 64;

inline int feature_count(int objectives) { return 2 * objectives + kDegreeBins + kLengthBins + 1 + 2; }

namespace detail {

/// The same 64 ordered tile pairs for every design of a given size.
inline std::vector<std::pair<int, int>> hop_sample_pairs(int tiles) {
  auto rng = make_rng(derive_seed(0x5eedULL, {static_cast<std::uint64_t>(tiles)}));
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(kHopSamplePairs);
  while (static_cast<int>(pairs.size()) < kHopSamplePairs) {
    const int i = uniform_int(rng, 0, tiles - 1);
    const int j = uniform_int(rng, 0, tiles - 1);
    if (i != j) pairs.push_back({i, j});
  }
  return pairs;
}

}  // namespace detail

/// Normalized objectives, weight, router-degree histogram, planar-length
/// histogram, TSV count, and mean / max hops over a fixed pair sample.
inline std::vector<double> make_features(const ProblemInstance& inst, const Design& d,
                                         std::span<const double> obj, std::span<const double> w,
                                         const ObjectiveBounds& bounds) {
  detail::require_same_dims(obj.size(), w.size());
  const Geometry g(inst.spec);
  const int a = g.tile_count();
  std::vector<double> f;
  f.reserve(feature_count(static_cast<int>(obj.size())));
  const auto norm = bounds.empty() ? Point(obj.size(), 0.0) : bounds.normalize(obj);
  f.insert(f.end(), norm.begin(), norm.end());
  f.insert(f.end(), w.begin(), w.end());

  std::vector<double> degree_hist(kDegreeBins, 0.0);
  for (int deg : detail::degrees(a, d.links)) degree_hist[std::min(deg, kDegreeBins - 1)] += 1.0;
  f.insert(f.end(), degree_hist.begin(), degree_hist.end());

  std::vector<double> length_hist(kLengthBins, 0.0);
  double vertical = 0.0;
  for (const auto& l : d.links) {
    if (classify(g, l) == LinkClass::Planar)
      length_hist[std::clamp(link_length(g, l), 1, kLengthBins) - 1] += 1.0;
    else
      vertical += 1.0;
  }
  f.insert(f.end(), length_hist.begin(), length_hist.end());
  f.push_back(vertical);

  const auto hops = hop_distances(a, Adjacency(a, d.links));
  double sum = 0.0, worst = 0.0;
  for (auto [i, j] : detail::hop_sample_pairs(a)) {
    const double h = hops[static_cast<std::size_t>(i) * a + j];
    sum += h;
    worst = std::max(worst, h);
  }
  f.push_back(sum / kHopSamplePairs);
  f.push_back(worst);
  return f;
}

// ---------------------------------------------------------------------------
// Local search

struct LocalSearchParams {
  int max_steps = 100;
  int neighbors = 64;
  friend bool operator==(const LocalSearchParams&, const LocalSearchParams&) = default;
};

struct TrajectoryPoint {
  std::uint64_t digest = 0;
  std::vector<double> features;
  ObjectiveVector objectives;
  double g = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  double terminal_g = 0.0;

  /// STAGE labeling: every visited design gets the search's final value.
  std::vector<TrainingSample> samples() const {
    std::vector<TrainingSample> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back({p.features, terminal_g});
    return out;
  }
};

struct LocalSearchResult {
  Design best;
  ObjectiveVector best_objectives;
  Trajectory trajectory;
  std::vector<ObjectiveVector> evaluated;  // every vector evaluated, in order
};

/// Shared, read-only context of a search. Objectives are divided by `scale`
/// before scalarization; `w` and `z` live in that scaled space.
struct SearchContext {
  const ProblemInstance& instance;
  EvalCache& cache;
  const ObjectiveScale& scale;
  const ObjectiveBounds& bounds;
  std::uint64_t eval_limit = std::numeric_limits<std::uint64_t>::max();

  bool budget_left() const { return cache.eval_count() < eval_limit; }
};

/// Sampled steepest descent: each step draws up to `neighbors` distinct
/// candidate moves and takes the best one if it strictly lowers g.
inline LocalSearchResult greedy_local_search(const SearchContext& ctx, const Design& start,
                                             const ObjectiveVector& start_objectives,
                                             std::span<const double> w, std::span<const double> z,
                                             const LocalSearchParams& params, std::uint64_t seed) {
  auto g_of = [&](const ObjectiveVector& obj) { return weighted_sum(ctx.scale.apply(obj), w, z); };
  LocalSearchResult r;
  r.best = start;
  r.best_objectives = start_objectives;
  double g = g_of(start_objectives);
  auto visit = [&](const Design& d, const ObjectiveVector& obj, double gv) {
    r.trajectory.points.push_back(
        {d.digest(), make_features(ctx.instance, d, obj, w, ctx.bounds), obj, gv});
  };
  visit(start, start_objectives, g);

  for (int step = 0; step < params.max_steps && ctx.budget_left(); ++step) {
    std::unordered_set<std::string> seen{r.best.key()};
    std::optional<Design> best_move;
    ObjectiveVector best_obj;
    double best_g = g;
    for (int c = 0; c < params.neighbors && ctx.budget_left(); ++c) {
      Design cand;
      try {
        cand = neighbor_move(ctx.instance, r.best,
                             derive_seed(seed, {static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(c)}));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoFeasibleMove) throw;
        continue;
      }
      if (!seen.insert(cand.key()).second) continue;
      auto obj = evaluate(ctx.instance, cand, ctx.cache);
      r.evaluated.push_back(obj);
      const double cg = g_of(obj);
      if (cg < best_g) {
        best_g = cg;
        best_move = std::move(cand);
        best_obj = std::move(obj);
      }
    }
    if (!best_move) break;
    r.best = std::move(*best_move);
    r.best_objectives = std::move(best_obj);
    g = best_g;
    visit(r.best, r.best_objectives, g);
  }
  r.trajectory.terminal_g = g;
  return r;
}

// ---------------------------------------------------------------------------
// Start-point selection

/// Indices of the `n_local` candidates with the lowest predicted outcome,
/// ties broken by lower index.
inline std::vector<std::size_t> ml_guide(const Forest& forest,
                                         std::span<const std::vector<double>> candidate_features,
                                         int n_local) {
  if (n_local < 1 || n_local > static_cast<int>(candidate_features.size()))
    throw Error(ErrorCode::BadNLocal, "n_local must be in [1, population size]");
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(candidate_features.size());
  for (std::size_t i = 0; i < candidate_features.size(); ++i)
    scored.push_back({rf_predict(forest, candidate_features[i]), i});
  std::stable_sort(scored.begin(), scored.end());
  std::vector<std::size_t> out;
  for (int i = 0; i < n_local; ++i) out.push_back(scored[i].second);
  return out;
}

}  // namespace moela
