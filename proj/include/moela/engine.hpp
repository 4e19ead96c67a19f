// SPDX-License-Identifier: Apache-2.0
//
// Decomposition-based search loop. One engine drives all three algorithms:
//
//   Moela   surrogate-guided local search, then one EA generation
//   Moead   EA generations only
//   LsOnly  surrogate-guided local search only
//
// Every random decision is drawn from derive_seed(seed, {...}), so a run is a
// pure function of (instance, config, algorithm, seed) and can be resumed
// from a checkpoint without carrying generator state.
#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "moela/forest.hpp"
#include "moela/moo.hpp"
#include "moela/objectives.hpp"
#include "moela/problem.hpp"
#include "moela/search.hpp"

namespace moela {

enum class Algorithm { Moela, Moead, LsOnly };

constexpr std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Moela: return "moela";
    case Algorithm::Moead: return "moead";
    case Algorithm::LsOnly: return "lsonly";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view s) {
  if (s == "moela") return Algorithm::Moela;
  if (s == "moead") return Algorithm::Moead;
  if (s == "lsonly") return Algorithm::LsOnly;
  throw Error(ErrorCode::BadConfig, "unknown algorithm '" + std::string(s) + "'");
}

struct RunConfig {
  int pop_n = 50;
  int gen = 1000;
  int iter_early = 2;
  int n_local = 5;
  double delta = 0.9;
  int neighborhood = 10;
  int replace_cap = 2;
  std::uint64_t eval_budget = 200000;
  double stop_time_s = 0.0;  // 0 disables the wall-clock limit
  LocalSearchParams local_search;
  ForestParams forest;

  void validate() const {
    auto bad = [](const std::string& m) { throw Error(ErrorCode::BadConfig, m); };
    if (pop_n < 2) bad("pop_n must be >= 2");
    if (gen < 0) bad("gen must be >= 0");
    if (iter_early < 0) bad("iter_early must be >= 0");
    if (n_local < 1 || n_local > pop_n) bad("n_local must be in [1, pop_n]");
    if (!(delta >= 0.0 && delta <= 1.0)) bad("delta must be in [0, 1]");
    if (neighborhood < 2 || neighborhood > pop_n) bad("neighborhood must be in [2, pop_n]");
    if (replace_cap < 1) bad("replace_cap must be >= 1");
    if (stop_time_s < 0.0) bad("stop_time_s must be >= 0");
    if (local_search.max_steps < 1 || local_search.neighbors < 1) bad("local search budget must be >= 1");
    if (forest.tree_count < 1 || forest.max_depth < 0 || forest.min_leaf < 1) bad("invalid forest parameters");
  }
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct SubProblem {
  int index = 0;
  WeightVector weight;
  Design incumbent;
  ObjectiveVector objectives;
  std::vector<int> neighborhood;
};

struct LogRecord {
  int iteration = 0;
  std::uint64_t evaluations = 0;
  double elapsed_ms = 0.0;
  double phv = 0.0;
  ReferencePoint ideal;
  std::vector<ObjectiveVector> population;
  std::size_t training_size = 0;
};

struct RunLog {
  std::string algorithm;
  std::uint64_t instance_digest = 0;
  int objectives = 0;
  std::uint64_t seed = 0;
  std::vector<LogRecord> records;

  std::vector<TracePoint> trace() const {
    std::vector<TracePoint> t;
    t.reserve(records.size());
    for (const auto& r : records) t.push_back({r.evaluations, r.elapsed_ms, r.phv});
    return t;
  }
};

struct RunResult {
  std::vector<SubProblem> population;
  RunLog log;
  std::optional<Forest> forest;
  std::uint64_t forest_digest = 0;
  RunConfig config;
};

/// Everything needed to continue a run bit-for-bit.
struct Checkpoint {
  RunConfig config;
  Algorithm algorithm = Algorithm::Moela;
  std::uint64_t seed = 0;
  int iteration = 0;
  bool finished = false;
  std::vector<SubProblem> population;
  ReferencePoint ideal;
  ObjectiveBounds bounds;
  std::vector<TrainingSample> training;
  std::optional<Forest> forest;
  std::vector<Point> archive_points;
  double archive_volume = 0.0;
  RunLog log;
  std::vector<std::pair<std::string, ObjectiveVector>> cache_entries;
  std::uint64_t cache_count = 0;
};

inline constexpr int kScaleSampleSize = 256;

/// Per-objective divisor shared by every run on an instance: the largest
/// value seen over a fixed sample of random designs. Scaled objectives of
/// random designs lie in [0, 1], so the hypervolume reference point
/// (1.1, ..., 1.1) sits just past their nadir.
inline ObjectiveScale reference_scale(const ProblemInstance& inst) {
  const auto base = instance_digest(inst);
  ObjectiveScale s;
  s.divisor.assign(inst.objective_count, 0.0);
  for (int i = 0; i < kScaleSampleSize; ++i) {
    const auto d = random_design(inst, derive_seed(base, {0x5ca1eULL, static_cast<std::uint64_t>(i)}));
    const auto v = compute_objectives(inst, d);
    for (int k = 0; k < inst.objective_count; ++k) s.divisor[k] = std::max(s.divisor[k], v[k]);
  }
  for (auto& x : s.divisor)
    if (!(x > 0.0)) x = 1.0;
  return s;
}

inline std::uint64_t forest_digest(const Forest& f) {
  std::string bytes;
  auto put = [&bytes](const auto& v) { bytes.append(reinterpret_cast<const char*>(&v), sizeof(v)); };
  put(f.feature_count);
  for (const auto& t : f.trees)
    for (const auto& n : t.nodes) {
      put(n.feature);
      put(n.threshold);
      put(n.left);
      put(n.right);
      put(n.value);
    }
  return fnv1a(bytes);
}

/// T nearest weight vectors by Euclidean distance, self first, ties by index.
inline std::vector<std::vector<int>> weight_neighborhoods(std::span<const WeightVector> weights, int t) {
  const int n = static_cast<int>(weights.size());
  std::vector<std::vector<int>> out(n);
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> d;
    d.reserve(n);
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < weights[i].size(); ++k)
        s += (weights[i][k] - weights[j][k]) * (weights[i][k] - weights[j][k]);
      d.push_back({j == i ? -1.0 : s, j});
    }
    std::sort(d.begin(), d.end());
    for (int k = 0; k < t; ++k) out[i].push_back(d[k].second);
  }
  return out;
}

/// Replaces incumbents of the pool, visited in seeded random order, whose
/// Tchebycheff value the offspring strictly improves; at most `cap` of them.
/// Returns the replaced indices.
inline std::vector<int> update_population(std::vector<SubProblem>& population, const Design& offspring,
                                          const ObjectiveVector& objectives, std::span<const int> pool,
                                          std::span<const double> scaled_ideal, const ObjectiveScale& scale,
                                          int cap, std::uint64_t seed) {
  std::vector<int> order(pool.begin(), pool.end());
  auto rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto off = scale.apply(objectives);
  std::vector<int> replaced;
  for (int j : order) {
    if (static_cast<int>(replaced.size()) >= cap) break;
    auto& sp = population[j];
    if (tchebycheff(off, sp.weight, scaled_ideal) < tchebycheff(scale.apply(sp.objectives), sp.weight, scaled_ideal)) {
      sp.incumbent = offspring;
      sp.objectives = objectives;
      replaced.push_back(j);
    }
  }
  return replaced;
}

struct RunHooks {
  /// Called for every design that enters the population, initial ones included.
  std::function<void(const Design&, const ObjectiveVector&)> on_accept;
  std::function<void(const LogRecord&)> on_record;
};

class Engine {
 public:
  Engine(const ProblemInstance& inst, RunConfig config, Algorithm algo, std::uint64_t seed,
         RunHooks hooks = {})
      : inst_(inst), config_(config), algo_(algo), seed_(seed), hooks_(std::move(hooks)),
        cache_(std::make_unique<EvalCache>()) {
    validate(inst_);
    config_.validate();
    scale_ = reference_scale(inst_);
    archive_ = HypervolumeArchive(Point(inst_.objective_count, kReferenceCoordinate));
    log_.algorithm = std::string(to_string(algo_));
    log_.instance_digest = instance_digest(inst_);
    log_.objectives = inst_.objective_count;
    log_.seed = seed_;
  }

  static Engine resume(const ProblemInstance& inst, Checkpoint cp, RunHooks hooks = {}) {
    Engine e(inst, cp.config, cp.algorithm, cp.seed, std::move(hooks));
    if (cp.log.instance_digest != e.log_.instance_digest)
      throw Error(ErrorCode::MixedInstances, "checkpoint was taken on a different instance");
    e.iteration_ = cp.iteration;
    e.finished_ = cp.finished;
    e.initialized_ = true;
    e.population_ = std::move(cp.population);
    e.ideal_ = std::move(cp.ideal);
    e.bounds_ = std::move(cp.bounds);
    for (auto& s : cp.training) e.training_.add(std::move(s));
    e.forest_ = std::move(cp.forest);
    e.archive_.restore(std::move(cp.archive_points), cp.archive_volume);
    e.log_ = std::move(cp.log);
    e.cache_->restore(std::move(cp.cache_entries), cp.cache_count);
    e.elapsed_offset_ms_ = e.log_.records.empty() ? 0.0 : e.log_.records.back().elapsed_ms;
    return e;
  }

  Checkpoint checkpoint() const {
    Checkpoint cp;
    cp.config = config_;
    cp.algorithm = algo_;
    cp.seed = seed_;
    cp.iteration = iteration_;
    cp.finished = finished_;
    cp.population = population_;
    cp.ideal = ideal_;
    cp.bounds = bounds_;
    cp.training = training_.snapshot();
    cp.forest = forest_;
    cp.archive_points = archive_.points();
    cp.archive_volume = archive_.volume();
    cp.log = log_;
    cp.cache_entries = cache_->entries();
    cp.cache_count = cache_->eval_count();
    return cp;
  }

  /// Random population, weights, neighborhoods and ideal point; logs
  /// iteration 0.
  void initialize() {
    if (initialized_) return;
    clock_start_ = std::chrono::steady_clock::now();
    const int n = config_.pop_n;
    const auto weights = weight_vectors(n, inst_.objective_count);
    const auto hoods = weight_neighborhoods(weights, config_.neighborhood);
    population_.resize(n);
    for (int i = 0; i < n; ++i) {
      auto& sp = population_[i];
      sp.index = i;
      sp.weight = weights[i];
      sp.neighborhood = hoods[i];
      sp.incumbent = random_design(inst_, derive_seed(seed_, {kTagInit, static_cast<std::uint64_t>(i)}));
      sp.objectives = evaluate(inst_, sp.incumbent, *cache_);
      observe(sp.objectives);
      accept(sp.incumbent, sp.objectives);
    }
    initialized_ = true;
    record();
    finished_ = should_stop();
  }

  /// One full iteration. Returns false once the run has terminated.
  bool step() {
    if (!initialized_) initialize();
    if (finished_) return false;
    if (algo_ != Algorithm::Moead) local_search_phase();
    if (algo_ != Algorithm::LsOnly && budget_left()) ea_step();
    ++iteration_;
    record();
    finished_ = should_stop();
    return !finished_;
  }

  RunResult run() {
    initialize();
    while (step()) {
    }
    return result();
  }

  RunResult result() const {
    RunResult r;
    r.population = population_;
    r.log = log_;
    r.forest = forest_;
    r.forest_digest = forest_ ? forest_digest(*forest_) : 0;
    r.config = config_;
    return r;
  }

  /// Selects start points, runs the local searches, feeds their results
  /// through the population update and retrains the surrogate.
  void local_search_phase() {
    const auto starts = select_starts();
    const SearchContext ctx{inst_, *cache_, scale_, bounds_, config_.eval_budget};
    for (auto idx : starts) {
      if (!budget_left()) break;
      auto& sp = population_[idx];
      const auto z = scale_.apply(ideal_);
      auto res = greedy_local_search(ctx, sp.incumbent, sp.objectives, sp.weight, z, config_.local_search,
                                     derive_seed(seed_, {kTagLocal, u64(iteration_), u64(idx)}));
      for (const auto& v : res.evaluated) observe(v);
      for (auto& s : res.trajectory.samples()) training_.add(std::move(s));
      const auto hood = population_[idx].neighborhood;
      offer(res.best, res.best_objectives, hood, derive_seed(seed_, {kTagLocalUpdate, u64(iteration_), u64(idx)}));
    }
    if (training_.size() >= 2)
      forest_ = rf_train(training_.snapshot(), config_.forest, derive_seed(seed_, {kTagForest, u64(iteration_)}));
  }

  /// One generation: an offspring per sub-problem in index order.
  void ea_step() {
    const int n = config_.pop_n;
    std::vector<int> everyone(n);
    std::iota(everyone.begin(), everyone.end(), 0);
    for (int i = 0; i < n && budget_left(); ++i) {
      auto rng = make_rng(derive_seed(seed_, {kTagEa, u64(iteration_), u64(i)}));
      const bool local = uniform01(rng) < config_.delta;
      const std::vector<int> pool = local ? population_[i].neighborhood : everyone;
      const int pa = uniform_int(rng, 0, static_cast<int>(pool.size()) - 1);
      int pb = uniform_int(rng, 0, static_cast<int>(pool.size()) - 2);
      if (pb >= pa) ++pb;
      const auto child = crossover(inst_, population_[pool[pa]].incumbent, population_[pool[pb]].incumbent, rng());
      auto offspring = mutate(inst_, child, rng());
      const auto obj = evaluate(inst_, offspring, *cache_);
      observe(obj);
      offer(offspring, obj, pool, rng());
    }
  }

  const std::vector<SubProblem>& population() const { return population_; }
  const ReferencePoint& ideal() const { return ideal_; }
  const ObjectiveScale& scale() const { return scale_; }
  const RunLog& log() const { return log_; }
  const TrainingSet& training() const { return training_; }
  const std::optional<Forest>& forest() const { return forest_; }
  const EvalCache& cache() const { return *cache_; }
  const HypervolumeArchive& archive() const { return archive_; }
  int iteration() const { return iteration_; }
  bool finished() const { return finished_; }

 private:
  static constexpr std::uint64_t kTagInit = 1, kTagStart = 2, kTagLocal = 3, kTagLocalUpdate = 4,
                                 kTagForest = 5, kTagEa = 6;
  static std::uint64_t u64(std::size_t v) { return static_cast<std::uint64_t>(v); }

  bool budget_left() const { return cache_->eval_count() < config_.eval_budget; }

  double elapsed_ms() const {
    return elapsed_offset_ms_ +
           std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - clock_start_).count();
  }

  bool should_stop() const {
    return iteration_ >= config_.gen || !budget_left() ||
           (config_.stop_time_s > 0.0 && elapsed_ms() >= 1000.0 * config_.stop_time_s);
  }

  void observe(const ObjectiveVector& v) {
    ideal_ = ideal_.empty() ? v : update_ideal(ideal_, v);
    bounds_.update(v);
  }

  void accept(const Design& d, const ObjectiveVector& v) {
    archive_.insert(scale_.apply(v));
    if (hooks_.on_accept) hooks_.on_accept(d, v);
  }

  void offer(const Design& d, const ObjectiveVector& v, std::span<const int> pool, std::uint64_t seed) {
    const auto replaced = update_population(population_, d, v, pool, scale_.apply(ideal_), scale_,
                                            config_.replace_cap, seed);
    if (!replaced.empty()) accept(d, v);
  }

  std::vector<std::size_t> select_starts() {
    const int n = config_.pop_n;
    if (iteration_ < config_.iter_early || !forest_) {
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      auto rng = make_rng(derive_seed(seed_, {kTagStart, u64(iteration_)}));
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(config_.n_local);
      return idx;
    }
    std::vector<std::vector<double>> features;
    features.reserve(n);
    for (const auto& sp : population_)
      features.push_back(make_features(inst_, sp.incumbent, sp.objectives, sp.weight, bounds_));
    return ml_guide(*forest_, features, config_.n_local);
  }

  void record() {
    LogRecord r;
    r.iteration = iteration_;
    r.evaluations = cache_->eval_count();
    r.elapsed_ms = elapsed_ms();
    r.phv = archive_.volume();
    r.ideal = ideal_;
    r.population.reserve(population_.size());
    for (const auto& sp : population_) r.population.push_back(sp.objectives);
    r.training_size = training_.size();
    log_.records.push_back(r);
    if (hooks_.on_record) hooks_.on_record(log_.records.back());
  }

  ProblemInstance inst_;
  RunConfig config_;
  Algorithm algo_;
  std::uint64_t seed_;
  RunHooks hooks_;
  std::unique_ptr<EvalCache> cache_;
  ObjectiveScale scale_;
  HypervolumeArchive archive_;
  std::vector<SubProblem> population_;
  ReferencePoint ideal_;
  ObjectiveBounds bounds_;
  TrainingSet training_;
  std::optional<Forest> forest_;
  RunLog log_;
  int iteration_ = 0;
  bool initialized_ = false;
  bool finished_ = false;
  std::chrono::steady_clock::time_point clock_start_ = std::chrono::steady_clock::now();
  double elapsed_offset_ms_ = 0.0;
};

inline RunResult run_algorithm(const ProblemInstance& inst, const RunConfig& config, Algorithm algo,
                               std::uint64_t seed, RunHooks hooks = {}) {
  return Engine(inst, config, algo, seed, std::move(hooks)).run();
}

inline RunResult run_moela(const ProblemInstance& inst, const RunConfig& config, std::uint64_t seed,
                           RunHooks hooks = {}) {
  return run_algorithm(inst, config, Algorithm::Moela, seed, std::move(hooks));
}

inline RunResult run_moead(const ProblemInstance& inst, const RunConfig& config, std::uint64_t seed,
                           RunHooks hooks = {}) {
  return run_algorithm(inst, config, Algorithm::Moead, seed, std::move(hooks));
}

inline RunResult run_ls_only(const ProblemInstance& inst, const RunConfig& config, std::uint64_t seed,
                             RunHooks hooks = {}) {
  return run_algorithm(inst, config, Algorithm::LsOnly, seed, std::move(hooks));
}

}  // namespace moela
