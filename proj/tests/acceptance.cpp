// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Pass criterion numbers as arguments to run
// a subset.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "moela/io.hpp"
#include "oracle.hpp"

namespace fs = std::filesystem;
using namespace moela;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::size_t g_max_training = 0;

void track_training(const RunLog& log) {
  for (const auto& r : log.records) g_max_training = std::max(g_max_training, r.training_size);
}

ProblemInstance make(int n, int layers, int gpus, int cpus, int llcs, int planar, int vertical, std::uint64_t seed,
                     int objectives = 5, TrafficModel traffic = TrafficModel::UniformRandom) {
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

ProblemInstance small(std::uint64_t seed) { return make(3, 2, 10, 4, 4, 24, 6, seed); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream o;
  o.precision(prec);
  o << v;
  return o.str();
}

// 1 -------------------------------------------------------------------------

Verdict objective_oracle() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int checked = 0;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const auto inst = small(s);
    for (std::uint64_t k = 0; k < 10; ++k) {
      const auto d = random_design(inst, derive_seed(s, {k}));
      const auto got = compute_objectives(inst, d);
      const auto want = oracle::objectives(inst, d);
      for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, oracle::relative_error(got[i], want[i]));
      ++checked;
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 60.0, std::to_string(checked) + " designs, max relative error " + fmt(worst) +
                                            ", " + fmt(secs, 3) + " s"};
}

// 2 -------------------------------------------------------------------------

Verdict thermal_hand_cases() {
  const std::vector<double> p = {1, 1}, r = {1, 1};
  const double t1 = stack_temperature(p, r, 0.5, 1), t2 = stack_temperature(p, r, 0.5, 2);
  auto inst = small(1);
  std::fill(inst.pe_power.begin(), inst.pe_power.end(), 3.0);
  double uniform = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) uniform = std::max(uniform, thermal(inst, random_design(inst, s)));
  return {t1 == 1.5 && t2 == 4.0 && uniform == 0.0,
          "T1=" + fmt(t1) + " T2=" + fmt(t2) + " uniform-power thermal=" + fmt(uniform)};
}

// 3 -------------------------------------------------------------------------

Verdict hypervolume_correctness() {
  const double hand = hypervolume(std::vector<Point>{{0.25, 0.75}, {0.75, 0.25}}, Point{1, 1});
  bool ok = hand == 0.3125;

  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto random_points = [&](std::size_t n, std::size_t m) {
    std::vector<Point> pts(n, Point(m));
    for (auto& q : pts)
      for (auto& x : q) x = u(rng);
    return pts;
  };
  const std::uint64_t samples = 1'000'000;
  int mc_fail = 0;
  double worst_z = 0.0;
  for (int f = 0; f < 50; ++f) {
    const std::size_t m = 2 + f % 4;
    const auto pts = random_points(5 + f % 16, m);
    const Point ref(m, kReferenceCoordinate);
    const double exact = hypervolume(pts, ref);
    const double box = std::pow(kReferenceCoordinate, static_cast<double>(m));
    const double q = exact / box;
    const double se = box * std::sqrt(q * (1 - q) / static_cast<double>(samples));
    const double mc = hypervolume_mc(pts, ref, samples, derive_seed(7, {static_cast<std::uint64_t>(f)}));
    const double z = se > 0 ? std::abs(mc - exact) / se : 0.0;
    worst_z = std::max(worst_z, z);
    if (z > 3.0) ++mc_fail;
  }
  ok = ok && mc_fail == 0;

  int mono_fail = 0;
  for (int c = 0; c < 100; ++c) {
    const std::size_t m = 2 + c % 4;
    auto pts = random_points(6, m);
    const Point ref(m, kReferenceCoordinate);
    const double base = hypervolume(pts, ref);
    auto more = pts;
    more.push_back(random_points(1, m).front());
    auto fewer = pts;
    fewer.erase(fewer.begin() + c % fewer.size());
    if (hypervolume(more, ref) < base || hypervolume(fewer, ref) > base) ++mono_fail;
  }
  ok = ok && mono_fail == 0;
  return {ok, "hand value " + fmt(hand) + "; MC: " + std::to_string(mc_fail) + "/50 beyond 3 SE (worst " +
                  fmt(worst_z, 3) + " SE); monotonicity violations " + std::to_string(mono_fail) + "/100"};
}

// 4 -------------------------------------------------------------------------

Verdict scalarization_spot_checks() {
  bool ok = tchebycheff(Point{1, 2}, Point{0.5, 0.5}, Point{1, 2}) == 0.0 &&
            weighted_sum(Point{1, 2}, Point{0.5, 0.5}, Point{1, 2}) == 0.0 &&
            tchebycheff(Point{3, 7}, Point{1, 0}, Point{1, 2}) == 2.0 &&
            tchebycheff(Point{3, 5}, Point{0.5, 0.5}, Point{1, 1}) == 2.0 &&
            weighted_sum(Point{3, 5}, Point{0.5, 0.5}, Point{1, 1}) == 3.0;
  const bool hand = ok;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  int violations = 0;
  for (int t = 0; t < 10'000; ++t) {
    const std::size_t m = 2 + t % 4;
    Point obj(m), w(m), z(m);
    double sum = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      obj[k] = u(rng);
      z[k] = u(rng);
      w[k] = u(rng);
      sum += w[k];
    }
    for (auto& x : w) x /= sum;
    if (weighted_sum(obj, w, z) < tchebycheff(obj, w, z)) ++violations;
  }
  ok = ok && violations == 0;
  return {ok, std::string("hand examples ") + (hand ? "exact" : "MISMATCH") + "; weighted_sum < tchebycheff in " +
                  std::to_string(violations) + "/10000 triples"};
}

// 5 -------------------------------------------------------------------------

Verdict constraint_closure() {
  const auto inst = small(1);
  RunConfig cfg;
  cfg.gen = 1'000'000;
  cfg.eval_budget = 20'000;
  std::size_t inserted = 0, violations = 0;
  RunHooks hooks;
  hooks.on_accept = [&](const Design& d, const ObjectiveVector&) {
    ++inserted;
    if (!check_constraints(inst, d).feasible()) ++violations;
  };
  const auto r = run_moela(inst, cfg, 1, hooks);
  track_training(r.log);
  for (const auto& sp : r.population)
    if (!check_constraints(inst, sp.incumbent).feasible()) ++violations;
  return {violations == 0 && inserted > 0, std::to_string(inserted) + " insertions over " +
                                                std::to_string(r.log.records.back().evaluations) +
                                                " evaluations, " + std::to_string(violations) + " violations"};
}

// 6 -------------------------------------------------------------------------

int shell(const std::string& cmd) {
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

Verdict cli_determinism() {
  const fs::path dir = fs::temp_directory_path() / "dse_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string bin = DSE_BINARY;
  InstanceRecipe recipe;
  recipe.seed = 11;
  write_json(dir / "recipe.json", to_json(recipe));
  RunConfig cfg;
  cfg.gen = 1'000'000;
  cfg.eval_budget = 5'000;
  write_json(dir / "config.json", to_json(cfg));
  bool ok = shell(bin + " generate --recipe " + (dir / "recipe.json").string() + " --out " +
                  (dir / "inst.json").string()) == 0;
  std::string detail;
  for (const std::string algo : {"moela", "moead", "lsonly"}) {
    std::string logs[2];
    for (int k = 0; k < 2; ++k) {
      const auto out = dir / (algo + std::to_string(k));
      ok = ok && shell(bin + " run --algo " + algo + " --instance " + (dir / "inst.json").string() + " --config " +
                       (dir / "config.json").string() + " --seed 5 --out " + out.string() + " >/dev/null") == 0;
      if (fs::exists(out / "log.jsonl")) logs[k] = read_text(out / "log.jsonl");
    }
    const bool same = !logs[0].empty() && logs[0] == logs[1];
    ok = ok && same;
    detail += algo + (same ? " identical (" + std::to_string(logs[0].size()) + " bytes); " : " DIFFERENT; ");
  }
  fs::remove_all(dir);
  return {ok, detail};
}

// 7, 8, 9 -------------------------------------------------------------------

struct CaseResult {
  std::string name;
  int objectives = 0;
  std::vector<double> moela, moead, lsonly;
  std::vector<double> speedup;
};

struct Experiment {
  std::vector<CaseResult> cases;
  double seconds = 0.0;
};

const Experiment& table_two_experiment() {
  static std::optional<Experiment> cached;
  if (cached) return *cached;
  Experiment ex;
  const auto t0 = Clock::now();
  struct Spec {
    const char* name;
    TrafficModel traffic;
    std::uint64_t seed;
  };
  const Spec specs[] = {{"uniform-random/s1", TrafficModel::UniformRandom, 1},
                        {"hotspot/s2", TrafficModel::Hotspot, 2},
                        {"cpu-llc-heavy/s3", TrafficModel::CpuLlcHeavy, 3},
                        {"uniform-random/s4", TrafficModel::UniformRandom, 4},
                        {"hotspot/s5", TrafficModel::Hotspot, 5}};
  RunConfig cfg;
  cfg.gen = 1'000'000;
  cfg.eval_budget = 50'000;
  for (int m : {3, 5})
    for (const auto& sp : specs) {
      const auto inst = make(3, 3, 15, 6, 6, 36, 12, sp.seed, m, sp.traffic);
      CaseResult c;
      c.name = sp.name;
      c.objectives = m;
      const auto ti = Clock::now();
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto a = run_moela(inst, cfg, seed);
        const auto b = run_moead(inst, cfg, seed);
        const auto l = run_ls_only(inst, cfg, seed);
        for (const auto* r : {&a, &b, &l}) track_training(r->log);
        c.moela.push_back(a.log.records.back().phv);
        c.moead.push_back(b.log.records.back().phv);
        c.lsonly.push_back(l.log.records.back().phv);
        const auto s = speedup_factor(b.log.trace(), a.log.trace());
        c.speedup.push_back(s.never_reached ? 0.0 : s.factor);
      }
      std::cout << "    m=" << m << " " << c.name << ": median PHV moela " << fmt(median(c.moela)) << ", moead "
                << fmt(median(c.moead)) << ", lsonly " << fmt(median(c.lsonly)) << "; median speedup "
                << fmt(median(c.speedup), 4) << " (" << fmt(seconds_since(ti), 4) << " s)\n"
                << std::flush;
      ex.cases.push_back(std::move(c));
    }
  ex.seconds = seconds_since(t0);
  cached = std::move(ex);
  return *cached;
}

Verdict table_two_direction() {
  const auto& ex = table_two_experiment();
  int medians_ok = 0, strict5 = 0, total = 0;
  for (const auto& c : ex.cases) {
    const double a = median(c.moela), b = median(c.moead), l = median(c.lsonly);
    ++total;
    if (a >= b && a >= l) ++medians_ok;
    if (c.objectives == 5 && a > b && a > l) ++strict5;
  }
  const bool ok = medians_ok == total && strict5 >= 3;
  return {ok, "MOELA median >= both baselines in " + std::to_string(medians_ok) + "/" + std::to_string(total) +
                  " cases; strictly greater in " + std::to_string(strict5) + "/5 five-objective instances; " +
                  fmt(ex.seconds / 60.0, 3) + " min total"};
}

Verdict table_one_speedup() {
  const auto& ex = table_two_experiment();
  std::vector<double> all;
  int never = 0;
  for (const auto& c : ex.cases)
    for (double s : c.speedup) {
      all.push_back(s);
      never += s == 0.0;
    }
  const double med = median(all);
  return {med > 1.0, "median speedup " + fmt(med, 4) + " over " + std::to_string(all.size()) +
                         " paired runs (" + std::to_string(never) + " never reached the converged PHV)"};
}

Verdict surrogate_sanity() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1, 1);
  auto make_set = [&](int n) {
    std::vector<TrainingSample> out;
    for (int i = 0; i < n; ++i) {
      std::vector<double> x = {u(rng), u(rng), u(rng)};
      out.push_back({x, 2.0 * x[0] - 3.0 * x[1] + 0.5 * x[2] + 1.0});
    }
    return out;
  };
  const auto train = make_set(1000), test = make_set(500);
  const auto f = rf_train(train, ForestParams{}, 1);
  double mean = 0.0;
  for (const auto& s : test) mean += s.label;
  mean /= static_cast<double>(test.size());
  double mse = 0.0, var = 0.0;
  for (const auto& s : test) {
    const double p = rf_predict(f, s.features);
    mse += (p - s.label) * (p - s.label);
    var += (s.label - mean) * (s.label - mean);
  }
  mse /= static_cast<double>(test.size());
  var /= static_cast<double>(test.size());
  table_two_experiment();
  const bool ok = mse < 0.5 * var && g_max_training <= kTrainingCapacity;
  return {ok, "held-out MSE " + fmt(mse, 4) + " vs 0.5 x variance " + fmt(0.5 * var, 4) +
                  "; largest training set seen " + std::to_string(g_max_training)};
}

// 10 ------------------------------------------------------------------------

Verdict full_scale_smoke() {
  const auto inst = generate_instance(full_scale_recipe(1));
  RunConfig cfg;
  cfg.gen = 50;
  const auto t0 = Clock::now();
  const auto r = run_moela(inst, cfg, 1);
  track_training(r.log);
  const auto& rec = r.log.records;
  bool monotone = true;
  for (std::size_t i = 1; i < rec.size(); ++i) monotone = monotone && rec[i].phv >= rec[i - 1].phv;
  int feasible = 0;
  for (const auto& sp : r.population) feasible += check_constraints(inst, sp.incumbent).feasible();
  const int iterations = rec.back().iteration;
  const bool ok = iterations == 50 && feasible == 50 && r.population.size() == 50 && monotone;
  return {ok, std::to_string(iterations) + " iterations, " + std::to_string(rec.back().evaluations) +
                  " evaluations, " + std::to_string(feasible) + "/50 feasible, PHV " +
                  (monotone ? "monotone" : "NOT monotone") + " (" + fmt(rec.back().phv) + "), " +
                  fmt(seconds_since(t0), 3) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<const char*, std::function<Verdict()>>> criteria = {
      {1, {"objective-model oracle equivalence", objective_oracle}},
      {2, {"thermal hand cases", thermal_hand_cases}},
      {3, {"hypervolume correctness", hypervolume_correctness}},
      {4, {"scalarization spot checks", scalarization_spot_checks}},
      {5, {"constraint closure over a MOELA run", constraint_closure}},
      {6, {"dse run determinism", cli_determinism}},
      {7, {"MOELA PHV vs baselines at equal budget", table_two_direction}},
      {8, {"speedup over MOEA/D", table_one_speedup}},
      {9, {"surrogate sanity", surrogate_sanity}},
      {10, {"full-scale smoke test", full_scale_smoke}},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& [id, entry] : criteria) {
    if (!wanted.empty() && !wanted.count(id)) continue;
    const auto& [name, fn] = entry;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << v.detail << '\n'
              << std::flush;
  }
  return failures == 0 ? 0 : 1;
}
