// SPDX-License-Identifier: Apache-2.0
//
// dse: command-line driver for instance generation, optimization runs,
// single-design evaluation, run comparison and front export.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "moela/io.hpp"

namespace fs = std::filesystem;
using namespace moela;

namespace {

constexpr const char* kLog = "log.jsonl";
constexpr const char* kTiming = "timing.jsonl";
constexpr const char* kPopulation = "population.json";
constexpr const char* kCheckpoint = "checkpoint.json";

struct RunArgs {
  std::string algo = "moela";
  std::string instance;
  std::string config;
  std::uint64_t seed = 1;
  std::string out;
  int repeat = 1;
  int checkpoint_every = 0;
  bool resume = false;
};

void append_line(const fs::path& p, const std::string& line) {
  std::ofstream out(p, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::IoError, "cannot append to " + p.string());
  out << line << '\n';
}

void write_outputs(const fs::path& dir, const ProblemInstance& inst, const RunResult& r) {
  fs::create_directories(dir / "designs");
  write_json(dir / kPopulation, population_to_json(r.population));
  for (const auto& sp : r.population) {
    char name[32];
    std::snprintf(name, sizeof name, "design_%03d.json", sp.index);
    write_json(dir / "designs" / name, to_json(sp.incumbent));
  }
  if (r.forest) write_json(dir / "forest.json", to_json(*r.forest));
  const auto& last = r.log.records.back();
  write_json(dir / "result.json", {{"algorithm", r.log.algorithm},
                                   {"seed", r.log.seed},
                                   {"instance_digest", instance_digest(inst)},
                                   {"iterations", last.iteration},
                                   {"evaluations", last.evaluations},
                                   {"phv", last.phv},
                                   {"forest_digest", r.forest_digest},
                                   {"config", to_json(r.config)}});
}

void run_one(const ProblemInstance& inst, const RunConfig& config, Algorithm algo, std::uint64_t seed,
             const fs::path& dir, int checkpoint_every, bool resume) {
  fs::create_directories(dir);
  const auto log_path = dir / kLog;
  const auto timing_path = dir / kTiming;
  RunHooks hooks;
  hooks.on_record = [&](const LogRecord& r) {
    append_line(log_path, to_json(r).dump());
    append_line(timing_path, timing_json(r).dump());
  };

  std::optional<Engine> engine;
  if (resume && fs::exists(dir / kCheckpoint)) {
    auto cp = checkpoint_from_json(read_json(dir / kCheckpoint));
    if (cp.algorithm != algo || cp.seed != seed)
      throw Error(ErrorCode::BadConfig, "checkpoint was written by a different algorithm or seed");
    engine.emplace(Engine::resume(inst, std::move(cp), hooks));
    // Rewrite the logs up to the checkpoint so appends continue cleanly.
    write_text(log_path, log_to_jsonl(engine->log()));
    write_text(timing_path, timing_to_jsonl(engine->log()));
  } else {
    engine.emplace(inst, config, algo, seed, hooks);
    write_text(log_path, log_header_json(engine->log()).dump() + "\n");
    write_text(timing_path, "");
    engine->initialize();
  }
  while (engine->step()) {
    if (checkpoint_every > 0 && engine->iteration() % checkpoint_every == 0)
      write_json(dir / kCheckpoint, to_json(engine->checkpoint()));
  }
  if (checkpoint_every > 0) write_json(dir / kCheckpoint, to_json(engine->checkpoint()));
  write_outputs(dir, inst, engine->result());
}

int cmd_run(const RunArgs& a) {
  const auto inst = instance_from_json(read_json(a.instance));
  validate(inst);
  const RunConfig config = a.config.empty() ? RunConfig{} : config_from_json(read_json(a.config));
  config.validate();
  const auto algo = parse_algorithm(a.algo);
  if (a.repeat < 1) throw Error(ErrorCode::BadConfig, "--repeat must be >= 1");
  if (a.repeat == 1) {
    run_one(inst, config, algo, a.seed, a.out, a.checkpoint_every, a.resume);
    return 0;
  }
  // Replicas are independent: each has its own engine, cache and directory.
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::vector<std::string> errors;
  const int workers = std::max(1, std::min<int>(a.repeat, static_cast<int>(std::thread::hardware_concurrency())));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int k = next++; k < a.repeat; k = next++) {
        const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(k);
        try {
          run_one(inst, config, algo, seed, fs::path(a.out) / ("seed_" + std::to_string(seed)), a.checkpoint_every,
                  a.resume);
        } catch (const std::exception& e) {
          std::lock_guard lock(err_mutex);
          errors.push_back("seed " + std::to_string(seed) + ": " + e.what());
        }
      }
    });
  for (auto& t : pool) t.join();
  if (!errors.empty()) throw Error(ErrorCode::IoError, errors.front());
  return 0;
}

RunSummary load_run(const fs::path& dir) {
  RunSummary s;
  const std::string timing = fs::exists(dir / kTiming) ? read_text(dir / kTiming) : std::string{};
  s.log = log_from_jsonl(read_text(dir / kLog), timing);
  if (fs::exists(dir / kPopulation))
    for (const auto& sp : population_from_json(read_json(dir / kPopulation))) s.population.push_back(sp.objectives);
  return s;
}

int cmd_evaluate(const std::string& instance_path, const std::string& design_path) {
  const auto inst = instance_from_json(read_json(instance_path));
  validate(inst);
  const auto d = design_from_json(read_json(design_path));
  const auto report = check_constraints(inst, d);
  Json out = {{"constraints", to_json(report)}};
  try {
    const auto v = compute_objectives(inst, d);
    out["objectives"] = v;
    out["proxy_edp"] = v.size() >= 4 ? Json(proxy_edp(v)) : Json(nullptr);
  } catch (const Error& e) {
    out["objectives"] = nullptr;
    out["error"] = std::string(to_string(e.code())) + ": " + e.what();
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_metrics(const std::string& moela_dir, const std::vector<std::string>& baseline_dirs,
                const std::string& out_path) {
  const auto moela = load_run(moela_dir);
  std::vector<RunSummary> baselines;
  for (const auto& b : baseline_dirs) baselines.push_back(load_run(b));
  const auto report = compare_runs(moela, baselines);
  const auto json = to_json(report);
  if (!out_path.empty()) {
    write_json(out_path, json);
    write_text(fs::path(out_path).replace_extension(".tsv"), metrics_table(report));
  }
  std::cout << json.dump(2) << '\n' << metrics_table(report);
  return 0;
}

int cmd_front(const std::string& run_dir, const std::string& out_path) {
  const auto pop = population_from_json(read_json(fs::path(run_dir) / kPopulation));
  if (pop.empty()) throw Error(ErrorCode::EmptyPopulation, "run has no population");
  std::vector<Point> pts;
  for (const auto& sp : pop) pts.push_back(sp.objectives);
  auto idx = pareto_indices(pts);
  // One row per distinct objective vector.
  std::vector<std::size_t> rows;
  for (auto i : idx)
    if (std::none_of(rows.begin(), rows.end(), [&](std::size_t r) { return pts[r] == pts[i]; })) rows.push_back(i);
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + out_path);
  out.precision(17);
  const auto m = pts.front().size();
  for (std::size_t k = 0; k < m; ++k) out << kObjectiveNames[k] << ',';
  out << "proxy_edp,design\n";
  for (auto i : rows) {
    for (double v : pts[i]) out << v << ',';
    if (m >= 4) out << proxy_edp(pts[i]);
    char name[32];
    std::snprintf(name, sizeof name, "design_%03d.json", pop[i].index);
    out << ',' << (fs::path(run_dir) / "designs" / name).string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Design-space exploration for 3D NoC manycore platforms"};
  app.require_subcommand(1);

  std::string recipe_path, gen_out;
  auto* gen = app.add_subcommand("generate", "Build an instance from a recipe");
  gen->add_option("--recipe", recipe_path, "recipe JSON")->required();
  gen->add_option("--out", gen_out, "instance JSON to write")->required();

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run an optimizer");
  run->add_option("--algo", run_args.algo, "moela | moead | lsonly")
      ->check(CLI::IsMember({"moela", "moead", "lsonly"}));
  run->add_option("--instance", run_args.instance, "instance JSON")->required();
  run->add_option("--config", run_args.config, "config JSON; defaults when omitted");
  run->add_option("--seed", run_args.seed, "run seed");
  run->add_option("--out", run_args.out, "run directory")->required();
  run->add_option("--repeat", run_args.repeat, "run k replicas with seeds seed..seed+k-1");
  run->add_option("--checkpoint-every", run_args.checkpoint_every, "write checkpoint.json every n iterations");
  run->add_flag("--resume", run_args.resume, "continue from checkpoint.json in the run directory");

  std::string eval_instance, eval_design;
  auto* eval = app.add_subcommand("evaluate", "Evaluate one design");
  eval->add_option("--instance", eval_instance, "instance JSON")->required();
  eval->add_option("--design", eval_design, "design JSON")->required();

  std::string metrics_moela, metrics_out;
  std::vector<std::string> metrics_baselines;
  auto* metrics = app.add_subcommand("metrics", "Compare a MOELA run against baselines");
  metrics->add_option("--moela", metrics_moela, "MOELA run directory")->required();
  metrics->add_option("--baseline", metrics_baselines, "baseline run directory (repeatable)")->required();
  metrics->add_option("--out", metrics_out, "also write the report JSON here (and a .tsv table beside it)");

  std::string front_run, front_out;
  auto* front = app.add_subcommand("front", "Export a run's Pareto front as CSV");
  front->add_option("--run", front_run, "run directory")->required();
  front->add_option("--out", front_out, "CSV to write")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto inst = generate_instance(recipe_from_json(read_json(recipe_path)));
      write_json(gen_out, to_json(inst));
      return 0;
    }
    if (*run) return cmd_run(run_args);
    if (*eval) return cmd_evaluate(eval_instance, eval_design);
    if (*metrics) return cmd_metrics(metrics_moela, metrics_baselines, metrics_out);
    if (*front) return cmd_front(front_run, front_out);
  } catch (const Error& e) {
    std::cerr << "dse: error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "dse: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
