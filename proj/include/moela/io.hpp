// SPDX-License-Identifier: Apache-2.0
//
// JSON encodings for every artifact a run reads or writes. Doubles are
// written in shortest round-trip form, so decode(encode(x)) == x.
#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "moela/engine.hpp"
#include "moela/harness.hpp"

namespace moela {

using Json = nlohmann::json;

namespace detail {

/// Rejects any key of `j` that is not listed.
inline void require_keys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, std::string(what) + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || k == a;
    if (!ok) throw Error(ErrorCode::ParseError, "unknown key '" + k + "' in " + std::string(what));
  }
}

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline std::string to_hex(const std::string& bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(2 * bytes.size());
  for (unsigned char c : bytes) {
    s.push_back(digits[c >> 4]);
    s.push_back(digits[c & 15]);
  }
  return s;
}

inline std::string from_hex(const std::string& hex) {
  if (hex.size() % 2) throw Error(ErrorCode::ParseError, "odd-length hex string");
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw Error(ErrorCode::ParseError, "bad hex digit");
  };
  std::string out(hex.size() / 2, '\0');
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<char>(nib(hex[2 * i]) * 16 + nib(hex[2 * i + 1]));
  return out;
}

inline PeKind parse_pe_kind(const std::string& s) {
  if (s == "CPU") return PeKind::Cpu;
  if (s == "GPU") return PeKind::Gpu;
  if (s == "LLC") return PeKind::Llc;
  throw Error(ErrorCode::ParseError, "unknown PE kind '" + s + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Instance and design

inline Json to_json(const ProblemInstance& inst) {
  Json inv = Json::array();
  for (const auto& e : inst.spec.pe_inventory) inv.push_back({{"kind", to_string(e.kind)}, {"count", e.count}});
  return {
      {"spec",
       {{"grid_n", inst.spec.grid_n},
        {"layers", inst.spec.layers},
        {"pe_inventory", inv},
        {"planar_links", inst.spec.planar_links},
        {"vertical_links", inst.spec.vertical_links},
        {"max_planar_length", inst.spec.max_planar_length},
        {"max_router_degree", inst.spec.max_router_degree}}},
      {"traffic", inst.traffic},
      {"pe_power", inst.pe_power},
      {"latency", {{"router_stages", inst.latency.router_stages}, {"link_delay_per_unit", inst.latency.link_delay_per_unit}}},
      {"energy", {{"link_energy", inst.energy.link_energy}, {"router_energy", inst.energy.router_energy}}},
      {"thermal", {{"layer_resistance", inst.thermal.layer_resistance}, {"base_resistance", inst.thermal.base_resistance}}},
      {"objective_count", inst.objective_count},
  };
}

inline ProblemInstance instance_from_json(const Json& j) {
  try {
    ProblemInstance inst;
    const auto& s = j.at("spec");
    inst.spec.grid_n = s.at("grid_n").get<int>();
    inst.spec.layers = s.at("layers").get<int>();
    for (const auto& e : s.at("pe_inventory"))
      inst.spec.pe_inventory.push_back({detail::parse_pe_kind(e.at("kind").get<std::string>()), e.at("count").get<int>()});
    inst.spec.planar_links = s.at("planar_links").get<int>();
    inst.spec.vertical_links = s.at("vertical_links").get<int>();
    inst.spec.max_planar_length = s.at("max_planar_length").get<int>();
    inst.spec.max_router_degree = s.at("max_router_degree").get<int>();
    inst.traffic = j.at("traffic").get<std::vector<double>>();
    inst.pe_power = j.at("pe_power").get<std::vector<double>>();
    inst.latency.router_stages = j.at("latency").at("router_stages").get<double>();
    inst.latency.link_delay_per_unit = j.at("latency").at("link_delay_per_unit").get<double>();
    inst.energy.link_energy = j.at("energy").at("link_energy").get<double>();
    inst.energy.router_energy = j.at("energy").at("router_energy").get<double>();
    inst.thermal.layer_resistance = j.at("thermal").at("layer_resistance").get<std::vector<double>>();
    inst.thermal.base_resistance = j.at("thermal").at("base_resistance").get<double>();
    inst.objective_count = j.at("objective_count").get<int>();
    return inst;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("instance: ") + e.what());
  }
}

inline Json to_json(const Design& d) {
  Json links = Json::array();
  for (const auto& l : d.links) links.push_back({l.a, l.b});
  return {{"placement", d.placement}, {"links", links}};
}

inline Design design_from_json(const Json& j) {
  try {
    Design d;
    d.placement = j.at("placement").get<std::vector<int>>();
    for (const auto& l : j.at("links")) {
      const auto pair = l.get<std::vector<int>>();
      if (pair.size() != 2) throw Error(ErrorCode::ParseError, "a link is a pair of tiles");
      d.links.push_back(make_link(pair[0], pair[1]));
    }
    std::sort(d.links.begin(), d.links.end());
    return d;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("design: ") + e.what());
  }
}

inline Json to_json(const ConstraintReport& r) {
  return {{"feasible", r.feasible()},
          {"connected", r.connected},
          {"planar_length_ok", r.planar_length_ok},
          {"degree_ok", r.degree_ok},
          {"vertical_multiplicity_ok", r.vertical_multiplicity_ok},
          {"llc_on_edge", r.llc_on_edge},
          {"violations", r.violations}};
}

// ---------------------------------------------------------------------------
// Recipe and config

inline Json to_json(const InstanceRecipe& r) {
  return {{"grid_n", r.grid_n},
          {"layers", r.layers},
          {"gpus", r.gpus},
          {"cpus", r.cpus},
          {"llcs", r.llcs},
          {"planar_links", r.planar_links},
          {"vertical_links", r.vertical_links},
          {"max_planar_length", r.max_planar_length},
          {"max_router_degree", r.max_router_degree},
          {"traffic", to_string(r.traffic)},
          {"f_max", r.f_max},
          {"power", to_string(r.power)},
          {"layer_resistance", r.layer_resistance},
          {"base_resistance", r.base_resistance},
          {"router_stages", r.latency.router_stages},
          {"link_delay_per_unit", r.latency.link_delay_per_unit},
          {"link_energy", r.energy.link_energy},
          {"router_energy", r.energy.router_energy},
          {"objective_count", r.objective_count},
          {"seed", r.seed}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline InstanceRecipe recipe_from_json(const Json& j) {
  try {
    detail::require_keys(j,
                         {"grid_n", "layers", "gpus", "cpus", "llcs", "planar_links", "vertical_links",
                          "max_planar_length", "max_router_degree", "traffic", "f_max", "power",
                          "layer_resistance", "base_resistance", "router_stages", "link_delay_per_unit",
                          "link_energy", "router_energy", "objective_count", "seed"},
                         "recipe");
    InstanceRecipe r;
    detail::read_opt(j, "grid_n", r.grid_n);
    detail::read_opt(j, "layers", r.layers);
    detail::read_opt(j, "gpus", r.gpus);
    detail::read_opt(j, "cpus", r.cpus);
    detail::read_opt(j, "llcs", r.llcs);
    detail::read_opt(j, "planar_links", r.planar_links);
    detail::read_opt(j, "vertical_links", r.vertical_links);
    detail::read_opt(j, "max_planar_length", r.max_planar_length);
    detail::read_opt(j, "max_router_degree", r.max_router_degree);
    if (j.contains("traffic")) r.traffic = parse_traffic_model(j.at("traffic").get<std::string>());
    detail::read_opt(j, "f_max", r.f_max);
    if (j.contains("power")) r.power = parse_power_model(j.at("power").get<std::string>());
    detail::read_opt(j, "layer_resistance", r.layer_resistance);
    detail::read_opt(j, "base_resistance", r.base_resistance);
    detail::read_opt(j, "router_stages", r.latency.router_stages);
    detail::read_opt(j, "link_delay_per_unit", r.latency.link_delay_per_unit);
    detail::read_opt(j, "link_energy", r.energy.link_energy);
    detail::read_opt(j, "router_energy", r.energy.router_energy);
    detail::read_opt(j, "objective_count", r.objective_count);
    detail::read_opt(j, "seed", r.seed);
    return r;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::BadRecipe, std::string("recipe: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw Error(ErrorCode::BadRecipe, e.what());
    throw;
  }
}

inline Json to_json(const RunConfig& c) {
  return {{"pop_n", c.pop_n},
          {"gen", c.gen},
          {"iter_early", c.iter_early},
          {"n_local", c.n_local},
          {"delta", c.delta},
          {"neighborhood", c.neighborhood},
          {"replace_cap", c.replace_cap},
          {"eval_budget", c.eval_budget},
          {"stop_time_s", c.stop_time_s},
          {"local_search", {{"max_steps", c.local_search.max_steps}, {"neighbors", c.local_search.neighbors}}},
          {"forest",
           {{"tree_count", c.forest.tree_count}, {"max_depth", c.forest.max_depth}, {"min_leaf", c.forest.min_leaf}}}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline RunConfig config_from_json(const Json& j) {
  try {
    detail::require_keys(j,
                         {"pop_n", "gen", "iter_early", "n_local", "delta", "neighborhood", "replace_cap",
                          "eval_budget", "stop_time_s", "local_search", "forest"},
                         "config");
    RunConfig c;
    detail::read_opt(j, "pop_n", c.pop_n);
    detail::read_opt(j, "gen", c.gen);
    detail::read_opt(j, "iter_early", c.iter_early);
    detail::read_opt(j, "n_local", c.n_local);
    detail::read_opt(j, "delta", c.delta);
    detail::read_opt(j, "neighborhood", c.neighborhood);
    detail::read_opt(j, "replace_cap", c.replace_cap);
    detail::read_opt(j, "eval_budget", c.eval_budget);
    detail::read_opt(j, "stop_time_s", c.stop_time_s);
    if (j.contains("local_search")) {
      const auto& ls = j.at("local_search");
      detail::require_keys(ls, {"max_steps", "neighbors"}, "config.local_search");
      detail::read_opt(ls, "max_steps", c.local_search.max_steps);
      detail::read_opt(ls, "neighbors", c.local_search.neighbors);
    }
    if (j.contains("forest")) {
      const auto& f = j.at("forest");
      detail::require_keys(f, {"tree_count", "max_depth", "min_leaf"}, "config.forest");
      detail::read_opt(f, "tree_count", c.forest.tree_count);
      detail::read_opt(f, "max_depth", c.forest.max_depth);
      detail::read_opt(f, "min_leaf", c.forest.min_leaf);
    }
    c.validate();
    return c;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw Error(ErrorCode::BadConfig, e.what());
    throw;
  }
}

// ---------------------------------------------------------------------------
// Forest

inline Json to_json(const Forest& f) {
  Json trees = Json::array();
  for (const auto& t : f.trees) {
    Json nodes = Json::array();
    for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    trees.push_back(nodes);
  }
  return {{"feature_count", f.feature_count},
          {"params",
           {{"tree_count", f.params.tree_count}, {"max_depth", f.params.max_depth}, {"min_leaf", f.params.min_leaf}}},
          {"trees", trees}};
}

inline Forest forest_from_json(const Json& j) {
  try {
    Forest f;
    f.feature_count = j.at("feature_count").get<int>();
    f.params.tree_count = j.at("params").at("tree_count").get<int>();
    f.params.max_depth = j.at("params").at("max_depth").get<int>();
    f.params.min_leaf = j.at("params").at("min_leaf").get<int>();
    for (const auto& t : j.at("trees")) {
      RegressionTree tree;
      for (const auto& n : t)
        tree.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                              n.at(4).get<double>()});
      f.trees.push_back(std::move(tree));
    }
    return f;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("forest: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Run log. log.jsonl holds a header line and one deterministic record per
// iteration; wall-clock times live in timing.jsonl so that identical runs
// produce identical logs.

inline Json log_header_json(const RunLog& log) {
  return {{"algorithm", log.algorithm},
          {"instance_digest", log.instance_digest},
          {"objectives", log.objectives},
          {"seed", log.seed}};
}

inline Json to_json(const LogRecord& r) {
  return {{"iteration", r.iteration},
          {"evaluations", r.evaluations},
          {"phv", r.phv},
          {"ideal", r.ideal},
          {"population", r.population},
          {"training_size", r.training_size}};
}

inline Json timing_json(const LogRecord& r) { return {{"iteration", r.iteration}, {"elapsed_ms", r.elapsed_ms}}; }

inline LogRecord record_from_json(const Json& j) {
  LogRecord r;
  r.iteration = j.at("iteration").get<int>();
  r.evaluations = j.at("evaluations").get<std::uint64_t>();
  r.phv = j.at("phv").get<double>();
  r.ideal = j.at("ideal").get<std::vector<double>>();
  r.population = j.at("population").get<std::vector<ObjectiveVector>>();
  r.training_size = j.at("training_size").get<std::size_t>();
  return r;
}

inline std::string log_to_jsonl(const RunLog& log) {
  std::string out = log_header_json(log).dump() + "\n";
  for (const auto& r : log.records) out += to_json(r).dump() + "\n";
  return out;
}

inline std::string timing_to_jsonl(const RunLog& log) {
  std::string out;
  for (const auto& r : log.records) out += timing_json(r).dump() + "\n";
  return out;
}

/// Parses log.jsonl text; `timing` (timing.jsonl text) may be empty.
inline RunLog log_from_jsonl(const std::string& text, const std::string& timing = {}) {
  try {
    RunLog log;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = Json::parse(line);
      if (header) {
        log.algorithm = j.at("algorithm").get<std::string>();
        log.instance_digest = j.at("instance_digest").get<std::uint64_t>();
        log.objectives = j.at("objectives").get<int>();
        log.seed = j.at("seed").get<std::uint64_t>();
        header = false;
      } else {
        log.records.push_back(record_from_json(j));
      }
    }
    if (header) throw Error(ErrorCode::ParseError, "log has no header line");
    std::istringstream tin(timing);
    while (std::getline(tin, line)) {
      if (line.empty()) continue;
      const auto j = Json::parse(line);
      const int it = j.at("iteration").get<int>();
      for (auto& r : log.records)
        if (r.iteration == it) r.elapsed_ms = j.at("elapsed_ms").get<double>();
    }
    return log;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("log: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Population and checkpoint

inline Json to_json(const SubProblem& sp) {
  return {{"index", sp.index},
          {"weight", sp.weight},
          {"design", to_json(sp.incumbent)},
          {"objectives", sp.objectives},
          {"neighborhood", sp.neighborhood}};
}

inline SubProblem subproblem_from_json(const Json& j) {
  SubProblem sp;
  sp.index = j.at("index").get<int>();
  sp.weight = j.at("weight").get<std::vector<double>>();
  sp.incumbent = design_from_json(j.at("design"));
  sp.objectives = j.at("objectives").get<std::vector<double>>();
  sp.neighborhood = j.at("neighborhood").get<std::vector<int>>();
  return sp;
}

inline Json population_to_json(const std::vector<SubProblem>& pop) {
  Json a = Json::array();
  for (const auto& sp : pop) a.push_back(to_json(sp));
  return a;
}

inline std::vector<SubProblem> population_from_json(const Json& j) {
  try {
    std::vector<SubProblem> pop;
    for (const auto& e : j) pop.push_back(subproblem_from_json(e));
    return pop;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("population: ") + e.what());
  }
}

inline Json to_json(const Checkpoint& cp) {
  Json training = Json::array();
  for (const auto& s : cp.training) training.push_back({{"features", s.features}, {"label", s.label}});
  Json cache = Json::array();
  for (const auto& [k, v] : cp.cache_entries) cache.push_back({detail::to_hex(k), v});
  Json bounds = {{"lo", cp.bounds.lo}, {"hi", cp.bounds.hi}};
  Json records = Json::array();
  for (const auto& r : cp.log.records) {
    auto j = to_json(r);
    j["elapsed_ms"] = r.elapsed_ms;
    records.push_back(std::move(j));
  }
  return {{"config", to_json(cp.config)},
          {"algorithm", to_string(cp.algorithm)},
          {"seed", cp.seed},
          {"iteration", cp.iteration},
          {"finished", cp.finished},
          {"population", population_to_json(cp.population)},
          {"ideal", cp.ideal},
          {"bounds", bounds},
          {"training", training},
          {"forest", cp.forest ? to_json(*cp.forest) : Json(nullptr)},
          {"archive", {{"points", cp.archive_points}, {"volume", cp.archive_volume}}},
          {"log", {{"header", log_header_json(cp.log)}, {"records", records}}},
          {"cache", {{"entries", cache}, {"count", cp.cache_count}}}};
}

inline Checkpoint checkpoint_from_json(const Json& j) {
  try {
    Checkpoint cp;
    cp.config = config_from_json(j.at("config"));
    cp.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    cp.seed = j.at("seed").get<std::uint64_t>();
    cp.iteration = j.at("iteration").get<int>();
    cp.finished = j.at("finished").get<bool>();
    cp.population = population_from_json(j.at("population"));
    cp.ideal = j.at("ideal").get<std::vector<double>>();
    cp.bounds.lo = j.at("bounds").at("lo").get<std::vector<double>>();
    cp.bounds.hi = j.at("bounds").at("hi").get<std::vector<double>>();
    for (const auto& s : j.at("training"))
      cp.training.push_back({s.at("features").get<std::vector<double>>(), s.at("label").get<double>()});
    if (!j.at("forest").is_null()) cp.forest = forest_from_json(j.at("forest"));
    cp.archive_points = j.at("archive").at("points").get<std::vector<Point>>();
    cp.archive_volume = j.at("archive").at("volume").get<double>();
    const auto& h = j.at("log").at("header");
    cp.log.algorithm = h.at("algorithm").get<std::string>();
    cp.log.instance_digest = h.at("instance_digest").get<std::uint64_t>();
    cp.log.objectives = h.at("objectives").get<int>();
    cp.log.seed = h.at("seed").get<std::uint64_t>();
    for (const auto& r : j.at("log").at("records")) {
      auto rec = record_from_json(r);
      rec.elapsed_ms = r.at("elapsed_ms").get<double>();
      cp.log.records.push_back(std::move(rec));
    }
    for (const auto& e : j.at("cache").at("entries"))
      cp.cache_entries.push_back({detail::from_hex(e.at(0).get<std::string>()), e.at(1).get<std::vector<double>>()});
    cp.cache_count = j.at("cache").at("count").get<std::uint64_t>();
    return cp;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Metrics report

inline Json to_json(const MetricValue& v) {
  Json j = Json::object();
  j["value"] = v.value ? Json(*v.value) : Json(nullptr);
  if (!v.error.empty()) j["error"] = v.error;
  return j;
}

inline MetricValue metric_from_json(const Json& j) {
  MetricValue v;
  if (!j.at("value").is_null()) v.value = j.at("value").get<double>();
  if (j.contains("error")) v.error = j.at("error").get<std::string>();
  return v;
}

inline Json to_json(const MetricsReport& rep) {
  Json bs = Json::array();
  for (const auto& b : rep.baselines)
    bs.push_back({{"algorithm", b.algorithm},
                  {"seed", b.seed},
                  {"speedup", to_json(b.speedup)},
                  {"speedup_wallclock", to_json(b.speedup_wallclock)},
                  {"phv_baseline", to_json(b.phv_baseline)},
                  {"phv_moela", to_json(b.phv_moela)},
                  {"phv_improvement", to_json(b.phv_improvement)},
                  {"edp_baseline", to_json(b.edp_baseline)},
                  {"edp_moela", to_json(b.edp_moela)},
                  {"edp_improvement", to_json(b.edp_improvement)}});
  return {{"instance_digest", rep.instance_digest},
          {"objectives", rep.objectives},
          {"moela_seed", rep.moela_seed},
          {"baselines", bs}};
}

inline MetricsReport report_from_json(const Json& j) {
  try {
    MetricsReport rep;
    rep.instance_digest = j.at("instance_digest").get<std::uint64_t>();
    rep.objectives = j.at("objectives").get<int>();
    rep.moela_seed = j.at("moela_seed").get<std::uint64_t>();
    for (const auto& b : j.at("baselines")) {
      BaselineMetrics m;
      m.algorithm = b.at("algorithm").get<std::string>();
      m.seed = b.at("seed").get<std::uint64_t>();
      m.speedup = metric_from_json(b.at("speedup"));
      m.speedup_wallclock = metric_from_json(b.at("speedup_wallclock"));
      m.phv_baseline = metric_from_json(b.at("phv_baseline"));
      m.phv_moela = metric_from_json(b.at("phv_moela"));
      m.phv_improvement = metric_from_json(b.at("phv_improvement"));
      m.edp_baseline = metric_from_json(b.at("edp_baseline"));
      m.edp_moela = metric_from_json(b.at("edp_moela"));
      m.edp_improvement = metric_from_json(b.at("edp_improvement"));
      rep.baselines.push_back(std::move(m));
    }
    return rep;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("report: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + p.string());
}

inline Json read_json(const std::filesystem::path& p) {
  try {
    return Json::parse(read_text(p));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, p.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& p, const Json& j) { write_text(p, j.dump(2) + "\n"); }

}  // namespace moela
