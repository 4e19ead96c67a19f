// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <numeric>
#include <thread>

#include "oracle.hpp"
#include "support.hpp"

using namespace moela;
using namespace moela::testing;

TEST(Mean, HandValues) {
  EXPECT_EQ(mean_traffic(std::vector<double>{4, 4, 4}), 4.0);
  EXPECT_EQ(mean_traffic(std::vector<double>{10, 10, 0, 0}), 5.0);
  EXPECT_EQ(mean_traffic(std::vector<double>{0, 0}), 0.0);
  try {
    mean_traffic(std::vector<double>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyLinks);
  }
}

TEST(Variance, HandValues) {
  EXPECT_EQ(variance_traffic(std::vector<double>{3, 3, 3}), 0.0);
  EXPECT_EQ(variance_traffic(std::vector<double>{0, 10}), 25.0);
  const std::vector<double> u = {1, 4, 2, 8};
  std::vector<double> scaled;
  for (double v : u) scaled.push_back(3.0 * v);
  EXPECT_NEAR(variance_traffic(scaled), 9.0 * variance_traffic(u), 1e-12);
  try {
    variance_traffic(std::vector<double>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyLinks);
  }
}

TEST(Latency, HandValue) {
  // 2x2 layer wired as the path 0-1-3-2. PE ids: 0,1 GPU, 2 CPU, 3 LLC.
  auto inst = make_instance(2, 1, 2, 1, 1, 3, 0);
  std::fill(inst.traffic.begin(), inst.traffic.end(), 0.0);
  inst.latency.router_stages = 2.0;
  inst.latency.link_delay_per_unit = 1.0;
  inst.traffic[2 * 4 + 3] = 1.0;
  Design d{{2, 0, 3, 1}, {make_link(0, 1), make_link(1, 3), make_link(2, 3)}};
  std::sort(d.links.begin(), d.links.end());
  const auto rt = build_routing(inst, d);
  ASSERT_EQ(rt.hops(0, 2), 3);
  ASSERT_EQ(rt.path_delay(0, 2), 3.0);
  EXPECT_EQ(cpu_latency(inst, d, rt), 9.0);
}

TEST(Latency, ZeroAndLinearity) {
  auto inst = small_instance();
  const auto d = random_design(inst, 4);
  const auto kinds = inst.pe_kinds();
  const int a = inst.spec.tile_count();
  const auto base = cpu_latency(inst, d, build_routing(inst, d));
  auto doubled = inst;
  for (auto& v : doubled.traffic) v *= 2.0;
  EXPECT_NEAR(cpu_latency(doubled, d, build_routing(doubled, d)), 2.0 * base, 1e-12 * base);
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < a; ++j)
      if (kinds[i] == PeKind::Cpu && kinds[j] == PeKind::Llc) inst.traffic[i * a + j] = 0.0;
  EXPECT_EQ(cpu_latency(inst, d, build_routing(inst, d)), 0.0);
}

TEST(Latency, NeedsCpuAndLlc) {
  const auto inst = make_instance(2, 1, 4, 0, 0, 4, 0);
  const Design d{{0, 1, 2, 3}, mesh_links(2)};
  try {
    cpu_latency(inst, d, build_routing(inst, d));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoCpuOrLlc);
  }
}

TEST(Energy, HandValue) {
  // Two stacked single-tile layers joined by one vertical link; both
  // routers have degree 1.
  ProblemInstance inst;
  inst.spec.grid_n = 1;
  inst.spec.layers = 2;
  inst.spec.pe_inventory = {{PeKind::Gpu, 2}};
  inst.spec.vertical_links = 1;
  inst.traffic = {0.0, 2.0, 0.0, 0.0};
  inst.pe_power = {1.0, 1.0};
  inst.thermal.layer_resistance = {1.0, 1.0};
  inst.energy.link_energy = 0.5;
  inst.energy.router_energy = 0.25;
  const Design d{{0, 1}, {make_link(0, 1)}};
  EXPECT_EQ(energy(inst, d, build_routing(inst, d)), 2.0);
}

TEST(Energy, ZeroTrafficAndMonotone) {
  auto inst = small_instance();
  const auto d = random_design(inst, 8);
  const auto rt = build_routing(inst, d);
  const double base = energy(inst, d, rt);
  auto more = inst;
  more.traffic[1] += 3.0;
  EXPECT_GE(energy(more, d, rt), base);
  std::fill(inst.traffic.begin(), inst.traffic.end(), 0.0);
  EXPECT_EQ(energy(inst, d, rt), 0.0);
}

TEST(StackTemperature, WorkedExpansion) {
  const std::vector<double> p = {1, 1}, r = {1, 1};
  EXPECT_EQ(stack_temperature(p, r, 0.5, 1), 1.5);
  EXPECT_EQ(stack_temperature(p, r, 0.5, 2), 4.0);
  const std::vector<double> zero = {0, 0};
  EXPECT_EQ(stack_temperature(zero, r, 0.5, 2), 0.0);
  const std::vector<double> hotter = {1, 1.5};
  EXPECT_GT(stack_temperature(hotter, r, 0.5, 2), 4.0);
  try {
    stack_temperature(p, r, 0.5, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
  }
  try {
    stack_temperature(p, r, 0.5, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
  }
}

TEST(Thermal, UniformPowerIsZero) {
  auto inst = small_instance();
  std::fill(inst.pe_power.begin(), inst.pe_power.end(), 2.0);
  EXPECT_EQ(thermal(inst, random_design(inst, 1)), 0.0);
}

TEST(Thermal, TwoStacksHandValue) {
  // 2x2x1 grid: four stacks with powers {1, 2, 1, 2}.
  auto inst = make_instance(2, 1, 4, 0, 0, 3, 0);
  inst.pe_power = {1, 2, 1, 2};
  inst.thermal.layer_resistance = {1.0};
  inst.thermal.base_resistance = 0.0;
  const Design d{{0, 1, 2, 3}, {make_link(0, 1), make_link(0, 2), make_link(1, 3)}};
  EXPECT_EQ(thermal(inst, d), 2.0);
}

TEST(Thermal, StackPermutationInvariant) {
  const auto inst = small_instance();
  const auto d = random_design(inst, 2);
  const Geometry g(inst.spec);
  const int per = g.tiles_per_layer();
  // Relabel stacks by a fixed permutation applied identically on every layer.
  std::vector<int> perm(per);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  Design moved = d;
  for (int l = 0; l < g.layers(); ++l)
    for (int n = 0; n < per; ++n) moved.placement[l * per + perm[n]] = d.placement[l * per + n];
  EXPECT_DOUBLE_EQ(thermal(inst, moved), thermal(inst, d));
}

TEST(Evaluate, CacheCountsOnlyMisses) {
  const auto inst = small_instance();
  const auto d = random_design(inst, 1);
  EvalCache cache;
  const auto a = evaluate(inst, d, cache);
  const auto b = evaluate(inst, d, cache);
  EXPECT_EQ(a, b);
  EXPECT_EQ(cache.eval_count(), 1u);
  evaluate(inst, random_design(inst, 2), cache);
  EXPECT_EQ(cache.eval_count(), 2u);
}

TEST(Evaluate, ObjectiveOrderAndTruncation) {
  for (int m : {3, 4, 5}) {
    const auto inst = small_instance(1, m);
    const auto d = random_design(inst, 1);
    EvalCache cache;
    const auto v = evaluate(inst, d, cache);
    ASSERT_EQ(static_cast<int>(v.size()), m);
    const auto rt = build_routing(inst, d);
    const auto u = link_utilizations(rt, inst, d);
    EXPECT_EQ(v[0], mean_traffic(u));
    EXPECT_EQ(v[1], variance_traffic(u));
    EXPECT_EQ(v[2], cpu_latency(inst, d, rt));
    if (m >= 4) { EXPECT_EQ(v[3], energy(inst, d, rt)); }
    if (m >= 5) { EXPECT_EQ(v[4], thermal(inst, d)); }
  }
}

TEST(Evaluate, MatchesBruteForceOracle) {
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto inst = small_instance(s + 100);
    const auto d = random_design(inst, s);
    const auto got = compute_objectives(inst, d);
    const auto want = oracle::objectives(inst, d);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t k = 0; k < got.size(); ++k)
      EXPECT_LE(oracle::relative_error(got[k], want[k]), 1e-9) << kObjectiveNames[k] << " seed " << s;
  }
}

TEST(Evaluate, NonnegativeAndFinite) {
  const auto inst = small_instance(3);
  for (std::uint64_t s = 0; s < 1000; ++s) {
    for (double v : compute_objectives(inst, random_design(inst, s))) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0);
    }
  }
}

TEST(Evaluate, ConcurrentCacheUse) {
  const auto inst = small_instance();
  std::vector<Design> designs;
  for (std::uint64_t s = 0; s < 40; ++s) designs.push_back(random_design(inst, s % 20));
  EvalCache cache;
  std::vector<std::thread> workers;
  for (int w = 0; w < 4; ++w)
    workers.emplace_back([&] {
      for (const auto& d : designs) evaluate(inst, d, cache);
    });
  for (auto& t : workers) t.join();
  EXPECT_EQ(cache.eval_count(), 20u);
  EXPECT_EQ(cache.size(), 20u);
}

TEST(ProxyEdp, Values) {
  EXPECT_EQ(proxy_edp(std::vector<double>{0, 0, 3, 2}), 6.0);
  EXPECT_EQ(proxy_edp(std::vector<double>{1, 1, 0, 2, 9}), 0.0);
  try {
    proxy_edp(std::vector<double>{1, 2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingComponent);
  }
}

TEST(ProxyEdp, QuadraticInTraffic) {
  const auto inst = small_instance(7);
  auto scaled = inst;
  for (auto& v : scaled.traffic) v *= 3.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto d = random_design(inst, s);
    const double a = proxy_edp(compute_objectives(inst, d));
    const double b = proxy_edp(compute_objectives(scaled, d));
    EXPECT_NEAR(b, 9.0 * a, 1e-9 * b);
  }
}
