#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <random>

#include "sdpsim/sync_schedule.hpp"

using namespace sdpsim;

namespace {

template <typename T, typename Dist>
std::vector<std::vector<std::vector<T>>> random_grads(int s, int n,
                                                      std::size_t len,
                                                      Dist dist,
                                                      std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::vector<std::vector<std::vector<T>>> grads(s);
  for (auto& step : grads) {
    step.resize(n);
    for (auto& g : step) {
      g.resize(len);
      for (auto& v : g) v = static_cast<T>(dist(rng));
    }
  }
  return grads;
}

}  // namespace

TEST_CASE("two-hop and global schedules both match the scalar oracle (int64)") {
  for (int n : {2, 4, 8, 16}) {
    for (int p = 1; p <= n; ++p) {
      if (n % p != 0) continue;
      for (int s : {1, 2, 4}) {
        GroupLayout layout = build_group_layout(n, p);
        auto grads = random_grads<std::int64_t>(
            s, n, 13, std::uniform_int_distribution<std::int64_t>(-1000, 1000),
            static_cast<std::uint32_t>(n * 100 + p * 10 + s));
        VirtualRankEngine engine(2);

        auto two_hop = make_sync_states<std::int64_t>(layout, 13, s);
        for (int step = 0; step < s; ++step)
          two_hop_micro_step(engine, layout, two_hop, grads[step]);
        two_hop_boundary(engine, layout, two_hop);

        auto alt = make_sync_states<std::int64_t>(layout, 13, s);
        for (int step = 0; step < s; ++step)
          alternative_schedule_step(engine, layout, alt, grads[step]);
        alternative_boundary(alt);

        auto oracle = oracle_global_sync(grads, layout);
        for (int r = 0; r < n; ++r) {
          REQUIRE(two_hop[r].shard == oracle[r]);
          REQUIRE(alt[r].shard == oracle[r]);
        }
      }
    }
  }
}

TEST_CASE("float payloads agree with the oracle within 1e-5 relative") {
  const int n = 8, p = 4, s = 3;
  GroupLayout layout = build_group_layout(n, p);
  auto grads = random_grads<float>(
      s, n, 21, std::uniform_real_distribution<float>(-1.0f, 1.0f), 42);
  VirtualRankEngine engine(1);

  auto two_hop = make_sync_states<float>(layout, 21, s);
  for (int step = 0; step < s; ++step)
    two_hop_micro_step(engine, layout, two_hop, grads[step]);
  two_hop_boundary(engine, layout, two_hop);

  auto alt = make_sync_states<float>(layout, 21, s);
  for (int step = 0; step < s; ++step)
    alternative_schedule_step(engine, layout, alt, grads[step]);
  alternative_boundary(alt);

  auto oracle = oracle_global_sync(grads, layout);
  for (int r = 0; r < n; ++r) {
    for (std::size_t e = 0; e < oracle[r].size(); ++e) {
      const float ref = oracle[r][e];
      const float tol = 1e-5f * std::max(1.0f, std::fabs(ref));
      CHECK(std::fabs(two_hop[r].shard[e] - ref) <= tol);
      CHECK(std::fabs(alt[r].shard[e] - ref) <= tol);
    }
  }
}

TEST_CASE("two-hop emits per-group micro events and per-shard boundary events") {
  const int n = 8, p = 4, s = 2;
  GroupLayout layout = build_group_layout(n, p);
  auto grads = random_grads<std::int64_t>(
      s, n, 16, std::uniform_int_distribution<std::int64_t>(-5, 5), 1);
  VirtualRankEngine engine(1);
  std::vector<SyncEvent> log;

  auto states = make_sync_states<std::int64_t>(layout, 16, s);
  for (int step = 0; step < s; ++step)
    two_hop_micro_step(engine, layout, states, grads[step], &log);
  two_hop_boundary(engine, layout, states, &log);

  int micro = 0, boundary = 0;
  for (const auto& ev : log) {
    if (ev.phase == SyncPhase::micro_rs) {
      ++micro;
      CHECK(ev.bytes == (p - 1) * 4 * sizeof(std::int64_t));  // chunk = 16/4
    } else if (ev.phase == SyncPhase::boundary_ar) {
      ++boundary;
    }
  }
  CHECK(micro == s * layout.num_partition_groups());
  CHECK(boundary == p);
}

TEST_CASE("boundary before s micro-steps is a schedule violation") {
  GroupLayout layout = build_group_layout(4, 2);
  VirtualRankEngine engine(1);
  auto states = make_sync_states<std::int64_t>(layout, 8, 2);
  std::vector<std::vector<std::int64_t>> grads(4, std::vector<std::int64_t>(8, 1));

  CHECK_THROWS_AS(two_hop_boundary(engine, layout, states), Error);
  two_hop_micro_step(engine, layout, states, grads);
  CHECK_THROWS_AS(two_hop_boundary(engine, layout, states), Error);
  two_hop_micro_step(engine, layout, states, grads);
  // One micro-step too many.
  CHECK_THROWS_AS(two_hop_micro_step(engine, layout, states, grads), Error);
  CHECK_NOTHROW(two_hop_boundary(engine, layout, states));
  // Counter reset: the next accumulation window starts cleanly.
  CHECK_NOTHROW(two_hop_micro_step(engine, layout, states, grads));
}

TEST_CASE("micro-steps of the two-hop schedule stay inside partition groups") {
  const int n = 8, p = 4;
  GroupLayout layout = build_group_layout(n, p);
  ClusterSpec cluster;
  cluster.num_nodes = 2;
  cluster.devices_per_node = 4;
  cluster.intra_node_bandwidth = 1;
  cluster.inter_node_bandwidth_per_node = 1;

  VirtualRankEngine engine(1);
  auto states = make_sync_states<std::int64_t>(layout, 12, 1);
  std::vector<std::vector<std::int64_t>> grads(n, std::vector<std::int64_t>(12, 1));
  two_hop_micro_step(engine, layout, states, grads);
  for (const auto& [key, bytes] : engine.traffic())
    CHECK(layout.partition_group_of(key.first) ==
          layout.partition_group_of(key.second));
}
