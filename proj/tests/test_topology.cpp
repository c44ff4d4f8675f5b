#include <doctest.h>

#include "sdpsim/topology.hpp"

using namespace sdpsim;

TEST_CASE("group layout partitions ranks into contiguous groups") {
  GroupLayout layout = build_group_layout(8, 4);
  REQUIRE(layout.num_partition_groups() == 2);
  CHECK(layout.partition_groups[0] == std::vector<int>{0, 1, 2, 3});
  CHECK(layout.partition_groups[1] == std::vector<int>{4, 5, 6, 7});
  REQUIRE(layout.replication_groups.size() == 4);
  CHECK(layout.replication_groups[0] == std::vector<int>{0, 4});
  CHECK(layout.replication_groups[3] == std::vector<int>{3, 7});
}

TEST_CASE("every rank appears in exactly one partition and one replication group") {
  for (int n : {4, 12, 24}) {
    for (int p = 1; p <= n; ++p) {
      if (n % p != 0) continue;
      GroupLayout layout = build_group_layout(n, p);
      std::vector<int> part_seen(n, 0), repl_seen(n, 0);
      for (const auto& g : layout.partition_groups)
        for (int r : g) ++part_seen[r];
      for (const auto& g : layout.replication_groups)
        for (int r : g) ++repl_seen[r];
      for (int r = 0; r < n; ++r) {
        CHECK(part_seen[r] == 1);
        CHECK(repl_seen[r] == 1);
        CHECK(layout.partition_group_of(r) == r / p);
        CHECK(layout.replication_group_of(r) == r % p);
      }
    }
  }
}

TEST_CASE("partition and replication groups intersect in exactly one rank") {
  GroupLayout layout = build_group_layout(16, 4);
  for (const auto& pg : layout.partition_groups)
    for (const auto& rg : layout.replication_groups) {
      int common = 0;
      for (int a : pg)
        for (int b : rg)
          if (a == b) ++common;
      CHECK(common == 1);
    }
}

TEST_CASE("layout construction rejects bad shapes") {
  CHECK_THROWS_AS(build_group_layout(8, 3), Error);
  CHECK_THROWS_AS(build_group_layout(8, 0), Error);
  CHECK_THROWS_AS(build_group_layout(4, 8), Error);
  CHECK_THROWS_AS(build_group_layout(0, 1), Error);
}

TEST_CASE("node-alignment check for partition sizes") {
  CHECK(partition_shape_ok(2, 8));   // quarter node
  CHECK(partition_shape_ok(8, 8));   // whole node
  CHECK(partition_shape_ok(16, 8));  // two whole nodes
  CHECK(partition_shape_ok(1, 8));
  CHECK_FALSE(partition_shape_ok(3, 8));
  CHECK_FALSE(partition_shape_ok(12, 8));
}

TEST_CASE("model state bytes: 16 bytes per parameter by default") {
  CHECK(model_state_bytes(1'000'000) == 16'000'000);
  CHECK(model_state_bytes(10, 4) == 40);
}

TEST_CASE("minimal feasible partition size grows with model size") {
  ClusterSpec cluster;
  cluster.num_nodes = 8;
  cluster.devices_per_node = 8;
  cluster.intra_node_bandwidth = 1;
  cluster.inter_node_bandwidth_per_node = 1;
  cluster.device_memory = 32ull << 30;

  // 160 GB of states: 8 devices give 20 GB/device, within 0.85 * 32 GB.
  const std::uint64_t states = 160ull << 30;
  CHECK(min_feasible_partition(states, cluster, /*node_granular=*/false) == 8);
  CHECK(min_feasible_partition(states, cluster, /*node_granular=*/true) == 8);

  // Small model fits on one device.
  CHECK(min_feasible_partition(1ull << 30, cluster, false) == 1);
  // Node-granular search starts at whole nodes.
  CHECK(min_feasible_partition(1ull << 30, cluster, true) == 8);

  // Nothing fits: 64 devices * 27.2 GB < 10 TB.
  CHECK_THROWS_AS(min_feasible_partition(10ull << 40, cluster, false), Error);
  try {
    min_feasible_partition(10ull << 40, cluster, false);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Infeasible);
  }
}

TEST_CASE("cluster validation") {
  ClusterSpec c;
  c.num_nodes = 2;
  c.devices_per_node = 4;
  c.intra_node_bandwidth = 1;
  c.inter_node_bandwidth_per_node = 1;
  CHECK_NOTHROW(c.validate());
  CHECK(c.total_ranks() == 8);
  CHECK(c.node_of(5) == 1);
  CHECK(c.local_node_rank(5) == 1);
  c.num_nodes = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}
