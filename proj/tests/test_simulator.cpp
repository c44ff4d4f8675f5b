#include <doctest.h>

#include <cstdint>
#include <vector>

#include "sdpsim/simulator.hpp"

using namespace sdpsim;

namespace {

ClusterSpec test_cluster(int nodes, int k) {
  ClusterSpec c;
  c.num_nodes = nodes;
  c.devices_per_node = k;
  c.intra_node_bandwidth = 128e9;
  c.inter_node_bandwidth_per_node = 12.5e9;
  c.alpha_intra = 3e-6;
  c.alpha_inter = 20e-6;
  c.device_memory = 32ull << 30;
  c.device_peak_flops = 125e12;
  return c;
}

std::vector<LayerSpec> test_layers(int count, std::uint64_t param_bytes,
                                   double flops = 1e12) {
  std::vector<LayerSpec> layers(count);
  for (auto& l : layers) {
    l.param_bytes = param_bytes;
    l.fwd_flops = flops;
    l.bwd_flops = 2 * flops;
  }
  return layers;
}

StrategyConfig grouped(int p, bool hier, bool two_hop, int s = 1) {
  StrategyConfig cfg;
  cfg.name = "grouped";
  cfg.strategy = Strategy::grouped;
  cfg.p = p;
  cfg.hierarchical_gather = hier;
  cfg.two_hop = two_hop;
  cfg.s = s;
  return cfg;
}

StrategyConfig zero3(int s = 1) {
  StrategyConfig cfg;
  cfg.name = "zero3";
  cfg.strategy = Strategy::zero3;
  cfg.s = s;
  return cfg;
}

}  // namespace

TEST_CASE("simulation is a pure function of its inputs") {
  const ClusterSpec cluster = test_cluster(8, 8);
  const auto layers = test_layers(16, 64ull << 20);
  const auto cfg = grouped(8, true, true, 4);
  const IterationTrace a = simulate_iteration(cluster, layers, cfg);
  const IterationTrace b = simulate_iteration(cluster, layers, cfg);
  CHECK(a.total_seconds == b.total_seconds);
  CHECK(a.inter_node_bytes == b.inter_node_bytes);
  CHECK(a.gather_scatter_bytes_per_rank == b.gather_scatter_bytes_per_rank);
}

TEST_CASE("zero3 per-rank gather+scatter volume matches the closed form") {
  for (int nodes : {2, 4}) {
    const int n = nodes * 2;
    ClusterSpec cluster = test_cluster(nodes, 2);
    // Layer sizes divisible by n keep the byte accounting exact.
    const auto layers = test_layers(3, static_cast<std::uint64_t>(n) * 4096);
    const IterationTrace t = simulate_iteration(cluster, layers, zero3());
    const double M = static_cast<double>(total_param_bytes(layers));
    CHECK(static_cast<double>(t.gather_scatter_bytes_per_rank) ==
          zero3_iteration_volume(n, M));
  }
}

TEST_CASE("hierarchical gather saves exactly (k-1)M/p inter-node bytes per node and pass") {
  const int nodes = 4, k = 4, p = 16;
  ClusterSpec cluster = test_cluster(nodes, k);
  const std::uint64_t M = 16ull * 8192;
  const auto layers = test_layers(1, M);

  const IterationTrace vanilla =
      simulate_iteration(cluster, layers, grouped(p, false, true));
  const IterationTrace hier =
      simulate_iteration(cluster, layers, grouped(p, true, true));

  // Per gather pass and node: vanilla moves (p-1)M/p, hierarchical (p-k)M/p.
  const std::uint64_t per_node_vanilla = (p - 1) * M / p;
  const std::uint64_t per_node_hier = (p - k) * M / p;
  CHECK(per_node_vanilla ==
        static_cast<std::uint64_t>(inter_node_traffic(p, k, static_cast<double>(M), false)));
  CHECK(per_node_hier ==
        static_cast<std::uint64_t>(inter_node_traffic(p, k, static_cast<double>(M), true)));
  // Two gather passes (fwd + bwd) differ; sync traffic is identical.
  CHECK(vanilla.inter_node_bytes - hier.inter_node_bytes ==
        2ull * nodes * (per_node_vanilla - per_node_hier));
  CHECK(hier.fwd_gather_seconds < vanilla.fwd_gather_seconds);
}

TEST_CASE("gather traffic is conserved: every chunk lands somewhere") {
  const int nodes = 2, k = 4, p = 8;
  ClusterSpec cluster = test_cluster(nodes, k);
  const std::uint64_t M = 8ull * 1024;
  const auto layers = test_layers(1, M, 0);
  for (bool hier : {false, true}) {
    const IterationTrace t =
        simulate_iteration(cluster, layers, grouped(p, hier, true));
    // fwd gather + bwd gather + micro reduce-scatter: 3 collectives, each
    // moving (p-1) chunks to each of the n ranks.
    const std::uint64_t expected_total = 3ull * p * (p - 1) * (M / p);
    CHECK(t.intra_node_bytes + t.inter_node_bytes == expected_total);
  }
}

TEST_CASE("two-hop sync confines micro-step traffic to partition groups") {
  const int nodes = 4, k = 8;
  ClusterSpec cluster = test_cluster(nodes, k);
  const auto layers = test_layers(4, 32ull << 20);

  const IterationTrace two_hop =
      simulate_iteration(cluster, layers, grouped(8, false, true, 4));
  const IterationTrace global =
      simulate_iteration(cluster, layers, grouped(8, false, false, 4));
  // p = k = 8: partition groups live inside nodes, so the only inter-node
  // sync traffic of the two-hop run is the boundary all-reduce.
  CHECK(two_hop.micro_sync_seconds < global.micro_sync_seconds);
  CHECK(two_hop.boundary_sync_seconds > 0);
  CHECK(global.boundary_sync_seconds == 0);
  CHECK(two_hop.inter_node_bytes < global.inter_node_bytes);
}

TEST_CASE("prefetch overlaps gather with compute") {
  ClusterSpec cluster = test_cluster(4, 8);
  const auto layers = test_layers(24, 32ull << 20, 5e13);
  StrategyConfig eager = grouped(8, true, true, 1);
  StrategyConfig blocking = eager;
  blocking.prefetch_depth = 0;
  const IterationTrace a = simulate_iteration(cluster, layers, eager);
  const IterationTrace b = simulate_iteration(cluster, layers, blocking);
  CHECK(a.total_seconds <= b.total_seconds);
  CHECK(a.total_seconds >= std::max(a.comm_seconds(), a.compute_seconds()));
  // Without prefetch the timeline is fully serialized.
  CHECK(b.total_seconds == doctest::Approx(b.comm_seconds() + b.compute_seconds()));
}

TEST_CASE("infeasible partitions are rejected with the infeasible error code") {
  ClusterSpec cluster = test_cluster(2, 2);
  cluster.device_memory = 1ull << 20;  // 1 MiB
  const auto layers = test_layers(4, 16ull << 20);
  try {
    simulate_iteration(cluster, layers, grouped(1, false, false));
    FAIL("expected infeasibility");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Infeasible);
  }
  // Even the widest partition leaves far more than 1 MiB per device.
  CHECK_THROWS_AS(simulate_iteration(cluster, layers, zero3()), Error);
}

TEST_CASE("strategy validation errors") {
  ClusterSpec cluster = test_cluster(2, 4);
  const auto layers = test_layers(2, 1 << 20);
  CHECK_THROWS_AS(simulate_iteration(cluster, layers, grouped(3, false, false)), Error);
  CHECK_THROWS_AS(simulate_iteration(cluster, layers, grouped(16, false, false)), Error);
  StrategyConfig bad = zero3();
  bad.two_hop = true;
  CHECK_THROWS_AS(simulate_iteration(cluster, layers, bad), Error);
}

TEST_CASE("comparison ratios are 1 for the baseline and consistent for others") {
  ClusterSpec cluster = test_cluster(4, 8);
  const auto layers = test_layers(8, 64ull << 20);
  const auto cmp = compare_strategies(cluster, layers,
                                      {zero3(2), grouped(8, true, true, 2)});
  CHECK(cmp.throughput_ratio[0] == doctest::Approx(1.0));
  CHECK(cmp.memory_ratio[0] == doctest::Approx(1.0));
  CHECK(cmp.throughput_ratio[1] ==
        doctest::Approx(cmp.results[0].trace.total_seconds /
                        cmp.results[1].trace.total_seconds));
  // Smaller partitions hold a larger shard of the model states.
  CHECK(cmp.memory_ratio[1] > 1.0);
  CHECK_THROWS_AS(compare_strategies(cluster, layers, {zero3()}), Error);
}

TEST_CASE("transformer layer derivation reproduces the published totals within 3%") {
  struct Row {
    int hidden, inter, layers, vocab;
    double params;
  };
  const Row rows[] = {
      {2560, 10240, 127, 32008, 10e9},
      {2560, 10240, 190, 32008, 15e9},
      {5120, 20480, 64, 32008, 20e9},
      {8192, 32768, 62, 32008, 50e9},
  };
  for (const Row& r : rows) {
    const auto layers =
        derive_layers_from_transformer(r.hidden, r.inter, r.layers, r.vocab, 512, 2);
    CHECK(layers.size() == static_cast<std::size_t>(r.layers) + 1);
    const double params = static_cast<double>(total_param_bytes(layers)) / 2.0;
    CHECK(params == doctest::Approx(r.params).epsilon(0.03));
  }
  CHECK_THROWS_AS(derive_layers_from_transformer(0, 1, 1, 1, 1, 2), Error);
}
