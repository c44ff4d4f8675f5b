#include "sdpsim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sdpsim {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) {
  return (a + b - 1) / b;
}

/// Cost and byte accounting of one collective, aggregated over all the
/// disjoint groups that execute it concurrently.
struct CommCost {
  double seconds = 0;
  std::uint64_t intra_bytes = 0;      // cluster-wide
  std::uint64_t inter_bytes = 0;      // cluster-wide, node ingress sum
  std::uint64_t per_rank_bytes = 0;   // received by each participating rank
};

double latency(const SimOptions& opts, int scale, double alpha) {
  if (!opts.include_latency) return 0;
  return collective_latency(scale, alpha, opts.latency_algorithm);
}

/// All-gather (or reduce-scatter, same volume shape) of p chunks within each
/// of the `num_groups` contiguous groups. Vanilla single-channel transport:
/// a spanning group pays (p-1)·chunk ingress per node through the NIC.
CommCost flat_collective(const ClusterSpec& cluster, int p, int num_groups,
                         std::uint64_t chunk, const SimOptions& opts) {
  CommCost c;
  if (p <= 1) return c;
  const int k = cluster.devices_per_node;
  c.per_rank_bytes = static_cast<std::uint64_t>(p - 1) * chunk;
  const std::uint64_t group_total = static_cast<std::uint64_t>(p) * c.per_rank_bytes;
  if (p <= k) {
    c.seconds = static_cast<double>(c.per_rank_bytes) / cluster.intra_node_bandwidth +
                latency(opts, p, cluster.alpha_intra);
    c.intra_bytes = group_total * num_groups;
  } else {
    const std::uint64_t ingress_per_node = static_cast<std::uint64_t>(p - 1) * chunk;
    c.seconds = static_cast<double>(ingress_per_node) /
                    cluster.inter_node_bandwidth_per_node +
                latency(opts, p, cluster.alpha_inter);
    const int nodes_per_group = p / k;
    c.inter_bytes =
        static_cast<std::uint64_t>(nodes_per_group) * ingress_per_node * num_groups;
    c.intra_bytes = group_total * num_groups - c.inter_bytes;
  }
  return c;
}

/// Three-stage hierarchical all-gather: k inter-node channels share the NIC
/// in stage 1, then one coalesced batch of intra-node gathers.
CommCost hierarchical_collective(const ClusterSpec& cluster, int p,
                                 int num_groups, std::uint64_t chunk,
                                 const SimOptions& opts) {
  const int k = cluster.devices_per_node;
  if (p <= k) return flat_collective(cluster, p, num_groups, chunk, opts);
  CommCost c;
  const int q = p / k;
  c.per_rank_bytes = static_cast<std::uint64_t>(p - 1) * chunk;
  const std::uint64_t ingress_per_node = static_cast<std::uint64_t>(p - k) * chunk;
  const double stage1 = static_cast<double>(ingress_per_node) /
                            cluster.inter_node_bandwidth_per_node +
                        latency(opts, q, cluster.alpha_inter);
  const double stage3 =
      static_cast<double>(static_cast<std::uint64_t>(q) * (k - 1) * chunk) /
          cluster.intra_node_bandwidth +
      latency(opts, k, cluster.alpha_intra);
  c.seconds = stage1 + stage3;
  c.inter_bytes = static_cast<std::uint64_t>(q) * ingress_per_node * num_groups;
  const std::uint64_t group_total = static_cast<std::uint64_t>(p) * c.per_rank_bytes;
  c.intra_bytes = group_total * num_groups - c.inter_bytes;
  return c;
}

/// Boundary all-reduce within every replication group (stride-p rank sets),
/// all p groups concurrent. `shard` is the per-rank owned byte count.
CommCost replication_all_reduce(const ClusterSpec& cluster, int n, int p,
                                std::uint64_t shard, const SimOptions& opts) {
  CommCost c;
  const int r = n / p;
  if (r <= 1) return c;
  const int k = cluster.devices_per_node;
  const int members_per_node = (p < k) ? k / p : 1;
  const std::uint64_t rs_chunk = ceil_div(shard, r);
  c.per_rank_bytes = 2ull * (r - 1) * rs_chunk;
  const std::uint64_t per_rank_inter = 2ull * (r - members_per_node) * rs_chunk;
  c.inter_bytes = static_cast<std::uint64_t>(n) * per_rank_inter;
  c.intra_bytes = static_cast<std::uint64_t>(n) * c.per_rank_bytes - c.inter_bytes;
  if (r > members_per_node) {
    // Every local rank pulls its replication traffic through the shared NIC.
    const std::uint64_t node_ingress = static_cast<std::uint64_t>(k) * per_rank_inter;
    c.seconds = static_cast<double>(node_ingress) /
                    cluster.inter_node_bandwidth_per_node +
                2 * latency(opts, r, cluster.alpha_inter);
  } else {
    c.seconds = static_cast<double>(c.per_rank_bytes) / cluster.intra_node_bandwidth +
                2 * latency(opts, r, cluster.alpha_intra);
  }
  return c;
}

struct ResolvedConfig {
  int p;
  bool hierarchical;
  bool two_hop;
};

ResolvedConfig resolve(const ClusterSpec& cluster, const StrategyConfig& cfg) {
  const int n = cluster.total_ranks();
  const int k = cluster.devices_per_node;
  if (cfg.s < 1) raise(Errc::OutOfRange, "micro-step count s must be >= 1");
  if (cfg.strategy == Strategy::zero3) {
    if (cfg.hierarchical_gather || cfg.two_hop)
      raise(Errc::ConfigError,
            "zero3 strategy gathers over all ranks with the global schedule; "
            "hierarchical_gather and two_hop must be off");
    if (cfg.p != 0 && cfg.p != n)
      raise(Errc::ConfigError, "zero3 strategy requires p = n (" +
                                   std::to_string(n) + "), got p = " +
                                   std::to_string(cfg.p));
    return {n, false, false};
  }
  if (cfg.p < 1 || cfg.p > n)
    raise(Errc::ConfigError, "partition_size must satisfy 1 <= p <= n, got " +
                                 std::to_string(cfg.p));
  if (n % cfg.p != 0)
    raise(Errc::ConfigError, "partition_size p=" + std::to_string(cfg.p) +
                                 " does not divide n=" + std::to_string(n));
  if (!partition_shape_ok(cfg.p, k))
    raise(Errc::ShapeError, "partition_size p=" + std::to_string(cfg.p) +
                                " is not node-aligned for k=" + std::to_string(k));
  return {cfg.p, cfg.hierarchical_gather, cfg.two_hop};
}

}  // namespace

std::uint64_t total_param_bytes(const std::vector<LayerSpec>& layers) {
  std::uint64_t total = 0;
  for (const auto& l : layers) total += l.param_bytes;
  return total;
}

IterationTrace simulate_iteration(const ClusterSpec& cluster,
                                  const std::vector<LayerSpec>& layers,
                                  const StrategyConfig& cfg,
                                  const SimOptions& options) {
  cluster.validate();
  if (layers.empty()) raise(Errc::OutOfRange, "no layers to simulate");
  for (const auto& l : layers)
    if (l.param_bytes == 0)
      raise(Errc::OutOfRange, "layer param_bytes must be > 0");

  const int n = cluster.total_ranks();
  const ResolvedConfig rc = resolve(cluster, cfg);
  const int p = rc.p;
  const int num_groups = n / p;
  const std::uint64_t model_bytes = total_param_bytes(layers);

  // Memory feasibility: owned shard of the full model states plus the
  // largest gathered layer replica.
  const std::uint64_t state_bytes = static_cast<std::uint64_t>(
      std::ceil(options.model_state_factor * static_cast<double>(model_bytes)));
  std::uint64_t max_layer = 0;
  for (const auto& l : layers) max_layer = std::max(max_layer, l.param_bytes);
  const std::uint64_t peak = ceil_div(state_bytes, p) + max_layer;
  if (static_cast<double>(peak) >
      static_cast<double>(cluster.device_memory) * options.memory_headroom)
    raise(Errc::Infeasible,
          "peak model-state footprint of " + std::to_string(peak) +
              " bytes/device exceeds " +
              std::to_string(static_cast<std::uint64_t>(
                  cluster.device_memory * options.memory_headroom)) +
              " bytes available with p = " + std::to_string(p));

  bool has_flops = false;
  for (const auto& l : layers)
    if (l.fwd_flops > 0 || l.bwd_flops > 0) has_flops = true;
  const double flops_rate = cluster.device_peak_flops * options.compute_efficiency;
  if (has_flops && flops_rate <= 0)
    raise(Errc::OutOfRange,
          "device_peak_flops must be > 0 when layers carry compute work");

  // Per-layer gather cost within the partition scope.
  const int L = static_cast<int>(layers.size());
  std::vector<CommCost> gather(L);
  std::vector<double> fwd_comp(L), bwd_comp(L);
  for (int i = 0; i < L; ++i) {
    const std::uint64_t chunk = ceil_div(layers[i].param_bytes, p);
    gather[i] = rc.hierarchical
                    ? hierarchical_collective(cluster, p, num_groups, chunk, options)
                    : flat_collective(cluster, p, num_groups, chunk, options);
    fwd_comp[i] = flops_rate > 0 ? layers[i].fwd_flops / flops_rate : 0;
    bwd_comp[i] = flops_rate > 0 ? layers[i].bwd_flops / flops_rate : 0;
  }

  // Micro-step gradient sync. Two-hop: reduce-scatter inside partition
  // groups. zero3: global reduce-scatter (the partition IS the cluster).
  // Grouped without two-hop: the global schedule, a cluster-wide
  // all-reduce every micro-step.
  CommCost micro_sync;
  if (cfg.strategy == Strategy::zero3 || rc.two_hop) {
    micro_sync = flat_collective(cluster, p, num_groups,
                                 ceil_div(model_bytes, p), options);
  } else {
    CommCost rs = flat_collective(cluster, n, 1, ceil_div(model_bytes, n), options);
    micro_sync.seconds = 2 * rs.seconds;
    micro_sync.intra_bytes = 2 * rs.intra_bytes;
    micro_sync.inter_bytes = 2 * rs.inter_bytes;
    micro_sync.per_rank_bytes = 2 * rs.per_rank_bytes;
  }

  // Boundary sync across replication groups; only the 2-hop schedule needs
  // it (the global schedule already synchronized everyone).
  CommCost boundary;
  if (rc.two_hop)
    boundary =
        replication_all_reduce(cluster, n, p, ceil_div(model_bytes, p), options);

  IterationTrace trace;
  trace.peak_model_state_bytes_per_device = peak;

  // Deterministic two-resource timeline: one comm channel, one compute
  // stream. A layer's gather may start once the layer prefetch_depth
  // behind it has started computing.
  double comm_free = 0, compute_free = 0;
  const int prefetch = cfg.prefetch_depth;

  auto run_pass = [&](const std::vector<int>& order, bool backward) {
    std::vector<double> compute_start(order.size(), 0);
    for (std::size_t idx = 0; idx < order.size(); ++idx) {
      const int layer = order[idx];
      double gather_start = comm_free;
      if (prefetch <= 0)
        gather_start = std::max(gather_start, compute_free);
      else if (idx >= static_cast<std::size_t>(prefetch))
        gather_start = std::max(gather_start, compute_start[idx - prefetch]);
      const double gather_end = gather_start + gather[layer].seconds;
      comm_free = gather_end;
      const double dur = backward ? bwd_comp[layer] : fwd_comp[layer];
      compute_start[idx] = std::max(compute_free, gather_end);
      compute_free = compute_start[idx] + dur;
      if (backward) {
        trace.bwd_gather_seconds += gather[layer].seconds;
        trace.bwd_compute_seconds += dur;
      } else {
        trace.fwd_gather_seconds += gather[layer].seconds;
        trace.fwd_compute_seconds += dur;
      }
      trace.intra_node_bytes += gather[layer].intra_bytes;
      trace.inter_node_bytes += gather[layer].inter_bytes;
      trace.gather_scatter_bytes_per_rank += gather[layer].per_rank_bytes;
    }
  };

  std::vector<int> fwd_order(L), bwd_order(L);
  for (int i = 0; i < L; ++i) fwd_order[i] = i;
  for (int i = 0; i < L; ++i) bwd_order[i] = L - 1 - i;

  for (int ms = 0; ms < cfg.s; ++ms) {
    run_pass(fwd_order, false);
    run_pass(bwd_order, true);
    const double sync_start = std::max(comm_free, compute_free);
    comm_free = sync_start + micro_sync.seconds;
    trace.micro_sync_seconds += micro_sync.seconds;
    trace.intra_node_bytes += micro_sync.intra_bytes;
    trace.inter_node_bytes += micro_sync.inter_bytes;
    trace.gather_scatter_bytes_per_rank += micro_sync.per_rank_bytes;
  }

  const double boundary_start = std::max(comm_free, compute_free);
  comm_free = boundary_start + boundary.seconds;
  trace.boundary_sync_seconds = boundary.seconds;
  trace.intra_node_bytes += boundary.intra_bytes;
  trace.inter_node_bytes += boundary.inter_bytes;

  trace.total_seconds = std::max(comm_free, compute_free);
  return trace;
}

Comparison compare_strategies(const ClusterSpec& cluster,
                              const std::vector<LayerSpec>& layers,
                              const std::vector<StrategyConfig>& configs,
                              const SimOptions& options) {
  if (configs.size() < 2)
    raise(Errc::OutOfRange, "compare_strategies needs at least two configs");
  Comparison cmp;
  for (const auto& cfg : configs)
    cmp.results.push_back({cfg, simulate_iteration(cluster, layers, cfg, options)});
  const IterationTrace& base = cmp.results.front().trace;
  for (const auto& r : cmp.results) {
    const IterationTrace& t = r.trace;
    cmp.throughput_ratio.push_back(base.total_seconds / t.total_seconds);
    const double base_gather = base.fwd_gather_seconds + base.bwd_gather_seconds;
    const double gather = t.fwd_gather_seconds + t.bwd_gather_seconds;
    cmp.gather_ratio.push_back(gather > 0 ? base_gather / gather : 1.0);
    const double base_sync = base.micro_sync_seconds + base.boundary_sync_seconds;
    const double sync = t.micro_sync_seconds + t.boundary_sync_seconds;
    cmp.sync_ratio.push_back(sync > 0 ? base_sync / sync : 1.0);
    cmp.inter_traffic_ratio.push_back(
        base.inter_node_bytes > 0
            ? static_cast<double>(t.inter_node_bytes) /
                  static_cast<double>(base.inter_node_bytes)
            : 1.0);
    cmp.memory_ratio.push_back(
        static_cast<double>(t.peak_model_state_bytes_per_device) /
        static_cast<double>(base.peak_model_state_bytes_per_device));
  }
  return cmp;
}

std::vector<LayerSpec> derive_layers_from_transformer(int hidden,
                                                      int intermediate,
                                                      int layers, int vocab,
                                                      int seq_len,
                                                      int dtype_bytes,
                                                      int micro_batch) {
  if (hidden < 1 || intermediate < 1 || vocab < 1 || seq_len < 1 ||
      dtype_bytes < 1 || micro_batch < 1 || layers < 0)
    raise(Errc::OutOfRange, "transformer dimensions must be positive");
  const double h = hidden;
  const double inter = intermediate;
  const double l = seq_len;
  const double b = micro_batch;
  const double V = vocab;

  std::vector<LayerSpec> out;

  // Embedding: token table plus position table. Backward covers the full
  // fwd+bwd vocabulary-projection work (no recompute here).
  LayerSpec emb;
  emb.param_bytes =
      static_cast<std::uint64_t>((V + l) * h) * static_cast<std::uint64_t>(dtype_bytes);
  emb.fwd_flops = 2.0 * b * l * h * V;
  emb.bwd_flops = 4.0 * b * l * h * V;
  out.push_back(emb);

  // Transformer block: attention (qkv + output projection), the two MLP
  // matmuls, biases and layernorms. Backward includes the checkpointed
  // recompute of the forward.
  const double block_params = 4.0 * h * h + 2.0 * h * inter + 9.0 * h + inter;
  const double block_fwd = 2.0 * b * l * (4.0 * h * h + 2.0 * h * inter) +
                           4.0 * b * l * l * h;
  for (int i = 0; i < layers; ++i) {
    LayerSpec blk;
    blk.param_bytes = static_cast<std::uint64_t>(block_params) *
                      static_cast<std::uint64_t>(dtype_bytes);
    blk.fwd_flops = block_fwd;
    blk.bwd_flops = 3.0 * block_fwd;
    out.push_back(blk);
  }
  return out;
}

}  // namespace sdpsim
