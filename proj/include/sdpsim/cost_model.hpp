#pragma once

#include <cstdint>
#include <vector>

#include "sdpsim/errors.hpp"

namespace sdpsim {

/// One measured point of effective collective bandwidth.
struct BandwidthEntry {
  double message_bytes;
  int group_scale;
  double bandwidth;  // bytes/s
};

/// Effective bandwidths for the three communication scopes, with an
/// optional measured table. Table lookups pick the nearest scale and
/// interpolate log-linearly in message size, clamping at the edges.
struct BandwidthProfile {
  double b_all = 0;
  double b_part = 0;
  double b_repl = 0;
  std::vector<BandwidthEntry> table;

  /// Only the two scalar measurements that ship with the model: 128 GB/s
  /// within a node of 8 devices, 11 GB/s for large messages at 64-rank
  /// scale.
  static BandwidthProfile default_profile();
};

double effective_bandwidth(double message_bytes, int group_scale,
                           const BandwidthProfile& profile);

/// Parameter-gather time with partition-to-all sharding: (n-1)M / (n B_all).
double allgather_cost_flat(int n, double model_bytes, double b_all);

/// Parameter-gather time with grouped sharding: (p-1)M / (p B_part).
double allgather_cost_grouped(int p, double model_bytes, double b_part);

/// Bytes crossing inter-node links per node when all-gathering M bytes over
/// a partition group of p ranks on nodes of k devices:
/// vanilla (p-1)M/p, hierarchical (p-k)M/p.
double inter_node_traffic(int p, int k, double model_bytes, bool hierarchical);

/// (p-1)/(p-k); +infinity when p = k (no inter-node traffic remains).
double traffic_reduction_ratio(int p, int k);

/// s·M(p-1)/(p·B_part) + 2M(n-p)/(n·B_repl).
double two_hop_cost(int s, double model_bytes, int n, int p, double b_part,
                    double b_repl);

/// 2sM(n-1)/(n·B_all).
double alt_sync_cost(int s, double model_bytes, int n, double b_all);

/// Lower bound on alt/two-hop cost ratio: (2s/B_all) / (s/B_part + 2/B_repl).
double two_hop_ratio_bound(int s, double b_all, double b_part, double b_repl);

/// Per-device gather+scatter bytes per iteration under partition-to-all
/// sharding: 3(n-1)M/n.
double zero3_iteration_volume(int n, double model_bytes);

enum class LatencyAlgorithm { tree, ring };

/// Startup-latency term of a collective: ceil(log2 p)·alpha for tree,
/// 2·p·alpha for ring.
double collective_latency(int p, double alpha, LatencyAlgorithm algorithm);

/// Aggregate FLOP throughput of a transformer stack:
/// F = 96·T·l·L·h^2·(1 + l/(6h) + V/(16Lh)).
double tflops_estimate(double sequences_per_second, int seq_len, int layers,
                       int hidden, int vocab);

}  // namespace sdpsim
