#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "sdpsim/errors.hpp"

namespace sdpsim {

/// Physical shape of the training cluster: a two-level hierarchy of nodes,
/// each hosting `devices_per_node` devices behind a shared NIC.
struct ClusterSpec {
  int num_nodes = 1;
  int devices_per_node = 1;           // k
  double intra_node_bandwidth = 0;    // bytes/s, per-device effective
  double inter_node_bandwidth_per_node = 0;  // bytes/s, NIC shared by the node
  double alpha_intra = 0;             // seconds, per-message startup
  double alpha_inter = 0;             // seconds
  std::uint64_t device_memory = 0;    // bytes
  double device_peak_flops = 0;       // FLOP/s

  int total_ranks() const { return num_nodes * devices_per_node; }
  int node_of(int rank) const { return rank / devices_per_node; }
  int local_node_rank(int rank) const { return rank % devices_per_node; }

  void validate() const;
};

/// Decomposition of n ranks into n/p partition groups (contiguous rank
/// ranges, each jointly holding one model replica) and p replication groups
/// (ranks with equal local group rank, holding the same shard).
struct GroupLayout {
  int n = 0;
  int p = 0;
  std::vector<std::vector<int>> partition_groups;
  std::vector<std::vector<int>> replication_groups;

  int partition_group_of(int rank) const { return rank / p; }
  int local_group_rank(int rank) const { return rank % p; }
  int replication_group_of(int rank) const { return rank % p; }
  int num_partition_groups() const { return n / p; }
};

GroupLayout build_group_layout(int n, int p);

/// True when a partition of size p maps cleanly onto nodes of k devices:
/// either whole groups fit inside one node (p divides k) or each group
/// spans whole nodes (k divides p).
bool partition_shape_ok(int p, int k);

std::uint64_t model_state_bytes(std::uint64_t num_params,
                                std::uint64_t bytes_per_param_states = 16);

/// Smallest partition group size whose per-device shard fits in
/// device_memory * headroom_fraction. With node_granular set, candidates are
/// whole-node multiples of k; otherwise any p dividing n with a clean node
/// shape is considered.
int min_feasible_partition(std::uint64_t model_state_bytes,
                           const ClusterSpec& cluster, bool node_granular,
                           double headroom_fraction = 0.85);

}  // namespace sdpsim
