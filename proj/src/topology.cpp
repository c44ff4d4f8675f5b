#include "sdpsim/topology.hpp"

#include <string>

namespace sdpsim {

void ClusterSpec::validate() const {
  if (num_nodes < 1)
    raise(Errc::OutOfRange, "num_nodes must be >= 1, got " + std::to_string(num_nodes));
  if (devices_per_node < 1)
    raise(Errc::OutOfRange,
          "devices_per_node must be >= 1, got " + std::to_string(devices_per_node));
  if (intra_node_bandwidth <= 0)
    raise(Errc::OutOfRange, "intra_node_bandwidth must be > 0");
  if (inter_node_bandwidth_per_node <= 0)
    raise(Errc::OutOfRange, "inter_node_bandwidth_per_node must be > 0");
  if (alpha_intra < 0 || alpha_inter < 0)
    raise(Errc::OutOfRange, "latencies must be >= 0");
}

GroupLayout build_group_layout(int n, int p) {
  if (p < 1 || p > n)
    raise(Errc::OutOfRange, "partition size p=" + std::to_string(p) +
                                " must satisfy 1 <= p <= n=" + std::to_string(n));
  if (n % p != 0)
    raise(Errc::NonDivisible, "partition size p=" + std::to_string(p) +
                                  " does not divide n=" + std::to_string(n));

  GroupLayout layout;
  layout.n = n;
  layout.p = p;
  layout.partition_groups.resize(n / p);
  for (int g = 0; g < n / p; ++g) {
    layout.partition_groups[g].reserve(p);
    for (int i = 0; i < p; ++i) layout.partition_groups[g].push_back(g * p + i);
  }
  layout.replication_groups.resize(p);
  for (int j = 0; j < p; ++j) {
    layout.replication_groups[j].reserve(n / p);
    for (int r = j; r < n; r += p) layout.replication_groups[j].push_back(r);
  }
  return layout;
}

bool partition_shape_ok(int p, int k) {
  if (p < 1 || k < 1) return false;
  if (p <= k) return k % p == 0;
  return p % k == 0;
}

std::uint64_t model_state_bytes(std::uint64_t num_params,
                                std::uint64_t bytes_per_param_states) {
  if (num_params == 0 || bytes_per_param_states == 0)
    raise(Errc::OutOfRange, "num_params and bytes_per_param_states must be > 0");
  return num_params * bytes_per_param_states;
}

int min_feasible_partition(std::uint64_t model_state_bytes,
                           const ClusterSpec& cluster, bool node_granular,
                           double headroom_fraction) {
  if (model_state_bytes == 0)
    raise(Errc::OutOfRange, "model_state_bytes must be > 0");
  cluster.validate();
  const int n = cluster.total_ranks();
  const int k = cluster.devices_per_node;
  const double budget =
      static_cast<double>(cluster.device_memory) * headroom_fraction;

  for (int p = 1; p <= n; ++p) {
    if (n % p != 0) continue;
    if (node_granular) {
      if (p % k != 0) continue;
    } else if (!partition_shape_ok(p, k)) {
      continue;
    }
    const double per_device =
        static_cast<double>(model_state_bytes) / static_cast<double>(p);
    if (per_device <= budget) return p;
  }
  raise(Errc::Infeasible,
        "model states of " + std::to_string(model_state_bytes) +
            " bytes do not fit even when partitioned over all " +
            std::to_string(n) + " devices");
}

}  // namespace sdpsim
