#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdpsim/cost_model.hpp"
#include "sdpsim/topology.hpp"

namespace sdpsim {

/// One model layer as the simulator sees it: gather payload plus compute
/// work per micro-batch.
struct LayerSpec {
  std::uint64_t param_bytes = 0;  // gathered payload (dtype bytes)
  double fwd_flops = 0;
  double bwd_flops = 0;
};

enum class Strategy { grouped, zero3 };

struct StrategyConfig {
  std::string name;
  Strategy strategy = Strategy::grouped;
  int p = 0;  // partition group size; zero3 forces p = n
  bool hierarchical_gather = false;
  bool two_hop = false;
  int s = 1;            // micro-steps per global step
  int prefetch_depth = 1;
};

/// Simulated timeline of one training iteration (s micro-steps plus the
/// accumulation boundary). Phase fields are busy-time sums; total_seconds
/// is the critical-path finish time under overlap.
struct IterationTrace {
  double total_seconds = 0;
  double fwd_gather_seconds = 0;
  double fwd_compute_seconds = 0;
  double bwd_gather_seconds = 0;
  double bwd_compute_seconds = 0;
  double micro_sync_seconds = 0;
  double boundary_sync_seconds = 0;
  std::uint64_t intra_node_bytes = 0;  // cluster-wide, within nodes
  std::uint64_t inter_node_bytes = 0;  // cluster-wide, node ingress sum
  /// fwd gather + bwd gather + micro-step scatter bytes received per rank.
  std::uint64_t gather_scatter_bytes_per_rank = 0;
  std::uint64_t peak_model_state_bytes_per_device = 0;

  double comm_seconds() const {
    return fwd_gather_seconds + bwd_gather_seconds + micro_sync_seconds +
           boundary_sync_seconds;
  }
  double compute_seconds() const {
    return fwd_compute_seconds + bwd_compute_seconds;
  }
};

struct SimOptions {
  double compute_efficiency = 0.5;  // fraction of device_peak_flops reached
  bool include_latency = true;
  LatencyAlgorithm latency_algorithm = LatencyAlgorithm::tree;
  double memory_headroom = 0.85;
  /// Model-state bytes per gathered payload byte (fp16 payload with fp32
  /// optimizer states gives 16 / 2 = 8).
  double model_state_factor = 8.0;
};

IterationTrace simulate_iteration(const ClusterSpec& cluster,
                                  const std::vector<LayerSpec>& layers,
                                  const StrategyConfig& cfg,
                                  const SimOptions& options = {});

struct StrategyResult {
  StrategyConfig config;
  IterationTrace trace;
};

/// Ratios are relative to the first config (baseline / candidate for time,
/// candidate / baseline for bytes and memory).
struct Comparison {
  std::vector<StrategyResult> results;
  std::vector<double> throughput_ratio;
  std::vector<double> gather_ratio;
  std::vector<double> sync_ratio;
  std::vector<double> inter_traffic_ratio;
  std::vector<double> memory_ratio;
};

Comparison compare_strategies(const ClusterSpec& cluster,
                              const std::vector<LayerSpec>& layers,
                              const std::vector<StrategyConfig>& configs,
                              const SimOptions& options = {});

/// Expands transformer dimensions into per-layer specs: one embedding layer
/// followed by `layers` transformer blocks. Backward flops of a block
/// include the checkpointed recompute pass.
std::vector<LayerSpec> derive_layers_from_transformer(int hidden,
                                                      int intermediate,
                                                      int layers, int vocab,
                                                      int seq_len,
                                                      int dtype_bytes,
                                                      int micro_batch = 1);

std::uint64_t total_param_bytes(const std::vector<LayerSpec>& layers);

}  // namespace sdpsim
