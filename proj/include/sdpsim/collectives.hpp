#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <vector>

#include "sdpsim/errors.hpp"
#include "sdpsim/topology.hpp"

namespace sdpsim {

using Bytes = std::vector<std::byte>;

enum class DType { i64, f32, f64 };

inline std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::i64: return 8;
    case DType::f32: return 4;
    case DType::f64: return 8;
  }
  return 0;
}

/// Ordered set of ranks taking part in one collective. Position in the list
/// defines the chunk index each rank contributes/owns.
struct CollectiveGroup {
  std::vector<int> ranks;

  int size() const { return static_cast<int>(ranks.size()); }
  bool spans_nodes(const ClusterSpec& cluster) const;
  void validate() const;
};

/// Runs virtual ranks on a fixed number of threads and accumulates a
/// per-(sender, receiver) traffic log. Results are required to be
/// bit-identical for any thread count; collectives here guarantee that by
/// giving every writer a disjoint slot and by reducing in a fixed order.
class VirtualRankEngine {
 public:
  explicit VirtualRankEngine(int num_threads = 1);

  int num_threads() const { return num_threads_; }

  /// fn(i) for i in [0, count), partitioned statically over threads.
  void parallel_for(int count, const std::function<void(int)>& fn) const;

  void record_traffic(int from, int to, std::uint64_t bytes);

  /// Aggregated bytes per (from, to) pair, ordered by key.
  std::map<std::pair<int, int>, std::uint64_t> traffic() const;
  std::uint64_t bytes_received_by(int rank) const;
  void clear_traffic();

 private:
  int num_threads_;
  mutable std::mutex traffic_mu_;
  std::map<std::pair<int, int>, std::uint64_t> traffic_;
};

/// Every rank ends with the concatenation of all ranks' chunks in group
/// order. Returned vector is indexed by group position.
std::vector<Bytes> all_gather(VirtualRankEngine& engine,
                              const CollectiveGroup& group,
                              const std::vector<Bytes>& shards);

/// Rank at position i ends with the elementwise sum of every rank's i-th
/// chunk. Reduction order is ascending group position, so results are
/// deterministic for floats as well.
std::vector<Bytes> reduce_scatter(VirtualRankEngine& engine,
                                  const CollectiveGroup& group,
                                  const std::vector<Bytes>& buffers,
                                  DType dtype);

/// reduce_scatter followed by all_gather; every rank ends with the full
/// reduced buffer.
std::vector<Bytes> all_reduce(VirtualRankEngine& engine,
                              const CollectiveGroup& group,
                              const std::vector<Bytes>& buffers, DType dtype);

struct HierarchicalOptions {
  /// Test hook: skip the stage-2 rearrangement and gather the raw stage-1
  /// buffers, reproducing the interleaved wrong layout.
  bool corrupt_stage2 = false;
};

/// Three-stage all-gather within each partition group of `layout`:
///   1. k parallel inter-node all-gathers, one per local node rank;
///   2. rearrangement of stage-1 chunks into per-batch staging buffers;
///   3. q = p/k batched intra-node all-gathers, batch t written at output
///      offset t*k*chunk_size.
/// Output layout on every rank is [C_0, ..., C_{p-1}], bit-identical to
/// all_gather over the same partition group. Input and output are indexed
/// by global rank (layout.n entries).
std::vector<Bytes> hierarchical_all_gather(VirtualRankEngine& engine,
                                           const GroupLayout& layout,
                                           const ClusterSpec& cluster,
                                           const std::vector<Bytes>& shards,
                                           const HierarchicalOptions& opts = {});

/// Coalesced variants: semantically equal to issuing each collective in
/// sequence; the simulator accounts a batch as one launch.
std::vector<std::vector<Bytes>> batched_all_gather(
    VirtualRankEngine& engine, const std::vector<CollectiveGroup>& groups,
    const std::vector<std::vector<Bytes>>& shard_sets);

std::vector<std::vector<Bytes>> batched_reduce_scatter(
    VirtualRankEngine& engine, const std::vector<CollectiveGroup>& groups,
    const std::vector<std::vector<Bytes>>& buffer_sets, DType dtype);

}  // namespace sdpsim
