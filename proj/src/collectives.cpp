#include "sdpsim/collectives.hpp"

#include <algorithm>
#include <cstring>
#include <set>
#include <string>
#include <thread>

namespace sdpsim {

bool CollectiveGroup::spans_nodes(const ClusterSpec& cluster) const {
  if (ranks.empty()) return false;
  const int node0 = cluster.node_of(ranks.front());
  for (int r : ranks)
    if (cluster.node_of(r) != node0) return true;
  return false;
}

void CollectiveGroup::validate() const {
  std::set<int> seen(ranks.begin(), ranks.end());
  if (seen.size() != ranks.size())
    raise(Errc::ShapeError, "collective group has duplicate ranks");
}

VirtualRankEngine::VirtualRankEngine(int num_threads)
    : num_threads_(std::max(1, num_threads)) {}

void VirtualRankEngine::parallel_for(int count,
                                     const std::function<void(int)>& fn) const {
  if (count <= 0) return;
  const int threads = std::min(num_threads_, count);
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < count; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

void VirtualRankEngine::record_traffic(int from, int to, std::uint64_t bytes) {
  std::lock_guard<std::mutex> lock(traffic_mu_);
  traffic_[{from, to}] += bytes;
}

std::map<std::pair<int, int>, std::uint64_t> VirtualRankEngine::traffic() const {
  std::lock_guard<std::mutex> lock(traffic_mu_);
  return traffic_;
}

std::uint64_t VirtualRankEngine::bytes_received_by(int rank) const {
  std::lock_guard<std::mutex> lock(traffic_mu_);
  std::uint64_t total = 0;
  for (const auto& [key, bytes] : traffic_)
    if (key.second == rank) total += bytes;
  return total;
}

void VirtualRankEngine::clear_traffic() {
  std::lock_guard<std::mutex> lock(traffic_mu_);
  traffic_.clear();
}

namespace {

void check_equal_sizes(const std::vector<Bytes>& bufs, const char* what) {
  for (std::size_t i = 1; i < bufs.size(); ++i)
    if (bufs[i].size() != bufs[0].size())
      raise(Errc::SizeMismatch, std::string(what) + ": buffer " +
                                    std::to_string(i) + " has " +
                                    std::to_string(bufs[i].size()) +
                                    " bytes, expected " +
                                    std::to_string(bufs[0].size()));
}

template <typename T>
void accumulate(Bytes& acc, const Bytes& src) {
  const std::size_t count = acc.size() / sizeof(T);
  T a, b;
  for (std::size_t e = 0; e < count; ++e) {
    std::memcpy(&a, acc.data() + e * sizeof(T), sizeof(T));
    std::memcpy(&b, src.data() + e * sizeof(T), sizeof(T));
    a = static_cast<T>(a + b);
    std::memcpy(acc.data() + e * sizeof(T), &a, sizeof(T));
  }
}

void accumulate_dtype(Bytes& acc, const Bytes& src, DType dtype) {
  switch (dtype) {
    case DType::i64: accumulate<std::int64_t>(acc, src); break;
    case DType::f32: accumulate<float>(acc, src); break;
    case DType::f64: accumulate<double>(acc, src); break;
  }
}

}  // namespace

std::vector<Bytes> all_gather(VirtualRankEngine& engine,
                              const CollectiveGroup& group,
                              const std::vector<Bytes>& shards) {
  group.validate();
  const int p = group.size();
  if (static_cast<int>(shards.size()) != p)
    raise(Errc::SizeMismatch, "all_gather: " + std::to_string(shards.size()) +
                                  " shards for group of " + std::to_string(p));
  check_equal_sizes(shards, "all_gather");
  const std::size_t chunk = shards.empty() ? 0 : shards[0].size();

  // Mailbox slots: slot[to][from] holds the message posted by `from`.
  std::vector<std::vector<Bytes>> slot(p, std::vector<Bytes>(p));
  engine.parallel_for(p, [&](int i) {
    for (int j = 0; j < p; ++j) {
      if (j == i) continue;
      slot[j][i] = shards[i];
      engine.record_traffic(group.ranks[i], group.ranks[j],
                            static_cast<std::uint64_t>(chunk));
    }
  });

  std::vector<Bytes> out(p);
  engine.parallel_for(p, [&](int j) {
    out[j].resize(static_cast<std::size_t>(p) * chunk);
    for (int i = 0; i < p; ++i) {
      const Bytes& src = (i == j) ? shards[j] : slot[j][i];
      std::copy(src.begin(), src.end(), out[j].begin() + i * chunk);
    }
  });
  return out;
}

std::vector<Bytes> reduce_scatter(VirtualRankEngine& engine,
                                  const CollectiveGroup& group,
                                  const std::vector<Bytes>& buffers,
                                  DType dtype) {
  group.validate();
  const int p = group.size();
  if (static_cast<int>(buffers.size()) != p)
    raise(Errc::SizeMismatch, "reduce_scatter: " +
                                  std::to_string(buffers.size()) +
                                  " buffers for group of " + std::to_string(p));
  check_equal_sizes(buffers, "reduce_scatter");
  const std::size_t total = buffers.empty() ? 0 : buffers[0].size();
  if (total % (static_cast<std::size_t>(p) * dtype_size(dtype)) != 0)
    raise(Errc::TypeMismatch,
          "reduce_scatter: buffer of " + std::to_string(total) +
              " bytes is not divisible into " + std::to_string(p) +
              " chunks of whole " + std::to_string(dtype_size(dtype)) +
              "-byte elements");
  const std::size_t chunk = total / p;

  std::vector<std::vector<Bytes>> slot(p, std::vector<Bytes>(p));
  engine.parallel_for(p, [&](int i) {
    for (int j = 0; j < p; ++j) {
      if (j == i) continue;
      slot[j][i].assign(buffers[i].begin() + j * chunk,
                        buffers[i].begin() + (j + 1) * chunk);
      engine.record_traffic(group.ranks[i], group.ranks[j],
                            static_cast<std::uint64_t>(chunk));
    }
  });

  std::vector<Bytes> out(p);
  engine.parallel_for(p, [&](int j) {
    // Fixed ascending-position reduction order.
    auto contribution = [&](int i) -> Bytes {
      if (i == j)
        return Bytes(buffers[j].begin() + j * chunk,
                     buffers[j].begin() + (j + 1) * chunk);
      return slot[j][i];
    };
    out[j] = contribution(0);
    for (int i = 1; i < p; ++i) {
      Bytes c = contribution(i);
      accumulate_dtype(out[j], c, dtype);
    }
  });
  return out;
}

std::vector<Bytes> all_reduce(VirtualRankEngine& engine,
                              const CollectiveGroup& group,
                              const std::vector<Bytes>& buffers, DType dtype) {
  std::vector<Bytes> reduced = reduce_scatter(engine, group, buffers, dtype);
  return all_gather(engine, group, reduced);
}

std::vector<Bytes> hierarchical_all_gather(VirtualRankEngine& engine,
                                           const GroupLayout& layout,
                                           const ClusterSpec& cluster,
                                           const std::vector<Bytes>& shards,
                                           const HierarchicalOptions& opts) {
  const int n = layout.n;
  const int p = layout.p;
  const int k = cluster.devices_per_node;
  if (cluster.total_ranks() != n)
    raise(Errc::ShapeError, "cluster has " + std::to_string(cluster.total_ranks()) +
                                " ranks but layout expects " + std::to_string(n));
  if (static_cast<int>(shards.size()) != n)
    raise(Errc::SizeMismatch, "hierarchical_all_gather: " +
                                  std::to_string(shards.size()) +
                                  " shards for " + std::to_string(n) + " ranks");
  check_equal_sizes(shards, "hierarchical_all_gather");
  if (!partition_shape_ok(p, k))
    raise(Errc::ShapeError, "partition size p=" + std::to_string(p) +
                                " is not node-aligned for k=" + std::to_string(k));

  const std::size_t chunk = shards[0].size();
  std::vector<Bytes> out(n);

  for (int g = 0; g < layout.num_partition_groups(); ++g) {
    const int base = g * p;

    if (p <= k) {
      // Single-node partition group: plain all-gather suffices.
      CollectiveGroup group{layout.partition_groups[g]};
      std::vector<Bytes> local(shards.begin() + base, shards.begin() + base + p);
      std::vector<Bytes> gathered = all_gather(engine, group, local);
      for (int i = 0; i < p; ++i) out[base + i] = std::move(gathered[i]);
      continue;
    }

    const int q = p / k;

    // Stage 1: k parallel inter-node all-gathers, one per local node rank.
    // The member at node m, local rank j ends with [C_j, C_{k+j}, ...,
    // C_{(q-1)k+j}] in node order.
    std::vector<std::vector<Bytes>> stage1(k);
    for (int j = 0; j < k; ++j) {
      CollectiveGroup channel;
      std::vector<Bytes> channel_shards;
      for (int m = 0; m < q; ++m) {
        channel.ranks.push_back(base + m * k + j);
        channel_shards.push_back(shards[base + m * k + j]);
      }
      stage1[j] = all_gather(engine, channel, channel_shards);
    }

    if (opts.corrupt_stage2) {
      // Gather the raw stage-1 buffers per node; yields the interleaved
      // layout [C0, Ck, ..., C1, C_{k+1}, ...] instead of [C0, C1, ...].
      for (int m = 0; m < q; ++m) {
        CollectiveGroup node_group;
        std::vector<Bytes> node_shards;
        for (int j = 0; j < k; ++j) {
          node_group.ranks.push_back(base + m * k + j);
          node_shards.push_back(stage1[j][m]);
        }
        std::vector<Bytes> gathered = all_gather(engine, node_group, node_shards);
        for (int j = 0; j < k; ++j) out[base + m * k + j] = std::move(gathered[j]);
      }
      continue;
    }

    // Stage 2: rearrangement. For batch t, local rank j stages its
    // position-t stage-1 chunk, i.e. C_{t*k+j}.
    // Stage 3: q batched intra-node all-gathers; batch t lands at output
    // offset t*k*chunk on every member.
    for (int m = 0; m < q; ++m)
      for (int j = 0; j < k; ++j)
        out[base + m * k + j].resize(static_cast<std::size_t>(p) * chunk);

    for (int m = 0; m < q; ++m) {
      CollectiveGroup node_group;
      for (int j = 0; j < k; ++j) node_group.ranks.push_back(base + m * k + j);

      std::vector<CollectiveGroup> batch_groups;
      std::vector<std::vector<Bytes>> batch_shards;
      for (int t = 0; t < q; ++t) {
        std::vector<Bytes> staged(k);
        for (int j = 0; j < k; ++j)
          staged[j].assign(stage1[j][m].begin() + t * chunk,
                           stage1[j][m].begin() + (t + 1) * chunk);
        batch_groups.push_back(node_group);
        batch_shards.push_back(std::move(staged));
      }
      std::vector<std::vector<Bytes>> batches =
          batched_all_gather(engine, batch_groups, batch_shards);
      for (int t = 0; t < q; ++t)
        for (int j = 0; j < k; ++j)
          std::copy(batches[t][j].begin(), batches[t][j].end(),
                    out[base + m * k + j].begin() +
                        static_cast<std::size_t>(t) * k * chunk);
    }
  }
  return out;
}

std::vector<std::vector<Bytes>> batched_all_gather(
    VirtualRankEngine& engine, const std::vector<CollectiveGroup>& groups,
    const std::vector<std::vector<Bytes>>& shard_sets) {
  if (groups.size() != shard_sets.size())
    raise(Errc::SizeMismatch, "batched_all_gather: " +
                                  std::to_string(groups.size()) + " groups vs " +
                                  std::to_string(shard_sets.size()) +
                                  " shard sets");
  std::vector<std::vector<Bytes>> out;
  out.reserve(groups.size());
  for (std::size_t b = 0; b < groups.size(); ++b)
    out.push_back(all_gather(engine, groups[b], shard_sets[b]));
  return out;
}

std::vector<std::vector<Bytes>> batched_reduce_scatter(
    VirtualRankEngine& engine, const std::vector<CollectiveGroup>& groups,
    const std::vector<std::vector<Bytes>>& buffer_sets, DType dtype) {
  if (groups.size() != buffer_sets.size())
    raise(Errc::SizeMismatch, "batched_reduce_scatter: " +
                                  std::to_string(groups.size()) + " groups vs " +
                                  std::to_string(buffer_sets.size()) +
                                  " buffer sets");
  std::vector<std::vector<Bytes>> out;
  out.reserve(groups.size());
  for (std::size_t b = 0; b < groups.size(); ++b)
    out.push_back(reduce_scatter(engine, groups[b], buffer_sets[b], dtype));
  return out;
}

}  // namespace sdpsim
