#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "sdpsim/collectives.hpp"
#include "sdpsim/errors.hpp"
#include "sdpsim/topology.hpp"

namespace sdpsim {

enum class SyncPhase { micro_rs, boundary_ar, global_ar };

inline const char* phase_name(SyncPhase p) {
  switch (p) {
    case SyncPhase::micro_rs: return "micro_rs";
    case SyncPhase::boundary_ar: return "boundary_ar";
    case SyncPhase::global_ar: return "global_ar";
  }
  return "unknown";
}

/// One synchronization event; `bytes` is the per-rank byte count received in
/// the collective.
struct SyncEvent {
  int step;
  SyncPhase phase;
  int group_id;
  std::uint64_t bytes;
};

template <typename T>
constexpr DType dtype_of();
template <>
constexpr DType dtype_of<std::int64_t>() { return DType::i64; }
template <>
constexpr DType dtype_of<float>() { return DType::f32; }
template <>
constexpr DType dtype_of<double>() { return DType::f64; }

/// Per-rank accumulator over one global step: the rank's owned gradient
/// partition plus its position in the micro-step schedule.
template <typename T>
struct SyncState {
  int rank = 0;
  std::vector<T> shard;
  int micro_step = 0;
  int s = 1;
};

inline std::size_t owned_chunk_elems(const GroupLayout& layout,
                                     std::size_t grad_len) {
  return (grad_len + layout.p - 1) / layout.p;
}

template <typename T>
std::vector<SyncState<T>> make_sync_states(const GroupLayout& layout,
                                           std::size_t grad_len, int s) {
  if (s < 1) raise(Errc::OutOfRange, "micro-step count s must be >= 1");
  std::vector<SyncState<T>> states(layout.n);
  for (int r = 0; r < layout.n; ++r) {
    states[r].rank = r;
    states[r].shard.assign(owned_chunk_elems(layout, grad_len), T{});
    states[r].s = s;
  }
  return states;
}

namespace detail {

template <typename T>
Bytes to_bytes(const std::vector<T>& v) {
  Bytes out(v.size() * sizeof(T));
  std::memcpy(out.data(), v.data(), out.size());
  return out;
}

template <typename T>
std::vector<T> from_bytes(const Bytes& b) {
  std::vector<T> out(b.size() / sizeof(T));
  std::memcpy(out.data(), b.data(), out.size() * sizeof(T));
  return out;
}

template <typename T>
void check_micro_step(const std::vector<SyncState<T>>& states, bool at_boundary) {
  if (states.empty()) raise(Errc::SizeMismatch, "no sync states");
  const int step = states[0].micro_step;
  const int s = states[0].s;
  for (const auto& st : states)
    if (st.micro_step != step || st.s != s)
      raise(Errc::BoundaryViolation, "ranks disagree on micro-step position");
  if (at_boundary && step != s)
    raise(Errc::BoundaryViolation,
          "boundary sync requires micro_step = s, have " +
              std::to_string(step) + " of " + std::to_string(s));
  if (!at_boundary && step >= s)
    raise(Errc::BoundaryViolation,
          "micro-step past accumulation boundary (micro_step = s = " +
              std::to_string(s) + ")");
}

/// Pads each rank's gradient to p whole chunks of `chunk` elements.
template <typename T>
std::vector<T> padded_grad(const std::vector<T>& grad, std::size_t chunk, int p) {
  std::vector<T> out(grad);
  out.resize(chunk * p, T{});
  return out;
}

}  // namespace detail

/// One micro-step of the 2-hop schedule: reduce-scatter within every
/// partition group, each rank folding its reduced chunk into its shard.
/// No cross-group communication happens here.
template <typename T>
void two_hop_micro_step(VirtualRankEngine& engine, const GroupLayout& layout,
                        std::vector<SyncState<T>>& states,
                        const std::vector<std::vector<T>>& grads,
                        std::vector<SyncEvent>* log = nullptr) {
  detail::check_micro_step(states, /*at_boundary=*/false);
  if (static_cast<int>(grads.size()) != layout.n)
    raise(Errc::SizeMismatch, "gradient count does not match rank count");
  const std::size_t chunk = states[0].shard.size();
  const int step = states[0].micro_step;

  for (int g = 0; g < layout.num_partition_groups(); ++g) {
    CollectiveGroup group{layout.partition_groups[g]};
    std::vector<Bytes> buffers;
    buffers.reserve(layout.p);
    for (int r : group.ranks)
      buffers.push_back(detail::to_bytes(detail::padded_grad(grads[r], chunk, layout.p)));
    std::vector<Bytes> reduced =
        reduce_scatter(engine, group, buffers, dtype_of<T>());
    for (int i = 0; i < layout.p; ++i) {
      std::vector<T> vals = detail::from_bytes<T>(reduced[i]);
      auto& shard = states[group.ranks[i]].shard;
      for (std::size_t e = 0; e < chunk; ++e) shard[e] += vals[e];
    }
    if (log)
      log->push_back({step, SyncPhase::micro_rs, g,
                      static_cast<std::uint64_t>((layout.p - 1) * chunk * sizeof(T))});
  }
  for (auto& st : states) ++st.micro_step;
}

/// Accumulation-boundary sync of the 2-hop schedule: all-reduce of the
/// accumulated shards within every replication group, then reset to
/// micro-step 0. Shards are zero-padded so the internal reduce-scatter
/// divides evenly; the padding is dropped afterwards.
template <typename T>
void two_hop_boundary(VirtualRankEngine& engine, const GroupLayout& layout,
                      std::vector<SyncState<T>>& states,
                      std::vector<SyncEvent>* log = nullptr) {
  detail::check_micro_step(states, /*at_boundary=*/true);
  const std::size_t chunk = states[0].shard.size();
  const int repl = layout.n / layout.p;
  const std::size_t padded = ((chunk + repl - 1) / repl) * repl;

  for (int j = 0; j < layout.p; ++j) {
    CollectiveGroup group{layout.replication_groups[j]};
    if (group.size() > 1) {
      std::vector<Bytes> buffers;
      for (int r : group.ranks) {
        std::vector<T> buf = states[r].shard;
        buf.resize(padded, T{});
        buffers.push_back(detail::to_bytes(buf));
      }
      std::vector<Bytes> reduced =
          all_reduce(engine, group, buffers, dtype_of<T>());
      for (int i = 0; i < group.size(); ++i) {
        std::vector<T> vals = detail::from_bytes<T>(reduced[i]);
        vals.resize(chunk);
        states[group.ranks[i]].shard = std::move(vals);
      }
    }
    if (log)
      log->push_back({states[0].s, SyncPhase::boundary_ar, j,
                      static_cast<std::uint64_t>(
                          2 * (repl - 1) * (padded / repl) * sizeof(T))});
  }
  for (auto& st : states) st.micro_step = 0;
}

/// The global schedule: all-reduce across all n ranks every micro-step;
/// each rank keeps only its owned chunk and discards the rest.
template <typename T>
void alternative_schedule_step(VirtualRankEngine& engine,
                               const GroupLayout& layout,
                               std::vector<SyncState<T>>& states,
                               const std::vector<std::vector<T>>& grads,
                               std::vector<SyncEvent>* log = nullptr) {
  detail::check_micro_step(states, /*at_boundary=*/false);
  if (static_cast<int>(grads.size()) != layout.n)
    raise(Errc::SizeMismatch, "gradient count does not match rank count");
  const std::size_t chunk = states[0].shard.size();
  const int step = states[0].micro_step;
  const std::size_t elems = chunk * layout.p;
  const std::size_t padded = ((elems + layout.n - 1) / layout.n) * layout.n;

  CollectiveGroup all;
  for (int r = 0; r < layout.n; ++r) all.ranks.push_back(r);
  std::vector<Bytes> buffers;
  buffers.reserve(layout.n);
  for (int r = 0; r < layout.n; ++r) {
    std::vector<T> buf = detail::padded_grad(grads[r], chunk, layout.p);
    buf.resize(padded, T{});
    buffers.push_back(detail::to_bytes(buf));
  }
  std::vector<Bytes> reduced = all_reduce(engine, all, buffers, dtype_of<T>());
  for (int r = 0; r < layout.n; ++r) {
    std::vector<T> vals = detail::from_bytes<T>(reduced[r]);
    const std::size_t offset = static_cast<std::size_t>(layout.local_group_rank(r)) * chunk;
    auto& shard = states[r].shard;
    for (std::size_t e = 0; e < chunk; ++e) shard[e] += vals[offset + e];
  }
  if (log)
    log->push_back({step, SyncPhase::global_ar, 0,
                    static_cast<std::uint64_t>(
                        2 * (layout.n - 1) * (padded / layout.n) * sizeof(T))});
  for (auto& st : states) ++st.micro_step;
}

/// Resets the micro-step counter at the accumulation boundary of the global
/// schedule, where no further communication is needed.
template <typename T>
void alternative_boundary(std::vector<SyncState<T>>& states) {
  detail::check_micro_step(states, /*at_boundary=*/true);
  for (auto& st : states) st.micro_step = 0;
}

/// Brute-force ground truth: elementwise sum over all ranks and steps,
/// sliced by shard ownership. Kept as a plain scalar loop on purpose.
template <typename T>
std::vector<std::vector<T>> oracle_global_sync(
    const std::vector<std::vector<std::vector<T>>>& grads_per_step,
    const GroupLayout& layout) {
  std::size_t grad_len = 0;
  for (const auto& step : grads_per_step)
    for (const auto& g : step) grad_len = std::max(grad_len, g.size());
  const std::size_t chunk = owned_chunk_elems(layout, grad_len);

  std::vector<T> total(chunk * layout.p, T{});
  for (const auto& step : grads_per_step)
    for (const auto& g : step)
      for (std::size_t e = 0; e < g.size(); ++e) total[e] += g[e];

  std::vector<std::vector<T>> owned(layout.n);
  for (int r = 0; r < layout.n; ++r) {
    const std::size_t offset = static_cast<std::size_t>(layout.local_group_rank(r)) * chunk;
    owned[r].assign(total.begin() + offset, total.begin() + offset + chunk);
  }
  return owned;
}

}  // namespace sdpsim
