#include "sdpsim/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sdpsim {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0)) raise(Errc::OutOfRange, std::string(what) + " must be > 0");
}

}  // namespace

BandwidthProfile BandwidthProfile::default_profile() {
  BandwidthProfile p;
  p.b_part = 128e9;
  p.b_all = 11e9;
  p.b_repl = 11e9;
  p.table = {
      {1.0, 8, 128e9},
      {1e9, 64, 11e9},
  };
  return p;
}

double effective_bandwidth(double message_bytes, int group_scale,
                           const BandwidthProfile& profile) {
  if (profile.table.empty()) {
    if (profile.b_all > 0) return profile.b_all;
    raise(Errc::EmptyProfile, "bandwidth profile has no table and no scalar fallback");
  }
  require_positive(message_bytes, "message_bytes");
  if (group_scale < 1) raise(Errc::OutOfRange, "group_scale must be >= 1");

  // Nearest scale in log space, ties toward the smaller scale.
  int best_scale = profile.table.front().group_scale;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& e : profile.table) {
    const double d = std::abs(std::log2(static_cast<double>(e.group_scale)) -
                              std::log2(static_cast<double>(group_scale)));
    if (d < best_dist || (d == best_dist && e.group_scale < best_scale)) {
      best_dist = d;
      best_scale = e.group_scale;
    }
  }

  std::vector<BandwidthEntry> at_scale;
  for (const auto& e : profile.table)
    if (e.group_scale == best_scale) at_scale.push_back(e);
  std::sort(at_scale.begin(), at_scale.end(),
            [](const BandwidthEntry& a, const BandwidthEntry& b) {
              return a.message_bytes < b.message_bytes;
            });

  if (message_bytes <= at_scale.front().message_bytes)
    return at_scale.front().bandwidth;
  if (message_bytes >= at_scale.back().message_bytes)
    return at_scale.back().bandwidth;
  for (std::size_t i = 1; i < at_scale.size(); ++i) {
    const auto& lo = at_scale[i - 1];
    const auto& hi = at_scale[i];
    if (message_bytes <= hi.message_bytes) {
      const double t = (std::log(message_bytes) - std::log(lo.message_bytes)) /
                       (std::log(hi.message_bytes) - std::log(lo.message_bytes));
      return lo.bandwidth + t * (hi.bandwidth - lo.bandwidth);
    }
  }
  return at_scale.back().bandwidth;
}

double allgather_cost_flat(int n, double model_bytes, double b_all) {
  if (n < 1) raise(Errc::OutOfRange, "n must be >= 1");
  require_positive(model_bytes, "model_bytes");
  require_positive(b_all, "b_all");
  return (n - 1) * model_bytes / (static_cast<double>(n) * b_all);
}

double allgather_cost_grouped(int p, double model_bytes, double b_part) {
  if (p < 1) raise(Errc::OutOfRange, "p must be >= 1");
  require_positive(model_bytes, "model_bytes");
  require_positive(b_part, "b_part");
  return (p - 1) * model_bytes / (static_cast<double>(p) * b_part);
}

double inter_node_traffic(int p, int k, double model_bytes, bool hierarchical) {
  if (p < 1 || k < 1) raise(Errc::OutOfRange, "p and k must be >= 1");
  require_positive(model_bytes, "model_bytes");
  if (p > k && p % k != 0)
    raise(Errc::ShapeError, "p=" + std::to_string(p) +
                                " must be a multiple of k=" + std::to_string(k));
  if (!hierarchical) return (p - 1) * model_bytes / p;
  if (p <= k) return 0.0;
  return (p - k) * model_bytes / p;
}

double traffic_reduction_ratio(int p, int k) {
  if (k < 1 || p < k) raise(Errc::OutOfRange, "requires p >= k >= 1");
  if (p == k) return std::numeric_limits<double>::infinity();
  return static_cast<double>(p - 1) / static_cast<double>(p - k);
}

double two_hop_cost(int s, double model_bytes, int n, int p, double b_part,
                    double b_repl) {
  if (s < 1) raise(Errc::OutOfRange, "s must be >= 1");
  if (p < 1 || p > n) raise(Errc::OutOfRange, "requires 1 <= p <= n");
  require_positive(model_bytes, "model_bytes");
  require_positive(b_part, "b_part");
  require_positive(b_repl, "b_repl");
  return s * model_bytes * (p - 1) / (static_cast<double>(p) * b_part) +
         2.0 * model_bytes * (n - p) / (static_cast<double>(n) * b_repl);
}

double alt_sync_cost(int s, double model_bytes, int n, double b_all) {
  if (s < 1) raise(Errc::OutOfRange, "s must be >= 1");
  if (n < 1) raise(Errc::OutOfRange, "n must be >= 1");
  require_positive(model_bytes, "model_bytes");
  require_positive(b_all, "b_all");
  return 2.0 * s * model_bytes * (n - 1) / (static_cast<double>(n) * b_all);
}

double two_hop_ratio_bound(int s, double b_all, double b_part, double b_repl) {
  if (s < 1) raise(Errc::OutOfRange, "s must be >= 1");
  require_positive(b_all, "b_all");
  require_positive(b_part, "b_part");
  require_positive(b_repl, "b_repl");
  return (2.0 * s / b_all) / (s / b_part + 2.0 / b_repl);
}

double zero3_iteration_volume(int n, double model_bytes) {
  if (n < 1) raise(Errc::OutOfRange, "n must be >= 1");
  require_positive(model_bytes, "model_bytes");
  return 3.0 * (n - 1) * model_bytes / n;
}

double collective_latency(int p, double alpha, LatencyAlgorithm algorithm) {
  if (p < 1) raise(Errc::OutOfRange, "p must be >= 1");
  if (alpha < 0) raise(Errc::OutOfRange, "alpha must be >= 0");
  switch (algorithm) {
    case LatencyAlgorithm::tree:
      return std::ceil(std::log2(static_cast<double>(p))) * alpha;
    case LatencyAlgorithm::ring:
      return 2.0 * p * alpha;
  }
  return 0.0;
}

double tflops_estimate(double sequences_per_second, int seq_len, int layers,
                       int hidden, int vocab) {
  require_positive(sequences_per_second, "sequences_per_second");
  if (seq_len < 1 || layers < 1 || hidden < 1 || vocab < 0)
    raise(Errc::OutOfRange, "model dimensions must be positive");
  const double T = sequences_per_second;
  const double l = seq_len;
  const double L = layers;
  const double h = hidden;
  const double V = vocab;
  return 96.0 * T * l * L * h * h *
         (1.0 + l / (6.0 * h) + V / (16.0 * L * h));
}

}  // namespace sdpsim
