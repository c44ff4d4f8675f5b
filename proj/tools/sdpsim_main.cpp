#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sdpsim/collectives.hpp"
#include "sdpsim/config.hpp"
#include "sdpsim/cost_model.hpp"
#include "sdpsim/report.hpp"
#include "sdpsim/simulator.hpp"
#include "sdpsim/sync_schedule.hpp"
#include "sdpsim/topology.hpp"
#include "sdpsim/units.hpp"

namespace {

using namespace sdpsim;

constexpr int kExitConfig = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitVerifyFailure = 3;

int exit_code_for(const Error& e) {
  return e.code() == Errc::Infeasible ? kExitInfeasible : kExitConfig;
}

std::string resolve_output_path(const std::string& path) {
  if (path == "-" || path.empty() || path.front() == '/') return path;
  if (const char* dir = std::getenv("SDPSIM_REPORT_DIR"))
    return std::string(dir) + "/" + path;
  return path;
}

void write_output(const std::string& path, const std::string& content) {
  const std::string resolved = resolve_output_path(path);
  if (resolved == "-" || resolved.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(resolved, std::ios::binary);
  if (!out) raise(Errc::ConfigError, "cannot write report to '" + resolved + "'");
  out << content;
}

// ---------------------------------------------------------------------------
// simulate

int run_simulate(const std::string& config_path, bool dry_run,
                 const std::string& format_override,
                 const std::string& out_override) {
  ScenarioConfig cfg;
  try {
    cfg = load_scenario_file(config_path);
    validate_scenario(cfg);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  if (dry_run) {
    std::cout << describe_scenario(cfg);
    return 0;
  }

  try {
    std::vector<Json> records;
    std::vector<StrategyResult> results;
    Comparison cmp;
    const bool compared = cfg.strategies.size() >= 2;
    if (compared) {
      cmp = compare_strategies(cfg.cluster, cfg.layers, cfg.strategies, cfg.sim);
      results = cmp.results;
    } else {
      results.push_back({cfg.strategies[0],
                         simulate_iteration(cfg.cluster, cfg.layers,
                                            cfg.strategies[0], cfg.sim)});
    }
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      Json j;
      j["scenario"] = cfg.name;
      j["strategy"] = r.config.name;
      j["total_seconds"] = r.trace.total_seconds;
      j["fwd_gather_seconds"] = r.trace.fwd_gather_seconds;
      j["fwd_compute_seconds"] = r.trace.fwd_compute_seconds;
      j["bwd_gather_seconds"] = r.trace.bwd_gather_seconds;
      j["bwd_compute_seconds"] = r.trace.bwd_compute_seconds;
      j["micro_sync_seconds"] = r.trace.micro_sync_seconds;
      j["boundary_sync_seconds"] = r.trace.boundary_sync_seconds;
      j["intra_node_bytes"] = r.trace.intra_node_bytes;
      j["inter_node_bytes"] = r.trace.inter_node_bytes;
      j["gather_scatter_bytes_per_rank"] = r.trace.gather_scatter_bytes_per_rank;
      j["peak_model_state_bytes_per_device"] =
          r.trace.peak_model_state_bytes_per_device;
      if (compared) {
        j["throughput_ratio"] = cmp.throughput_ratio[i];
        j["gather_ratio"] = cmp.gather_ratio[i];
        j["sync_ratio"] = cmp.sync_ratio[i];
        j["inter_traffic_ratio"] = cmp.inter_traffic_ratio[i];
        j["memory_ratio"] = cmp.memory_ratio[i];
      }
      records.push_back(std::move(j));
    }
    const std::string fmt_name =
        format_override.empty() ? cfg.output_format : format_override;
    const std::string out_path =
        out_override.empty() ? cfg.output_path : out_override;
    write_output(out_path, render_records(records, parse_report_format(fmt_name)));
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

// ---------------------------------------------------------------------------
// verify

struct VerifyStats {
  int cases = 0;
  int failures = 0;
  std::string first_failure;
};

std::vector<Bytes> random_shards(int count, std::size_t chunk, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::vector<Bytes> shards(count);
  for (auto& s : shards) {
    s.resize(chunk);
    for (auto& b : s) b = static_cast<std::byte>(rng() & 0xff);
  }
  return shards;
}

void check_hierarchical(VerifyStats& stats, int p, int k, std::uint32_t seed,
                        std::size_t chunk, int threads, bool corrupt) {
  ClusterSpec cluster;
  cluster.num_nodes = p > k ? p / k : 1;
  cluster.devices_per_node = p > k ? k : p;
  cluster.intra_node_bandwidth = 1;
  cluster.inter_node_bandwidth_per_node = 1;
  GroupLayout layout = build_group_layout(p, p);

  VirtualRankEngine engine(threads);
  auto shards = random_shards(p, chunk, seed);
  HierarchicalOptions opts;
  opts.corrupt_stage2 = corrupt;
  auto actual = hierarchical_all_gather(engine, layout, cluster, shards, opts);

  CollectiveGroup all{layout.partition_groups[0]};
  auto expected = all_gather(engine, all, shards);

  ++stats.cases;
  for (int r = 0; r < p; ++r) {
    if (actual[r] != expected[r]) {
      ++stats.failures;
      if (stats.first_failure.empty()) {
        std::ostringstream msg;
        msg << "hierarchical-all-gather mismatch at p=" << p << " k=" << k
            << " seed=" << seed << " chunk=" << chunk << " rank=" << r << "\n";
        // Layout diff in chunk units.
        msg << "  expected chunk order: [";
        for (int c = 0; c < p; ++c) msg << (c ? " " : "") << c;
        msg << "]\n  actual chunk order:   [";
        for (int c = 0; c < p; ++c) {
          Bytes piece(actual[r].begin() + c * chunk,
                      actual[r].begin() + (c + 1) * chunk);
          int found = -1;
          for (int s = 0; s < p; ++s)
            if (piece == shards[s]) { found = s; break; }
          msg << (c ? " " : "") << (found >= 0 ? std::to_string(found) : "?");
        }
        msg << "]";
        stats.first_failure = msg.str();
      }
      return;
    }
  }
}

void check_sync_equivalence(VerifyStats& stats, int n, int p, int s,
                            std::uint32_t seed, int threads) {
  GroupLayout layout = build_group_layout(n, p);
  const std::size_t grad_len = 13;
  std::mt19937 rng(seed);
  std::uniform_int_distribution<std::int64_t> dist(-1000, 1000);

  std::vector<std::vector<std::vector<std::int64_t>>> grads(s);
  for (int step = 0; step < s; ++step) {
    grads[step].resize(n);
    for (int r = 0; r < n; ++r) {
      grads[step][r].resize(grad_len);
      for (auto& v : grads[step][r]) v = dist(rng);
    }
  }

  VirtualRankEngine engine(threads);
  auto two_hop = make_sync_states<std::int64_t>(layout, grad_len, s);
  for (int step = 0; step < s; ++step)
    two_hop_micro_step(engine, layout, two_hop, grads[step]);
  two_hop_boundary(engine, layout, two_hop);

  auto alt = make_sync_states<std::int64_t>(layout, grad_len, s);
  for (int step = 0; step < s; ++step)
    alternative_schedule_step(engine, layout, alt, grads[step]);
  alternative_boundary(alt);

  auto oracle = oracle_global_sync(grads, layout);

  ++stats.cases;
  for (int r = 0; r < n; ++r) {
    if (two_hop[r].shard != oracle[r] || alt[r].shard != oracle[r]) {
      ++stats.failures;
      if (stats.first_failure.empty())
        stats.first_failure = "sync-schedule mismatch at n=" + std::to_string(n) +
                              " p=" + std::to_string(p) + " s=" + std::to_string(s) +
                              " seed=" + std::to_string(seed) +
                              " rank=" + std::to_string(r);
      return;
    }
  }
}

void check_batched(VerifyStats& stats, std::uint32_t seed, int threads) {
  std::mt19937 rng(seed);
  VirtualRankEngine engine(threads);

  std::vector<CollectiveGroup> groups;
  std::vector<std::vector<Bytes>> shard_sets;
  int next_rank = 0;
  for (int b = 0; b < 4; ++b) {
    const int size = 1 + static_cast<int>(rng() % 4);
    CollectiveGroup g;
    for (int i = 0; i < size; ++i) g.ranks.push_back(next_rank++);
    groups.push_back(g);
    shard_sets.push_back(random_shards(size, 64, rng()));
  }

  auto batched = batched_all_gather(engine, groups, shard_sets);
  ++stats.cases;
  for (std::size_t b = 0; b < groups.size(); ++b) {
    auto sequential = all_gather(engine, groups[b], shard_sets[b]);
    if (batched[b] != sequential) {
      ++stats.failures;
      if (stats.first_failure.empty())
        stats.first_failure =
            "batched-all-gather mismatch at batch " + std::to_string(b) +
            " seed=" + std::to_string(seed);
      return;
    }
  }
}

int run_verify(int max_p, const std::vector<int>& k_list, int seeds,
               const std::vector<std::size_t>& chunk_sizes, int threads,
               bool corrupt_stage2) {
  if (seeds == 0) {
    std::cout << "warning: --seeds 0 requested, nothing verified\n";
    std::cout << "verify: vacuous PASS (0 cases)\n";
    return 0;
  }

  VerifyStats hier, sync, batched;

  for (int k : k_list)
    for (int p = 1; p <= max_p; ++p) {
      if (!partition_shape_ok(p, k)) continue;
      for (int seed = 0; seed < seeds; ++seed)
        for (std::size_t chunk : chunk_sizes)
          check_hierarchical(hier, p, k, static_cast<std::uint32_t>(seed), chunk,
                             threads, corrupt_stage2);
    }

  for (int n : {2, 4, 8, 16})
    for (int p = 1; p <= n; ++p) {
      if (n % p != 0) continue;
      for (int s : {1, 2, 4})
        for (int seed = 0; seed < seeds; ++seed)
          check_sync_equivalence(sync, n, p, s, static_cast<std::uint32_t>(seed),
                                 threads);
    }

  for (int seed = 0; seed < seeds; ++seed)
    check_batched(batched, static_cast<std::uint32_t>(seed), threads);

  auto report = [](const char* name, const VerifyStats& st) {
    std::cout << name << "  " << (st.failures == 0 ? "PASS" : "FAIL") << " ("
              << st.cases - st.failures << "/" << st.cases << " cases)\n";
  };
  report("hierarchical-all-gather vs all-gather oracle ", hier);
  report("two-hop / alternative vs global-sum oracle   ", sync);
  report("batched collectives vs sequential oracle     ", batched);

  for (const auto* st : {&hier, &sync, &batched}) {
    if (st->failures > 0) {
      std::cout << st->first_failure << "\n";
      return kExitVerifyFailure;
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// cost

double need(const std::map<std::string, std::string>& params,
            const std::string& key) {
  auto it = params.find(key);
  if (it == params.end())
    raise(Errc::ConfigError, "missing parameter '" + key + "'");
  return parse_quantity(it->second);
}

double get_or(const std::map<std::string, std::string>& params,
              const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : parse_quantity(it->second);
}

int run_cost(const std::string& formula,
             const std::map<std::string, std::string>& params,
             const std::string& format_name) {
  try {
    CostReport report;
    if (formula == "allgather_flat") {
      report.add("allgather_cost_flat",
                 allgather_cost_flat(static_cast<int>(need(params, "n")),
                                     need(params, "M"), need(params, "b_all")),
                 "s", "(n-1)M/(n*B_all)");
    } else if (formula == "allgather_grouped") {
      report.add("allgather_cost_grouped",
                 allgather_cost_grouped(static_cast<int>(need(params, "p")),
                                        need(params, "M"), need(params, "b_part")),
                 "s", "(p-1)M/(p*B_part)");
    } else if (formula == "inter_node_traffic") {
      const bool hier = get_or(params, "hierarchical", 1) != 0;
      report.add("inter_node_traffic",
                 inter_node_traffic(static_cast<int>(need(params, "p")),
                                    static_cast<int>(need(params, "k")),
                                    need(params, "M"), hier),
                 "B", hier ? "(p-k)M/p" : "(p-1)M/p");
    } else if (formula == "traffic_reduction") {
      const int p = static_cast<int>(need(params, "p"));
      const int k = static_cast<int>(need(params, "k"));
      const double ratio = traffic_reduction_ratio(p, k);
      report.add("traffic_reduction_ratio", ratio, "", "(p-1)/(p-k)");
      report.add("volume_reduction_percent", (1.0 - 1.0 / ratio) * 100.0, "%",
                 "1-(p-k)/(p-1)");
    } else if (formula == "two_hop_cost") {
      report.add("two_hop_cost",
                 two_hop_cost(static_cast<int>(need(params, "s")),
                              need(params, "M"), static_cast<int>(need(params, "n")),
                              static_cast<int>(need(params, "p")),
                              need(params, "b_part"), need(params, "b_repl")),
                 "s", "sM(p-1)/(p*B_part)+2M(n-p)/(n*B_repl)");
    } else if (formula == "alt_sync_cost") {
      report.add("alt_sync_cost",
                 alt_sync_cost(static_cast<int>(need(params, "s")),
                               need(params, "M"), static_cast<int>(need(params, "n")),
                               need(params, "b_all")),
                 "s", "2sM(n-1)/(n*B_all)");
    } else if (formula == "two_hop_bound") {
      report.add("two_hop_ratio_bound",
                 two_hop_ratio_bound(static_cast<int>(need(params, "s")),
                                     need(params, "b_all"), need(params, "b_part"),
                                     need(params, "b_repl")),
                 "", "(2s/B_all)/(s/B_part+2/B_repl)");
    } else if (formula == "zero3_volume") {
      report.add("zero3_iteration_volume",
                 zero3_iteration_volume(static_cast<int>(need(params, "n")),
                                        need(params, "M")),
                 "B", "3(n-1)M/n");
    } else if (formula == "latency") {
      auto it = params.find("algorithm");
      LatencyAlgorithm algo = LatencyAlgorithm::tree;
      if (it != params.end()) {
        if (it->second == "ring") algo = LatencyAlgorithm::ring;
        else if (it->second != "tree")
          raise(Errc::ConfigError, "algorithm must be tree or ring");
      }
      report.add("collective_latency",
                 collective_latency(static_cast<int>(need(params, "p")),
                                    need(params, "alpha"), algo),
                 "s",
                 algo == LatencyAlgorithm::tree ? "ceil(log2 p)*alpha" : "2p*alpha");
    } else if (formula == "tflops") {
      report.add("flops_rate",
                 tflops_estimate(get_or(params, "T", 1.0),
                                 static_cast<int>(need(params, "l")),
                                 static_cast<int>(need(params, "L")),
                                 static_cast<int>(need(params, "h")),
                                 static_cast<int>(need(params, "V"))),
                 "FLOP/s", "96TlLh^2(1+l/6h+V/16Lh)");
    } else if (formula == "effective_bandwidth") {
      report.add("effective_bandwidth",
                 effective_bandwidth(need(params, "message"),
                                     static_cast<int>(need(params, "scale")),
                                     BandwidthProfile::default_profile()),
                 "B/s", "profile interpolation");
    } else {
      raise(Errc::ConfigError, "unknown formula '" + formula + "'");
    }
    std::cout << render_report(report, parse_report_format(format_name));
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sharded data-parallel communication simulator"};
  app.require_subcommand(1);

  // simulate
  std::string config_path;
  bool dry_run = false;
  std::string format_override, out_override;
  auto* sim = app.add_subcommand("simulate", "run a scenario comparison");
  sim->add_option("config", config_path, "scenario config file")->required();
  sim->add_flag("--dry-run", dry_run, "validate and print the resolved config");
  sim->add_option("--format", format_override, "table|csv|jsonl (overrides config)");
  sim->add_option("--out", out_override, "report path (overrides config, - for stdout)");

  // verify
  int max_p = 64, seeds = 5, threads = 1;
  std::vector<int> k_list = {1, 2, 4, 8};
  std::vector<std::size_t> chunk_sizes = {1, 7, 1024};
  bool corrupt_stage2 = false;
  auto* ver = app.add_subcommand("verify", "run oracle-equivalence sweeps");
  ver->add_option("--max-p", max_p, "largest partition size to sweep");
  ver->add_option("--k", k_list, "devices-per-node values to sweep");
  ver->add_option("--seeds", seeds, "random seeds per case");
  ver->add_option("--chunk-sizes", chunk_sizes, "payload chunk sizes in bytes");
  ver->add_option("--threads", threads, "virtual-rank threads");
  ver->add_flag("--corrupt-stage2", corrupt_stage2,
                "fault-injection hook: skip the rearrangement stage");

  // cost
  std::string formula, cost_format = "table";
  std::vector<std::string> raw_params;
  auto* cost = app.add_subcommand("cost", "evaluate a closed-form cost formula");
  cost->add_option("--formula", formula, "formula name")->required();
  cost->add_option("--format", cost_format, "table|csv|jsonl");
  cost->add_option("params", raw_params, "key=value parameters");

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) return run_simulate(config_path, dry_run, format_override, out_override);
  if (ver->parsed()) return run_verify(max_p, k_list, seeds, chunk_sizes, threads, corrupt_stage2);
  if (cost->parsed()) {
    std::map<std::string, std::string> params;
    for (const auto& kv : raw_params) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::cerr << "error: parameter '" << kv << "' is not key=value\n";
        return kExitConfig;
      }
      params[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return run_cost(formula, params, cost_format);
  }
  return 0;
}
