#include "sdpsim/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "sdpsim/report.hpp"
#include "sdpsim/units.hpp"

namespace sdpsim {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

struct ParseContext {
  std::string name;
  int line = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    raise(Errc::ConfigError, name + ":" + std::to_string(line) + ": " + msg);
  }

  double quantity(const std::string& key, const std::string& value) const {
    try {
      return parse_quantity(value);
    } catch (const Error& e) {
      fail("field '" + key + "': " + e.what());
    }
  }

  int integer(const std::string& key, const std::string& value) const {
    const double v = quantity(key, value);
    const long long i = static_cast<long long>(v);
    if (static_cast<double>(i) != v)
      fail("field '" + key + "' must be an integer, got '" + value + "'");
    return static_cast<int>(i);
  }

  bool boolean(const std::string& key, const std::string& value) const {
    if (value == "true" || value == "on" || value == "1") return true;
    if (value == "false" || value == "off" || value == "0") return false;
    fail("field '" + key + "' must be true or false, got '" + value + "'");
  }
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(trim(item));
  return parts;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text, const std::string& name) {
  ScenarioConfig cfg;
  cfg.name = name;
  cfg.bandwidth.table.clear();  // only keep defaults if nothing is given
  bool bandwidth_seen = false;
  bool model_seen = false;
  std::vector<LayerSpec> explicit_layers;

  ParseContext ctx{name, 0};
  std::string section;
  std::string strategy_name;
  StrategyConfig* strategy = nullptr;
  LayerSpec* layer = nullptr;

  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    ++ctx.line;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') ctx.fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      strategy = nullptr;
      layer = nullptr;
      if (section.rfind("strategy", 0) == 0) {
        strategy_name = trim(section.substr(8));
        if (strategy_name.empty()) ctx.fail("strategy section needs a name");
        cfg.strategies.emplace_back();
        strategy = &cfg.strategies.back();
        strategy->name = strategy_name;
        section = "strategy";
      } else if (section == "layer") {
        explicit_layers.emplace_back();
        layer = &explicit_layers.back();
      } else if (section != "cluster" && section != "model" &&
                 section != "bandwidth" && section != "training" &&
                 section != "output" && section != "sim") {
        ctx.fail("unknown section [" + section + "]");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) ctx.fail("expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) ctx.fail("key '" + key + "' outside any section");

    if (section == "cluster") {
      if (key == "nodes") cfg.cluster.num_nodes = ctx.integer(key, value);
      else if (key == "devices_per_node") cfg.cluster.devices_per_node = ctx.integer(key, value);
      else if (key == "intra_node_bandwidth") cfg.cluster.intra_node_bandwidth = ctx.quantity(key, value);
      else if (key == "inter_node_bandwidth_per_node") cfg.cluster.inter_node_bandwidth_per_node = ctx.quantity(key, value);
      else if (key == "alpha_intra") cfg.cluster.alpha_intra = ctx.quantity(key, value);
      else if (key == "alpha_inter") cfg.cluster.alpha_inter = ctx.quantity(key, value);
      else if (key == "device_memory") cfg.cluster.device_memory = static_cast<std::uint64_t>(ctx.quantity(key, value));
      else if (key == "device_peak_flops") cfg.cluster.device_peak_flops = ctx.quantity(key, value);
      else ctx.fail("unknown key '" + key + "' in [cluster]");
    } else if (section == "model") {
      model_seen = true;
      if (key == "hidden") cfg.model_hidden = ctx.integer(key, value);
      else if (key == "intermediate") cfg.model_intermediate = ctx.integer(key, value);
      else if (key == "layers") cfg.model_layers = ctx.integer(key, value);
      else if (key == "vocab") cfg.model_vocab = ctx.integer(key, value);
      else if (key == "seq_len") cfg.model_seq_len = ctx.integer(key, value);
      else if (key == "dtype_bytes") cfg.model_dtype_bytes = ctx.integer(key, value);
      else ctx.fail("unknown key '" + key + "' in [model]");
    } else if (section == "layer") {
      if (key == "param_bytes") layer->param_bytes = static_cast<std::uint64_t>(ctx.quantity(key, value));
      else if (key == "fwd_flops") layer->fwd_flops = ctx.quantity(key, value);
      else if (key == "bwd_flops") layer->bwd_flops = ctx.quantity(key, value);
      else ctx.fail("unknown key '" + key + "' in [layer]");
    } else if (section == "bandwidth") {
      bandwidth_seen = true;
      if (key == "b_all") cfg.bandwidth.b_all = ctx.quantity(key, value);
      else if (key == "b_part") cfg.bandwidth.b_part = ctx.quantity(key, value);
      else if (key == "b_repl") cfg.bandwidth.b_repl = ctx.quantity(key, value);
      else if (key == "point") {
        const auto parts = split(value, ',');
        if (parts.size() != 3)
          ctx.fail("field 'point' expects 'message, scale, bandwidth'");
        BandwidthEntry e;
        e.message_bytes = ctx.quantity(key, parts[0]);
        e.group_scale = ctx.integer(key, parts[1]);
        e.bandwidth = ctx.quantity(key, parts[2]);
        cfg.bandwidth.table.push_back(e);
      } else ctx.fail("unknown key '" + key + "' in [bandwidth]");
    } else if (section == "training") {
      if (key == "micro_steps") cfg.micro_steps = ctx.integer(key, value);
      else if (key == "micro_batch") cfg.micro_batch = ctx.integer(key, value);
      else ctx.fail("unknown key '" + key + "' in [training]");
    } else if (section == "output") {
      if (key == "format") cfg.output_format = value;
      else if (key == "path") cfg.output_path = value;
      else ctx.fail("unknown key '" + key + "' in [output]");
    } else if (section == "sim") {
      if (key == "compute_efficiency") cfg.sim.compute_efficiency = ctx.quantity(key, value);
      else if (key == "include_latency") cfg.sim.include_latency = ctx.boolean(key, value);
      else if (key == "latency_algorithm") {
        if (value == "tree") cfg.sim.latency_algorithm = LatencyAlgorithm::tree;
        else if (value == "ring") cfg.sim.latency_algorithm = LatencyAlgorithm::ring;
        else ctx.fail("field 'latency_algorithm' must be tree or ring");
      }
      else if (key == "memory_headroom") cfg.sim.memory_headroom = ctx.quantity(key, value);
      else if (key == "model_state_factor") cfg.sim.model_state_factor = ctx.quantity(key, value);
      else ctx.fail("unknown key '" + key + "' in [sim]");
    } else if (section == "strategy") {
      if (key == "kind") {
        if (value == "grouped") strategy->strategy = Strategy::grouped;
        else if (value == "zero3") strategy->strategy = Strategy::zero3;
        else ctx.fail("field 'kind' must be grouped or zero3, got '" + value + "'");
      }
      else if (key == "partition_size") strategy->p = ctx.integer(key, value);
      else if (key == "hierarchical") strategy->hierarchical_gather = ctx.boolean(key, value);
      else if (key == "two_hop") strategy->two_hop = ctx.boolean(key, value);
      else if (key == "prefetch_depth") strategy->prefetch_depth = ctx.integer(key, value);
      else ctx.fail("unknown key '" + key + "' in [strategy " + strategy->name + "]");
    }
  }

  if (model_seen && !explicit_layers.empty()) {
    ctx.line = 0;
    ctx.fail("give either a [model] section or [layer] sections, not both");
  }
  if (model_seen) {
    cfg.layers = derive_layers_from_transformer(
        cfg.model_hidden, cfg.model_intermediate, cfg.model_layers,
        cfg.model_vocab, cfg.model_seq_len, cfg.model_dtype_bytes,
        cfg.micro_batch);
  } else {
    cfg.layers = std::move(explicit_layers);
  }
  if (!bandwidth_seen) cfg.bandwidth = BandwidthProfile::default_profile();
  for (auto& s : cfg.strategies) s.s = cfg.micro_steps;
  return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::ConfigError, "cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string base = path;
  const auto slash = base.find_last_of('/');
  if (slash != std::string::npos) base = base.substr(slash + 1);
  const auto dot = base.find_last_of('.');
  if (dot != std::string::npos) base = base.substr(0, dot);
  ScenarioConfig cfg = parse_scenario(buf.str(), path);
  cfg.name = base;
  return cfg;
}

void validate_scenario(const ScenarioConfig& config) {
  try {
    config.cluster.validate();
  } catch (const Error& e) {
    raise(Errc::ConfigError, config.name + ": [cluster] " + e.what());
  }
  if (config.layers.empty())
    raise(Errc::ConfigError, config.name + ": no model layers ([model] or [layer] required)");
  if (config.strategies.empty())
    raise(Errc::ConfigError, config.name + ": at least one [strategy] section required");
  if (config.micro_steps < 1)
    raise(Errc::ConfigError, config.name + ": training.micro_steps must be >= 1");

  const int n = config.cluster.total_ranks();
  const int k = config.cluster.devices_per_node;
  for (const auto& s : config.strategies) {
    if (s.strategy == Strategy::zero3) {
      if (s.hierarchical_gather || s.two_hop)
        raise(Errc::ConfigError, config.name + ": strategy '" + s.name +
                                     "': zero3 cannot enable hierarchical or two_hop");
      continue;
    }
    if (s.p < 1 || s.p > n)
      raise(Errc::ConfigError, config.name + ": strategy '" + s.name +
                                   "': partition_size must be in [1, " +
                                   std::to_string(n) + "], got " +
                                   std::to_string(s.p));
    if (n % s.p != 0)
      raise(Errc::ConfigError, config.name + ": strategy '" + s.name +
                                   "': partition_size " + std::to_string(s.p) +
                                   " does not divide total ranks " +
                                   std::to_string(n));
    if (!partition_shape_ok(s.p, k))
      raise(Errc::ConfigError, config.name + ": strategy '" + s.name +
                                   "': partition_size " + std::to_string(s.p) +
                                   " is not node-aligned for devices_per_node " +
                                   std::to_string(k));
  }
  parse_report_format(config.output_format);
}

std::string describe_scenario(const ScenarioConfig& config) {
  std::ostringstream out;
  out << "scenario " << config.name << "\n"
      << "  cluster: " << config.cluster.num_nodes << " nodes x "
      << config.cluster.devices_per_node << " devices ("
      << config.cluster.total_ranks() << " ranks)\n"
      << "  intra bw " << format_bytes(config.cluster.intra_node_bandwidth)
      << "/s, per-node NIC "
      << format_bytes(config.cluster.inter_node_bandwidth_per_node) << "/s\n"
      << "  device memory " << format_bytes(static_cast<double>(config.cluster.device_memory))
      << ", peak " << config.cluster.device_peak_flops / 1e12 << " TFLOPS\n"
      << "  model: " << config.layers.size() << " layers, "
      << format_bytes(static_cast<double>(total_param_bytes(config.layers)))
      << " gathered parameter bytes\n"
      << "  training: micro_steps=" << config.micro_steps
      << " micro_batch=" << config.micro_batch << "\n"
      << "  strategies:";
  for (const auto& s : config.strategies) {
    out << "\n    " << s.name << ": "
        << (s.strategy == Strategy::zero3 ? "zero3" : "grouped");
    if (s.strategy == Strategy::grouped)
      out << " p=" << s.p << (s.hierarchical_gather ? " hierarchical" : "")
          << (s.two_hop ? " two_hop" : "");
  }
  out << "\n";
  return out.str();
}

}  // namespace sdpsim
