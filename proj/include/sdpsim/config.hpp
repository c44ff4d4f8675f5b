#pragma once

#include <string>
#include <vector>

#include "sdpsim/cost_model.hpp"
#include "sdpsim/simulator.hpp"
#include "sdpsim/topology.hpp"

namespace sdpsim {

/// A fully resolved scenario: cluster shape, model layers, bandwidth
/// profile, the strategies to compare, and output settings.
struct ScenarioConfig {
  std::string name;
  ClusterSpec cluster;
  std::vector<LayerSpec> layers;
  BandwidthProfile bandwidth = BandwidthProfile::default_profile();
  std::vector<StrategyConfig> strategies;
  int micro_steps = 1;
  int micro_batch = 1;
  SimOptions sim;
  std::string output_format = "table";
  std::string output_path = "-";

  // Transformer dims when the model was given that way (kept for reports).
  int model_hidden = 0, model_intermediate = 0, model_layers = 0;
  int model_vocab = 0, model_seq_len = 0, model_dtype_bytes = 2;
};

/// Parses the key/value scenario format. Errors carry "<name>:<line>:"
/// prefixes and name the offending field.
ScenarioConfig parse_scenario(const std::string& text, const std::string& name);

ScenarioConfig load_scenario_file(const std::string& path);

/// Cross-field validation: strategy shapes against the cluster, memory
/// feasibility preconditions. Raises Error(ConfigError) naming the field.
void validate_scenario(const ScenarioConfig& config);

/// Resolved config echo for --dry-run.
std::string describe_scenario(const ScenarioConfig& config);

}  // namespace sdpsim
