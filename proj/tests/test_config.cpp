#include <doctest.h>

#include <string>

#include "sdpsim/config.hpp"
#include "sdpsim/report.hpp"
#include "sdpsim/units.hpp"

using namespace sdpsim;

namespace {

const char* kScenario = R"(# reference scenario
[cluster]
nodes = 8
devices_per_node = 8
intra_node_bandwidth = 128 GB/s
inter_node_bandwidth_per_node = 12.5 GB/s
alpha_intra = 3 us
alpha_inter = 20 us
device_memory = 32 GiB
device_peak_flops = 125 TFLOPS

[model]
hidden = 2560
intermediate = 10240
layers = 127
vocab = 32008
seq_len = 512
dtype_bytes = 2

[training]
micro_steps = 4

[output]
format = jsonl

[strategy baseline]
kind = zero3

[strategy candidate]
kind = grouped
partition_size = 8
hierarchical = true
two_hop = true
)";

}  // namespace

TEST_CASE("quantity parsing accepts unit suffixes") {
  CHECK(parse_quantity("12.5 GB/s") == doctest::Approx(12.5e9));
  CHECK(parse_quantity("32 GiB") == doctest::Approx(32.0 * (1ull << 30)));
  CHECK(parse_quantity("1 KB") == doctest::Approx(1e3));
  CHECK(parse_quantity("20 us") == doctest::Approx(20e-6));
  CHECK(parse_quantity("125 TFLOPS") == doctest::Approx(125e12));
  CHECK(parse_quantity("42") == doctest::Approx(42.0));
  CHECK_THROWS_AS(parse_quantity("12 parsecs"), Error);
  CHECK_THROWS_AS(parse_quantity(""), Error);
}

TEST_CASE("scenario parsing resolves all sections") {
  ScenarioConfig cfg = parse_scenario(kScenario, "ref");
  CHECK(cfg.cluster.num_nodes == 8);
  CHECK(cfg.cluster.devices_per_node == 8);
  CHECK(cfg.cluster.intra_node_bandwidth == doctest::Approx(128e9));
  CHECK(cfg.cluster.device_memory == 32ull << 30);
  CHECK(cfg.layers.size() == 128);  // embedding + 127 blocks
  CHECK(cfg.micro_steps == 4);
  CHECK(cfg.output_format == "jsonl");
  REQUIRE(cfg.strategies.size() == 2);
  CHECK(cfg.strategies[0].name == "baseline");
  CHECK(cfg.strategies[0].strategy == Strategy::zero3);
  CHECK(cfg.strategies[1].p == 8);
  CHECK(cfg.strategies[1].hierarchical_gather);
  CHECK(cfg.strategies[1].two_hop);
  CHECK(cfg.strategies[1].s == 4);
  CHECK_NOTHROW(validate_scenario(cfg));
}

TEST_CASE("parse errors carry file and line anchors and name the field") {
  const std::string bad =
      "[cluster]\nnodes = 8\nwibble = 3\n";
  try {
    parse_scenario(bad, "demo.cfg");
    FAIL("expected a config error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(e.code() == Errc::ConfigError);
    CHECK(msg.find("demo.cfg:3") != std::string::npos);
    CHECK(msg.find("wibble") != std::string::npos);
  }

  const std::string bad_value = "[training]\nmicro_steps = soon\n";
  try {
    parse_scenario(bad_value, "demo.cfg");
    FAIL("expected a config error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("demo.cfg:2") != std::string::npos);
    CHECK(msg.find("micro_steps") != std::string::npos);
  }
}

TEST_CASE("model section and explicit layers are mutually exclusive") {
  const std::string both =
      "[model]\nhidden = 64\nintermediate = 256\nlayers = 2\nvocab = 100\n"
      "seq_len = 16\n[layer]\nparam_bytes = 1024\n";
  CHECK_THROWS_AS(parse_scenario(both, "x"), Error);
}

TEST_CASE("validation names the offending strategy and field") {
  ScenarioConfig cfg = parse_scenario(kScenario, "ref");
  cfg.strategies[1].p = 6;  // does not divide 64, not node-aligned
  try {
    validate_scenario(cfg);
    FAIL("expected a validation error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("candidate") != std::string::npos);
    CHECK(msg.find("partition_size") != std::string::npos);
  }
}

TEST_CASE("bandwidth table points parse into the profile") {
  const std::string text =
      "[bandwidth]\npoint = 1 KB, 8, 100 GB/s\npoint = 1 GB, 64, 11 GB/s\n"
      "[cluster]\nnodes = 1\ndevices_per_node = 8\n"
      "intra_node_bandwidth = 1 GB/s\ninter_node_bandwidth_per_node = 1 GB/s\n"
      "[layer]\nparam_bytes = 1024\n[strategy a]\nkind = grouped\npartition_size = 8\n";
  ScenarioConfig cfg = parse_scenario(text, "bw");
  REQUIRE(cfg.bandwidth.table.size() == 2);
  CHECK(cfg.bandwidth.table[0].message_bytes == doctest::Approx(1e3));
  CHECK(cfg.bandwidth.table[0].group_scale == 8);
  CHECK(cfg.bandwidth.table[1].bandwidth == doctest::Approx(11e9));
  CHECK_NOTHROW(validate_scenario(cfg));
}

TEST_CASE("dry-run description covers cluster, model and strategies") {
  ScenarioConfig cfg = parse_scenario(kScenario, "ref");
  const std::string desc = describe_scenario(cfg);
  CHECK(desc.find("8 nodes x 8 devices") != std::string::npos);
  CHECK(desc.find("baseline") != std::string::npos);
  CHECK(desc.find("candidate") != std::string::npos);
  CHECK(desc.find("hierarchical") != std::string::npos);
}

TEST_CASE("jsonl report rendering round-trips doubles bit for bit") {
  std::vector<Json> records(1);
  records[0]["name"] = "x";
  records[0]["value"] = 0.1 + 0.2;  // not representable exactly
  records[0]["count"] = std::uint64_t{1} << 53;
  const std::string text = render_records(records, ReportFormat::jsonl);
  const Json parsed = Json::parse(text);
  CHECK(parsed["value"].get<double>() == 0.1 + 0.2);
  CHECK(parsed["count"].get<std::uint64_t>() == std::uint64_t{1} << 53);
}

TEST_CASE("unknown report formats are rejected") {
  CHECK_THROWS_AS(parse_report_format("xml"), Error);
  CHECK(parse_report_format("csv") == ReportFormat::csv);
}

TEST_CASE("byte and time formatting") {
  CHECK(format_bytes(1.5e9) == "1.500 GB");
  CHECK(format_bytes(512) == "512 B");
  CHECK(format_seconds(2e-5) == "20.0000 us");
  CHECK(format_seconds(2.5) == "2.5000 s");
}
