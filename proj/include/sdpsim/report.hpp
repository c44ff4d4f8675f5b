#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace sdpsim {

using Json = nlohmann::ordered_json;

/// Named scalar result with its unit and the identifier of the formula that
/// produced it.
struct ReportEntry {
  std::string name;
  double value;
  std::string unit;
  std::string formula;
};

struct CostReport {
  std::vector<ReportEntry> entries;

  void add(std::string name, double value, std::string unit,
           std::string formula) {
    entries.push_back({std::move(name), value, std::move(unit), std::move(formula)});
  }
};

enum class ReportFormat { table, csv, jsonl };

ReportFormat parse_report_format(const std::string& name);

std::string render_report(const CostReport& report, ReportFormat format);

/// Record-oriented rendering for simulation output: one record per
/// (scenario, strategy). jsonl round-trips doubles exactly.
std::string render_records(const std::vector<Json>& records, ReportFormat format);

}  // namespace sdpsim
