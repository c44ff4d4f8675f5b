#include "sdpsim/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "sdpsim/errors.hpp"

namespace sdpsim {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string display(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

ReportFormat parse_report_format(const std::string& name) {
  if (name == "table") return ReportFormat::table;
  if (name == "csv") return ReportFormat::csv;
  if (name == "jsonl") return ReportFormat::jsonl;
  raise(Errc::ConfigError, "unknown output format '" + name +
                               "' (expected table, csv, or jsonl)");
}

std::string render_report(const CostReport& report, ReportFormat format) {
  std::ostringstream out;
  switch (format) {
    case ReportFormat::table: {
      std::size_t width = 4;
      for (const auto& e : report.entries) width = std::max(width, e.name.size());
      for (const auto& e : report.entries) {
        out << e.name << std::string(width - e.name.size() + 2, ' ')
            << display(e.value);
        if (!e.unit.empty()) out << ' ' << e.unit;
        out << "    [" << e.formula << "]\n";
      }
      break;
    }
    case ReportFormat::csv: {
      out << "name,value,unit,formula\n";
      for (const auto& e : report.entries)
        out << e.name << ',' << num(e.value) << ',' << e.unit << ','
            << e.formula << '\n';
      break;
    }
    case ReportFormat::jsonl: {
      for (const auto& e : report.entries) {
        Json j;
        j["name"] = e.name;
        j["value"] = e.value;
        j["unit"] = e.unit;
        j["formula"] = e.formula;
        out << j.dump() << '\n';
      }
      break;
    }
  }
  return out.str();
}

std::string render_records(const std::vector<Json>& records,
                           ReportFormat format) {
  std::ostringstream out;
  switch (format) {
    case ReportFormat::jsonl: {
      for (const auto& r : records) out << r.dump() << '\n';
      break;
    }
    case ReportFormat::csv: {
      if (records.empty()) break;
      bool first = true;
      for (auto it = records.front().begin(); it != records.front().end(); ++it) {
        if (!first) out << ',';
        out << it.key();
        first = false;
      }
      out << '\n';
      for (const auto& r : records) {
        first = true;
        for (auto it = r.begin(); it != r.end(); ++it) {
          if (!first) out << ',';
          if (it->is_number_float())
            out << num(it->get<double>());
          else if (it->is_string())
            out << it->get<std::string>();
          else
            out << it->dump();
          first = false;
        }
        out << '\n';
      }
      break;
    }
    case ReportFormat::table: {
      for (const auto& r : records) {
        std::size_t width = 4;
        for (auto it = r.begin(); it != r.end(); ++it)
          width = std::max(width, it.key().size());
        for (auto it = r.begin(); it != r.end(); ++it) {
          out << it.key() << std::string(width - it.key().size() + 2, ' ');
          if (it->is_number_float())
            out << display(it->get<double>());
          else if (it->is_string())
            out << it->get<std::string>();
          else
            out << it->dump();
          out << '\n';
        }
        out << '\n';
      }
      break;
    }
  }
  return out.str();
}

}  // namespace sdpsim
