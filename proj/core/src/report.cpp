#include "mvsim/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mvsim {

using json = nlohmann::ordered_json;

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  if (ec != std::errc()) throw std::runtime_error("format_real: conversion failed");
  return std::string(buf, end);
}

std::string to_string(VerdictStatus status) {
  switch (status) {
    case VerdictStatus::Pass:
      return "pass";
    case VerdictStatus::Fail:
      return "fail";
    case VerdictStatus::Inconclusive:
      return "inconclusive";
  }
  return "fail";
}

Verdict check_within(std::string name, double value, double lower, double upper,
                     std::string detail) {
  Verdict v;
  v.name = std::move(name);
  v.value = value;
  v.lower = lower;
  v.upper = upper;
  v.detail = std::move(detail);
  v.status = (value >= lower && value <= upper) ? VerdictStatus::Pass : VerdictStatus::Fail;
  return v;
}

bool StudyReport::all_passed() const {
  for (const auto& v : verdicts) {
    if (v.status != VerdictStatus::Pass) return false;
  }
  return !verdicts.empty();
}

double StudyReport::metric(const std::string& key) const {
  for (const auto& [k, v] : metrics) {
    if (k == key) return v;
  }
  throw std::out_of_range("no metric named " + key);
}

const SlopeFit& StudyReport::fit(const std::string& key) const {
  for (const auto& [k, f] : fits) {
    if (k == key) return f;
  }
  throw std::out_of_range("no fit named " + key);
}

const Verdict& StudyReport::verdict(const std::string& key) const {
  for (const auto& v : verdicts) {
    if (v.name == key) return v;
  }
  throw std::out_of_range("no verdict named " + key);
}

const DataTable& StudyReport::table(const std::string& key) const {
  for (const auto& t : tables) {
    if (t.name == key) return t;
  }
  throw std::out_of_range("no table named " + key);
}

namespace {

// JSON has no NaN/Inf; encode them as strings so the document stays valid.
json real(double x) {
  if (std::isfinite(x)) return x;
  return format_real(x);
}

json body(const StudyReport& r) {
  json doc;
  doc["study"] = r.study;
  doc["seed"] = r.seed;
  json config = json::object();
  for (const auto& [k, v] : r.config) config[k] = v;
  doc["config"] = config;
  json metrics = json::object();
  for (const auto& [k, v] : r.metrics) metrics[k] = real(v);
  doc["metrics"] = metrics;
  json fits = json::object();
  for (const auto& [k, f] : r.fits) {
    json points = json::array();
    for (const auto& [lx, ly] : f.points) points.push_back(json::array({real(lx), real(ly)}));
    fits[k] = {{"slope", real(f.slope)},
               {"intercept", real(f.intercept)},
               {"r_squared", real(f.r_squared)},
               {"points", points}};
  }
  doc["fits"] = fits;
  json verdicts = json::array();
  for (const auto& v : r.verdicts) {
    verdicts.push_back({{"name", v.name},
                        {"status", to_string(v.status)},
                        {"value", real(v.value)},
                        {"lower", real(v.lower)},
                        {"upper", real(v.upper)},
                        {"detail", v.detail}});
  }
  doc["verdicts"] = verdicts;
  json tables = json::array();
  for (const auto& t : r.tables) tables.push_back(t.name + ".csv");
  doc["tables"] = tables;
  doc["warnings"] = r.warnings;
  doc["passed"] = r.all_passed();
  return doc;
}

}  // namespace

std::string report_json(const StudyReport& report) {
  json doc = body(report);
  doc["runtime"] = {{"started_at", report.started_at},
                    {"wall_clock_seconds", report.wall_clock_seconds},
                    {"threads", report.threads}};
  return doc.dump(2) + "\n";
}

std::string report_json_without_runtime(const StudyReport& report) {
  return body(report).dump(2) + "\n";
}

std::string csv_field(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string table_csv(const DataTable& table) {
  std::ostringstream out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out << ',';
    out << csv_field(table.columns[c]);
  }
  out << "\r\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << format_real(row[c]);
    }
    out << "\r\n";
  }
  return out.str();
}

}  // namespace mvsim
