#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mvsim {

/// Decimal text with 17 significant digits (exact round trip).
std::string format_real(double value);

/// Least-squares line through (ln x, ln y).
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<std::pair<double, double>> points;  // (ln x, ln y)
};

enum class VerdictStatus { Pass, Fail, Inconclusive };

std::string to_string(VerdictStatus status);

struct Verdict {
  std::string name;
  VerdictStatus status = VerdictStatus::Fail;
  double value = 0.0;
  double lower = 0.0;  // accepted interval [lower, upper]
  double upper = 0.0;
  std::string detail;
};

/// Acceptance interval check. NaN values fail.
Verdict check_within(std::string name, double value, double lower, double upper,
                     std::string detail = {});

/// A CSV data table; rows are written with 17 significant digits.
struct DataTable {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct StudyReport {
  std::string study;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;  // ordered echo
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::pair<std::string, SlopeFit>> fits;
  std::vector<Verdict> verdicts;
  std::vector<DataTable> tables;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;  // methodology notes copied into the manifest
  double wall_clock_seconds = 0.0;
  unsigned threads = 0;
  std::string started_at;

  bool all_passed() const;
  double metric(const std::string& key) const;  // throws if absent
  const SlopeFit& fit(const std::string& key) const;
  const Verdict& verdict(const std::string& key) const;
  const DataTable& table(const std::string& key) const;
};

/// report.json. Timing fields live under "runtime"; everything else is a
/// pure function of (seed, config).
std::string report_json(const StudyReport& report);

/// report.json with the "runtime" object removed.
std::string report_json_without_runtime(const StudyReport& report);

std::string table_csv(const DataTable& table);

/// Field per RFC 4180 (quoted when it contains a comma, quote or newline).
std::string csv_field(const std::string& field);

}  // namespace mvsim
