#include "mvsim/runner.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>

#include <json.hpp>

#include "mvsim/errors.hpp"
#include "mvsim/experiments.hpp"

#ifndef MVSIM_VERSION
#define MVSIM_VERSION "0.0.0"
#endif

namespace mvsim {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("failed writing " + path.string());
}

std::string compact_utc_stamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

std::vector<std::string> config_notes(const RunConfig& config) {
  std::vector<std::string> notes;
  for (const auto& [key, value] : config.resolved) {
    if (key == "study.time_unit" && value != "1") {
      notes.push_back("snapshot times are given in units of time_unit = " + value +
                      "; the relaxation time is taken as a multiple of 1 / (lambda - theta)");
    }
  }
  return notes;
}

}  // namespace

std::string code_version() { return MVSIM_VERSION; }

StudyReport run_study(const RunConfig& config) {
  physics_warnings(config);
  const ModelSpec model = config.model();
  return std::visit(
      [&](const auto& p) -> StudyReport {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, StrongConvergenceParams>) {
          return study_strong_convergence(model, p);
        } else if constexpr (std::is_same_v<P, ChaosParams>) {
          return study_chaos_vs_n(model, p);
        } else if constexpr (std::is_same_v<P, ErrorVsHParams>) {
          return study_error_vs_h(model, p);
        } else if constexpr (std::is_same_v<P, InvariantMeasureParams>) {
          return study_invariant_measure(model, p);
        } else if constexpr (std::is_same_v<P, ContractionParams>) {
          return study_contraction(model, p);
        } else if constexpr (std::is_same_v<P, MomentBoundParams>) {
          return study_moment_bound(model, p);
        } else {
          return study_density_evolution(model, p);
        }
      },
      config.params);
}

std::filesystem::path output_root(const RunConfig& config) {
  if (const char* env = std::getenv(kOutputRootEnv); env && *env) return env;
  return config.output_dir;
}

std::string manifest_json(const RunConfig& config, const StudyReport& report) {
  nlohmann::ordered_json m;
  m["study"] = report.study;
  m["seed"] = config.seed;
  m["config_hash"] = config_hash(config);
  m["code_version"] = code_version();
  m["model"] = config.model_id;
  auto resolved = nlohmann::ordered_json::object();
  for (const auto& [key, value] : config.resolved) {
    if (key != "study.threads" && key != "output.dir") resolved[key] = value;
  }
  m["config"] = resolved;
  auto notes = nlohmann::ordered_json::array();
  notes.push_back(
      "errors and distances are measured against numerical references (fine-grid EM or "
      "analytic laws of the linear model), not the unavailable exact solution");
  for (const auto& n : report.notes) notes.push_back(n);
  for (const auto& n : config_notes(config)) notes.push_back(n);
  m["notes"] = notes;
  m["warnings"] = report.warnings;
  m["files"] = nlohmann::ordered_json::array();
  m["files"].push_back("report.json");
  for (const auto& t : report.tables) m["files"].push_back(t.name + ".csv");
  return m.dump(2) + "\n";
}

std::filesystem::path write_outputs(const RunConfig& config, const StudyReport& report,
                                    const std::filesystem::path& root) {
  const auto parent = root / report.study;
  std::filesystem::create_directories(parent);
  const std::string stem = compact_utc_stamp() + "-" + config_hash(config);
  std::filesystem::path dir = parent / stem;
  for (int suffix = 1; !std::filesystem::create_directory(dir); ++suffix) {
    dir = parent / (stem + "-" + std::to_string(suffix));
  }
  write_file(dir / "report.json", report_json(report));
  write_file(dir / "manifest.json", manifest_json(config, report));
  for (const auto& t : report.tables) write_file(dir / (t.name + ".csv"), table_csv(t));
  return dir;
}

}  // namespace mvsim
