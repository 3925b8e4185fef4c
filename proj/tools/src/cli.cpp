#include "mvsim_cli/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "mvsim/config.hpp"
#include "mvsim/errors.hpp"
#include "mvsim/runner.hpp"
#include "mvsim_cli/presets.hpp"

namespace mvsim::cli {

namespace {

/// A file path wins over a preset id of the same name.
RunConfig load_target(const std::string& target) {
  std::error_code ec;
  if (std::filesystem::exists(target, ec)) return load_run_config(target);
  if (const Preset* p = find_preset(target)) return parse_run_config(p->text);
  return load_run_config(target);
}

void override_threads(RunConfig& config, unsigned threads) {
  config.threads = threads;
  std::visit([&](auto& p) { p.threads = threads; }, config.params);
  for (auto& [key, value] : config.resolved) {
    if (key == "study.threads") value = std::to_string(threads);
  }
}

std::string interval(const Verdict& v) {
  return "[" + format_real(v.lower) + ", " + format_real(v.upper) + "]";
}

void print_report(std::ostream& out, const StudyReport& report) {
  std::size_t width = 7;
  for (const auto& v : report.verdicts) width = std::max(width, v.name.size());
  out << std::left << std::setw(13) << "status" << std::setw(static_cast<int>(width) + 2)
      << "verdict" << std::setw(26) << "value"
      << "accepted\n";
  for (const auto& v : report.verdicts) {
    out << std::left << std::setw(13) << to_string(v.status)
        << std::setw(static_cast<int>(width) + 2) << v.name << std::setw(26)
        << format_real(v.value) << interval(v) << "\n";
    if (!v.detail.empty()) out << "             " << v.detail << "\n";
  }
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
}

int do_run(const std::string& target, std::optional<unsigned> threads, bool no_write,
           std::ostream& out, std::ostream& err) {
  RunConfig config;
  try {
    config = load_target(target);
    if (threads) override_threads(config, *threads);
    for (const auto& w : physics_warnings(config)) err << "warning: " << w << "\n";
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kError;
  }

  StudyReport report;
  try {
    out << "study " << to_string(config.study) << "  seed " << config.seed << "  config "
        << config_hash(config) << "\n";
    report = run_study(config);
  } catch (const BlowUpError& e) {
    err << "simulation blew up: " << e.what() << " (particle " << e.particle() << ", step "
        << e.step() << ")\n";
    return kError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kError;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return kError;
  }

  print_report(out, report);
  if (!no_write) {
    try {
      const auto dir = write_outputs(config, report, output_root(config));
      out << "output " << dir.string() << "\n";
    } catch (const std::exception& e) {
      err << "output error: " << e.what() << "\n";
      return kError;
    }
  }
  std::size_t passed = 0;
  for (const auto& v : report.verdicts) passed += v.status == VerdictStatus::Pass;
  const bool ok = report.all_passed();
  out << "result " << (ok ? "PASS" : "FAIL") << " (" << passed << "/" << report.verdicts.size()
      << " verdicts pass, " << std::fixed << std::setprecision(2) << report.wall_clock_seconds
      << " s)\n";
  out.unsetf(std::ios::floatfield);
  return ok ? kPass : kFail;
}

int do_validate(const std::string& target, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig config = load_target(target);
    const auto warnings = physics_warnings(config);
    for (const auto& w : warnings) out << "warning: " << w << "\n";
    if (!warnings.empty()) return kFail;
    out << "ok: " << to_string(config.study) << " config " << config_hash(config) << "\n";
    return kPass;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"McKean-Vlasov Euler-Maruyama studies", "mvsim"};
  app.set_version_flag("--version", code_version());
  app.require_subcommand(1);

  std::string run_target;
  std::optional<unsigned> threads;
  bool no_write = false;
  auto* run = app.add_subcommand("run", "Run a study from a config file or preset id");
  run->add_option("config", run_target, "Config file path or preset id")->required();
  run->add_option("--threads", threads, "Worker threads (0 = all cores); overrides the config");
  run->add_flag("--no-write", no_write, "Print verdicts without writing the results directory");

  std::string validate_target;
  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("config", validate_target, "Config file path or preset id")->required();

  auto* list = app.add_subcommand("list-presets", "List built-in presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kError;
  }

  if (*list) {
    for (const auto& p : presets()) out << p.id << ": " << p.description << "\n";
    return kPass;
  }
  if (*validate) return do_validate(validate_target, out, err);
  return do_run(run_target, threads, no_write, out, err);
}

}  // namespace mvsim::cli
