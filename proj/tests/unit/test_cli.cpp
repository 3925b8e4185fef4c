#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvsim/runner.hpp"
#include "mvsim_cli/cli.hpp"
#include "mvsim_cli/presets.hpp"

using namespace mvsim;
using namespace mvsim::cli;

TEST_SUITE("cli") {

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "mvsim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("mvsim_cli_test_" + std::to_string(std::rand()) + "_" +
             std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string write(const std::string& name, const std::string& text) const {
    const auto p = path_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

 private:
  std::filesystem::path path_;
};

bool contains(const std::string& s, const std::string& needle) {
  return s.find(needle) != std::string::npos;
}

const char* kSmallStrong =
    "[study]\nid = strong_convergence\nh_set = 0.04, 0.02, 0.01\nh_ref = 0.0025\n"
    "paths = 200\nthreads = 1\n";

}  // namespace

TEST_CASE("list-presets is stable") {
  const auto a = invoke({"list-presets"});
  CHECK(a.code == 0);
  CHECK(contains(a.out, "figure2: strong convergence slope\n"));
  CHECK(contains(a.out, "figure3_left: chaos error vs N\n"));
  CHECK(a.out == invoke({"list-presets"}).out);
  std::size_t lines = 0;
  for (char ch : a.out) lines += ch == '\n';
  CHECK(lines == presets().size());
  CHECK(a.out.rfind("figure1:", 0) == 0);
}

TEST_CASE("every preset validates cleanly") {
  for (const auto& p : presets()) {
    CAPTURE(p.id);
    const auto r = invoke({"validate", std::string(p.id)});
    CHECK(r.code == 0);
    CHECK(contains(r.out, "ok:"));
  }
}

TEST_CASE("preset files on disk match the embedded text") {
  for (const auto& p : presets()) {
    const auto file = std::filesystem::path(MVSIM_PRESET_DIR) / (std::string(p.id) + ".cfg");
    std::ifstream in(file, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    CHECK(buf.str() == p.text);
  }
}

TEST_CASE("validate exit codes") {
  TempDir dir;
  const auto warn = dir.write("warn.cfg", "[study]\nid = contraction\nh = 0.5\n");
  const auto r1 = invoke({"validate", warn});
  CHECK(r1.code == 1);
  CHECK(contains(r1.out, "h_sharp"));

  const auto grid = dir.write(
      "grid.cfg", "[study]\nid = strong_convergence\nh_set = 0.04, 0.03\nh_ref = 0.02\n");
  const auto r2 = invoke({"validate", grid});
  CHECK(r2.code == 2);
  CHECK(contains(r2.err, "study.h_set"));

  const auto bad = dir.write("bad.cfg", "[study]\nid = contraction\npaths = many\n");
  const auto r3 = invoke({"validate", bad});
  CHECK(r3.code == 2);
  CHECK(contains(r3.err, "study.paths"));

  const auto r4 = invoke({"validate", (dir.path() / "missing.cfg").string()});
  CHECK(r4.code == 2);
  CHECK(contains(r4.err, "config file not found"));
}

TEST_CASE("run writes outputs and returns pass") {
  TempDir dir;
  const auto cfg = dir.write("small.cfg", kSmallStrong);
  const auto root = dir.path() / "out";
  setenv(kOutputRootEnv, root.c_str(), 1);
  const auto r = invoke({"run", cfg});
  unsetenv(kOutputRootEnv);
  CHECK(r.code == 0);
  CHECK(contains(r.out, "result PASS"));
  CHECK(contains(r.out, "rmse_slope"));

  const auto study_dir = root / "strong_convergence";
  REQUIRE(std::filesystem::is_directory(study_dir));
  std::vector<std::filesystem::path> runs;
  for (const auto& e : std::filesystem::directory_iterator(study_dir)) runs.push_back(e.path());
  REQUIRE(runs.size() == 1);
  const auto run_dir = runs[0];
  CHECK(std::filesystem::exists(run_dir / "report.json"));
  CHECK(std::filesystem::exists(run_dir / "rmse_reference_grid.csv"));
  std::ifstream in(run_dir / "manifest.json");
  const auto manifest = nlohmann::json::parse(in);
  CHECK(manifest["study"] == "strong_convergence");
  CHECK(manifest["config_hash"].get<std::string>().size() == 16);
  CHECK(manifest["seed"] == 20240917);
  CHECK_FALSE(manifest["config"].contains("study.threads"));
  CHECK(run_dir.filename().string().find(manifest["config_hash"].get<std::string>()) !=
        std::string::npos);
}

TEST_CASE("run with an unattainable tolerance fails") {
  TempDir dir;
  const auto cfg = dir.write(
      "tight.cfg", std::string(kSmallStrong) + "[tolerances]\nslope_tolerance = 0\n");
  const auto r = invoke({"run", cfg, "--no-write"});
  CHECK(r.code == 1);
  CHECK(contains(r.out, "result FAIL"));
  CHECK(contains(r.out, "fail"));
}

TEST_CASE("run errors") {
  TempDir dir;
  CHECK(invoke({"run", (dir.path() / "none.cfg").string()}).code == 2);
  const auto bad = dir.write("bad.cfg", "[study]\nid = contraction\nunknown = 3\n");
  const auto r = invoke({"run", bad});
  CHECK(r.code == 2);
  CHECK(contains(r.err, "config error"));
  CHECK(contains(r.err, "study.unknown"));
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"frobnicate"}).code == 2);
}

TEST_CASE("thread override keeps the hash and the report") {
  TempDir dir;
  const auto cfg = dir.write("c.cfg", "[study]\nid = contraction\npaths = 20\nT = 1\n");
  const auto one = invoke({"run", cfg, "--no-write", "--threads", "1"});
  const auto three = invoke({"run", cfg, "--no-write", "--threads", "3"});
  CHECK(one.code == 0);
  CHECK(three.code == 0);
  auto strip_timing = [](const std::string& s) { return s.substr(0, s.rfind("result")); };
  CHECK(strip_timing(one.out) == strip_timing(three.out));
}

TEST_CASE("version flag") {
  const auto r = invoke({"--version"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, code_version()));
}

}
