#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "mvsim/config.hpp"
#include "mvsim/errors.hpp"

using namespace mvsim;

TEST_SUITE("config") {

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("minimal config resolves defaults") {
  const auto c = parse_run_config("[study]\nid = contraction\n");
  CHECK(c.study == StudyId::Contraction);
  CHECK(c.seed == kDefaultSeed);
  CHECK(c.threads == 0);
  CHECK(c.output_dir == "results");
  CHECK(c.linear.lambda == 1.2);
  CHECK(c.linear.theta == 0.4);
  CHECK(c.linear.sigma0 == 1.0);
  CHECK(c.constants.alpha == 1.6);
  CHECK(c.constants.a == 2.88);
  const auto& p = std::get<ContractionParams>(c.params);
  CHECK(p.h == 0.01);
  CHECK(p.horizon == 10.0);
  CHECK(p.x == std::vector<double>{-6.0});
  // Every read key is recorded, defaults included.
  bool saw_alpha = false;
  for (const auto& [k, v] : c.resolved) saw_alpha |= k == "constants.alpha" && v == "1.6000000000000001";
  CHECK(saw_alpha);
}

TEST_CASE("values, comments and lists") {
  const auto c = parse_run_config(R"(
# leading comment
[model]
lambda = 2.0   
theta=0.5
; another comment
[study]
id = strong_convergence
h_set = 0.02, 0.01
h_ref = 0.000625
paths = 64
seed = 7
[tolerances]
slope_tolerance = 0.05
[output]
dir = out
)");
  CHECK(c.linear.lambda == 2.0);
  CHECK(c.linear.theta == 0.5);
  CHECK(c.seed == 7);
  CHECK(c.output_dir == "out");
  const auto& p = std::get<StrongConvergenceParams>(c.params);
  CHECK(p.h_set == std::vector<double>{0.02, 0.01});
  CHECK(p.h_ref == 0.000625);
  CHECK(p.paths == 64);
  CHECK(p.seed == 7);
  CHECK(p.tolerance.tolerance == 0.05);
  CHECK(p.tolerance.target == 0.5);
}

TEST_CASE("study ids round trip") {
  for (const char* name : {"strong_convergence", "chaos_vs_n", "error_vs_h", "invariant_measure",
                           "contraction", "moment_bound", "density_evolution"}) {
    const auto id = parse_study_id(name);
    REQUIRE(id.has_value());
    CHECK(to_string(*id) == name);
    CHECK_NOTHROW(parse_run_config(std::string("[study]\nid = ") + name + "\n"));
  }
  CHECK_FALSE(parse_study_id("figure2").has_value());
}

TEST_CASE("schema errors name the key") {
  CHECK(contains(error_of("[study]\n"), "study.id"));
  CHECK(contains(error_of("[study]\nid = nope\n"), "study.id"));
  CHECK(contains(error_of("[study]\nid = contraction\nbogus = 1\n"), "unknown key 'study.bogus'"));
  CHECK(contains(error_of("[study]\nid = contraction\nh_set = 0.1\n"), "unknown key 'study.h_set'"));
  CHECK(contains(error_of("[study]\nid = contraction\nh = abc\n"), "study.h"));
  CHECK(contains(error_of("[study]\nid = contraction\nh = 1.5\n"), "study.h"));
  CHECK(contains(error_of("[study]\nid = contraction\nh = 0.01\nh = 0.02\n"), "duplicate"));
  CHECK(contains(error_of("[study]\nid = contraction\npaths = -3\n"), "study.paths"));
  CHECK(contains(error_of("[study]\nid = contraction\nseed = 1.5\n"), "study.seed"));
  CHECK(contains(error_of("[model]\ntheta = 2\n[study]\nid = contraction\n"), "model.lambda"));
  CHECK(contains(error_of("[model]\nsigma0 = -1\n[study]\nid = contraction\n"), "model.sigma0"));
  CHECK(contains(error_of("[weird]\n"), "unknown section"));
  CHECK(contains(error_of("id = contraction\n"), "before any section"));
  CHECK(contains(error_of("[study]\njust words\n"), "expected 'key = value'"));
  CHECK(contains(error_of("[study]\nid = contraction\n[tolerances]\nclosed_form = -1\n"),
                 "tolerances.closed_form"));
  CHECK(contains(error_of("[study]\nid = density_evolution\nsynchronous = maybe\n"),
                 "study.synchronous"));
  CHECK(contains(error_of("[study]\nid = strong_convergence\nh_set = 0.1, x\n"), "study.h_set"));
  CHECK(contains(error_of("[constants]\nalpha = 0.4\n[study]\nid = contraction\n"), "[constants]"));
}

TEST_CASE("missing file is distinct from schema errors") {
  try {
    load_run_config("/nonexistent/dir/none.cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(contains(e.what(), "config file not found"));
  }
}

TEST_CASE("load from file") {
  const auto path = std::filesystem::temp_directory_path() / "mvsim_test_config.cfg";
  {
    std::ofstream out(path);
    out << "[study]\nid = moment_bound\nh = 0.01\nT = 2\n";
  }
  const auto c = load_run_config(path);
  CHECK(std::get<MomentBoundParams>(c.params).horizon == 2.0);
  std::filesystem::remove(path);
}

TEST_CASE("hash is stable and ignores threads and output dir") {
  const std::string base = "[study]\nid = contraction\nseed = 3\n";
  const auto a = parse_run_config(base);
  const auto b = parse_run_config(base + "threads = 4\n[output]\ndir = elsewhere\n");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(canonical_config(a) == canonical_config(b));
  CHECK(config_hash(a).size() == 16);
  CHECK(config_hash(a) == config_hash(parse_run_config(base)));
  // Spelling a default explicitly does not change the hash.
  CHECK(config_hash(a) == config_hash(parse_run_config(base + "h = 0.010\n")));
  CHECK(config_hash(a) != config_hash(parse_run_config("[study]\nid = contraction\nseed = 4\n")));
  CHECK_FALSE(contains(canonical_config(b), "threads"));
}

TEST_CASE("density times scale with the unit") {
  const auto c = parse_run_config(
      "[study]\nid = density_evolution\ntime_unit = 12.5\ntimes = 0, 0.2\n"
      "stationary_times = 0, 0.2\n");
  const auto& p = std::get<DensityEvolutionParams>(c.params);
  CHECK(p.times == std::vector<double>{0.0, 2.5});
  REQUIRE(p.stationary_times.has_value());
  CHECK(p.stationary_times->second == 2.5);
}

TEST_CASE("physics checks") {
  CHECK(physics_warnings(parse_run_config("[study]\nid = contraction\n")).empty());
  const auto big = physics_warnings(parse_run_config("[study]\nid = contraction\nh = 0.5\n"));
  REQUIRE(big.size() == 1);
  CHECK(contains(big[0], "h_sharp"));
  CHECK_THROWS_AS(physics_warnings(parse_run_config(
                      "[study]\nid = strong_convergence\nh_set = 0.04, 0.03\nh_ref = 0.02\n")),
                  ConfigError);
  CHECK_THROWS_AS(
      physics_warnings(parse_run_config("[study]\nid = moment_bound\nh = 0.3\nT = 1\n")),
      ConfigError);
  CHECK_THROWS_AS(physics_warnings(parse_run_config(
                      "[study]\nid = density_evolution\ntimes = 0.1, 0.5\nstationary_times = 0.1, 0.3\n")),
                  ConfigError);
}

}
