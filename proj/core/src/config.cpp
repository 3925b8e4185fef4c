#include "mvsim/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mvsim/brownian.hpp"
#include "mvsim/errors.hpp"
#include "mvsim/report.hpp"
#include "mvsim/scheme.hpp"

namespace mvsim {

namespace {

constexpr std::pair<StudyId, std::string_view> kStudyNames[] = {
    {StudyId::StrongConvergence, "strong_convergence"},
    {StudyId::ChaosVsN, "chaos_vs_n"},
    {StudyId::ErrorVsH, "error_vs_h"},
    {StudyId::InvariantMeasure, "invariant_measure"},
    {StudyId::Contraction, "contraction"},
    {StudyId::MomentBound, "moment_bound"},
    {StudyId::DensityEvolution, "density_evolution"},
};

const std::set<std::string, std::less<>> kSections = {"model", "constants", "study", "tolerances",
                                                      "output"};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw ConfigError("key '" + key + "': " + why);
}

std::optional<double> to_real(std::string_view s) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

std::optional<std::uint64_t> to_unsigned(std::string_view s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string join_reals(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + format_real(xs[i]);
  return out;
}

/// Typed access to the parsed entries. Every read records the resolved value
/// (defaults included); keys never read are reported as unknown.
class Reader {
 public:
  explicit Reader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  double real(const std::string& key, double fallback) {
    double v = fallback;
    if (auto* e = take(key)) {
      auto parsed = to_real(e->value);
      if (!parsed) bad(key, "expected a finite real number, got '" + e->value + "'");
      v = *parsed;
    }
    record(key, format_real(v));
    return v;
  }

  std::uint64_t integer(const std::string& key, std::uint64_t fallback) {
    std::uint64_t v = fallback;
    if (auto* e = take(key)) {
      auto parsed = to_unsigned(e->value);
      if (!parsed) bad(key, "expected a non-negative integer, got '" + e->value + "'");
      v = *parsed;
    }
    record(key, std::to_string(v));
    return v;
  }

  bool boolean(const std::string& key, bool fallback) {
    bool v = fallback;
    if (auto* e = take(key)) {
      if (e->value == "true" || e->value == "yes" || e->value == "1") v = true;
      else if (e->value == "false" || e->value == "no" || e->value == "0") v = false;
      else bad(key, "expected true or false, got '" + e->value + "'");
    }
    record(key, v ? "true" : "false");
    return v;
  }

  std::string word(const std::string& key, const std::string& fallback,
                   std::initializer_list<std::string_view> allowed) {
    std::string v = fallback;
    if (auto* e = take(key)) v = e->value;
    if (allowed.size() && std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string options;
      for (auto a : allowed) options += (options.empty() ? "" : ", ") + std::string(a);
      bad(key, "expected one of {" + options + "}, got '" + v + "'");
    }
    record(key, v);
    return v;
  }

  std::string text(const std::string& key, const std::string& fallback) {
    std::string v = fallback;
    if (auto* e = take(key)) v = e->value;
    if (v.empty()) bad(key, "must not be empty");
    record(key, v);
    return v;
  }

  std::vector<double> reals(const std::string& key, std::vector<double> fallback) {
    std::vector<double> v = std::move(fallback);
    if (auto* e = take(key)) {
      v.clear();
      for (auto item : split_list(e->value)) {
        auto parsed = to_real(item);
        if (!parsed) bad(key, "expected a comma-separated list of reals, got '" + e->value + "'");
        v.push_back(*parsed);
      }
    }
    if (v.empty()) bad(key, "list must not be empty");
    record(key, join_reals(v));
    return v;
  }

  std::vector<std::size_t> integers(const std::string& key, std::vector<std::size_t> fallback) {
    std::vector<std::size_t> v = std::move(fallback);
    if (auto* e = take(key)) {
      v.clear();
      for (auto item : split_list(e->value)) {
        auto parsed = to_unsigned(item);
        if (!parsed) {
          bad(key, "expected a comma-separated list of non-negative integers, got '" + e->value +
                       "'");
        }
        v.push_back(static_cast<std::size_t>(*parsed));
      }
    }
    if (v.empty()) bad(key, "list must not be empty");
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
    record(key, out);
    return v;
  }

  std::vector<double> optional_reals(const std::string& key) {
    if (!has(key)) {
      record(key, "none");
      return {};
    }
    return reals(key, {});
  }

  void finish() const {
    for (const auto& [key, e] : entries_) {
      if (!e.used) {
        throw ConfigError("unknown key '" + key + "' (line " + std::to_string(e.line) + ")");
      }
    }
  }

  std::vector<std::pair<std::string, std::string>> resolved;

 private:
  Entry* take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  void record(const std::string& key, std::string value) {
    resolved.emplace_back(key, std::move(value));
  }

  std::map<std::string, Entry> entries_;
};

std::map<std::string, Entry> parse_entries(std::string_view text) {
  std::map<std::string, Entry> entries;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto comment = line.find_first_of("#;");
    line = trim(line.substr(0, comment));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!kSections.count(section)) {
        throw ConfigError(where + ": unknown section '[" + section + "]'");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(where + ": expected 'key = value', got '" + std::string(line) + "'");
    }
    const auto name = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (name.empty()) throw ConfigError(where + ": missing key name");
    if (section.empty()) {
      throw ConfigError(where + ": key '" + std::string(name) + "' appears before any section");
    }
    const std::string key = section + "." + std::string(name);
    if (value.empty()) bad(key, "missing value (" + where + ")");
    if (entries.count(key)) bad(key, "duplicate definition (" + where + ")");
    entries.emplace(key, Entry{std::string(value), line_no, false});
  }
  return entries;
}

void require(bool ok, const std::string& key, const std::string& why) {
  if (!ok) bad(key, why);
}

void require_step(double h, const std::string& key) {
  require(h > 0.0 && h < 1.0, key, "step sizes must lie in (0, 1)");
}

InitialLaw read_initial(Reader& r, double fallback) {
  const double x0 = r.real("study.x0", fallback);
  const double var = r.real("study.x0_variance", 0.0);
  require(var >= 0.0, "study.x0_variance", "must be >= 0");
  return var > 0.0 ? InitialLaw::gaussian({x0}, var) : InitialLaw::point({x0});
}

SlopeTolerance read_slope(Reader& r, double target, double tolerance) {
  SlopeTolerance t;
  t.target = r.real("tolerances.slope_target", target);
  t.tolerance = r.real("tolerances.slope_tolerance", tolerance);
  t.min_r_squared = r.real("tolerances.min_r_squared", 0.95);
  require(t.tolerance >= 0.0, "tolerances.slope_tolerance", "must be >= 0");
  require(t.min_r_squared >= 0.0 && t.min_r_squared <= 1.0, "tolerances.min_r_squared",
          "must lie in [0, 1]");
  return t;
}

double read_nonneg(Reader& r, const std::string& key, double fallback) {
  const double v = r.real(key, fallback);
  require(v >= 0.0, key, "must be >= 0");
  return v;
}

std::size_t read_count(Reader& r, const std::string& key, std::size_t fallback, std::size_t min) {
  const auto v = r.integer(key, fallback);
  require(v >= min, key, "must be >= " + std::to_string(min));
  return static_cast<std::size_t>(v);
}

std::vector<double> read_steps(Reader& r, const std::string& key, std::vector<double> fallback) {
  auto v = r.reals(key, std::move(fallback));
  for (double h : v) require_step(h, key);
  return v;
}

double read_horizon(Reader& r, double fallback) {
  const double t = r.real("study.T", fallback);
  require(t > 0.0, "study.T", "must be > 0");
  return t;
}

const std::vector<double> kDefaultSteps{0.04, 0.02, 0.01, 0.005, 0.0025};

StudyParams read_study(StudyId id, Reader& r, std::uint64_t seed, unsigned threads,
                       double safety) {
  switch (id) {
    case StudyId::StrongConvergence: {
      StrongConvergenceParams p;
      p.h_set = read_steps(r, "study.h_set", kDefaultSteps);
      p.h_ref = read_nonneg(r, "study.h_ref", 0.0);
      p.paths = read_count(r, "study.paths", 10000, 2);
      p.horizon = read_horizon(r, 1.0);
      p.initial = read_initial(r, 0.0);
      p.error_grid = r.word("study.error_grid", "reference", {"reference", "coarse"}) == "coarse"
                         ? ErrorGrid::Coarse
                         : ErrorGrid::Reference;
      p.tolerance = read_slope(r, 0.5, 0.1);
      p.seed = seed;
      p.threads = threads;
      return p;
    }
    case StudyId::ChaosVsN: {
      ChaosParams p;
      p.particle_counts = r.integers("study.n_set", {50, 100, 200, 400, 800, 1600});
      for (auto n : p.particle_counts) require(n >= 1, "study.n_set", "particle counts must be >= 1");
      p.h = r.real("study.h", 0.001);
      require_step(p.h, "study.h");
      p.horizon = read_horizon(r, 1.0);
      p.replicates = read_count(r, "study.replicates", 100, 2);
      p.initial = read_initial(r, 6.0);
      p.proxy_particles = read_count(r, "study.proxy_particles", 0, 0);
      p.tolerance = read_slope(r, -1.0, 0.15);
      p.monotone_slack = read_nonneg(r, "tolerances.monotone_slack", 0.1);
      p.seed = seed;
      p.threads = threads;
      return p;
    }
    case StudyId::ErrorVsH: {
      ErrorVsHParams p;
      p.h_set = read_steps(r, "study.h_set", kDefaultSteps);
      p.h_ref = read_nonneg(r, "study.h_ref", 0.0);
      p.particles = read_count(r, "study.particles", 100, 1);
      p.horizon = read_horizon(r, 1.0);
      p.replicates = read_count(r, "study.replicates", 50, 2);
      p.initial = read_initial(r, 0.0);
      p.tolerance = read_slope(r, 1.0, 0.2);
      p.ratio_tolerance = read_nonneg(r, "tolerances.ratio_tolerance", 0.5);
      p.seed = seed;
      p.threads = threads;
      return p;
    }
    case StudyId::InvariantMeasure: {
      InvariantMeasureParams p;
      p.h_set = read_steps(r, "study.h_set", {0.04, 0.02, 0.01});
      p.paths = read_count(r, "study.paths", 10000, 2);
      p.horizon = read_horizon(r, 30.0);
      p.initials = r.reals("study.initials", {-6.0, 6.0, 16.0});
      p.synchronous = r.boolean("study.synchronous", false);
      p.existence_tolerance = read_nonneg(r, "tolerances.existence", 0.05);
      p.uniqueness_tolerance = read_nonneg(r, "tolerances.uniqueness", 0.05);
      p.discrete_tolerance = read_nonneg(r, "tolerances.discrete", 0.02);
      p.rate_noise_allowance = read_nonneg(r, "tolerances.rate_noise", 0.02);
      p.seed = seed;
      p.threads = threads;
      return p;
    }
    case StudyId::Contraction: {
      ContractionParams p;
      p.x = r.reals("study.x", {-6.0});
      p.y = r.reals("study.y", {6.0});
      p.h = r.real("study.h", 0.01);
      require_step(p.h, "study.h");
      p.horizon = read_horizon(r, 10.0);
      p.paths = read_count(r, "study.paths", 1000, 1);
      p.closed_form_tolerance = read_nonneg(r, "tolerances.closed_form", 1e-10);
      p.threshold_safety = safety;
      p.seed = seed;
      p.threads = threads;
      return p;
    }
    case StudyId::MomentBound: {
      MomentBoundParams p;
      p.h = r.real("study.h", 0.005);
      require_step(p.h, "study.h");
      p.horizon = read_horizon(r, 50.0);
      p.paths = read_count(r, "study.paths", 10000, 2);
      p.initial = read_initial(r, 6.0);
      p.stderr_multiplier = read_nonneg(r, "tolerances.stderr_multiplier", 3.0);
      p.threshold_safety = safety;
      p.seed = seed;
      p.threads = threads;
      return p;
    }
    case StudyId::DensityEvolution: {
      DensityEvolutionParams p;
      const auto kind = r.word("study.kind", "selfconsistent", {"selfconsistent", "interacting"});
      p.kind = kind == "interacting" ? EnsembleKind::Interacting : EnsembleKind::SelfConsistent;
      p.particles = read_count(r, "study.particles", 10000, 2);
      p.h = r.real("study.h", 0.01);
      require_step(p.h, "study.h");
      const double unit = r.real("study.time_unit", 1.0);
      require(unit > 0.0, "study.time_unit", "must be > 0");
      p.times = r.reals("study.times", {0.1, 0.3, 0.5, 4.0, 8.0});
      for (double& t : p.times) {
        require(t >= 0.0, "study.times", "snapshot times must be >= 0");
        t *= unit;
      }
      p.initials = r.reals("study.initials", {6.0});
      p.synchronous = r.boolean("study.synchronous", false);
      p.method = r.word("study.method", "kde", {"kde", "histogram"}) == "histogram"
                     ? DensityMethod::Histogram
                     : DensityMethod::GaussianKde;
      p.bins = read_count(r, "study.bins", 64, 1);
      p.bandwidth = read_nonneg(r, "study.bandwidth", 0.0);
      p.grid_points = read_count(r, "study.grid_points", 512, 2);
      const auto stationary = r.optional_reals("study.stationary_times");
      if (!stationary.empty()) {
        require(stationary.size() == 2, "study.stationary_times", "expected exactly two times");
        p.stationary_times = std::make_pair(stationary[0] * unit, stationary[1] * unit);
      }
      p.compare_bandwidth_factor = r.real("study.compare_bandwidth_factor", 3.0);
      require(p.compare_bandwidth_factor > 0.0, "study.compare_bandwidth_factor", "must be > 0");
      p.stationary_tolerance = read_nonneg(r, "tolerances.stationary", 0.03);
      p.initials_tolerance = read_nonneg(r, "tolerances.initials", 0.05);
      p.seed = seed;
      p.threads = threads;
      return p;
    }
  }
  throw ConfigError("unhandled study id");
}

/// Step sizes a study runs at, for the threshold warning.
std::vector<double> study_steps(const StudyParams& params) {
  return std::visit(
      [](const auto& p) -> std::vector<double> {
        if constexpr (requires { p.h_set; }) return p.h_set;
        else return {p.h};
      },
      params);
}

double resolved_reference(std::span<const double> h_set, double h_ref) {
  return h_ref > 0.0 ? h_ref : *std::max_element(h_set.begin(), h_set.end()) * 0x1.0p-10;
}

void check_reference(std::span<const double> h_set, double h_ref, double horizon) {
  const double ref = resolved_reference(h_set, h_ref);
  for (double h : h_set) {
    try {
      refinement_factor(h, ref);
    } catch (const std::exception&) {
      bad("study.h_set", "h = " + format_real(h) + " is not an integer multiple of h_ref = " +
                             format_real(ref));
    }
    try {
      steps_for(h, horizon);
    } catch (const std::exception&) {
      bad("study.T", "T = " + format_real(horizon) + " is not a multiple of h = " + format_real(h));
    }
  }
  try {
    steps_for(ref, horizon);
  } catch (const std::exception&) {
    bad("study.h_ref", "T is not a multiple of h_ref = " + format_real(ref));
  }
}

void check_steps(double h, double horizon, const std::string& key) {
  try {
    steps_for(h, horizon);
  } catch (const std::exception&) {
    bad(key, format_real(horizon) + " is not a multiple of h = " + format_real(h));
  }
}

}  // namespace

std::string to_string(StudyId id) {
  for (const auto& [k, name] : kStudyNames) {
    if (k == id) return std::string(name);
  }
  return "unknown";
}

std::optional<StudyId> parse_study_id(std::string_view text) {
  for (const auto& [k, name] : kStudyNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

AssumptionConstants default_linear_constants() {
  AssumptionConstants k;
  k.alpha = 1.6;
  k.beta = 0.4;
  k.gamma = 1.6;
  k.kappa = 0.4;
  k.rho = 1.0;
  k.c0 = 4.0;
  k.a = 2.88;
  k.b = 0.32;
  return k;
}

ModelSpec RunConfig::model() const { return make_linear_mean_field(linear, constants); }

RunConfig parse_run_config(std::string_view text) {
  Reader r(parse_entries(text));
  RunConfig c;

  c.model_id = r.word("model.id", "linear", {"linear"});
  c.linear.lambda = r.real("model.lambda", 1.2);
  c.linear.theta = r.real("model.theta", 0.4);
  c.linear.sigma0 = r.real("model.sigma0", 1.0);
  require(c.linear.theta >= 0.0, "model.theta", "must be >= 0");
  require(c.linear.lambda > c.linear.theta, "model.lambda", "must exceed model.theta");
  require(c.linear.sigma0 >= 0.0, "model.sigma0", "must be >= 0");

  const auto d = default_linear_constants();
  c.constants.alpha = r.real("constants.alpha", d.alpha);
  c.constants.beta = r.real("constants.beta", d.beta);
  c.constants.gamma = r.real("constants.gamma", d.gamma);
  c.constants.kappa = r.real("constants.kappa", d.kappa);
  c.constants.rho = r.real("constants.rho", d.rho);
  c.constants.c0 = r.real("constants.c0", d.c0);
  c.constants.a = r.real("constants.a", d.a);
  c.constants.b = r.real("constants.b", d.b);
  try {
    c.constants.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("section [constants]: ") + e.what());
  }
  c.safety = r.real("constants.safety", 0.9);
  require(c.safety > 0.0 && c.safety < 1.0, "constants.safety", "must lie in (0, 1)");

  if (!r.has("study.id")) throw ConfigError("key 'study.id': required key is missing");
  const std::string study = r.word("study.id", "", {});
  const auto id = parse_study_id(study);
  if (!id) {
    std::string options;
    for (const auto& [k, name] : kStudyNames) options += (options.empty() ? "" : ", ") + std::string(name);
    bad("study.id", "unknown study '" + study + "'; expected one of {" + options + "}");
  }
  c.study = *id;
  c.seed = r.integer("study.seed", kDefaultSeed);
  const auto threads = r.integer("study.threads", 0);
  require(threads <= 1024, "study.threads", "must be <= 1024");
  c.threads = static_cast<unsigned>(threads);
  c.params = read_study(c.study, r, c.seed, c.threads, c.safety);
  c.output_dir = r.text("output.dir", "results");
  r.finish();
  c.resolved = std::move(r.resolved);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw ConfigError("config file not found: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string canonical_config(const RunConfig& config) {
  std::string out;
  for (const auto& [key, value] : config.resolved) {
    if (key == "study.threads" || key == "output.dir") continue;
    out += key + " = " + value + "\n";
  }
  return out;
}

std::string config_hash(const RunConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_config(config))));
  return buf;
}

std::vector<std::string> physics_warnings(const RunConfig& config) {
  std::visit(
      [](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, StrongConvergenceParams> ||
                      std::is_same_v<P, ErrorVsHParams>) {
          check_reference(p.h_set, p.h_ref, p.horizon);
        } else if constexpr (std::is_same_v<P, InvariantMeasureParams>) {
          for (double h : p.h_set) {
            check_steps(h, p.horizon, "study.T");
            check_steps(h, 0.5 * p.horizon, "study.T");
          }
        } else if constexpr (std::is_same_v<P, DensityEvolutionParams>) {
          for (double t : p.times) check_steps(p.h, t, "study.times");
          if (p.stationary_times) {
            for (double t : {p.stationary_times->first, p.stationary_times->second}) {
              const bool listed = std::any_of(p.times.begin(), p.times.end(), [&](double s) {
                return std::abs(s - t) <= 1e-9 * std::max(1.0, t);
              });
              require(listed, "study.stationary_times",
                      format_real(t) + " is not one of the snapshot times");
            }
          }
        } else {
          check_steps(p.h, p.horizon, "study.T");
        }
      },
      config.params);

  std::vector<std::string> warnings;
  const auto t = compute_thresholds(config.constants, config.safety);
  for (double h : study_steps(config.params)) {
    if (h >= t.h_sharp) {
      warnings.push_back("h = " + format_real(h) + " is not below h_sharp = " +
                         format_real(t.h_sharp) + " for the declared constants");
    }
  }
  return warnings;
}

}  // namespace mvsim
