#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include <json.hpp>

#include "mvsim/report.hpp"

using namespace mvsim;

TEST_SUITE("report") {

TEST_CASE("real formatting round trips") {
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(format_real(2.0) == "2");
  CHECK(format_real(1e-20) == "9.9999999999999995e-21");
  CHECK(format_real(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_real(-std::numeric_limits<double>::infinity()) == "-inf");
  for (double x : {1.0 / 3.0, 36.70689655172414, 6.02e23, 5e-324}) {
    CHECK(std::strtod(format_real(x).c_str(), nullptr) == x);
  }
}

TEST_CASE("interval verdicts") {
  CHECK(check_within("a", 0.5, 0.4, 0.6).status == VerdictStatus::Pass);
  CHECK(check_within("a", 0.4, 0.4, 0.6).status == VerdictStatus::Pass);
  CHECK(check_within("a", 0.61, 0.4, 0.6).status == VerdictStatus::Fail);
  CHECK(check_within("a", std::nan(""), 0.4, 0.6).status == VerdictStatus::Fail);
  CHECK(to_string(VerdictStatus::Inconclusive) == "inconclusive");
}

TEST_CASE("csv quoting and line endings") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_field("two\nlines") == "\"two\nlines\"");

  DataTable t{"t", {"h", "err,rms"}, {{0.5, 0.25}, {0.1, 1e-20}}};
  CHECK(table_csv(t) == "h,\"err,rms\"\r\n0.5,0.25\r\n0.10000000000000001,9.9999999999999995e-21\r\n");
}

TEST_CASE("report accessors and json") {
  StudyReport r;
  r.study = "demo";
  r.seed = 9;
  r.metrics = {{"m", 1.5}, {"bad", std::numeric_limits<double>::infinity()}};
  r.fits = {{"f", SlopeFit{0.5, -1.0, 0.99, {{0.0, -1.0}}}}};
  r.verdicts = {check_within("v", 1.0, 0.0, 2.0)};
  r.tables = {DataTable{"tab", {"x"}, {{1.0}}}};
  r.wall_clock_seconds = 3.25;
  r.threads = 4;
  r.started_at = "2026-01-01T00:00:00Z";

  CHECK(r.all_passed());
  CHECK(r.metric("m") == 1.5);
  CHECK_THROWS(r.metric("nope"));
  CHECK(r.fit("f").slope == 0.5);
  CHECK(r.verdict("v").status == VerdictStatus::Pass);
  CHECK(r.table("tab").rows.size() == 1);

  const auto full = nlohmann::json::parse(report_json(r));
  CHECK(full["runtime"]["threads"] == 4);
  CHECK(full["metrics"]["bad"] == "inf");
  CHECK(full["tables"][0] == "tab.csv");
  CHECK(full["passed"] == true);

  const auto stripped = nlohmann::json::parse(report_json_without_runtime(r));
  CHECK_FALSE(stripped.contains("runtime"));
  StudyReport other = r;
  other.wall_clock_seconds = 99.0;
  other.threads = 1;
  other.started_at = "later";
  CHECK(report_json_without_runtime(other) == report_json_without_runtime(r));
  CHECK(report_json(other) != report_json(r));

  r.verdicts.push_back({"w", VerdictStatus::Inconclusive, 0.0, 0.0, 0.0, ""});
  CHECK_FALSE(r.all_passed());
}

}
