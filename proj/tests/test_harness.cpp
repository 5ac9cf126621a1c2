#include <sstream>

#include "doctest.h"
#include "oulab/config.hpp"
#include "oulab/errors.hpp"
#include "oulab/harness.hpp"
#include "oulab/report.hpp"

using namespace oulab;

TEST_CASE("check catalog") {
  const auto& cat = check_catalog();
  CHECK(cat.size() == 19);
  for (std::size_t i = 1; i < cat.size(); ++i) CHECK(cat[i - 1].id < cat[i].id);
  for (const auto& c : cat) CHECK_FALSE(c.anchor.empty());
  CHECK(is_known_check("grid.identities"));
  CHECK_FALSE(is_known_check("grid.nothing"));
  CHECK(builtin_suite("symmetric-1d").checks.size() == 19);
  CHECK_THROWS_AS(builtin_suite("nope"), Error);
}

TEST_CASE("suite runner basics") {
  Suite s = builtin_suite("rotation-2d");
  s.seed = 3;
  s.checks = {};
  CHECK(run_suite(s).results.empty());

  s.checks = {"model.duality", "model.bmatrix", "kill.t0"};
  const SuiteReport rep = run_suite(s);
  REQUIRE(rep.results.size() == 3);
  CHECK(rep.results[0].id == "kill.t0");
  CHECK(rep.results[1].id == "model.bmatrix");
  for (const CheckResult& r : rep.results) CHECK(r.verdict == Verdict::pass);
  CHECK_FALSE(rep.any_failed());

  Suite unstable = s;
  unstable.a = Mat::Identity(2, 2);
  CHECK_THROWS_AS(run_suite(unstable), Error);

  Suite capped = s;
  capped.checks = {"sg.oracle"};
  capped.limits.max_paths = 10;
  const SuiteReport rc = run_suite(capped);
  CHECK(rc.results[0].verdict == Verdict::resource);
  CHECK(rc.any_resource());

  Suite high = s;
  high.a = -Mat::Identity(3, 3);
  high.domain = Domain::half_space(Vec::Unit(3, 0), 0.0);
  high.checks = {"grid.identities"};
  CHECK(run_suite(high).results[0].verdict == Verdict::observe_only);
}

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(R"(
seed = 42
jobs = 2
out = "runs/a"
[model]
a = [[-1, -1], [1.0, -1.0]]
[domain]
kind = "complement"
inner = { kind = "ball", center = [0, 0], radius = 0.5 }
[run]
checks = ["grid.identities", "sg.oracle"]
[limits]
max_paths = 1000
wall_clock_seconds = 60
)");
  REQUIRE(c.seed);
  CHECK(*c.seed == 42);
  CHECK(*c.jobs == 2);
  CHECK(c.out == "runs/a");
  REQUIRE(c.a);
  CHECK((*c.a)(1, 0) == 1.0);
  REQUIRE(c.domain);
  CHECK(c.domain->kind() == Domain::Kind::complement);
  CHECK(c.checks.size() == 2);
  CHECK(c.limits.max_paths == 1000);
  CHECK(c.limits.wall_clock_seconds == 60.0);

  CHECK_THROWS_AS(parse_config("seed = "), Error);
  CHECK_THROWS_AS(parse_config("colour = 1"), Error);
  CHECK_THROWS_AS(parse_config("[model]\na = [[1, 2]]"), Error);
  CHECK_THROWS_AS(parse_config("[run]\nchecks = [\"x.y\"]"), Error);
  CHECK_THROWS_AS(parse_config("[domain]\nkind = \"torus\""), Error);
  CHECK_THROWS_AS(parse_config("[model]\na = [[-1]]\n[domain]\nkind = \"ball\"\ncenter = [0, 0]\nradius = 1"), Error);
  CHECK_THROWS_AS(parse_config("seed = -3"), Error);
  try {
    parse_config("seed = ");
  } catch (const Error& e) {
    CHECK(e.kind() == Error::Kind::config);
  }
}

TEST_CASE("result files") {
  CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");

  SuiteReport rep;
  CheckResult r;
  r.id = "grid.ndr";
  r.anchor = "a, with a comma";
  r.measured = {0.5, 1.0};
  r.bound = {2.0, std::numeric_limits<double>::quiet_NaN()};
  r.tol = {1e-6, 0.0};
  r.verdict = Verdict::pass;
  rep.results.push_back(r);
  rep.series.push_back({"grid.ndr", "norm", 0.1, 0.25, 0.0});
  std::ostringstream csv;
  write_results_csv(csv, rep, "abc");
  CHECK(csv.str().find("# oulab " OULAB_VERSION " config=abc\n") == 0);
  CHECK(csv.str().find("grid.ndr,\"a, with a comma\",0.5;1,2;,1e-06;0,pass,") != std::string::npos);

  std::ostringstream ser;
  write_series_csv(ser, rep, "abc");
  std::istringstream in(ser.str());
  const auto pts = read_series_csv(in);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].y == 0.25);

  std::ostringstream js;
  Suite s = builtin_suite("symmetric-1d");
  write_summary_json(js, s, rep, "abc");
  CHECK(js.str().find("\"config_hash\": \"abc\"") != std::string::npos);

  const std::string svg = render_svg("scan", rep.series, provenance_line("abc"));
  CHECK(svg.find("<polyline") == std::string::npos);  // a single point draws no line
  CHECK(svg.find("<circle") != std::string::npos);
  CHECK(render_svg("sweep", {}, provenance_line("abc")).find("no data") != std::string::npos);
  CHECK_THROWS_AS(render_svg("pie", {}, ""), Error);

  Suite t = s;
  t.seed = 1;
  CHECK(suite_canonical_json(s) != suite_canonical_json(t));
}
