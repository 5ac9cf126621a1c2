#pragma once

// Named verification checks over one model and domain. Each check returns
// measured values, reference values and tolerances together with a verdict;
// suites are ordered lists of checks.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "oulab/domains.hpp"
#include "oulab/model.hpp"

namespace oulab {

enum class Verdict { pass, fail, observe_only, resource };

std::string verdict_name(Verdict v);

struct CheckResult {
  std::string id;
  std::string anchor;
  std::vector<double> measured;
  std::vector<double> bound;  // reference or bound per measured value; NaN when none
  std::vector<double> tol;
  Verdict verdict = Verdict::observe_only;
  double seconds = 0.0;
  std::string detail;
  bool rerun = false;  // a statistical failure was retried with 4x samples
};

/// One point of a curve produced by a check, for plotting.
struct SeriesPoint {
  std::string check_id;
  std::string series;
  double x = 0.0;
  double y = 0.0;
  double y_err = 0.0;
};

struct ResourceLimits {
  std::size_t max_paths = 10'000'000;
  long max_grid_nodes = 20000;     // total grid nodes
  double wall_clock_seconds = 3600.0;
};

struct Suite {
  std::string name = "custom";
  Mat a;
  std::optional<Domain> domain;  // defaults to {x_1 > 0}
  std::vector<std::string> checks;
  std::uint64_t seed = 0;
  int jobs = 1;
  double sample_scale = 1.0;  // multiplies every Monte Carlo sample size
  ResourceLimits limits;
};

struct SuiteReport {
  std::vector<CheckResult> results;  // sorted by check id
  std::vector<SeriesPoint> series;
  bool any_failed() const;
  bool any_resource() const;
};

struct CheckInfo {
  std::string id;
  std::string anchor;
  bool statistical = false;
};

/// Every registered check, sorted by id.
const std::vector<CheckInfo>& check_catalog();
bool is_known_check(const std::string& id);

/// Built-in suites: "symmetric-1d" (A = -1 on the half-line) and
/// "rotation-2d" (A = [[-1,-1],[1,-1]] on the half-plane), each with every
/// check in the catalog.
std::vector<std::string> builtin_suite_names();
Suite builtin_suite(const std::string& name);

/// Runs the checks in id order. Failing statistical checks are rerun once
/// with four times the samples. A capacity error or an exhausted wall-clock
/// budget yields a resource verdict; other errors propagate.
SuiteReport run_suite(const Suite& s);

/// Runs one check on a built model.
CheckResult run_check(const std::string& id, const OUModel& m, const Suite& s,
                      std::vector<SeriesPoint>* series = nullptr);

}  // namespace oulab
