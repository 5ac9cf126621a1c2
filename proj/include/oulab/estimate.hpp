#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace oulab {

/// Monte-Carlo value with its standard error. bias_budget is an additive
/// allowance for known discretization bias (zero when none applies).
struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 1;
  double bias_budget = 0.0;
  std::string bias_note;

  /// |mean - target| <= k * std_error + bias_budget.
  bool agrees_with(double target, double k = 4.0) const {
    return std::abs(mean - target) <= k * std_error + bias_budget;
  }
};

/// Sample mean and standard error, summed in index order.
inline McEstimate summarize(const std::vector<double>& samples) {
  McEstimate e;
  e.n = samples.size();
  if (samples.empty()) return e;
  double sum = 0.0;
  for (double v : samples) sum += v;
  e.mean = sum / static_cast<double>(e.n);
  if (e.n > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - e.mean) * (v - e.mean);
    e.std_error = std::sqrt(ss / static_cast<double>(e.n - 1) / static_cast<double>(e.n));
  }
  return e;
}

}  // namespace oulab
