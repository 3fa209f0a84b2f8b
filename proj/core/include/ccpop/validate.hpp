#pragma once

#include <string>
#include <vector>

namespace ccpop {

/// One holdout group: an (age x region) cell with its observation, point
/// estimate, interval and posterior samples.
struct EvalCase {
  std::string group;       // region identifier
  std::string age_label;   // age-group label or "total"
  double y = 0.0;          // observed
  double eta_hat = 0.0;    // posterior median
  double lower = 0.0;      // interval bounds at the evaluation level
  double upper = 0.0;
  std::vector<double> samples;  // posterior (predictive) draws for PIT
};

struct ErrorRow {
  std::string age_label;
  double mean = 0.0, median = 0.0, rmse = 0.0;
  std::size_t n = 0;
};

struct CoverageRow {
  std::string age_label;
  double in = 0.0, above = 0.0, below = 0.0;
  std::size_t n = 0;
};

struct EvalReport {
  std::vector<ErrorRow> errors;        // one row per age label
  std::vector<CoverageRow> coverage;   // one row per age label
  std::vector<std::pair<std::string, double>> pit;  // (group, PIT value)
};

/// e = (y - eta_hat) / y.
double relative_error(double y, double eta_hat);

/// Mean, median and RMSE of relative errors per age group, in first-seen
/// age order. Callers wanting a total-population row pass cases labeled
/// "total" whose y is the age-summed count.
std::vector<ErrorRow> error_table(
    const std::vector<std::pair<std::string, double>>& errors_by_age);

/// Proportions of observations inside (lower, upper], above, and below,
/// per age group.
std::vector<CoverageRow> coverage(const std::vector<EvalCase>& cases);

/// Fraction of samples at or below y.
double pit(const std::vector<double>& samples, double y);

/// Ratio extrapolation: pop_t2 * (pop_t2 / pop_t1).
double linear_baseline(double pop_t1, double pop_t2);

/// Full report over holdout cases. Error and coverage rows follow the age
/// labels of the cases; a "total" age label marks whole-region totals.
EvalReport evaluate(const std::vector<EvalCase>& cases);

}  // namespace ccpop
