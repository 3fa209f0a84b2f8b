#include "ccpop/validate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "ccpop/math.hpp"

namespace ccpop {

double relative_error(double y, double eta_hat) {
  if (!(y > 0.0)) {
    throw std::invalid_argument("relative_error: observed value must be "
                                "positive");
  }
  return (y - eta_hat) / y;
}

std::vector<ErrorRow> error_table(
    const std::vector<std::pair<std::string, double>>& errors_by_age) {
  if (errors_by_age.empty()) {
    throw std::invalid_argument("error_table: no errors");
  }
  std::vector<std::string> order;
  std::vector<std::vector<double>> groups;
  for (const auto& [age, e] : errors_by_age) {
    auto it = std::find(order.begin(), order.end(), age);
    std::size_t idx;
    if (it == order.end()) {
      order.push_back(age);
      groups.emplace_back();
      idx = order.size() - 1;
    } else {
      idx = static_cast<std::size_t>(it - order.begin());
    }
    groups[idx].push_back(e);
  }

  auto make_row = [](const std::string& label, std::vector<double> e) {
    ErrorRow row;
    row.age_label = label;
    row.n = e.size();
    row.mean = mean(e);
    double sq = 0.0;
    for (double v : e) sq += v * v;
    row.rmse = std::sqrt(sq / static_cast<double>(e.size()));
    row.median = median(std::move(e));
    return row;
  };

  std::vector<ErrorRow> rows;
  for (std::size_t i = 0; i < order.size(); ++i) {
    rows.push_back(make_row(order[i], std::move(groups[i])));
  }
  return rows;
}

std::vector<CoverageRow> coverage(const std::vector<EvalCase>& cases) {
  std::vector<std::string> order;
  std::vector<std::array<double, 3>> counts;  // in, above, below
  std::vector<std::size_t> n;
  for (const auto& c : cases) {
    auto it = std::find(order.begin(), order.end(), c.age_label);
    std::size_t idx;
    if (it == order.end()) {
      order.push_back(c.age_label);
      counts.push_back({0.0, 0.0, 0.0});
      n.push_back(0);
      idx = order.size() - 1;
    } else {
      idx = static_cast<std::size_t>(it - order.begin());
    }
    if (c.y > c.upper) {
      counts[idx][1] += 1.0;
    } else if (c.y > c.lower) {
      counts[idx][0] += 1.0;  // inside (lower, upper]
    } else {
      counts[idx][2] += 1.0;
    }
    ++n[idx];
  }
  std::vector<CoverageRow> rows;
  for (std::size_t i = 0; i < order.size(); ++i) {
    CoverageRow row;
    row.age_label = order[i];
    row.n = n[i];
    double total = static_cast<double>(n[i]);
    row.in = counts[i][0] / total;
    row.above = counts[i][1] / total;
    row.below = counts[i][2] / total;
    rows.push_back(std::move(row));
  }
  return rows;
}

double pit(const std::vector<double>& samples, double y) {
  if (samples.empty()) throw std::invalid_argument("pit: empty samples");
  std::size_t count = 0;
  for (double s : samples) {
    if (s <= y) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(samples.size());
}

double linear_baseline(double pop_t1, double pop_t2) {
  if (!(pop_t1 > 0.0) || !(pop_t2 > 0.0)) {
    throw std::invalid_argument("linear_baseline: populations must be "
                                "positive");
  }
  return pop_t2 * (pop_t2 / pop_t1);
}

EvalReport evaluate(const std::vector<EvalCase>& cases) {
  if (cases.empty()) throw std::invalid_argument("evaluate: no cases");
  EvalReport report;
  std::vector<std::pair<std::string, double>> errors;
  for (const auto& c : cases) {
    errors.emplace_back(c.age_label, relative_error(c.y, c.eta_hat));
  }
  report.errors = error_table(errors);
  report.coverage = coverage(cases);
  for (const auto& c : cases) {
    if (!c.samples.empty()) {
      report.pit.emplace_back(c.age_label + ":" + c.group,
                              pit(c.samples, c.y));
    }
  }
  return report;
}

}  // namespace ccpop
