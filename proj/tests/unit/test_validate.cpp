#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccpop/validate.hpp"

using namespace ccpop;

TEST_CASE("relative error convention") {
  CHECK(relative_error(100.0, 95.0) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(relative_error(100.0, 100.0) == 0.0);
  CHECK(relative_error(100.0, 110.0) == doctest::Approx(-0.10).epsilon(1e-12));
  CHECK_THROWS_AS((void)relative_error(0.0, 5.0), std::invalid_argument);
  CHECK_THROWS_AS((void)relative_error(-3.0, 5.0), std::invalid_argument);
}

TEST_CASE("error table statistics per age group") {
  std::vector<std::pair<std::string, double>> e = {
      {"15-19", 0.1}, {"15-19", -0.1}, {"20-24", 0.02},
      {"20-24", 0.04}, {"20-24", 0.06},
  };
  std::vector<ErrorRow> rows = error_table(e);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].age_label == "15-19");
  CHECK(rows[0].n == 2);
  CHECK(rows[0].mean == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rows[0].median == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rows[0].rmse == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(rows[1].age_label == "20-24");
  CHECK(rows[1].mean == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(rows[1].median == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(rows[1].rmse ==
        doctest::Approx(std::sqrt((0.0004 + 0.0016 + 0.0036) / 3.0))
            .epsilon(1e-12));

  SUBCASE("zero errors give zero rows") {
    std::vector<ErrorRow> z = error_table({{"a", 0.0}, {"a", 0.0}});
    CHECK(z[0].mean == 0.0);
    CHECK(z[0].rmse == 0.0);
  }
  SUBCASE("age labels keep first-seen order") {
    std::vector<ErrorRow> r =
        error_table({{"z", 0.1}, {"a", 0.2}, {"z", 0.3}});
    REQUIRE(r.size() == 2);
    CHECK(r[0].age_label == "z");
    CHECK(r[1].age_label == "a");
  }
  SUBCASE("empty input is rejected") {
    CHECK_THROWS_AS((void)error_table({}), std::invalid_argument);
  }
}

TEST_CASE("interval coverage classifies against (lower, upper]") {
  auto make_case = [](const std::string& age, double y, double lo,
                      double hi) {
    EvalCase c;
    c.age_label = age;
    c.group = "g";
    c.y = y;
    c.eta_hat = y;
    c.lower = lo;
    c.upper = hi;
    return c;
  };
  SUBCASE("all inside") {
    std::vector<EvalCase> cases = {make_case("a", 5, 0, 10),
                                   make_case("a", 10, 0, 10)};
    std::vector<CoverageRow> rows = coverage(cases);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].in == 1.0);
    CHECK(rows[0].above == 0.0);
    CHECK(rows[0].below == 0.0);
    CHECK(rows[0].n == 2);
  }
  SUBCASE("one each side") {
    std::vector<EvalCase> cases = {make_case("a", 5, 10, 20),
                                   make_case("a", 15, 10, 20),
                                   make_case("a", 25, 10, 20)};
    std::vector<CoverageRow> rows = coverage(cases);
    CHECK(rows[0].below == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(rows[0].in == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(rows[0].above == doctest::Approx(1.0 / 3).epsilon(1e-12));
  }
  SUBCASE("boundary values") {
    // y == lower counts as below, y == upper as inside.
    std::vector<EvalCase> cases = {make_case("a", 10, 10, 20),
                                   make_case("a", 20, 10, 20)};
    std::vector<CoverageRow> rows = coverage(cases);
    CHECK(rows[0].below == 0.5);
    CHECK(rows[0].in == 0.5);
  }
}

TEST_CASE("PIT is the empirical CDF at the observation") {
  std::vector<double> s = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(pit(s, 5.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(pit(s, 0.5) == 0.0);
  CHECK(pit(s, 10.0) == 1.0);
  CHECK(pit(s, 99.0) == 1.0);
  CHECK_THROWS_AS((void)pit({}, 1.0), std::invalid_argument);
}

TEST_CASE("ratio extrapolation baseline") {
  CHECK(linear_baseline(100.0, 150.0) == doctest::Approx(225.0).epsilon(1e-12));
  CHECK(linear_baseline(80.0, 80.0) == doctest::Approx(80.0).epsilon(1e-12));
  CHECK(linear_baseline(200.0, 100.0) == doctest::Approx(50.0).epsilon(1e-12));
  CHECK_THROWS_AS((void)linear_baseline(0.0, 10.0), std::invalid_argument);
  CHECK_THROWS_AS((void)linear_baseline(10.0, -1.0), std::invalid_argument);
}

TEST_CASE("evaluate composes errors, coverage, and PIT") {
  std::vector<EvalCase> cases;
  {
    EvalCase c;
    c.group = "d1";
    c.age_label = "15-19";
    c.y = 100.0;
    c.eta_hat = 90.0;
    c.lower = 80.0;
    c.upper = 120.0;
    c.samples = {80, 90, 100, 110};
    cases.push_back(c);
  }
  {
    EvalCase c;
    c.group = "d2";
    c.age_label = "15-19";
    c.y = 50.0;
    c.eta_hat = 55.0;
    c.lower = 52.0;
    c.upper = 60.0;
    cases.push_back(c);  // no samples: no PIT entry
  }
  {
    EvalCase c;
    c.group = "d1";
    c.age_label = "total";
    c.y = 150.0;
    c.eta_hat = 145.0;
    c.lower = 100.0;
    c.upper = 200.0;
    c.samples = {120, 140, 160, 180};
    cases.push_back(c);
  }
  EvalReport report = evaluate(cases);
  REQUIRE(report.errors.size() == 2);
  CHECK(report.errors[0].age_label == "15-19");
  CHECK(report.errors[0].n == 2);
  CHECK(report.errors[0].mean == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(report.errors[1].age_label == "total");
  CHECK(report.errors[1].mean ==
        doctest::Approx(5.0 / 150.0).epsilon(1e-12));

  REQUIRE(report.coverage.size() == 2);
  CHECK(report.coverage[0].in == 0.5);     // d2 case falls below its interval
  CHECK(report.coverage[0].below == 0.5);
  CHECK(report.coverage[1].in == 1.0);

  REQUIRE(report.pit.size() == 2);
  CHECK(report.pit[0].first == "15-19:d1");
  CHECK(report.pit[0].second == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(report.pit[1].first == "total:d1");
  CHECK(report.pit[1].second == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS((void)evaluate({}), std::invalid_argument);
}
