#include <doctest.h>

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "ccpop/csv.hpp"
#include "ccpop/errors.hpp"
#include "ccpop/grid.hpp"
#include "tempdir.hpp"

using namespace ccpop;

namespace {

std::vector<std::pair<std::string, std::string>> two_counties() {
  return {{"c1", "d1"}, {"c2", "d2"}};
}

}  // namespace

TEST_CASE("make_grid builds lookup tables") {
  ModelGrid g = make_grid(15, 5, 3, {1999, 2004, 2009}, two_counties());
  CHECK(g.n_age() == 3);
  CHECK(g.age_groups == std::vector<int>{15, 20, 25});
  CHECK(g.county_index.at("c2") == 1);
  CHECK(g.district_index.at("d1") == 0);
  CHECK(g.year_index.at(2004) == 1);
  CHECK(g.age_index.at(25) == 2);
  CHECK(g.county_district == std::vector<std::size_t>{0, 1});
}

TEST_CASE("grid validation failures") {
  // Missing county -> district mapping.
  ModelGrid g;
  g.age_groups = {15, 20};
  g.time_points = {1999, 2004};
  g.age_width = 5;
  g.counties = {"c1", "c2"};
  g.districts = {"d1"};
  g.county_to_district = {{"c1", "d1"}};
  CHECK_THROWS_WITH_AS(validate_grid(g),
                       doctest::Contains("orphan county"), GridError);

  // Time spacing that disagrees with the age width.
  CHECK_THROWS_WITH_AS(make_grid(15, 5, 2, {1979, 1989}, two_counties()),
                       doctest::Contains("spacing != age width"), GridError);

  CHECK_THROWS_AS(make_grid(15, 5, 1, {1999, 2004}, two_counties()),
                  GridError);
  CHECK_THROWS_WITH_AS(
      make_grid(15, 5, 2, {1999, 2004},
                {{"c1", "d1"}, {"c1", "d2"}}),
      doctest::Contains("listed twice"), GridError);
}

TEST_CASE("district_counties preimages") {
  ModelGrid g = make_grid(15, 5, 2, {1999, 2004},
                          {{"c1", "d1"}, {"c2", "d1"}, {"c3", "d2"}});
  CHECK(district_counties(g, "d1") == std::vector<std::string>{"c1", "c2"});
  CHECK(district_counties(g, "d2") == std::vector<std::string>{"c3"});
  CHECK_THROWS_AS(district_counties(g, "nope"), GridError);
}

TEST_CASE("district preimages partition a 47-county map") {
  // Same shape as the real 47-into-35 hierarchy: the district preimages
  // must be disjoint and exhaust the counties.
  std::vector<std::pair<std::string, std::string>> pairs;
  for (int c = 0; c < 47; ++c) {
    pairs.push_back({"c" + std::to_string(c + 1),
                     "d" + std::to_string(c * 35 / 47 + 1)});
  }
  ModelGrid g = make_grid(15, 5, 7,
                          {1979, 1984, 1989, 1994, 1999, 2004, 2009},
                          pairs);
  CHECK(g.n_district() == 35);
  std::set<std::string> seen;
  std::size_t total = 0;
  for (const auto& d : g.districts) {
    for (const auto& c : district_counties(g, d)) {
      CHECK(seen.insert(c).second);  // disjoint
      ++total;
    }
  }
  CHECK(total == 47);
}

TEST_CASE("csv parsing") {
  CsvTable t = parse_csv("a,b,c\n1, x ,3\n\"q,uo\"\"ted\",y,z\n", "mem");
  CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "x");  // unquoted fields are trimmed
  CHECK(t.rows[1][0] == "q,uo\"ted");
  CHECK(t.column("b") == 1);
  CHECK(t.has_column("z") == false);
  CHECK_THROWS_AS(t.column("z"), CsvError);
  CHECK(csv_double(t, 0, 0) == 1.0);
  CHECK(csv_long(t, 0, 2) == 3);
  CHECK_THROWS_AS(csv_double(t, 0, 1), CsvError);
}

TEST_CASE("csv ragged row error carries the line number") {
  CHECK_THROWS_WITH_AS(parse_csv("a,b\n1,2\n3\n", "mem"),
                       doctest::Contains("mem:3"), CsvError);
}

TEST_CASE("csv file round trip") {
  testutil::TempDir dir("csvtest");
  {
    std::ofstream f(dir.file("t.csv"));
    f << "x,y\n1,\"a,b\"\n2,c\n";
  }
  CsvTable t = read_csv(dir.file("t.csv"));
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "a,b");
  CHECK_THROWS_AS(read_csv(dir.file("missing.csv")), CsvError);
}
