#include <doctest.h>

#include <fstream>
#include <string>
#include <vector>

#include "ccpop/errors.hpp"
#include "ccpop/grid.hpp"
#include "ccpop/ingest.hpp"
#include "tempdir.hpp"

using namespace ccpop;

namespace {

PopulationObservation census_obs(const ModelGrid& grid, std::size_t a,
                                 std::size_t t, const std::string& region,
                                 RegionLevel level, double count) {
  PopulationObservation o;
  o.index = {a, t, region};
  o.level = level;
  o.count = count;
  o.sampling_var_log = sampling_variance(count, 0.1);
  return o;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

}  // namespace

TEST_CASE("sampling variance delta-method values") {
  // (1 - f) / (f * count): the empirical log-scale variance of a weighted
  // f-sample of the given total (binomial thinning, weights 1/f).
  CHECK(sampling_variance(1000.0, 0.1) ==
        doctest::Approx(0.009).epsilon(1e-12));
  CHECK(sampling_variance(100.0, 0.1) == doctest::Approx(0.09).epsilon(1e-12));
  CHECK(sampling_variance(500.0, 1.0) == 0.0);  // complete enumeration
  CHECK_THROWS_AS(sampling_variance(0.0, 0.1), InputError);
  CHECK_THROWS_AS(sampling_variance(10.0, 0.0), InputError);
  CHECK_THROWS_AS(sampling_variance(10.0, 1.5), InputError);
}

TEST_CASE("ingest options per-census sampling fractions") {
  IngestOptions opt;
  opt.sampling_fraction = 0.1;
  opt.sampling_fraction_by_year[1999] = 0.05;
  CHECK(opt.fraction_for_year(1999) == 0.05);
  CHECK(opt.fraction_for_year(2009) == 0.1);
}

TEST_CASE("microdata aggregation") {
  ModelGrid g = make_grid(15, 5, 7,
                          {1979, 1984, 1989, 1994, 1999, 2004, 2009},
                          {{"c1", "d1"}, {"c2", "d1"}});

  SUBCASE("weights sum within an age group") {
    std::vector<MicroRecord> recs = {{17.0, "c1", 10.0}, {19.0, "c1", 10.0}};
    MicrodataReport rep =
        aggregate_microdata(recs, g, 1999, RegionLevel::county, 0.1);
    REQUIRE(rep.observations.size() == 1);
    CHECK(rep.observations[0].count == 20.0);
    CHECK(rep.observations[0].index.age == 0);
    CHECK(rep.observations[0].index.time == 4);
    CHECK(rep.n_rejected == 0);
  }

  SUBCASE("out-of-scope ages are rejected, not fatal") {
    std::vector<MicroRecord> recs = {{52.0, "c1", 10.0}, {20.0, "c1", 5.0}};
    MicrodataReport rep =
        aggregate_microdata(recs, g, 1999, RegionLevel::county, 0.1);
    CHECK(rep.observations.size() == 1);
    CHECK(rep.n_rejected == 1);
  }

  SUBCASE("ten records of weight 10 give the 0.09 variance") {
    std::vector<MicroRecord> recs;
    for (int i = 0; i < 10; ++i) recs.push_back({20.0 + (i % 5), "c1", 10.0});
    MicrodataReport rep =
        aggregate_microdata(recs, g, 1999, RegionLevel::county, 0.1);
    REQUIRE(rep.observations.size() == 1);
    CHECK(rep.observations[0].count == 100.0);
    CHECK(rep.observations[0].sampling_var_log ==
          doctest::Approx(0.09).epsilon(1e-12));
  }

  SUBCASE("census year must be a model time point") {
    CHECK_THROWS_AS(
        aggregate_microdata({}, g, 2001, RegionLevel::county, 0.1),
        InputError);
  }
}

TEST_CASE("boundary proportions interpolate district shares") {
  // Singleton districts, shares 0.10/0.90 in 1999 and 0.20/0.80 in 2009:
  // the 2004 grid point gets the midpoint 0.15/0.85.
  ModelGrid g = make_grid(15, 5, 2, {1999, 2004, 2009},
                          {{"c1", "d1"}, {"c2", "d2"}});
  std::vector<PopulationObservation> censuses;
  for (std::size_t a = 0; a < 2; ++a) {
    censuses.push_back(census_obs(g, a, 0, "d1", RegionLevel::district, 100));
    censuses.push_back(census_obs(g, a, 0, "d2", RegionLevel::district, 900));
    censuses.push_back(census_obs(g, a, 2, "c1", RegionLevel::county, 220));
    censuses.push_back(census_obs(g, a, 2, "c2", RegionLevel::county, 880));
  }
  BoundaryProportions bp = boundary_proportions(censuses, g);
  CHECK(bp.age0(0, 0) == doctest::Approx(0.10).epsilon(1e-12));
  CHECK(bp.age0(1, 0) == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(bp.age0(1, 1) == doctest::Approx(0.85).epsilon(1e-12));
  CHECK(bp.age0(2, 0) == doctest::Approx(0.20).epsilon(1e-12));
  // Singleton district: county proportion equals the district share.
  CHECK(bp.time0(1, 0) == doctest::Approx(0.10).epsilon(1e-12));
  // Every slice is a probability vector over counties.
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(bp.age0(t, 0) + bp.age0(t, 1) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("boundary proportions split districts by the county census") {
  // District share 0.2 held flat, two counties split 0.25/0.75 at the
  // county-level census: county proportions 0.05/0.15 at every time point.
  ModelGrid g = make_grid(15, 5, 2, {1999, 2004, 2009},
                          {{"c1", "d1"}, {"c2", "d1"}, {"c3", "d2"}});
  std::vector<PopulationObservation> censuses;
  for (std::size_t a = 0; a < 2; ++a) {
    censuses.push_back(census_obs(g, a, 0, "d1", RegionLevel::district, 200));
    censuses.push_back(census_obs(g, a, 0, "d2", RegionLevel::district, 800));
    censuses.push_back(census_obs(g, a, 2, "c1", RegionLevel::county, 100));
    censuses.push_back(census_obs(g, a, 2, "c2", RegionLevel::county, 300));
    censuses.push_back(census_obs(g, a, 2, "c3", RegionLevel::county, 1600));
  }
  BoundaryProportions bp = boundary_proportions(censuses, g);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(bp.age0(t, 0) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(bp.age0(t, 1) == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(bp.age0(t, 2) == doctest::Approx(0.80).epsilon(1e-12));
  }
}

TEST_CASE("boundary proportions preconditions") {
  ModelGrid g = make_grid(15, 5, 2, {1999, 2004, 2009},
                          {{"c1", "d1"}, {"c2", "d2"}});
  std::vector<PopulationObservation> one_year;
  for (std::size_t a = 0; a < 2; ++a) {
    one_year.push_back(census_obs(g, a, 0, "d1", RegionLevel::district, 100));
    one_year.push_back(census_obs(g, a, 0, "d2", RegionLevel::district, 900));
  }
  CHECK_THROWS_WITH_AS(boundary_proportions(one_year, g),
                       doctest::Contains("at least 2 census years"),
                       InputError);

  // Two district-level years but no county split anywhere.
  std::vector<PopulationObservation> no_county = one_year;
  for (std::size_t a = 0; a < 2; ++a) {
    no_county.push_back(census_obs(g, a, 2, "d1", RegionLevel::district, 200));
    no_county.push_back(census_obs(g, a, 2, "d2", RegionLevel::district, 800));
  }
  CHECK_THROWS_WITH_AS(boundary_proportions(no_county, g),
                       doctest::Contains("no county-level census"),
                       InputError);
}

TEST_CASE("psi upper bounds from the first census") {
  ModelGrid g = make_grid(15, 5, 2, {1999, 2004, 2009},
                          {{"c1", "d1"}, {"c2", "d1"}});
  SUBCASE("county-level first census is used directly") {
    std::vector<PopulationObservation> censuses;
    for (std::size_t a = 0; a < 2; ++a) {
      censuses.push_back(census_obs(g, a, 0, "c1", RegionLevel::county, 30));
      censuses.push_back(census_obs(g, a, 0, "c2", RegionLevel::county, 70));
    }
    std::vector<double> y = psi_upper_bounds(censuses, g);
    CHECK(y[0] == doctest::Approx(60.0).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(140.0).epsilon(1e-12));
  }
  SUBCASE("district totals are apportioned by the county census") {
    std::vector<PopulationObservation> censuses;
    for (std::size_t a = 0; a < 2; ++a) {
      censuses.push_back(
          census_obs(g, a, 0, "d1", RegionLevel::district, 100));
      censuses.push_back(census_obs(g, a, 2, "c1", RegionLevel::county, 25));
      censuses.push_back(census_obs(g, a, 2, "c2", RegionLevel::county, 75));
    }
    std::vector<double> y = psi_upper_bounds(censuses, g);
    CHECK(y[0] == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(150.0).epsilon(1e-12));
  }
}

TEST_CASE("population csv loading") {
  ModelGrid g = make_grid(15, 5, 2, {1999, 2004},
                          {{"c1", "d1"}, {"c2", "d2"}});
  testutil::TempDir dir("ingest");
  IngestOptions opt;

  SUBCASE("happy path with per-year fraction override") {
    opt.sampling_fraction_by_year[1999] = 0.05;
    write_file(dir.file("p.csv"),
               "year,region_level,region_id,age_start,count\n"
               "1999,county,c1,15,100\n"
               "2004,district,d2,20,50\n");
    auto obs = load_populations(dir.file("p.csv"), g, opt);
    REQUIRE(obs.size() == 2);
    CHECK(obs[0].level == RegionLevel::county);
    CHECK(obs[0].sampling_var_log ==
          doctest::Approx((1.0 - 0.05) / (0.05 * 100.0)).epsilon(1e-12));
    CHECK(obs[1].sampling_var_log ==
          doctest::Approx(0.9 / (0.1 * 50.0)).epsilon(1e-12));
  }

  SUBCASE("negative count is an error at its row") {
    write_file(dir.file("neg.csv"),
               "year,region_level,region_id,age_start,count\n"
               "1999,county,c1,15,100\n"
               "1999,county,c2,15,-5\n");
    CHECK_THROWS_WITH_AS(load_populations(dir.file("neg.csv"), g, opt),
                         doctest::Contains("neg.csv:3"), InputError);
  }

  SUBCASE("unknown region and level are errors") {
    write_file(dir.file("bad.csv"),
               "year,region_level,region_id,age_start,count\n"
               "1999,county,nope,15,10\n");
    CHECK_THROWS_WITH_AS(load_populations(dir.file("bad.csv"), g, opt),
                         doctest::Contains("unknown county"), InputError);
    write_file(dir.file("lvl.csv"),
               "year,region_level,region_id,age_start,count\n"
               "1999,parish,c1,15,10\n");
    CHECK_THROWS_AS(load_populations(dir.file("lvl.csv"), g, opt),
                    InputError);
  }
}

TEST_CASE("migration csv zero handling") {
  ModelGrid g = make_grid(15, 5, 2, {1999, 2004},
                          {{"c1", "d1"}, {"c2", "d2"}});
  testutil::TempDir dir("mig");
  IngestOptions opt;
  write_file(dir.file("m.csv"),
             "year,region_level,region_id,age_start,direction,count\n"
             "1999,county,c1,15,in,40\n"
             "1999,county,c1,15,out,0\n");
  auto obs = load_migrations(dir.file("m.csv"), g, opt);
  REQUIRE(obs.size() == 2);
  CHECK(obs[0].direction == Direction::in);
  CHECK(obs[0].zero_replaced == false);
  // A zero count becomes 0.5 with doubled variance so the log-scale model
  // still applies.
  CHECK(obs[1].count == 0.5);
  CHECK(obs[1].zero_replaced == true);
  CHECK(obs[1].sampling_var_log ==
        doctest::Approx(2.0 * sampling_variance(0.5, 0.1)).epsilon(1e-12));

  write_file(dir.file("bad.csv"),
             "year,region_level,region_id,age_start,direction,count\n"
             "1999,county,c1,15,sideways,4\n");
  CHECK_THROWS_AS(load_migrations(dir.file("bad.csv"), g, opt), InputError);
}

TEST_CASE("wpp csv loading") {
  ModelGrid g = make_grid(15, 5, 2, {1999, 2004},
                          {{"c1", "d1"}, {"c2", "d2"}});
  testutil::TempDir dir("wpp");
  IngestOptions opt;

  SUBCASE("population grid must be complete") {
    write_file(dir.file("wp.csv"),
               "year,age_start,count\n"
               "1999,15,100\n1999,20,90\n2004,15,110\n");
    CHECK_THROWS_WITH_AS(load_wpp_population(dir.file("wp.csv"), g),
                         doctest::Contains("missing WPP cell"), InputError);
  }

  SUBCASE("mortality schedules must cover all ages") {
    write_file(dir.file("wm.csv"),
               "year,age_start,logit_q\n"
               "1990,15,-5\n1990,20,-4\n1995,15,-5.1\n");
    CHECK_THROWS_WITH_AS(load_wpp_mortality(dir.file("wm.csv"), g, opt),
                         doctest::Contains("missing age 20"), InputError);
  }

  SUBCASE("probability scale is converted to logits") {
    write_file(dir.file("wq.csv"),
               "year,age_start,q\n"
               "1990,15,0.01\n1990,20,0.02\n");
    auto [years, lq] = load_wpp_mortality(dir.file("wq.csv"), g, opt);
    CHECK(years == std::vector<int>{1990});
    CHECK(lq(0, 0) == doctest::Approx(std::log(0.01 / 0.99)).epsilon(1e-12));
  }

  SUBCASE("a q outside (0,1) is rejected") {
    write_file(dir.file("wb.csv"),
               "year,age_start,q\n"
               "1990,15,1.5\n1990,20,0.02\n");
    CHECK_THROWS_AS(load_wpp_mortality(dir.file("wb.csv"), g, opt),
                    InputError);
  }
}
