#include "ccpop/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ccpop/csv.hpp"
#include "ccpop/errors.hpp"
#include "ccpop/math.hpp"

namespace ccpop {

double IngestOptions::fraction_for_year(int year) const {
  auto it = sampling_fraction_by_year.find(year);
  return it != sampling_fraction_by_year.end() ? it->second
                                               : sampling_fraction;
}

double sampling_variance(double count, double sampling_fraction) {
  if (!(count > 0.0)) {
    throw InputError("sampling_variance: count must be positive, got " +
                     std::to_string(count));
  }
  if (!(sampling_fraction > 0.0) || sampling_fraction > 1.0) {
    throw InputError("sampling_variance: fraction must lie in (0,1]");
  }
  return (1.0 - sampling_fraction) / (sampling_fraction * count);
}

MicrodataReport aggregate_microdata(const std::vector<MicroRecord>& records,
                                    const ModelGrid& grid, int census_year,
                                    RegionLevel level,
                                    double sampling_fraction) {
  auto tit = grid.year_index.find(census_year);
  if (tit == grid.year_index.end()) {
    throw InputError("microdata: census year " + std::to_string(census_year) +
                     " is not a model time point");
  }
  const double age_lo = grid.age_groups.front();
  const double age_hi = grid.age_groups.back() + grid.age_width;

  MicrodataReport report;
  // (age index, region) -> weight sum; map keeps output order deterministic.
  std::map<std::pair<std::size_t, std::string>, double> cells;
  for (const auto& rec : records) {
    std::string reason;
    if (!(rec.weight > 0.0)) {
      reason = "nonpositive weight";
    } else if (rec.age < age_lo || rec.age >= age_hi) {
      reason = "age " + std::to_string(rec.age) + " outside [" +
               std::to_string(grid.age_groups.front()) + "," +
               std::to_string(static_cast<int>(age_hi)) + ")";
    }
    if (!reason.empty()) {
      ++report.n_rejected;
      if (report.rejections.size() < 10) {
        report.rejections.push_back("region " + rec.region_id + ": " + reason);
      }
      continue;
    }
    auto a = static_cast<std::size_t>((rec.age - age_lo) /
                                      static_cast<double>(grid.age_width));
    cells[{a, rec.region_id}] += rec.weight;
  }
  for (const auto& [key, count] : cells) {
    PopulationObservation obs;
    obs.index.age = key.first;
    obs.index.time = tit->second;
    obs.index.region = key.second;
    obs.level = level;
    obs.count = count;
    obs.sampling_var_log = sampling_variance(count, sampling_fraction);
    report.observations.push_back(std::move(obs));
  }
  return report;
}

namespace {

struct CensusTotals {
  // [census year] -> per-age district totals (A x D) and presence flags.
  std::map<int, Array2> district;   // A x D counts
  std::map<int, Array2> have;       // A x D presence (0/1)
  std::map<int, Array2> county;     // A x C counts (county-level years only)
  std::map<int, bool> county_level;
};

CensusTotals tally_censuses(const std::vector<PopulationObservation>& censuses,
                            const ModelGrid& grid) {
  const std::size_t A = grid.n_age();
  const std::size_t C = grid.n_county();
  const std::size_t D = grid.n_district();
  CensusTotals out;
  for (const auto& obs : censuses) {
    int year = grid.time_points.at(obs.index.time);
    auto& dist = out.district.try_emplace(year, A, D).first->second;
    auto& have = out.have.try_emplace(year, A, D).first->second;
    if (obs.level == RegionLevel::county) {
      auto cit = grid.county_index.find(obs.index.region);
      if (cit == grid.county_index.end()) {
        throw InputError("census: unknown county '" + obs.index.region + "'");
      }
      std::size_t d = grid.county_district[cit->second];
      dist(obs.index.age, d) += obs.count;
      have(obs.index.age, d) = 1.0;
      auto& cty = out.county.try_emplace(year, A, C).first->second;
      cty(obs.index.age, cit->second) += obs.count;
      out.county_level[year] = true;
    } else {
      auto dit = grid.district_index.find(obs.index.region);
      if (dit == grid.district_index.end()) {
        throw InputError("census: unknown district '" + obs.index.region +
                         "'");
      }
      dist(obs.index.age, dit->second) += obs.count;
      have(obs.index.age, dit->second) = 1.0;
      out.county_level.try_emplace(year, false);
    }
  }
  for (const auto& [year, have] : out.have) {
    for (std::size_t a = 0; a < A; ++a) {
      for (std::size_t d = 0; d < D; ++d) {
        if (have(a, d) == 0.0) {
          throw InputError("census " + std::to_string(year) +
                           ": no count for district '" + grid.districts[d] +
                           "' age " + std::to_string(grid.age_groups[a]));
        }
      }
    }
  }
  return out;
}

// Linear interpolation/extrapolation of district shares across census years,
// clamped into (0,1).
double interp_share(const std::vector<int>& years,
                    const std::vector<double>& shares, double year) {
  double v;
  if (year <= years.front()) {
    double slope = (shares[1] - shares[0]) /
                   static_cast<double>(years[1] - years[0]);
    v = shares[0] + slope * (year - years.front());
  } else if (year >= years.back()) {
    std::size_t n = years.size();
    double slope = (shares[n - 1] - shares[n - 2]) /
                   static_cast<double>(years[n - 1] - years[n - 2]);
    v = shares[n - 1] + slope * (year - years.back());
  } else {
    std::size_t i = 1;
    while (years[i] < year) ++i;
    double w = (year - years[i - 1]) /
               static_cast<double>(years[i] - years[i - 1]);
    v = (1.0 - w) * shares[i - 1] + w * shares[i];
  }
  return std::clamp(v, 1e-9, 1.0 - 1e-9);
}

}  // namespace

BoundaryProportions boundary_proportions(
    const std::vector<PopulationObservation>& censuses,
    const ModelGrid& grid) {
  const std::size_t A = grid.n_age();
  const std::size_t T = grid.n_time();
  const std::size_t C = grid.n_county();
  const std::size_t D = grid.n_district();

  CensusTotals tot = tally_censuses(censuses, grid);
  if (tot.district.size() < 2) {
    throw InputError("boundary proportions: need at least 2 census years to "
                     "interpolate, got " + std::to_string(tot.district.size()));
  }
  int county_year = -1;
  for (const auto& [year, is_county] : tot.county_level) {
    if (is_county) county_year = std::max(county_year, year);
  }
  if (county_year < 0) {
    throw InputError("boundary proportions: no county-level census for the "
                     "within-district split");
  }

  std::vector<int> knot_years;
  for (const auto& [year, _] : tot.district) knot_years.push_back(year);

  // District share of the national total, per age and knot year.
  std::vector<Array2> knot_share;  // per knot: A x D
  for (int year : knot_years) {
    const Array2& dist = tot.district.at(year);
    Array2 share(A, D);
    for (std::size_t a = 0; a < A; ++a) {
      double nat = 0.0;
      for (std::size_t d = 0; d < D; ++d) nat += dist(a, d);
      if (!(nat > 0.0)) {
        throw InputError("census " + std::to_string(year) +
                         ": zero national total at age " +
                         std::to_string(grid.age_groups[a]));
      }
      for (std::size_t d = 0; d < D; ++d) share(a, d) = dist(a, d) / nat;
    }
    knot_share.push_back(std::move(share));
  }

  // County-within-district split, fixed at the county-level census.
  const Array2& cty = tot.county.at(county_year);
  const Array2& cdist = tot.district.at(county_year);
  Array2 split(A, C);
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t c = 0; c < C; ++c) {
      double dtot = cdist(a, grid.county_district[c]);
      if (!(cty(a, c) > 0.0) || !(dtot > 0.0)) {
        throw InputError("boundary proportions: missing county split for '" +
                         grid.counties[c] + "' age " +
                         std::to_string(grid.age_groups[a]));
      }
      split(a, c) = cty(a, c) / dtot;
    }
  }

  auto county_prop_slice = [&](std::size_t a, std::size_t t,
                               std::vector<double>& out) {
    std::vector<double> shares(knot_years.size());
    double year = grid.time_points[t];
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      std::size_t d = grid.county_district[c];
      for (std::size_t k = 0; k < knot_years.size(); ++k) {
        shares[k] = knot_share[k](a, d);
      }
      out[c] = interp_share(knot_years, shares, year) * split(a, c);
      sum += out[c];
    }
    for (std::size_t c = 0; c < C; ++c) out[c] /= sum;
  };

  BoundaryProportions bp;
  bp.age0 = Array2(T, C);
  bp.time0 = Array2(A, C);
  std::vector<double> slice(C);
  for (std::size_t t = 0; t < T; ++t) {
    county_prop_slice(0, t, slice);
    for (std::size_t c = 0; c < C; ++c) bp.age0(t, c) = slice[c];
  }
  for (std::size_t a = 0; a < A; ++a) {
    county_prop_slice(a, 0, slice);
    for (std::size_t c = 0; c < C; ++c) bp.time0(a, c) = slice[c];
  }
  return bp;
}

std::vector<double> psi_upper_bounds(
    const std::vector<PopulationObservation>& censuses,
    const ModelGrid& grid) {
  const std::size_t A = grid.n_age();
  const std::size_t C = grid.n_county();
  CensusTotals tot = tally_censuses(censuses, grid);
  if (tot.district.empty()) throw InputError("psi bounds: no census data");
  int first_year = tot.district.begin()->first;
  int county_year = -1;
  for (const auto& [year, is_county] : tot.county_level) {
    if (is_county) county_year = std::max(county_year, year);
  }

  std::vector<double> y_c(C, 0.0);
  if (tot.county_level.at(first_year)) {
    const Array2& cty = tot.county.at(first_year);
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t a = 0; a < A; ++a) y_c[c] += cty(a, c);
    }
    return y_c;
  }
  if (county_year < 0) {
    throw InputError("psi bounds: no county-level census to apportion the "
                     "first-census district totals");
  }
  const Array2& first = tot.district.at(first_year);
  const Array2& cty = tot.county.at(county_year);
  const Array2& cdist = tot.district.at(county_year);
  std::vector<double> dist_total(grid.n_district(), 0.0);
  for (std::size_t d = 0; d < grid.n_district(); ++d) {
    for (std::size_t a = 0; a < A; ++a) dist_total[d] += first(a, d);
  }
  for (std::size_t c = 0; c < C; ++c) {
    std::size_t d = grid.county_district[c];
    double cty_tot = 0.0, dst_tot = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
      cty_tot += cty(a, c);
      dst_tot += cdist(a, d);
    }
    if (!(cty_tot > 0.0) || !(dst_tot > 0.0)) {
      throw InputError("psi bounds: missing county share for '" +
                       grid.counties[c] + "'");
    }
    y_c[c] = dist_total[d] * (cty_tot / dst_tot);
  }
  return y_c;
}

namespace {

std::size_t require_age(const ModelGrid& grid, long age_start,
                        const CsvTable& t, std::size_t row) {
  auto it = grid.age_index.find(static_cast<int>(age_start));
  if (it == grid.age_index.end()) {
    throw InputError(t.path + ":" + std::to_string(row + 2) + ": age_start " +
                     std::to_string(age_start) + " is not a model age group");
  }
  return it->second;
}

std::size_t require_year(const ModelGrid& grid, long year, const CsvTable& t,
                         std::size_t row) {
  auto it = grid.year_index.find(static_cast<int>(year));
  if (it == grid.year_index.end()) {
    throw InputError(t.path + ":" + std::to_string(row + 2) + ": year " +
                     std::to_string(year) + " is not a model time point");
  }
  return it->second;
}

RegionLevel parse_level(const ModelGrid& grid, const std::string& level,
                        const std::string& region, const CsvTable& t,
                        std::size_t row) {
  RegionLevel lv;
  if (level == "county") {
    lv = RegionLevel::county;
    if (!grid.county_index.count(region)) {
      throw InputError(t.path + ":" + std::to_string(row + 2) +
                       ": unknown county '" + region + "'");
    }
  } else if (level == "district") {
    lv = RegionLevel::district;
    if (!grid.district_index.count(region)) {
      throw InputError(t.path + ":" + std::to_string(row + 2) +
                       ": unknown district '" + region + "'");
    }
  } else {
    throw InputError(t.path + ":" + std::to_string(row + 2) +
                     ": region_level must be 'county' or 'district', got '" +
                     level + "'");
  }
  return lv;
}

}  // namespace

std::vector<PopulationObservation> load_populations(const std::string& path,
                                                    const ModelGrid& grid,
                                                    const IngestOptions& opt) {
  CsvTable t = read_csv(path);
  std::size_t c_year = t.column("year");
  std::size_t c_level = t.column("region_level");
  std::size_t c_region = t.column("region_id");
  std::size_t c_age = t.column("age_start");
  std::size_t c_count = t.column("count");

  std::vector<PopulationObservation> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    long year = csv_long(t, r, c_year);
    PopulationObservation obs;
    obs.index.time = require_year(grid, year, t, r);
    obs.index.age = require_age(grid, csv_long(t, r, c_age), t, r);
    obs.index.region = t.rows[r][c_region];
    obs.level = parse_level(grid, t.rows[r][c_level], obs.index.region, t, r);
    obs.count = csv_double(t, r, c_count);
    if (!(obs.count > 0.0)) {
      throw InputError(path + ":" + std::to_string(r + 2) +
                       ": population count must be positive, got " +
                       t.rows[r][c_count]);
    }
    obs.sampling_var_log = sampling_variance(
        obs.count, opt.fraction_for_year(static_cast<int>(year)));
    out.push_back(std::move(obs));
  }
  return out;
}

std::vector<MigrationObservation> load_migrations(const std::string& path,
                                                  const ModelGrid& grid,
                                                  const IngestOptions& opt) {
  CsvTable t = read_csv(path);
  std::size_t c_year = t.column("year");
  std::size_t c_level = t.column("region_level");
  std::size_t c_region = t.column("region_id");
  std::size_t c_age = t.column("age_start");
  std::size_t c_dir = t.column("direction");
  std::size_t c_count = t.column("count");

  std::vector<MigrationObservation> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    long year = csv_long(t, r, c_year);
    MigrationObservation obs;
    obs.index.time = require_year(grid, year, t, r);
    obs.index.age = require_age(grid, csv_long(t, r, c_age), t, r);
    obs.index.region = t.rows[r][c_region];
    obs.level = parse_level(grid, t.rows[r][c_level], obs.index.region, t, r);
    const std::string& dir = t.rows[r][c_dir];
    if (dir == "in") {
      obs.direction = Direction::in;
    } else if (dir == "out") {
      obs.direction = Direction::out;
    } else {
      throw InputError(path + ":" + std::to_string(r + 2) +
                       ": direction must be 'in' or 'out', got '" + dir + "'");
    }
    obs.count = csv_double(t, r, c_count);
    if (obs.count < 0.0) {
      throw InputError(path + ":" + std::to_string(r + 2) +
                       ": migration count must be nonnegative");
    }
    double f = opt.fraction_for_year(static_cast<int>(year));
    if (obs.count == 0.0) {
      // Log-scale data model cannot take log 0; continuity correction.
      obs.count = 0.5;
      obs.sampling_var_log = 2.0 * sampling_variance(obs.count, f);
      obs.zero_replaced = true;
    } else {
      obs.sampling_var_log = sampling_variance(obs.count, f);
    }
    out.push_back(std::move(obs));
  }
  return out;
}

Array2 load_wpp_population(const std::string& path, const ModelGrid& grid) {
  CsvTable t = read_csv(path);
  std::size_t c_year = t.column("year");
  std::size_t c_age = t.column("age_start");
  std::size_t c_count = t.column("count");

  const std::size_t A = grid.n_age();
  const std::size_t T = grid.n_time();
  Array2 pop(A, T);
  Array2 seen(A, T);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    long year = csv_long(t, r, c_year);
    auto yit = grid.year_index.find(static_cast<int>(year));
    if (yit == grid.year_index.end()) continue;  // extra years are fine
    long age = csv_long(t, r, c_age);
    auto ait = grid.age_index.find(static_cast<int>(age));
    if (ait == grid.age_index.end()) continue;
    double count = csv_double(t, r, c_count);
    if (!(count > 0.0)) {
      throw InputError(path + ":" + std::to_string(r + 2) +
                       ": WPP count must be positive");
    }
    pop(ait->second, yit->second) = count;
    seen(ait->second, yit->second) = 1.0;
  }
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t tt = 0; tt < T; ++tt) {
      if (seen(a, tt) == 0.0) {
        throw InputError(path + ": missing WPP cell (age " +
                         std::to_string(grid.age_groups[a]) + ", year " +
                         std::to_string(grid.time_points[tt]) + ")");
      }
    }
  }
  return pop;
}

std::pair<std::vector<int>, Array2> load_wpp_mortality(
    const std::string& path, const ModelGrid& grid, const IngestOptions& opt) {
  CsvTable t = read_csv(path);
  std::size_t c_year = t.column("year");
  std::size_t c_age = t.column("age_start");
  std::size_t c_q;
  bool prob_scale = opt.q_scale_prob;
  if (t.has_column("logit_q") && !prob_scale) {
    c_q = t.column("logit_q");
  } else if (t.has_column("q")) {
    c_q = t.column("q");
    prob_scale = true;
  } else {
    throw InputError(path + ": need a 'logit_q' or 'q' column");
  }

  const std::size_t A = grid.n_age();
  std::set<int> year_set;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    year_set.insert(static_cast<int>(csv_long(t, r, c_year)));
  }
  std::vector<int> years(year_set.begin(), year_set.end());
  std::map<int, std::size_t> year_row;
  for (std::size_t i = 0; i < years.size(); ++i) year_row[years[i]] = i;

  Array2 logit_q(years.size(), A);
  Array2 seen(years.size(), A);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::size_t row = year_row.at(static_cast<int>(csv_long(t, r, c_year)));
    long age = csv_long(t, r, c_age);
    auto ait = grid.age_index.find(static_cast<int>(age));
    if (ait == grid.age_index.end()) continue;
    double v = csv_double(t, r, c_q);
    if (prob_scale) {
      if (!(v > 0.0) || !(v < 1.0)) {
        throw InputError(path + ":" + std::to_string(r + 2) +
                         ": q must lie in (0,1)");
      }
      v = logit(v);
    }
    logit_q(row, ait->second) = v;
    seen(row, ait->second) = 1.0;
  }
  for (std::size_t i = 0; i < years.size(); ++i) {
    for (std::size_t a = 0; a < A; ++a) {
      if (seen(i, a) == 0.0) {
        throw InputError(path + ": schedule year " + std::to_string(years[i]) +
                         " missing age " + std::to_string(grid.age_groups[a]));
      }
    }
  }
  return {std::move(years), std::move(logit_q)};
}

std::vector<MicroRecord> load_microdata(const std::string& path) {
  CsvTable t = read_csv(path);
  std::size_t c_age = t.column("age");
  std::size_t c_region = t.column("region_id");
  std::size_t c_weight = t.column("weight");
  std::vector<MicroRecord> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    MicroRecord rec;
    rec.age = csv_double(t, r, c_age);
    rec.region_id = t.rows[r][c_region];
    rec.weight = csv_double(t, r, c_weight);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> load_grid_pairs(
    const std::string& path) {
  CsvTable t = read_csv(path);
  std::size_t c_county = t.column("county_id");
  std::size_t c_district = t.column("district_id");
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out.emplace_back(t.rows[r][c_county], t.rows[r][c_district]);
  }
  return out;
}

std::vector<int> ObservationSet::census_years(const ModelGrid& grid) const {
  std::set<int> years;
  for (const auto& obs : populations) {
    years.insert(grid.time_points.at(obs.index.time));
  }
  return {years.begin(), years.end()};
}

InputBundle load_inputs(const InputPaths& paths, const ModelGrid& grid,
                        const IngestOptions& opt) {
  InputBundle bundle;
  bundle.obs.populations = load_populations(paths.populations, grid, opt);
  if (bundle.obs.populations.empty()) {
    throw InputError(paths.populations + ": no population observations");
  }
  if (!paths.migrations.empty()) {
    bundle.obs.migrations = load_migrations(paths.migrations, grid, opt);
  }
  bundle.national.wpp_pop = load_wpp_population(paths.wpp_population, grid);
  auto [years, logit_q] = load_wpp_mortality(paths.wpp_mortality, grid, opt);
  bundle.national.wpp_years = std::move(years);
  bundle.national.wpp_logit_q = std::move(logit_q);
  bundle.boundary = boundary_proportions(bundle.obs.populations, grid);
  bundle.psi_upper = psi_upper_bounds(bundle.obs.populations, grid);
  return bundle;
}

}  // namespace ccpop
