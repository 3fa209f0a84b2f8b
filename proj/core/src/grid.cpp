#include "ccpop/grid.hpp"

#include <algorithm>

#include "ccpop/errors.hpp"

namespace ccpop {

ModelGrid validate_grid(ModelGrid grid) {
  if (grid.age_groups.size() < 2) {
    throw GridError("grid: need at least 2 age groups, got " +
                    std::to_string(grid.age_groups.size()));
  }
  for (std::size_t a = 1; a < grid.age_groups.size(); ++a) {
    if (grid.age_groups[a] - grid.age_groups[a - 1] != grid.age_width) {
      throw GridError("grid: age groups not spaced by the age width");
    }
  }
  if (grid.time_points.size() < 2) {
    throw GridError("grid: need at least 2 time points");
  }
  for (std::size_t t = 1; t < grid.time_points.size(); ++t) {
    if (grid.time_points[t] - grid.time_points[t - 1] != grid.age_width) {
      throw GridError("grid: time spacing " +
                      std::to_string(grid.time_points[t] -
                                     grid.time_points[t - 1]) +
                      " between " + std::to_string(grid.time_points[t - 1]) +
                      " and " + std::to_string(grid.time_points[t]) +
                      ", spacing != age width");
    }
  }
  if (grid.counties.empty()) throw GridError("grid: no counties");
  if (grid.districts.empty()) throw GridError("grid: no districts");

  grid.county_index.clear();
  for (std::size_t c = 0; c < grid.counties.size(); ++c) {
    if (!grid.county_index.emplace(grid.counties[c], c).second) {
      throw GridError("grid: duplicate county '" + grid.counties[c] + "'");
    }
  }
  grid.district_index.clear();
  for (std::size_t d = 0; d < grid.districts.size(); ++d) {
    if (!grid.district_index.emplace(grid.districts[d], d).second) {
      throw GridError("grid: duplicate district '" + grid.districts[d] + "'");
    }
  }
  grid.year_index.clear();
  for (std::size_t t = 0; t < grid.time_points.size(); ++t) {
    grid.year_index.emplace(grid.time_points[t], t);
  }
  grid.age_index.clear();
  for (std::size_t a = 0; a < grid.age_groups.size(); ++a) {
    grid.age_index.emplace(grid.age_groups[a], a);
  }

  grid.county_district.assign(grid.counties.size(), 0);
  std::vector<std::size_t> district_size(grid.districts.size(), 0);
  for (std::size_t c = 0; c < grid.counties.size(); ++c) {
    auto it = grid.county_to_district.find(grid.counties[c]);
    if (it == grid.county_to_district.end()) {
      throw GridError("grid: orphan county '" + grid.counties[c] +
                      "' has no district");
    }
    auto dit = grid.district_index.find(it->second);
    if (dit == grid.district_index.end()) {
      throw GridError("grid: county '" + grid.counties[c] +
                      "' maps to unknown district '" + it->second + "'");
    }
    grid.county_district[c] = dit->second;
    district_size[dit->second]++;
  }
  for (std::size_t d = 0; d < grid.districts.size(); ++d) {
    if (district_size[d] == 0) {
      throw GridError("grid: empty district '" + grid.districts[d] + "'");
    }
  }
  return grid;
}

std::vector<std::string> district_counties(const ModelGrid& grid,
                                           const std::string& d) {
  auto dit = grid.district_index.find(d);
  if (dit == grid.district_index.end()) {
    throw GridError("grid: unknown district '" + d + "'");
  }
  std::vector<std::string> out;
  for (std::size_t c = 0; c < grid.counties.size(); ++c) {
    if (grid.county_district[c] == dit->second) out.push_back(grid.counties[c]);
  }
  return out;
}

ModelGrid make_grid(int age_start, int age_width, std::size_t n_age,
                    const std::vector<int>& years,
                    const std::vector<std::pair<std::string, std::string>>&
                        county_district_pairs) {
  ModelGrid grid;
  grid.age_width = age_width;
  for (std::size_t a = 0; a < n_age; ++a) {
    grid.age_groups.push_back(age_start + static_cast<int>(a) * age_width);
  }
  grid.time_points = years;
  for (const auto& [county, district] : county_district_pairs) {
    if (grid.county_to_district.count(county)) {
      throw GridError("grid: county '" + county + "' listed twice");
    }
    grid.county_to_district.emplace(county, district);
    grid.counties.push_back(county);
    if (std::find(grid.districts.begin(), grid.districts.end(), district) ==
        grid.districts.end()) {
      grid.districts.push_back(district);
    }
  }
  return validate_grid(std::move(grid));
}

}  // namespace ccpop
