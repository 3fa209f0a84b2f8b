#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace ccpop {

/// Discrete age x time x region index space plus the county->district
/// hierarchy. Region identifiers are opaque strings (numeric codes work
/// verbatim). Immutable after validation; safe to share across threads.
struct ModelGrid {
  std::vector<int> age_groups;    // age-group start ages, 5-year width
  std::vector<int> time_points;   // calendar years, uniform 5-year spacing
  std::vector<std::string> counties;
  std::vector<std::string> districts;
  std::unordered_map<std::string, std::string> county_to_district;
  int age_width = 5;

  std::size_t n_age() const { return age_groups.size(); }
  std::size_t n_time() const { return time_points.size(); }
  std::size_t n_county() const { return counties.size(); }
  std::size_t n_district() const { return districts.size(); }

  // Lookup tables built by validate_grid.
  std::unordered_map<std::string, std::size_t> county_index;
  std::unordered_map<std::string, std::size_t> district_index;
  std::unordered_map<int, std::size_t> year_index;
  std::unordered_map<int, std::size_t> age_index;
  std::vector<std::size_t> county_district;  // county idx -> district idx
};

struct CellIndex {
  std::size_t age = 0;
  std::size_t time = 0;
  std::string region;  // county or district identifier
};

/// Checks every ModelGrid invariant (A >= 2, time spacing equal to the age
/// width, county->district totality, no empty district) and fills in the
/// index lookup tables. Throws GridError naming the first violation.
ModelGrid validate_grid(ModelGrid grid);

/// Counties mapped to district `d`, in grid county order.
std::vector<std::string> district_counties(const ModelGrid& grid,
                                           const std::string& d);

/// Builds the Kenya-shaped grid from parsed config values plus the
/// county->district pairs of the grid file, then validates it.
ModelGrid make_grid(int age_start, int age_width, std::size_t n_age,
                    const std::vector<int>& years,
                    const std::vector<std::pair<std::string, std::string>>&
                        county_district_pairs);

}  // namespace ccpop
