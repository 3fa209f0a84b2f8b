#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ccpop/grid.hpp"
#include "ccpop/tensor.hpp"

namespace ccpop {

enum class RegionLevel { county, district };
enum class Direction { in, out };

/// One census population count (weighted persons) with the variance of its
/// log, s^2_y.
struct PopulationObservation {
  CellIndex index;
  RegionLevel level = RegionLevel::county;
  double count = 0.0;
  double sampling_var_log = 0.0;
};

/// One census migration count. Zero counts are replaced by 0.5 with doubled
/// variance so the log-scale data model applies; `zero_replaced` records it.
struct MigrationObservation {
  CellIndex index;
  RegionLevel level = RegionLevel::county;
  Direction direction = Direction::in;
  double count = 0.0;
  double sampling_var_log = 0.0;
  bool zero_replaced = false;
};

struct ObservationSet {
  std::vector<PopulationObservation> populations;
  std::vector<MigrationObservation> migrations;

  /// Census years present in the population data, ascending.
  std::vector<int> census_years(const ModelGrid& grid) const;
};

/// National inputs: WPP female population counts per (age, time) and the
/// N_wpp x A matrix of logit 5-year death probabilities (one row per
/// quinquennial WPP schedule).
struct NationalInputs {
  Array2 wpp_pop;            // A x T, all > 0
  std::vector<int> wpp_years;  // schedule years, ascending (N_wpp entries)
  Array2 wpp_logit_q;        // N_wpp x A
};

/// Prior proportions for boundary cells: the a=0 row over all t and the t=0
/// column over a>=1, per county. Each (a,t) slice sums to 1 over counties.
struct BoundaryProportions {
  Array2 age0;   // T x C: share of the national a=0 population in county c
  Array2 time0;  // A x C: shares at t=0 (row 0 duplicates age0 at t=0)
};

}  // namespace ccpop
