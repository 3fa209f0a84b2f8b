#pragma once

#include <map>
#include <string>
#include <vector>

#include "ccpop/data.hpp"
#include "ccpop/grid.hpp"

namespace ccpop {

/// One census microdata record.
struct MicroRecord {
  double age = 0.0;       // age in years at enumeration
  std::string region_id;  // county or district identifier
  double weight = 0.0;    // person weight
};

struct MicrodataReport {
  std::vector<PopulationObservation> observations;
  std::size_t n_rejected = 0;
  std::vector<std::string> rejections;  // first few, for diagnostics
};

struct IngestOptions {
  double sampling_fraction = 0.1;
  std::map<int, double> sampling_fraction_by_year;  // per-census override
  bool q_scale_prob = false;  // WPP mortality column is `q`, not `logit_q`

  double fraction_for_year(int year) const;
};

struct InputBundle {
  ObservationSet obs;
  NationalInputs national;
  BoundaryProportions boundary;
  std::vector<double> psi_upper;  // y_c: Psi_{1,c} uniform upper bound
};

/// Delta-method variance of log(count/f) when the count is an f-sample of
/// the weighted total: (1 - f)/(f * count).
double sampling_variance(double count, double sampling_fraction);

/// Sums person weights into (age group, region) cells for one census year.
/// Records outside the grid's age range (or with weight <= 0) are rejected
/// and reported, not fatal.
MicrodataReport aggregate_microdata(const std::vector<MicroRecord>& records,
                                    const ModelGrid& grid, int census_year,
                                    RegionLevel level,
                                    double sampling_fraction);

/// Boundary-prior proportions: district shares linearly interpolated across
/// census years (end-extrapolation clamped), county-within-district splits
/// fixed at the county-level census, slices renormalized to sum to 1.
BoundaryProportions boundary_proportions(
    const std::vector<PopulationObservation>& censuses, const ModelGrid& grid);

/// Per-county upper bounds y_c for the Psi_{1,c} ~ U(0, y_c) prior: the
/// first-census total of the county's district apportioned by the
/// county-level census shares (county totals used directly when the first
/// census is county-level).
std::vector<double> psi_upper_bounds(
    const std::vector<PopulationObservation>& censuses, const ModelGrid& grid);

std::vector<PopulationObservation> load_populations(
    const std::string& path, const ModelGrid& grid, const IngestOptions& opt);
std::vector<MigrationObservation> load_migrations(
    const std::string& path, const ModelGrid& grid, const IngestOptions& opt);
/// WPP pop CSV must cover every (age, model year) cell.
Array2 load_wpp_population(const std::string& path, const ModelGrid& grid);
/// WPP mortality CSV: every schedule year must cover all model ages; returns
/// the schedule years and the N_wpp x A logit-q matrix.
std::pair<std::vector<int>, Array2> load_wpp_mortality(
    const std::string& path, const ModelGrid& grid, const IngestOptions& opt);
std::vector<MicroRecord> load_microdata(const std::string& path);
std::vector<std::pair<std::string, std::string>> load_grid_pairs(
    const std::string& path);

struct InputPaths {
  std::string populations;
  std::string migrations;
  std::string wpp_population;
  std::string wpp_mortality;
};

/// Loads and cross-validates the full input bundle against the grid.
InputBundle load_inputs(const InputPaths& paths, const ModelGrid& grid,
                        const IngestOptions& opt);

}  // namespace ccpop
