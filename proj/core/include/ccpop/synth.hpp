#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccpop/data.hpp"
#include "ccpop/grid.hpp"
#include "ccpop/posterior.hpp"

namespace ccpop {

struct SynthConfig {
  std::size_t n_age = 7;
  std::size_t n_time = 9;
  std::size_t n_county = 8;
  std::size_t n_district = 4;
  int age_start = 15;
  int age_width = 5;
  int first_year = 1979;
  std::uint64_t seed = 1;

  // Truth-draw magnitudes (prior scales and world calibration).
  double sigma_alpha = 0.05;
  double sigma_delta = 0.02;
  double sigma_in = 0.05;
  double sigma_out = 0.05;
  double sigma_zeta = 0.01;
  double alpha_center = 0.0;     // shared offset of county intercepts
  double mig_scale = 0.05;       // Psi_0 ~ U(0.2,1) * mig_scale * county pop
  double county_pop_mean = 2e5;  // per-age county cell scale
  double wpp_perturb = 0.002;    // log-sd of published WPP around truth sums
  double sampling_fraction = 0.1;
  bool observe_migration = true;
  std::size_t holdout_waves = 1;  // trailing census waves kept for testing
  std::size_t max_retries = 100;
};

/// A complete generated world: the truth, the noisy observations a fit
/// consumes, and the derived ingest products (boundary proportions, psi
/// bounds) computed from the observations exactly as a real run would.
struct SyntheticWorld {
  ModelGrid grid;
  MortalityBasis basis;
  ParameterState truth;
  Array3 eta;  // A x T x C truth populations
  ObservationSet obs;
  ObservationSet holdout;
  NationalInputs national;
  BoundaryProportions boundary;
  std::vector<double> psi_upper;
  std::vector<std::size_t> fit_waves;      // census time indices fitted
  std::vector<std::size_t> holdout_wave_idx;
};

/// Deterministic synthetic WPP mortality schedules (16 quinquennial years):
/// a rising age profile, a secular improvement trend, and an epidemic-shaped
/// mid-period excess concentrated at young adult ages.
Array2 synthetic_wpp_logit_q(std::size_t n_age, std::vector<int>& years_out);

/// Draws a world from the generative model: parameters from (calibrated)
/// priors, eta by the cohort recursion, census-like observations at every
/// second time point (earlier waves district-level, the last fitted wave
/// county-level), constraint bounds from their conditionals given the truth.
SyntheticWorld generate(const SynthConfig& config);

/// Writes the world as the CSV set ingest reads (populations, migrations,
/// WPP inputs, grid) plus truth arrays and holdout files, into `dir`.
void write_world(const SyntheticWorld& world, const SynthConfig& config,
                 const std::string& dir);

}  // namespace ccpop
