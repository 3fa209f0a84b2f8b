#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ccpop/config.hpp"
#include "ccpop/posterior.hpp"
#include "ccpop/sampler.hpp"
#include "ccpop/synth.hpp"
#include "ccpop/validate.hpp"

namespace ccpop::cli {

/// Command-line overrides that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> chains;
  std::optional<std::string> out;
  std::optional<bool> soft_constraints;
  bool strict = false;
};

RunConfig load_with_overrides(const std::string& config_path,
                              const Overrides& o);

/// Config, grid, loaded inputs and the constructed posterior, bundled so
/// commands and tests share one assembly path.
struct ModelBundle {
  RunConfig cfg;
  ModelGrid grid;
  InputBundle inputs;
  std::shared_ptr<const PosteriorModel> model;
};

ModelBundle load_model(RunConfig cfg);

/// Runs the configured chains against the bundle's posterior.
PosteriorDraws sample_posterior(const ModelBundle& mb);

struct FitReport {
  double rhat_max = 0.0;  // over parameter and eta summaries, NaNs skipped
  double ess_min = 0.0;
};

/// Writes draws, parameter and derived summaries, plot-data CSVs, basis
/// files, acceptance rates, and the manifest under cfg.out_dir.
FitReport write_fit_outputs(const ModelBundle& mb, const PosteriorDraws& draws,
                            const std::string& config_path);

struct ValidationResult {
  std::vector<ErrorRow> interp_errors;  // district level, ages then "total"
  std::vector<ErrorRow> bayes_errors;
  std::vector<CoverageRow> coverage;    // per age, at the holdout's level
  std::vector<std::pair<std::string, double>> pit;
};

/// Holdout evaluation: district-level point errors for both methods,
/// coverage of the 90% posterior predictive intervals, and PIT values.
/// The predictive noise stream is seeded explicitly for reproducibility.
ValidationResult validate_draws(const ModelBundle& mb,
                                const PosteriorDraws& draws,
                                std::vector<PopulationObservation> holdout,
                                int holdout_year,
                                std::uint64_t predictive_seed);

int cmd_fit(const std::string& config_path, const Overrides& o);
int cmd_project(const std::string& config_path, const Overrides& o,
                std::string draws_dir, int year);
int cmd_validate(const std::string& config_path, const Overrides& o,
                 std::string draws_dir, std::string holdout_path,
                 int holdout_year);
int cmd_simulate(const SynthConfig& scfg, const std::string& out_dir);
int cmd_summarize(const std::string& draws_dir, const std::string& out_path);
int cmd_basis_export(const std::string& config_path, const Overrides& o);

}  // namespace ccpop::cli
