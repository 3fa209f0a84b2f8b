#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ccpop/grid.hpp"
#include "ccpop/mortality_basis.hpp"
#include "ccpop/sampler.hpp"
#include "ccpop/validate.hpp"

#include "derived.hpp"

namespace ccpop::cli {

std::uint64_t hash_file(const std::string& path);
std::string hex64(std::uint64_t v);

/// Reproducibility manifest: seed, config and input hashes, sampler
/// settings, diagnostics. Deliberately contains nothing run-dependent
/// beyond those (no timestamps), so same-seed runs are byte-identical.
struct Manifest {
  std::string command;
  std::string config_path;
  std::uint64_t config_hash = 0;
  std::map<std::string, std::uint64_t> input_hashes;
  std::uint64_t seed = 0;
  std::size_t chains = 0, warmup = 0, samples = 0, thin = 0;
  std::string constraint_mode;  // "hard" or "soft"
  std::size_t n_params = 0;
  double rhat_max = 0.0;
  double ess_min = 0.0;
  std::map<std::string, double> accept_rates;  // block -> mean across chains
  std::vector<std::string> outputs;
};

void write_manifest(const Manifest& m, const std::string& path);

/// Plot-data writers; one CSV per figure family, quantiles from summaries.
void write_fig_population(const std::string& path, const ModelGrid& grid,
                          const Summary& county, const DerivedFamily& county_keys,
                          const Summary& district,
                          const DerivedFamily& district_keys);
void write_fig_cells(const std::string& path, const ModelGrid& grid,
                     const Summary& summary, const DerivedFamily& family);
void write_fig_psi(const std::string& path, const ModelGrid& grid,
                   const Summary& summary, const DerivedFamily& family);
void write_fig_pi(const std::string& path, const ModelGrid& grid,
                  const Summary& summary, const DerivedFamily& family);
void write_basis_files(const MortalityBasis& basis, const ModelGrid& grid,
                       const std::string& components_path,
                       const std::string& coefficients_path);

/// Validation tables in the published layout: per-age rows plus a trailing
/// total row; both methods side by side.
void write_table1(const std::string& path,
                  const std::vector<ErrorRow>& interpolation,
                  const std::vector<ErrorRow>& bayes);
void write_table2(const std::string& path,
                  const std::vector<CoverageRow>& rows);
void write_pit(const std::string& path,
               const std::vector<std::pair<std::string, double>>& pit);

void write_accept_rates(const std::string& path, const PosteriorDraws& draws);

}  // namespace ccpop::cli
