#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ccpop/errors.hpp"
#include "commands.hpp"

using namespace ccpop;

int main(int argc, char** argv) {
  CLI::App app{"Constrained Bayesian cohort component estimation of "
               "subnational female populations"};
  app.require_subcommand(1);

  std::string config, out, draws_dir, holdout_path, summary_out;
  std::uint64_t seed = 0;
  std::size_t chains = 0;
  bool soft = false, strict = false;
  int year = 0, holdout_year = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config, "Run config file (INI)")
        ->required();
    sub->add_option("--seed", seed, "Override the sampler seed");
    sub->add_option("--out", out, "Override the output directory");
  };

  CLI::App* fit = app.add_subcommand("fit", "Sample the posterior and write "
                                            "draws, summaries and plot data");
  add_common(fit);
  fit->add_option("--chains", chains, "Override the chain count");
  fit->add_flag("--soft-constraints", soft,
                "Replace hard constraint indicators with logistic penalties");
  fit->add_flag("--strict", strict,
                "Fail (exit 3) when max split-Rhat exceeds the threshold");

  CLI::App* project = app.add_subcommand(
      "project", "Summarize posterior populations beyond the fitted censuses");
  add_common(project);
  project->add_option("--draws", draws_dir, "Draws directory (default: "
                                            "<out>/draws)");
  project->add_option("--year", year, "Single model year to project");

  CLI::App* validate = app.add_subcommand(
      "validate", "Compare posterior projections against a holdout census");
  add_common(validate);
  validate->add_option("--draws", draws_dir, "Draws directory (default: "
                                             "<out>/draws)");
  validate->add_option("--holdout", holdout_path,
                       "Holdout census CSV (default: [validate] holdout)");
  validate->add_option("--holdout-year", holdout_year,
                       "Holdout census year (default: latest in the file)");

  SynthConfig scfg;
  std::string sim_out;
  bool no_migration = false;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Generate a synthetic world with known truth");
  simulate->add_option("--out", sim_out, "Output directory")->required();
  simulate->add_option("--seed", scfg.seed, "World seed");
  simulate->add_option("--counties", scfg.n_county, "Number of counties");
  simulate->add_option("--districts", scfg.n_district, "Number of districts");
  simulate->add_option("--ages", scfg.n_age, "Number of age groups");
  simulate->add_option("--times", scfg.n_time, "Number of time points");
  simulate->add_option("--age-start", scfg.age_start, "First age group");
  simulate->add_option("--age-width", scfg.age_width, "Age group width");
  simulate->add_option("--first-year", scfg.first_year, "First model year");
  simulate->add_option("--sigma-alpha", scfg.sigma_alpha,
                       "Mortality intercept sd");
  simulate->add_option("--sigma-delta", scfg.sigma_delta,
                       "Mortality deviation walk sd");
  simulate->add_option("--sigma-in", scfg.sigma_in, "In-migration walk sd");
  simulate->add_option("--sigma-out", scfg.sigma_out, "Out-migration walk sd");
  simulate->add_option("--sigma-zeta", scfg.sigma_zeta, "Multiplier sd");
  simulate->add_option("--alpha-center", scfg.alpha_center,
                       "Shared mortality intercept offset");
  simulate->add_option("--mig-scale", scfg.mig_scale,
                       "Migration totals as a share of county population");
  simulate->add_option("--county-pop", scfg.county_pop_mean,
                       "Mean county population per age group");
  simulate->add_option("--wpp-perturb", scfg.wpp_perturb,
                       "Log-sd of published national counts around truth");
  simulate->add_option("--sampling-fraction", scfg.sampling_fraction,
                       "Census sampling fraction");
  simulate->add_option("--holdout-waves", scfg.holdout_waves,
                       "Trailing census waves written as holdout");
  simulate->add_flag("--no-migration", no_migration,
                     "Disable migration observations");

  CLI::App* summarize = app.add_subcommand(
      "summarize", "Recompute parameter summaries from stored draws");
  summarize->add_option("--draws", draws_dir, "Draws directory")->required();
  summarize->add_option("--out", summary_out, "Output CSV path")->required();

  CLI::App* basis = app.add_subcommand("basis", "Mortality basis utilities");
  basis->require_subcommand(1);
  CLI::App* basis_export = basis->add_subcommand(
      "export", "Write basis components and national coefficients");
  add_common(basis_export);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  cli::Overrides overrides;
  if (fit->count("--seed") || project->count("--seed") ||
      validate->count("--seed") || basis_export->count("--seed")) {
    overrides.seed = seed;
  }
  if (fit->count("--chains")) overrides.chains = chains;
  if (fit->count("--out") || project->count("--out") ||
      validate->count("--out") || basis_export->count("--out")) {
    overrides.out = out;
  }
  if (fit->count("--soft-constraints")) overrides.soft_constraints = soft;
  overrides.strict = strict;

  try {
    if (*fit) return cli::cmd_fit(config, overrides);
    if (*project) return cli::cmd_project(config, overrides, draws_dir, year);
    if (*validate) {
      return cli::cmd_validate(config, overrides, draws_dir, holdout_path,
                               holdout_year);
    }
    if (*simulate) {
      scfg.observe_migration = !no_migration;
      return cli::cmd_simulate(scfg, sim_out);
    }
    if (*summarize) return cli::cmd_summarize(draws_dir, summary_out);
    if (*basis_export) return cli::cmd_basis_export(config, overrides);
    std::cerr << "no subcommand selected\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}
