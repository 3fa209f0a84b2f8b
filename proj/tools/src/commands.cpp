#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "ccpop/draws_io.hpp"
#include "ccpop/errors.hpp"
#include "ccpop/math.hpp"

#include "derived.hpp"
#include "outputs.hpp"

namespace ccpop::cli {

namespace fs = std::filesystem;

RunConfig load_with_overrides(const std::string& config_path,
                              const Overrides& o) {
  RunConfig cfg = load_config(config_path);
  if (o.seed) cfg.sampler.seed = *o.seed;
  if (o.chains) {
    if (*o.chains == 0) throw InputError("--chains must be at least 1");
    cfg.sampler.n_chains = *o.chains;
  }
  if (o.out) cfg.out_dir = *o.out;
  if (o.soft_constraints) cfg.posterior.soft_constraints = *o.soft_constraints;
  return cfg;
}

ModelBundle load_model(RunConfig cfg) {
  ModelBundle mb;
  mb.grid = make_grid(cfg.age_start, cfg.age_width, cfg.n_age, cfg.years,
                      load_grid_pairs(cfg.resolve(cfg.grid_file)));
  mb.inputs = load_inputs(cfg.input_paths(), mb.grid, cfg.ingest);
  MortalityBasis basis =
      build_basis(mb.inputs.national.wpp_logit_q, mb.inputs.national.wpp_years,
                  mb.grid.time_points);
  mb.model = std::make_shared<const PosteriorModel>(
      mb.grid, mb.inputs.obs, mb.inputs.national, std::move(basis),
      mb.inputs.boundary, mb.inputs.psi_upper, cfg.posterior);
  mb.cfg = std::move(cfg);
  return mb;
}

PosteriorDraws sample_posterior(const ModelBundle& mb) {
  std::shared_ptr<const PosteriorModel> model = mb.model;
  ChainFactory factory = [model](std::size_t) {
    auto ws = std::make_shared<Workspace>(model->make_workspace());
    ChainContext ctx;
    ctx.log_density = [model, ws](std::span<const double> x) {
      return model->log_posterior(x, *ws);
    };
    ctx.plan = model->default_block_plan();
    ctx.init = [model](std::mt19937_64& rng) {
      return model->initial_point(rng);
    };
    return ctx;
  };
  return run_chains(mb.cfg.sampler, factory, model->param_names());
}

namespace {

void fold_diagnostics(const Summary& summary, double* rhat_max,
                      double* ess_min) {
  for (const SummaryRow& row : summary.rows) {
    if (std::isfinite(row.rhat)) *rhat_max = std::max(*rhat_max, row.rhat);
    if (std::isfinite(row.ess)) *ess_min = std::min(*ess_min, row.ess);
  }
}

}  // namespace

FitReport write_fit_outputs(const ModelBundle& mb, const PosteriorDraws& draws,
                            const std::string& config_path) {
  const std::string out = mb.cfg.out_dir;
  fs::create_directories(out);
  write_draws(draws, out + "/draws");

  FitReport rep;
  rep.rhat_max = 0.0;
  rep.ess_min = std::numeric_limits<double>::infinity();

  Summary params = summarize(draws);
  fold_diagnostics(params, &rep.rhat_max, &rep.ess_min);
  write_summary(params, out + "/summary_params.csv");

  DerivedFamily eta = eta_family(mb.model, mb.grid);
  Summary eta_summary = summarize_family(draws, eta);
  fold_diagnostics(eta_summary, &rep.rhat_max, &rep.ess_min);
  write_summary(eta_summary, out + "/summary_eta.csv");

  DerivedFamily eta_d = eta_district_family(mb.model, mb.grid);
  Summary eta_d_summary = summarize_family(draws, eta_d);
  write_summary(eta_d_summary, out + "/summary_eta_district.csv");

  DerivedFamily gamma = gamma_family(mb.model, mb.grid);
  Summary gamma_summary = summarize_family(draws, gamma);
  write_summary(gamma_summary, out + "/summary_gamma.csv");

  DerivedFamily psi = psi_family(mb.model, mb.grid);
  Summary psi_summary = summarize_family(draws, psi);
  write_summary(psi_summary, out + "/summary_psi.csv");

  DerivedFamily pi = pi_family(mb.model, mb.grid);
  Summary pi_summary = summarize_family(draws, pi);
  write_summary(pi_summary, out + "/summary_pi.csv");

  DerivedFamily eps = epsilon_family(mb.model, mb.grid);
  Summary eps_summary = summarize_family(draws, eps);
  write_summary(eps_summary, out + "/summary_epsilon.csv");

  write_fig_population(out + "/fig_population.csv", mb.grid, eta_summary, eta,
                       eta_d_summary, eta_d);
  write_fig_cells(out + "/fig_mortality.csv", mb.grid, gamma_summary, gamma);
  write_fig_psi(out + "/fig_migration_totals.csv", mb.grid, psi_summary, psi);
  write_fig_pi(out + "/fig_migration_age.csv", mb.grid, pi_summary, pi);
  write_fig_cells(out + "/fig_multipliers.csv", mb.grid, eps_summary, eps);
  write_basis_files(mb.model->basis(), mb.grid, out + "/basis_components.csv",
                    out + "/basis_coefficients.csv");
  write_accept_rates(out + "/accept_rates.csv", draws);

  Manifest m;
  m.command = "fit";
  m.config_path = config_path;
  m.config_hash = hash_file(config_path);
  InputPaths paths = mb.cfg.input_paths();
  m.input_hashes[paths.populations] = hash_file(paths.populations);
  if (!paths.migrations.empty()) {
    m.input_hashes[paths.migrations] = hash_file(paths.migrations);
  }
  m.input_hashes[paths.wpp_population] = hash_file(paths.wpp_population);
  m.input_hashes[paths.wpp_mortality] = hash_file(paths.wpp_mortality);
  m.input_hashes[mb.cfg.resolve(mb.cfg.grid_file)] =
      hash_file(mb.cfg.resolve(mb.cfg.grid_file));
  m.seed = mb.cfg.sampler.seed;
  m.chains = mb.cfg.sampler.n_chains;
  m.warmup = mb.cfg.sampler.n_warmup;
  m.samples = mb.cfg.sampler.n_samples;
  m.thin = mb.cfg.sampler.thin;
  m.constraint_mode = mb.cfg.posterior.soft_constraints ? "soft" : "hard";
  m.n_params = mb.model->n_params();
  m.rhat_max = rep.rhat_max;
  m.ess_min = rep.ess_min;
  for (std::size_t b = 0; b < draws.block_names.size(); ++b) {
    double sum = 0.0;
    for (const auto& rates : draws.accept_rates) sum += rates[b];
    m.accept_rates[draws.block_names[b]] =
        sum / static_cast<double>(draws.accept_rates.size());
  }
  m.outputs = {"draws",
               "summary_params.csv",
               "summary_eta.csv",
               "summary_eta_district.csv",
               "summary_gamma.csv",
               "summary_psi.csv",
               "summary_pi.csv",
               "summary_epsilon.csv",
               "fig_population.csv",
               "fig_mortality.csv",
               "fig_migration_totals.csv",
               "fig_migration_age.csv",
               "fig_multipliers.csv",
               "basis_components.csv",
               "basis_coefficients.csv",
               "accept_rates.csv"};
  write_manifest(m, out + "/manifest.json");
  return rep;
}

int cmd_fit(const std::string& config_path, const Overrides& o) {
  ModelBundle mb = load_model(load_with_overrides(config_path, o));
  PosteriorDraws draws = sample_posterior(mb);
  FitReport rep = write_fit_outputs(mb, draws, config_path);
  if (o.strict && rep.rhat_max > mb.cfg.rhat_threshold) {
    throw ConvergenceError("max split-Rhat " + g17(rep.rhat_max) +
                           " exceeds threshold " + g17(mb.cfg.rhat_threshold));
  }
  return 0;
}

namespace {

/// District-aggregated counts per (age, district) for one census year.
/// Direct district rows win; otherwise county rows must cover the district.
Array2 district_counts(const std::vector<PopulationObservation>& obs,
                       const ModelGrid& grid, std::size_t t,
                       const std::string& what) {
  const std::size_t A = grid.n_age(), D = grid.n_district();
  Array2 direct(A, D), summed(A, D);
  Array2 n_counties(A, D);
  std::vector<std::vector<char>> has_direct(A, std::vector<char>(D, 0));
  for (const auto& o : obs) {
    if (o.index.time != t) continue;
    if (o.level == RegionLevel::district) {
      std::size_t d = grid.district_index.at(o.index.region);
      direct(o.index.age, d) = o.count;
      has_direct[o.index.age][d] = 1;
    } else {
      std::size_t c = grid.county_index.at(o.index.region);
      std::size_t d = grid.county_district[c];
      summed(o.index.age, d) += o.count;
      n_counties(o.index.age, d) += 1.0;
    }
  }
  std::vector<double> counties_in(D, 0.0);
  for (std::size_t c = 0; c < grid.n_county(); ++c) {
    counties_in[grid.county_district[c]] += 1.0;
  }
  Array2 out(A, D);
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t d = 0; d < D; ++d) {
      if (has_direct[a][d]) {
        out(a, d) = direct(a, d);
      } else if (n_counties(a, d) == counties_in[d]) {
        out(a, d) = summed(a, d);
      } else {
        throw InputError(what + ": incomplete coverage of district '" +
                         grid.districts[d] + "' age " +
                         std::to_string(grid.age_groups[a]) + " in year " +
                         std::to_string(grid.time_points[t]));
      }
    }
  }
  return out;
}

}  // namespace

ValidationResult validate_draws(const ModelBundle& mb,
                                const PosteriorDraws& draws,
                                std::vector<PopulationObservation> holdout,
                                int holdout_year,
                                std::uint64_t predictive_seed) {
  const ModelGrid& grid = mb.grid;
  const std::size_t A = grid.n_age(), D = grid.n_district();
  if (holdout.empty()) throw InputError("holdout file has no observations");

  std::vector<int> fit_years = mb.inputs.obs.census_years(grid);
  if (fit_years.size() < 2) {
    throw InputError("validation needs at least two fitted censuses for the "
                     "interpolation baseline");
  }
  const int last_fit = fit_years.back();
  if (holdout_year <= last_fit) {
    throw InputError("holdout year " + std::to_string(holdout_year) +
                     " is not beyond the last fitted census (" +
                     std::to_string(last_fit) + ")");
  }
  auto yit = grid.year_index.find(holdout_year);
  if (yit == grid.year_index.end()) {
    throw InputError("holdout year " + std::to_string(holdout_year) +
                     " is not a model time point");
  }
  const std::size_t t_h = yit->second;
  std::erase_if(holdout, [&](const PopulationObservation& o) {
    return o.index.time != t_h;
  });
  if (holdout.empty()) {
    throw InputError("holdout file has no rows for year " +
                     std::to_string(holdout_year));
  }

  Array2 y_district = district_counts(holdout, grid, t_h, "holdout");
  const bool county_holdout =
      std::any_of(holdout.begin(), holdout.end(), [](const auto& o) {
        return o.level == RegionLevel::county;
      });

  // Interpolation baseline from the last two fitted censuses, extrapolated
  // on the log scale (ratio extrapolation).
  const int y2 = fit_years[fit_years.size() - 1];
  const int y1 = fit_years[fit_years.size() - 2];
  Array2 base2 = district_counts(mb.inputs.obs.populations, grid,
                                 grid.year_index.at(y2), "census " +
                                 std::to_string(y2));
  Array2 base1 = district_counts(mb.inputs.obs.populations, grid,
                                 grid.year_index.at(y1), "census " +
                                 std::to_string(y1));
  const double k = static_cast<double>(holdout_year - y2) /
                   static_cast<double>(y2 - y1);
  auto extrapolate = [&](double p1, double p2) {
    return k == 1.0 ? linear_baseline(p1, p2) : p2 * std::pow(p2 / p1, k);
  };

  // Evaluation cases: per-age district cells, per-district totals, and (when
  // the holdout reports counties) per-age county cells for coverage and PIT.
  struct CaseSpec {
    std::string group, age_label;
    double y = 0.0, baseline = 0.0, var = 0.0;
    std::size_t age = 0, region = 0;
    bool county_level = false, is_total = false, in_tables = true;
  };
  std::vector<CaseSpec> cases;
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t d = 0; d < D; ++d) {
      CaseSpec cs;
      cs.group = grid.districts[d];
      cs.age_label = std::to_string(grid.age_groups[a]);
      cs.y = y_district(a, d);
      cs.baseline = extrapolate(base1(a, d), base2(a, d));
      cs.var = sampling_variance(cs.y,
                                 mb.cfg.ingest.fraction_for_year(holdout_year));
      cs.age = a;
      cs.region = d;
      cases.push_back(std::move(cs));
    }
  }
  for (std::size_t d = 0; d < D; ++d) {
    CaseSpec cs;
    cs.group = grid.districts[d];
    cs.age_label = "total";
    double tot = 0.0, tot1 = 0.0, tot2 = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
      tot += y_district(a, d);
      tot1 += base1(a, d);
      tot2 += base2(a, d);
    }
    cs.y = tot;
    cs.baseline = extrapolate(tot1, tot2);
    cs.region = d;
    cs.is_total = true;
    cases.push_back(std::move(cs));
  }
  if (county_holdout) {
    for (const auto& o : holdout) {
      if (o.level != RegionLevel::county) continue;
      CaseSpec cs;
      cs.group = o.index.region;
      cs.age_label = std::to_string(grid.age_groups[o.index.age]);
      cs.y = o.count;
      cs.var = o.sampling_var_log;
      cs.age = o.index.age;
      cs.region = grid.county_index.at(o.index.region);
      cs.county_level = true;
      cs.in_tables = false;
      cases.push_back(std::move(cs));
    }
  }

  // One pass over the stored draws fills every case's eta samples.
  const std::size_t n_total = draws.n_chains() * draws.n_samples();
  std::vector<std::vector<double>> eta_samples(cases.size());
  for (auto& v : eta_samples) v.reserve(n_total);
  Workspace ws = mb.model->make_workspace();
  const std::size_t n_params = draws.n_params();
  for (const Array2& chain : draws.chains) {
    for (std::size_t i = 0; i < chain.rows(); ++i) {
      std::span<const double> x(chain.data().data() + i * n_params, n_params);
      if (!mb.model->compute_eta(x, ws)) {
        throw Error("stored draw implies an invalid population state");
      }
      for (std::size_t s = 0; s < cases.size(); ++s) {
        const CaseSpec& cs = cases[s];
        double v = 0.0;
        if (cs.county_level) {
          v = ws.eta(cs.age, t_h, cs.region);
        } else {
          for (std::size_t c = 0; c < grid.n_county(); ++c) {
            if (grid.county_district[c] != cs.region) continue;
            if (cs.is_total) {
              for (std::size_t a = 0; a < A; ++a) v += ws.eta(a, t_h, c);
            } else {
              v += ws.eta(cs.age, t_h, c);
            }
          }
        }
        eta_samples[s].push_back(v);
      }
    }
  }

  // Posterior predictive: lognormal census noise on top of each eta draw.
  std::mt19937_64 rng(predictive_seed);
  std::normal_distribution<double> zdist;
  ValidationResult result;
  std::vector<EvalCase> coverage_cases;
  std::vector<std::pair<std::string, double>> bayes_err, interp_err;
  for (std::size_t s = 0; s < cases.size(); ++s) {
    const CaseSpec& cs = cases[s];
    std::vector<double> sorted_eta = eta_samples[s];
    std::sort(sorted_eta.begin(), sorted_eta.end());
    const double eta_hat = quantile_type7_sorted(sorted_eta, 0.5);

    std::vector<double> pred = eta_samples[s];
    const double sd = std::sqrt(cs.var);
    for (double& v : pred) v *= std::exp(sd * zdist(rng));
    std::vector<double> sorted_pred = pred;
    std::sort(sorted_pred.begin(), sorted_pred.end());

    if (cs.in_tables) {
      bayes_err.emplace_back(cs.age_label, relative_error(cs.y, eta_hat));
      interp_err.emplace_back(cs.age_label,
                              relative_error(cs.y, cs.baseline));
    }
    const bool coverage_case = cs.county_level || (!county_holdout &&
                                                   cs.in_tables &&
                                                   !cs.is_total);
    if (coverage_case) {
      EvalCase ec;
      ec.group = cs.group;
      ec.age_label = cs.age_label;
      ec.y = cs.y;
      ec.eta_hat = eta_hat;
      ec.lower = quantile_type7_sorted(sorted_pred, 0.05);
      ec.upper = quantile_type7_sorted(sorted_pred, 0.95);
      coverage_cases.push_back(ec);
      result.pit.emplace_back(cs.age_label + ":" + cs.group,
                              pit(pred, cs.y));
    }
  }
  result.bayes_errors = error_table(bayes_err);
  result.interp_errors = error_table(interp_err);
  result.coverage = coverage(coverage_cases);
  return result;
}

int cmd_validate(const std::string& config_path, const Overrides& o,
                 std::string draws_dir, std::string holdout_path,
                 int holdout_year) {
  ModelBundle mb = load_model(load_with_overrides(config_path, o));
  if (holdout_path.empty()) holdout_path = mb.cfg.holdout;
  if (holdout_path.empty()) {
    throw InputError("no holdout file given (set [validate] holdout or "
                     "--holdout)");
  }
  if (holdout_year == 0) holdout_year = mb.cfg.holdout_year;
  if (draws_dir.empty()) draws_dir = mb.cfg.out_dir + "/draws";

  PosteriorDraws draws = read_draws(draws_dir);
  if (draws.param_names != mb.model->param_names()) {
    throw InputError(draws_dir + ": draws do not match the configured model");
  }
  std::vector<PopulationObservation> holdout = load_populations(
      mb.cfg.resolve(holdout_path), mb.grid, mb.cfg.ingest);
  if (holdout_year == 0) {
    int latest = 0;
    for (const auto& ob : holdout) {
      latest = std::max(latest, mb.grid.time_points[ob.index.time]);
    }
    holdout_year = latest;
  }
  ValidationResult result = validate_draws(mb, draws, std::move(holdout),
                                           holdout_year,
                                           mb.cfg.sampler.seed ^
                                               0x70726564696374ull);

  fs::create_directories(mb.cfg.out_dir);
  write_table1(mb.cfg.out_dir + "/table1.csv", result.interp_errors,
               result.bayes_errors);
  write_table2(mb.cfg.out_dir + "/table2.csv", result.coverage);
  write_pit(mb.cfg.out_dir + "/pit.csv", result.pit);

  Manifest m;
  m.command = "validate";
  m.config_path = config_path;
  m.config_hash = hash_file(config_path);
  m.input_hashes[mb.cfg.resolve(holdout_path)] =
      hash_file(mb.cfg.resolve(holdout_path));
  m.seed = mb.cfg.sampler.seed;
  m.chains = draws.n_chains();
  m.samples = draws.n_samples();
  m.constraint_mode = mb.cfg.posterior.soft_constraints ? "soft" : "hard";
  m.n_params = mb.model->n_params();
  m.outputs = {"table1.csv", "table2.csv", "pit.csv"};
  write_manifest(m, mb.cfg.out_dir + "/manifest_validate.json");
  return 0;
}

int cmd_project(const std::string& config_path, const Overrides& o,
                std::string draws_dir, int year) {
  ModelBundle mb = load_model(load_with_overrides(config_path, o));
  if (draws_dir.empty()) draws_dir = mb.cfg.out_dir + "/draws";
  PosteriorDraws draws = read_draws(draws_dir);
  if (draws.param_names != mb.model->param_names()) {
    throw InputError(draws_dir + ": draws do not match the configured model");
  }

  std::vector<int> fit_years = mb.inputs.obs.census_years(mb.grid);
  const int last_fit = fit_years.empty() ? 0 : fit_years.back();
  std::vector<std::size_t> times;
  if (year != 0) {
    auto it = mb.grid.year_index.find(year);
    if (it == mb.grid.year_index.end()) {
      throw InputError("projection year " + std::to_string(year) +
                       " is not a model time point");
    }
    times.push_back(it->second);
  } else {
    for (std::size_t t = 0; t < mb.grid.n_time(); ++t) {
      if (mb.grid.time_points[t] > last_fit) times.push_back(t);
    }
    if (times.empty()) {
      throw InputError("no model years beyond the last fitted census " +
                       std::to_string(last_fit));
    }
  }

  DerivedFamily eta = eta_family(mb.model, mb.grid);
  Summary eta_summary = summarize_family(draws, eta);
  DerivedFamily eta_d = eta_district_family(mb.model, mb.grid);
  Summary eta_d_summary = summarize_family(draws, eta_d);

  fs::create_directories(mb.cfg.out_dir);
  const std::string path = mb.cfg.out_dir + "/projections.csv";
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "level,region,age_start,year,q2.5,q5,median,q95,q97.5\n";
  auto is_wanted = [&](int t) {
    return std::find(times.begin(), times.end(), static_cast<std::size_t>(t))
           != times.end();
  };
  for (std::size_t i = 0; i < eta_summary.rows.size(); ++i) {
    const auto& key = eta.keys[i];
    if (!is_wanted(key.time)) continue;
    const SummaryRow& r = eta_summary.rows[i];
    out << "county," << mb.grid.counties[key.county] << ','
        << mb.grid.age_groups[key.age] << ',' << mb.grid.time_points[key.time]
        << ',' << g17(r.q2_5) << ',' << g17(r.q5) << ',' << g17(r.median)
        << ',' << g17(r.q95) << ',' << g17(r.q97_5) << '\n';
  }
  for (std::size_t i = 0; i < eta_d_summary.rows.size(); ++i) {
    const auto& key = eta_d.keys[i];
    if (!is_wanted(key.time)) continue;
    const SummaryRow& r = eta_d_summary.rows[i];
    out << "district," << mb.grid.districts[key.district] << ','
        << mb.grid.age_groups[key.age] << ',' << mb.grid.time_points[key.time]
        << ',' << g17(r.q2_5) << ',' << g17(r.q5) << ',' << g17(r.median)
        << ',' << g17(r.q95) << ',' << g17(r.q97_5) << '\n';
  }
  return 0;
}

int cmd_simulate(const SynthConfig& scfg, const std::string& out_dir) {
  SyntheticWorld world = generate(scfg);
  write_world(world, scfg, out_dir);
  return 0;
}

int cmd_summarize(const std::string& draws_dir, const std::string& out_path) {
  PosteriorDraws draws = read_draws(draws_dir);
  write_summary(summarize(draws), out_path);
  return 0;
}

int cmd_basis_export(const std::string& config_path, const Overrides& o) {
  RunConfig cfg = load_with_overrides(config_path, o);
  ModelGrid grid = make_grid(cfg.age_start, cfg.age_width, cfg.n_age,
                             cfg.years, load_grid_pairs(cfg.resolve(cfg.grid_file)));
  auto [wpp_years, logit_q] =
      load_wpp_mortality(cfg.resolve(cfg.wpp_mortality), grid, cfg.ingest);
  MortalityBasis basis = build_basis(logit_q, wpp_years, grid.time_points);
  fs::create_directories(cfg.out_dir);
  write_basis_files(basis, grid, cfg.out_dir + "/basis_components.csv",
                    cfg.out_dir + "/basis_coefficients.csv");
  return 0;
}

}  // namespace ccpop::cli
