#include "ccpop/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include "ccpop/draws_io.hpp"
#include "ccpop/errors.hpp"
#include "ccpop/ingest.hpp"
#include "ccpop/math.hpp"
#include "ccpop/process.hpp"

namespace ccpop {

namespace fs = std::filesystem;

namespace {

double sq(double x) { return x * x; }

std::string region_name(char prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%02zu", prefix, i + 1);
  return buf;
}

}  // namespace

Array2 synthetic_wpp_logit_q(std::size_t n_age, std::vector<int>& years_out) {
  const std::size_t n_sched = 16;
  years_out.resize(n_sched);
  Array2 lq(n_sched, n_age);
  for (std::size_t i = 0; i < n_sched; ++i) {
    const int year = 1950 + 5 * static_cast<int>(i);
    years_out[i] = year;
    // excess mortality peaking near 2000 and at the third age group
    const double amp = 0.9 * std::exp(-0.5 * sq((year - 2000) / 8.0));
    for (std::size_t a = 0; a < n_age; ++a) {
      const double da = static_cast<double>(a);
      lq(i, a) = -5.2 + 0.28 * da                      // age gradient
                 - 0.010 * (year - 1987.5)             // secular improvement
                 + amp * std::exp(-0.5 * sq((da - 2.5) / 1.3))
                 + 0.02 * std::sin(2.1 * da + 0.8 * static_cast<double>(i));
    }
  }
  return lq;
}

SyntheticWorld generate(const SynthConfig& cfg) {
  const std::size_t A = cfg.n_age, T = cfg.n_time, C = cfg.n_county,
                    D = cfg.n_district;
  if (A < 2 || T < 3) {
    throw std::invalid_argument("synthetic world needs n_age >= 2, n_time >= 3");
  }
  if (D == 0 || D > C) {
    throw std::invalid_argument("need 1 <= n_district <= n_county");
  }

  SyntheticWorld w;
  std::vector<int> years(T);
  for (std::size_t t = 0; t < T; ++t) {
    years[t] = cfg.first_year + cfg.age_width * static_cast<int>(t);
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(C);
  for (std::size_t c = 0; c < C; ++c) {
    pairs.emplace_back(region_name('c', c), region_name('d', c * D / C));
  }
  w.grid = make_grid(cfg.age_start, cfg.age_width, A, years, pairs);

  w.national.wpp_logit_q = synthetic_wpp_logit_q(A, w.national.wpp_years);
  w.basis = build_basis(w.national.wpp_logit_q, w.national.wpp_years, years);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // National target surface, cohort-consistent under the national schedule
  // so the +-10% band around it is satisfiable by a migration-balanced truth.
  std::vector<std::vector<double>> gnat(T);
  for (std::size_t t = 0; t < T; ++t) {
    gnat[t] = reconstruct_schedule(w.basis, w.basis.national_coeffs[t][0],
                                   w.basis.national_coeffs[t][1], 0.0);
  }
  Array2 target(A, T);
  const double scale = static_cast<double>(C) * cfg.county_pop_mean;
  for (std::size_t t = 0; t < T; ++t) {
    target(0, t) = scale * std::pow(1.12, static_cast<double>(t));
  }
  for (std::size_t a = 1; a < A; ++a) {
    target(a, 0) = scale * (1.0 - 0.04 * static_cast<double>(a));
  }
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t a = 1; a < A; ++a) {
      target(a, t) = target(a - 1, t - 1) * (1.0 - gnat[t - 1][a - 1]);
    }
  }

  // Truth proportions with exactly the structure the ingest interpolation
  // assumes: district shares linear in t (summing to 1 over districts) and
  // county-within-district splits constant in t.
  Array2 dbase(A, D), dslope(A, D);
  for (std::size_t a = 0; a < A; ++a) {
    double total = 0.0;
    std::vector<double> kappa(D);
    for (std::size_t d = 0; d < D; ++d) {
      dbase(a, d) = std::exp(0.4 * z(rng));
      total += dbase(a, d);
      kappa[d] = z(rng);
    }
    double kbar = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      dbase(a, d) /= total;
      kbar += dbase(a, d) * kappa[d];
    }
    for (std::size_t d = 0; d < D; ++d) {
      // sums to 0 over d; |slope * T| stays well below dbase
      dslope(a, d) = 0.01 * dbase(a, d) * (kappa[d] - kbar);
    }
  }
  Array2 csplit(A, C);
  for (std::size_t a = 0; a < A; ++a) {
    std::vector<double> v(C), dsum(D, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
      v[c] = std::exp(0.3 * z(rng));
      dsum[w.grid.county_district[c]] += v[c];
    }
    for (std::size_t c = 0; c < C; ++c) {
      csplit(a, c) = v[c] / dsum[w.grid.county_district[c]];
    }
  }
  auto prop = [&](std::size_t a, std::size_t t, std::size_t c) {
    const std::size_t d = w.grid.county_district[c];
    return (dbase(a, d) + dslope(a, d) * static_cast<double>(t)) * csplit(a, c);
  };

  ParameterState& truth = w.truth;
  truth.variances = {cfg.sigma_alpha, cfg.sigma_delta, cfg.sigma_in,
                     cfg.sigma_out, cfg.sigma_zeta};

  truth.mort.alpha0.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    truth.mort.alpha0[c] = cfg.alpha_center + cfg.sigma_alpha * z(rng);
  }
  truth.mort.delta = Array3(T, C, 2);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t k = 0; k < 2; ++k) {
      double prev = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        prev += cfg.sigma_delta * z(rng);
        truth.mort.delta(t, c, k) = prev;
      }
    }
  }

  truth.boundary.first_age = Array2(T, C);
  truth.boundary.first_time = Array2(A, C);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      truth.boundary.first_age(t, c) =
          target(0, t) * prop(0, t, c) * std::exp(0.01 * z(rng));
    }
  }
  for (std::size_t c = 0; c < C; ++c) {
    truth.boundary.first_time(0, c) = truth.boundary.first_age(0, c);
  }
  // Provisional t=0 column; rewritten after the forward pass so the truth
  // carries the within-district splits the county census will show.
  Array2 tjit(A, C);
  for (std::size_t a = 1; a < A; ++a) {
    for (std::size_t c = 0; c < C; ++c) {
      tjit(a, c) = std::exp(0.01 * z(rng));
      truth.boundary.first_time(a, c) =
          target(a, 0) * prop(a, 0, c) * tjit(a, c);
    }
  }

  truth.mult.zeta = Array3(A - 1, T, C);
  for (std::size_t a = 0; a + 1 < A; ++a) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t c = 0; c < C; ++c) {
        truth.mult.zeta(a, t, c) = cfg.sigma_zeta * z(rng);
      }
    }
  }

  std::vector<double> county_total(C, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t a = 0; a < A; ++a) {
      county_total[c] += truth.boundary.first_time(a, c);
    }
  }

  // Census waves sit at every second time point; trailing waves are held
  // out and the last fitted wave is the county-level census whose
  // within-district split anchors the boundary prior.
  std::vector<std::size_t> waves;
  for (std::size_t t = 0; t < T; t += 2) waves.push_back(t);
  const std::size_t n_hold = std::min(cfg.holdout_waves, waves.size() - 1);
  const std::size_t t_cty = waves[waves.size() - n_hold - 1];

  // Migration truth plus the forward pass, redrawn until the implied state
  // is valid (1 + phi > 0 everywhere) and migration-balanced.
  truth.mig.total_in = Array2(T, C);
  truth.mig.total_out = Array2(T, C);
  truth.mig.share_in_raw = Array2(A, C);
  truth.mig.share_out_raw = Array2(A, C);
  EpsilonTransform transform(A);
  w.eta = Array3(A, T, C);
  Array2 share_in, share_out;
  bool accepted = false;
  for (std::size_t attempt = 0; attempt < cfg.max_retries && !accepted;
       ++attempt) {
    for (std::size_t c = 0; c < C; ++c) {
      if (cfg.mig_scale <= 0.0) {
        // balanced microscopic flows: phi is exactly zero
        for (std::size_t t = 0; t < T; ++t) {
          truth.mig.total_in(t, c) = 1e-6 * county_total[c];
          truth.mig.total_out(t, c) = truth.mig.total_in(t, c);
        }
        for (std::size_t a = 0; a < A; ++a) {
          truth.mig.share_in_raw(a, c) = 0.5;
          truth.mig.share_out_raw(a, c) = 0.5;
        }
        continue;
      }
      for (Array2* total : {&truth.mig.total_in, &truth.mig.total_out}) {
        const double sigma = (total == &truth.mig.total_in) ? cfg.sigma_in
                                                            : cfg.sigma_out;
        double l0 = std::log((0.2 + 0.8 * unif(rng)) * cfg.mig_scale *
                             county_total[c]);
        double l1 = l0 + sigma * z(rng);
        (*total)(0, c) = std::exp(l0);
        if (T > 1) (*total)(1, c) = std::exp(l1);
        double prev2 = l0, prev1 = l1;
        for (std::size_t t = 2; t < T; ++t) {
          double lt = 2.0 * prev1 - prev2 + sigma * z(rng);
          (*total)(t, c) = std::exp(lt);
          prev2 = prev1;
          prev1 = lt;
        }
      }
      for (std::size_t a = 0; a < A; ++a) {
        truth.mig.share_in_raw(a, c) = 0.05 + 0.9 * unif(rng);
        truth.mig.share_out_raw(a, c) = 0.05 + 0.9 * unif(rng);
      }
    }
    ForwardStatus st =
        forward_populate_into(w.eta, truth.boundary, truth.mort, truth.mig,
                              truth.mult, w.basis, transform);
    if (!st.ok) continue;
    // The estimator centers log eta(a,0,c) on the split observed at the
    // county census, so the t=0 truth must realize that persistence.
    // Ages older than t_cty feed back into their own measurement, hence
    // the short fixed-point iteration.
    bool consistent = true;
    for (int pass = 0; pass < 4 && consistent; ++pass) {
      for (std::size_t a = 1; a < A; ++a) {
        std::vector<double> dsum(D, 0.0);
        for (std::size_t c = 0; c < C; ++c) {
          dsum[w.grid.county_district[c]] += w.eta(a, t_cty, c);
        }
        for (std::size_t c = 0; c < C; ++c) {
          const std::size_t d = w.grid.county_district[c];
          const double split = w.eta(a, t_cty, c) / dsum[d];
          truth.boundary.first_time(a, c) =
              target(a, 0) * dbase(a, d) * split * tjit(a, c);
        }
      }
      consistent = forward_populate_into(w.eta, truth.boundary, truth.mort,
                                         truth.mig, truth.mult, w.basis,
                                         transform)
                       .ok;
    }
    if (!consistent) continue;
    share_in = normalized_shares(truth.mig.share_in_raw);
    share_out = normalized_shares(truth.mig.share_out_raw);
    accepted = true;
    for (std::size_t a = 0; a < A && accepted; ++a) {
      for (std::size_t t = 0; t < T && accepted; ++t) {
        double in_sum = 0.0, out_sum = 0.0, nat = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          in_sum += truth.mig.total_in(t, c) * share_in(a, c);
          out_sum += truth.mig.total_out(t, c) * share_out(a, c);
          nat += w.eta(a, t, c);
        }
        if (std::abs(in_sum - out_sum) > 0.1 * nat) accepted = false;
      }
    }
  }
  if (!accepted) {
    throw Error("synthetic world rejected every migration draw");
  }

  // Published national counts: truth sums with a small log perturbation.
  w.national.wpp_pop = Array2(A, T);
  Array2 log_nat(A, T);
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t t = 0; t < T; ++t) {
      double nat = 0.0;
      for (std::size_t c = 0; c < C; ++c) nat += w.eta(a, t, c);
      log_nat(a, t) = std::log(nat);
      w.national.wpp_pop(a, t) = nat * std::exp(cfg.wpp_perturb * z(rng));
    }
  }

  // Bounds from their exact conditionals given the truth, so the hard
  // constraint holds at the generated state by construction.
  truth.bounds.lambda = Array2(A, T);
  truth.bounds.omega = Array2(A, T);
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t t = 0; t < T; ++t) {
      const double lw = std::log(w.national.wpp_pop(a, t));
      truth.bounds.lambda(a, t) = truncated_normal_sample(
          lw + std::log(0.9), 0.1, -HUGE_VAL, std::min(lw, log_nat(a, t)),
          rng);
      truth.bounds.omega(a, t) = truncated_normal_sample(
          lw + std::log(1.1), 0.1, std::max(lw, log_nat(a, t)), HUGE_VAL,
          rng);
    }
  }

  // The last fitted wave reports counties, earlier fitted waves report
  // districts, trailing waves are held out at county level.
  w.fit_waves.assign(waves.begin(), waves.end() - n_hold);
  w.holdout_wave_idx.assign(waves.end() - n_hold, waves.end());

  auto observe_pop = [&](std::size_t t, RegionLevel level,
                         std::vector<PopulationObservation>& dst) {
    const bool county = level == RegionLevel::county;
    const std::size_t n_region = county ? C : D;
    for (std::size_t a = 0; a < A; ++a) {
      for (std::size_t r = 0; r < n_region; ++r) {
        double total = 0.0;
        if (county) {
          total = w.eta(a, t, r);
        } else {
          for (std::size_t c = 0; c < C; ++c) {
            if (w.grid.county_district[c] == r) total += w.eta(a, t, c);
          }
        }
        const double s = std::sqrt(sampling_variance(total, cfg.sampling_fraction));
        PopulationObservation o;
        o.index = {a, t, county ? w.grid.counties[r] : w.grid.districts[r]};
        o.level = level;
        o.count = total * std::exp(s * z(rng));
        o.sampling_var_log = sampling_variance(o.count, cfg.sampling_fraction);
        dst.push_back(std::move(o));
      }
    }
  };
  auto observe_mig = [&](std::size_t t, RegionLevel level) {
    const bool county = level == RegionLevel::county;
    const std::size_t n_region = county ? C : D;
    for (Direction dir : {Direction::in, Direction::out}) {
      const Array2& total = dir == Direction::in ? truth.mig.total_in
                                                 : truth.mig.total_out;
      const Array2& share = dir == Direction::in ? share_in : share_out;
      for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t r = 0; r < n_region; ++r) {
          double psi = 0.0;
          for (std::size_t c = 0; c < C; ++c) {
            if (county ? (c == r) : (w.grid.county_district[c] == r)) {
              psi += total(t, c) * share(a, c);
            }
          }
          const double s = std::sqrt(sampling_variance(psi, cfg.sampling_fraction));
          MigrationObservation o;
          o.index = {a, t, county ? w.grid.counties[r] : w.grid.districts[r]};
          o.level = level;
          o.direction = dir;
          o.count = psi * std::exp(s * z(rng));
          o.sampling_var_log = sampling_variance(o.count, cfg.sampling_fraction);
          w.obs.migrations.push_back(std::move(o));
        }
      }
    }
  };

  for (std::size_t i = 0; i < w.fit_waves.size(); ++i) {
    const bool last = i + 1 == w.fit_waves.size();
    const RegionLevel level = last ? RegionLevel::county : RegionLevel::district;
    observe_pop(w.fit_waves[i], level, w.obs.populations);
    if (cfg.observe_migration) observe_mig(w.fit_waves[i], level);
  }
  for (std::size_t t : w.holdout_wave_idx) {
    observe_pop(t, RegionLevel::county, w.holdout.populations);
  }

  // Derived ingest products come from the observations, exactly as a real
  // run computes them.
  w.boundary = boundary_proportions(w.obs.populations, w.grid);
  w.psi_upper = psi_upper_bounds(w.obs.populations, w.grid);
  return w;
}

namespace {

void write_pop_csv(const std::vector<PopulationObservation>& obs,
                   const ModelGrid& grid, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "year,region_level,region_id,age_start,count\n";
  for (const PopulationObservation& o : obs) {
    out << grid.time_points[o.index.time] << ','
        << (o.level == RegionLevel::county ? "county" : "district") << ','
        << o.index.region << ',' << grid.age_groups[o.index.age] << ','
        << g17(o.count) << '\n';
  }
}

}  // namespace

void write_world(const SyntheticWorld& world, const SynthConfig& cfg,
                 const std::string& dir) {
  fs::create_directories(dir);
  const ModelGrid& grid = world.grid;

  {
    std::ofstream out(fs::path(dir) / "grid.csv");
    out << "county_id,district_id\n";
    for (std::size_t c = 0; c < grid.n_county(); ++c) {
      out << grid.counties[c] << ','
          << grid.districts[grid.county_district[c]] << '\n';
    }
  }
  write_pop_csv(world.obs.populations, grid, fs::path(dir) / "populations.csv");
  write_pop_csv(world.holdout.populations, grid,
                fs::path(dir) / "populations_holdout.csv");
  {
    std::ofstream out(fs::path(dir) / "migrations.csv");
    out << "year,region_level,region_id,age_start,direction,count\n";
    for (const MigrationObservation& o : world.obs.migrations) {
      out << grid.time_points[o.index.time] << ','
          << (o.level == RegionLevel::county ? "county" : "district") << ','
          << o.index.region << ',' << grid.age_groups[o.index.age] << ','
          << (o.direction == Direction::in ? "in" : "out") << ','
          << g17(o.count) << '\n';
    }
  }
  {
    std::ofstream out(fs::path(dir) / "wpp_population.csv");
    out << "year,age_start,count\n";
    for (std::size_t a = 0; a < grid.n_age(); ++a) {
      for (std::size_t t = 0; t < grid.n_time(); ++t) {
        out << grid.time_points[t] << ',' << grid.age_groups[a] << ','
            << g17(world.national.wpp_pop(a, t)) << '\n';
      }
    }
  }
  {
    std::ofstream out(fs::path(dir) / "wpp_mortality.csv");
    out << "year,age_start,logit_q\n";
    for (std::size_t i = 0; i < world.national.wpp_years.size(); ++i) {
      for (std::size_t a = 0; a < grid.n_age(); ++a) {
        out << world.national.wpp_years[i] << ',' << grid.age_groups[a] << ','
            << g17(world.national.wpp_logit_q(i, a)) << '\n';
      }
    }
  }
  {
    std::ofstream out(fs::path(dir) / "truth_eta.csv");
    out << "year,age_start,county_id,eta\n";
    for (std::size_t a = 0; a < grid.n_age(); ++a) {
      for (std::size_t t = 0; t < grid.n_time(); ++t) {
        for (std::size_t c = 0; c < grid.n_county(); ++c) {
          out << grid.time_points[t] << ',' << grid.age_groups[a] << ','
              << grid.counties[c] << ',' << g17(world.eta(a, t, c)) << '\n';
        }
      }
    }
  }
  {
    std::ofstream out(fs::path(dir) / "world.ini");
    out << "[grid]\n"
        << "age_start = " << cfg.age_start << '\n'
        << "age_width = " << cfg.age_width << '\n'
        << "n_age = " << cfg.n_age << '\n'
        << "years = " << grid.time_points.front() << ':'
        << grid.time_points.back() << ':' << cfg.age_width << '\n'
        << "grid_file = grid.csv\n"
        << "\n[data]\n"
        << "populations = populations.csv\n"
        << "migrations = migrations.csv\n"
        << "wpp_population = wpp_population.csv\n"
        << "wpp_mortality = wpp_mortality.csv\n"
        << "sampling_fraction = " << g17(cfg.sampling_fraction) << '\n';
    if (!world.holdout_wave_idx.empty()) {
      out << "\n[validate]\n"
          << "holdout = populations_holdout.csv\n"
          << "holdout_year = "
          << grid.time_points[world.holdout_wave_idx.front()] << '\n';
    }
  }
}

}  // namespace ccpop
