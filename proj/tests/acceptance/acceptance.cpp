// Shipped acceptance checks. Each numbered check prints exactly one
// PASS/FAIL line with its measured figures; the exit code is the number of
// failures. Tolerances are pinned here, not configurable.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ccpop/draws_io.hpp"
#include "ccpop/math.hpp"
#include "ccpop/mortality_basis.hpp"
#include "ccpop/posterior.hpp"
#include "ccpop/process.hpp"
#include "ccpop/sampler.hpp"
#include "ccpop/synth.hpp"
#include "ccpop/validate.hpp"

#include "commands.hpp"
#include "derived.hpp"

#include "oracle.hpp"
#include "tempdir.hpp"
#include "tiny_world.hpp"

namespace fs = std::filesystem;
using namespace ccpop;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return std::string(buf);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// 1. The multiplier transform: zero-sum log eps whose first differences
// reproduce zeta, plus the three-age hand case.
Outcome check_epsilon_transform() {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  const std::size_t A = 7;
  EpsilonTransform transform(A);
  std::vector<double> zeta(A - 1), log_eps(A);
  double worst_sum = 0.0, worst_diff = 0.0;
  for (int rep = 0; rep < 10000; ++rep) {
    for (double& v : zeta) v = z(rng);
    transform.apply(zeta, log_eps);
    double sum = std::accumulate(log_eps.begin(), log_eps.end(), 0.0);
    worst_sum = std::max(worst_sum, std::fabs(sum));
    for (std::size_t a = 0; a + 1 < A; ++a) {
      worst_diff = std::max(
          worst_diff, std::fabs(log_eps[a + 1] - log_eps[a] - zeta[a]));
    }
  }

  std::vector<double> hand_zeta = {1.0, 0.0};
  std::vector<double> hand = epsilon_from_zeta(hand_zeta);
  double hand_err = std::max(
      {std::fabs(hand[0] + 2.0 / 3.0), std::fabs(hand[1] - 1.0 / 3.0),
       std::fabs(hand[2] - 1.0 / 3.0)});
  double dt = seconds_since(t0);

  Outcome out;
  out.ok = worst_sum <= 1e-12 && worst_diff <= 1e-12 && hand_err <= 1e-14 &&
           dt < 1.0;
  out.detail = fmt("max|sum|=%.1e max|diff-zeta|=%.1e hand=%.1e (%.2fs)",
                   worst_sum, worst_diff, hand_err, dt);
  return out;
}

// 2. Principal-component mortality basis: orthonormal components, two-PC
// reconstruction never worse than the mean alone, bit-stable rebuilds.
Outcome check_basis() {
  std::vector<int> wpp_years;
  Array2 lq = synthetic_wpp_logit_q(7, wpp_years);
  std::vector<int> model_years = {1979, 1984, 1989, 1994, 1999,
                                  2004, 2009, 2014, 2019};
  MortalityBasis b = build_basis(lq, wpp_years, model_years);
  MortalityBasis b2 = build_basis(lq, wpp_years, model_years);

  const std::size_t A = b.pc1.size();
  double n1 = 0.0, n2 = 0.0, dot = 0.0;
  for (std::size_t a = 0; a < A; ++a) {
    n1 += b.pc1[a] * b.pc1[a];
    n2 += b.pc2[a] * b.pc2[a];
    dot += b.pc1[a] * b.pc2[a];
  }
  double ortho = std::max({std::fabs(n1 - 1.0), std::fabs(n2 - 1.0),
                           std::fabs(dot)});

  bool rows_ok = true;
  for (std::size_t i = 0; i < lq.rows(); ++i) {
    double c1 = 0.0, c2 = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
      double r = lq(i, a) - b.mean_schedule[a];
      c1 += r * b.pc1[a];
      c2 += r * b.pc2[a];
    }
    double res0 = 0.0, res2 = 0.0;
    for (std::size_t a = 0; a < A; ++a) {
      double r = lq(i, a) - b.mean_schedule[a];
      double e = r - c1 * b.pc1[a] - c2 * b.pc2[a];
      res0 += r * r;
      res2 += e * e;
    }
    if (!(res2 <= res0 * (1.0 + 1e-12) + 1e-15)) rows_ok = false;
  }

  bool stable = b.mean_schedule == b2.mean_schedule && b.pc1 == b2.pc1 &&
                b.pc2 == b2.pc2 && b.national_coeffs == b2.national_coeffs;

  Outcome out;
  out.ok = ortho <= 1e-10 && rows_ok && stable;
  out.detail = fmt("orthonormality=%.1e rows_ok=%d bit_stable=%d", ortho,
                   rows_ok ? 1 : 0, stable ? 1 : 0);
  return out;
}

// 3. Cohort recursion: identity dynamics shift cohorts unchanged, and the
// worked single step lands on 94.5.
Outcome check_recursion() {
  const std::size_t A = 4, T = 5, C = 2;
  MortalityBasis basis;
  basis.mean_schedule.assign(A, 0.0);
  basis.pc1.assign(A, 0.0);
  basis.pc2.assign(A, 0.0);
  basis.national_coeffs.assign(T, {0.0, 0.0});

  MortalityParams mort;
  mort.alpha0.assign(C, -1000.0);  // expit(-1000) == 0 exactly
  mort.delta = Array3(T, C, 2);

  MigrationParams mig;
  mig.total_in = Array2(T, C);
  mig.total_out = Array2(T, C);
  mig.share_in_raw = Array2(A, C);
  mig.share_out_raw = Array2(A, C);
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t c = 0; c < C; ++c) {
      mig.share_in_raw(a, c) = 0.5;
      mig.share_out_raw(a, c) = 0.5;
    }
  }

  MultiplierParams mult;
  mult.zeta = Array3(A - 1, T, C);

  BoundaryPopulations boundary;
  boundary.first_age = Array2(T, C);
  boundary.first_time = Array2(A, C);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      boundary.first_age(t, c) = 100.0 + 10.0 * t + c;
    }
  }
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t c = 0; c < C; ++c) {
      boundary.first_time(a, c) =
          a == 0 ? boundary.first_age(0, c) : 200.0 + 10.0 * a + c;
    }
  }

  ForwardResult r = forward_populate(boundary, mort, mig, mult, basis);
  bool shift_ok = r.status.ok;
  for (std::size_t a = 0; a < A && shift_ok; ++a) {
    for (std::size_t t = 0; t < T && shift_ok; ++t) {
      std::size_t back = std::min(a, t);
      for (std::size_t c = 0; c < C; ++c) {
        double expect = a - back == 0 ? boundary.first_age(t - back, c)
                                      : boundary.first_time(a - back, c);
        if (r.eta(a, t, c) != expect) shift_ok = false;
      }
    }
  }

  double step = ccp_step(100.0, 0.1, 0.05, 0.0);
  double step_err = std::fabs(step - 94.5);

  Outcome out;
  out.ok = shift_ok && step_err <= 1e-12;
  out.detail = fmt("pure_shift_exact=%d |step-94.5|=%.1e", shift_ok ? 1 : 0,
                   step_err);
  return out;
}

// 4. Log posterior against the independently coded density sum on the
// two-age instance, 100 jittered states per constraint mode.
Outcome check_oracle() {
  testutil::TinyWorld w = testutil::tiny_world();
  std::mt19937_64 rng(2026);
  std::normal_distribution<double> jitter(0.0, 0.02);
  int matches = 0, total = 0;
  double worst = 0.0;
  for (bool soft : {false, true}) {
    PosteriorOptions opt;
    opt.soft_constraints = soft;
    PosteriorModel model = w.model(opt);
    testutil::OracleInputs in{w.grid, w.obs,      w.national, w.basis,
                              w.props, w.psi_upper, opt};
    Workspace ws = model.make_workspace();
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> x = model.initial_point(rng);
      for (double& v : x) v += jitter(rng);
      double lib = model.log_posterior(x, ws);
      double ref = testutil::oracle_log_posterior(in, x);
      ++total;
      if (std::isinf(lib) || std::isinf(ref)) {
        matches += std::isinf(lib) && std::isinf(ref) && lib < 0 && ref < 0;
        continue;
      }
      double err = std::fabs(lib - ref) / std::max(1.0, std::fabs(ref));
      worst = std::max(worst, err);
      matches += err <= 1e-8;
    }
  }
  Outcome out;
  out.ok = matches == total;
  out.detail = fmt("matched %d/%d states, worst rel err=%.1e", matches, total,
                   worst);
  return out;
}

// 5. The adaptive sampler on a correlated two-dimensional Gaussian.
Outcome check_sampler_toy() {
  auto t0 = std::chrono::steady_clock::now();
  const double mu0 = 1.0, mu1 = -2.0;
  const double s00 = 1.0, s01 = 0.3, s11 = 0.5;
  const double det = s00 * s11 - s01 * s01;
  const double i00 = s11 / det, i01 = -s01 / det, i11 = s00 / det;

  ChainFactory factory = [&](std::size_t) {
    ChainContext ctx;
    ctx.log_density = [=](std::span<const double> x) {
      double dx = x[0] - mu0, dy = x[1] - mu1;
      return -0.5 * (i00 * dx * dx + 2.0 * i01 * dx * dy + i11 * dy * dy);
    };
    Block b0{"x0", {0}, 1.0, 0.35};
    Block b1{"x1", {1}, 1.0, 0.35};
    ctx.plan.blocks = {b0, b1};
    ctx.init = [](std::mt19937_64& rng) {
      std::normal_distribution<double> z;
      return std::vector<double>{z(rng), z(rng)};
    };
    return ctx;
  };

  SamplerConfig cfg;
  cfg.n_chains = 4;
  cfg.n_warmup = 5000;
  cfg.n_samples = 50000;
  cfg.seed = 2718;
  PosteriorDraws draws = run_chains(cfg, factory, {"x0", "x1"});

  double m0 = 0.0, m1 = 0.0;
  std::size_t n = 0;
  for (const Array2& ch : draws.chains) {
    for (std::size_t i = 0; i < ch.rows(); ++i) {
      m0 += ch(i, 0);
      m1 += ch(i, 1);
      ++n;
    }
  }
  m0 /= n;
  m1 /= n;
  double c00 = 0.0, c01 = 0.0, c11 = 0.0;
  for (const Array2& ch : draws.chains) {
    for (std::size_t i = 0; i < ch.rows(); ++i) {
      double dx = ch(i, 0) - m0, dy = ch(i, 1) - m1;
      c00 += dx * dx;
      c01 += dx * dy;
      c11 += dy * dy;
    }
  }
  c00 /= n - 1;
  c01 /= n - 1;
  c11 /= n - 1;

  Summary s = summarize(draws);
  double rhat_max = std::max(s.rows[0].rhat, s.rows[1].rhat);
  double mean_err = std::max(std::fabs(m0 - mu0), std::fabs(m1 - mu1));
  double cov_err = std::max({std::fabs(c00 - s00) / s00,
                             std::fabs(c01 - s01) / std::fabs(s01),
                             std::fabs(c11 - s11) / s11});
  double dt = seconds_since(t0);

  Outcome out;
  out.ok = mean_err <= 0.05 && cov_err <= 0.10 && rhat_max < 1.01 && dt < 60.0;
  out.detail = fmt("mean_err=%.3f cov_rel_err=%.3f rhat=%.4f (%.0fs)",
                   mean_err, cov_err, rhat_max, dt);
  return out;
}

cli::ModelBundle bundle_from_world(const SyntheticWorld& w,
                                   const SamplerConfig& scfg) {
  cli::ModelBundle mb;
  mb.grid = w.grid;
  mb.inputs.obs = w.obs;
  mb.inputs.national = w.national;
  mb.inputs.boundary = w.boundary;
  mb.inputs.psi_upper = w.psi_upper;
  mb.model = std::make_shared<const PosteriorModel>(
      w.grid, w.obs, w.national, w.basis, w.boundary, w.psi_upper,
      PosteriorOptions{});
  mb.cfg.sampler = scfg;
  return mb;
}

// 6. Simulate and recover at the default world size: converged eta
// summaries, calibrated credible intervals, and every stored draw inside
// the national band and migration balance.
Outcome check_recover() {
  SynthConfig sc;  // A=7, T=9, C=8, D=4
  sc.seed = 7;
  SyntheticWorld w = generate(sc);

  SamplerConfig scfg;
  scfg.n_chains = 4;
  scfg.n_warmup = 2000;
  scfg.n_samples = 1500;
  scfg.seed = 99;
  cli::ModelBundle mb = bundle_from_world(w, scfg);
  PosteriorDraws draws = cli::sample_posterior(mb);

  cli::DerivedFamily eta = cli::eta_family(mb.model, mb.grid);
  Summary es = cli::summarize_family(draws, eta);

  double rhat_max = 0.0;
  std::size_t rhat_bad = 0;
  std::size_t covered = 0;
  for (std::size_t i = 0; i < es.rows.size(); ++i) {
    const SummaryRow& r = es.rows[i];
    if (std::isfinite(r.rhat)) {
      rhat_max = std::max(rhat_max, r.rhat);
    } else {
      ++rhat_bad;
    }
    const auto& k = eta.keys[i];
    double truth = w.eta(k.age, k.time, k.county);
    covered += truth >= r.q5 && truth <= r.q95;
  }
  double cover = static_cast<double>(covered) /
                 static_cast<double>(es.rows.size());

  // Hard constraints re-verified from the raw coordinates of every draw.
  const PackedLayout& L = mb.model->layout();
  Workspace ws = mb.model->make_workspace();
  std::size_t violations = 0, checked = 0;
  for (const Array2& ch : draws.chains) {
    for (std::size_t i = 0; i < ch.rows(); ++i) {
      std::span<const double> x(ch.data().data() + i * L.total, L.total);
      ++checked;
      if (!mb.model->compute_eta(x, ws)) {
        ++violations;
        continue;
      }
      bool bad = false;
      for (std::size_t a = 0; a < L.A && !bad; ++a) {
        for (std::size_t t = 0; t < L.T; ++t) {
          double sum_eta = 0.0, sum_in = 0.0, sum_out = 0.0;
          for (std::size_t c = 0; c < L.C; ++c) {
            sum_eta += ws.eta(a, t, c);
            sum_in += ws.state.mig.total_in(t, c) * ws.share_in(a, c);
            sum_out += ws.state.mig.total_out(t, c) * ws.share_out(a, c);
          }
          double log_sum = std::log(sum_eta);
          double lam = x[L.lambda_at(a, t)], om = x[L.omega_at(a, t)];
          double slack = 1e-9;
          if (log_sum <= lam - slack || log_sum > om + slack ||
              std::fabs(sum_in - sum_out) > 0.1 * sum_eta * (1.0 + 1e-9)) {
            bad = true;
            break;
          }
        }
      }
      violations += bad;
    }
  }

  Outcome out;
  out.ok = rhat_bad == 0 && rhat_max < 1.05 && cover >= 0.85 &&
           cover <= 0.95 && violations == 0;
  out.detail = fmt("eta rhat_max=%.3f coverage=%.3f draw_violations=%zu/%zu",
                   rhat_max, cover, violations, checked);
  return out;
}

double pooled_rmse(const std::vector<ErrorRow>& rows) {
  double ss = 0.0;
  std::size_t n = 0;
  for (const ErrorRow& r : rows) {
    if (r.age_label == "total") continue;
    ss += r.rmse * r.rmse * static_cast<double>(r.n);
    n += r.n;
  }
  return std::sqrt(ss / static_cast<double>(n));
}

double ks_statistic(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    d = std::max(d, (i + 1) / n - v[i]);
    d = std::max(d, v[i] - i / n);
  }
  return d;
}

struct ReplicateOutcomes {
  int bayes_wins = 0;
  int ks_passes = 0;
  int replicates = 0;
  double worst_cov_sum_err = 0.0;
  std::string rmse_log;
};

// Ten seeded holdout replicates shared by the superiority and calibration
// checks: small worlds, a short two-chain fit each, and the stored-draw
// validation pass.
ReplicateOutcomes run_replicates() {
  ReplicateOutcomes r;
  for (int rep = 0; rep < 10; ++rep) {
    SynthConfig sc;
    sc.seed = 300 + rep;
    SyntheticWorld w = generate(sc);

    SamplerConfig scfg;
    scfg.n_chains = 2;
    scfg.n_warmup = 500;
    scfg.n_samples = 400;
    scfg.seed = 9000 + rep;
    cli::ModelBundle mb = bundle_from_world(w, scfg);
    PosteriorDraws draws = cli::sample_posterior(mb);

    int holdout_year = w.grid.time_points[w.holdout_wave_idx.front()];
    cli::ValidationResult res = cli::validate_draws(
        mb, draws, w.holdout.populations, holdout_year,
        scfg.seed ^ 0x70726564696374ull);

    double rb = pooled_rmse(res.bayes_errors);
    double ri = pooled_rmse(res.interp_errors);
    r.bayes_wins += rb < ri;
    r.rmse_log += fmt("%s%.3f/%.3f", rep ? " " : "", rb, ri);

    std::vector<double> pit_values;
    for (const auto& [group, value] : res.pit) pit_values.push_back(value);
    const double n = static_cast<double>(pit_values.size());
    double crit = 1.62762 / (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n));
    r.ks_passes += ks_statistic(pit_values) < crit;

    for (const CoverageRow& row : res.coverage) {
      r.worst_cov_sum_err = std::max(
          r.worst_cov_sum_err,
          std::fabs(row.in + row.above + row.below - 1.0));
    }
    ++r.replicates;
  }
  return r;
}

// 9. Full command pipeline on a country-sized world: table and plot-data
// files with the shipped shapes.
Outcome check_format_parity(const testutil::TempDir& tmp) {
  fs::path dir = tmp.path() / "kenya";
  SynthConfig sc;
  sc.n_county = 47;
  sc.n_district = 35;
  sc.seed = 12;
  SyntheticWorld w = generate(sc);
  write_world(w, sc, dir.string());
  {
    std::ofstream out(dir / "world.ini", std::ios::app);
    out << "\n[sampler]\nchains = 2\nwarmup = 150\nsamples = 120\nseed = 5\n";
  }
  std::string ini = (dir / "world.ini").string();
  if (cli::cmd_fit(ini, cli::Overrides{}) != 0) {
    return {false, "fit returned nonzero"};
  }
  if (cli::cmd_validate(ini, cli::Overrides{}, "", "", 0) != 0) {
    return {false, "validate returned nonzero"};
  }

  fs::path out_dir = dir / "out";
  std::vector<std::pair<std::string, std::string>> headers = {
      {"table1.csv",
       "age,mean_interpolation,mean_bayes_ccp,median_interpolation,"
       "median_bayes_ccp,rmse_interpolation,rmse_bayes_ccp"},
      {"table2.csv", "age,prop_in,prop_above,prop_below"},
      {"pit.csv", "group,pit"},
      {"fig_population.csv", "level,region,age_start,year,q5,median,q95"},
      {"fig_mortality.csv", "county,age_start,year,q5,median,q95"},
      {"fig_migration_totals.csv", "county,year,direction,q5,median,q95"},
      {"fig_migration_age.csv", "county,age_start,direction,q5,median,q95"},
      {"fig_multipliers.csv", "county,age_start,year,q5,median,q95"},
      {"summary_params.csv", "param,median,q2.5,q5,q95,q97.5,rhat,ess"},
  };
  for (const auto& [name, header] : headers) {
    std::vector<std::string> lines = read_lines(out_dir / name);
    if (lines.empty() || lines[0] != header) {
      return {false, name + ": missing or wrong header"};
    }
  }

  std::vector<std::string> t1 = read_lines(out_dir / "table1.csv");
  std::vector<std::string> want_ages = {"15", "20", "25", "30",
                                        "35", "40", "45", "total"};
  bool t1_ok = t1.size() == 1 + want_ages.size();
  for (std::size_t i = 0; t1_ok && i < want_ages.size(); ++i) {
    t1_ok = t1[i + 1].rfind(want_ages[i] + ",", 0) == 0;
  }

  std::vector<std::string> t2 = read_lines(out_dir / "table2.csv");
  bool t2_ok = t2.size() == 1 + 7;
  double worst_sum = 0.0;
  for (std::size_t i = 1; t2_ok && i < t2.size(); ++i) {
    std::istringstream row(t2[i]);
    std::string age, pin, pab, pbe;
    std::getline(row, age, ',');
    std::getline(row, pin, ',');
    std::getline(row, pab, ',');
    std::getline(row, pbe, ',');
    worst_sum = std::max(worst_sum, std::fabs(std::stod(pin) +
                                              std::stod(pab) +
                                              std::stod(pbe) - 1.0));
  }
  t2_ok = t2_ok && worst_sum <= 1e-12;

  std::size_t pit_rows = read_lines(out_dir / "pit.csv").size() - 1;
  bool pit_ok = pit_rows == 47 * 7;

  Outcome out;
  out.ok = t1_ok && t2_ok && pit_ok;
  out.detail = fmt("table1_rows_ok=%d table2_rows_ok=%d (sum_err=%.1e) "
                   "pit_rows=%zu",
                   t1_ok ? 1 : 0, t2_ok ? 1 : 0, worst_sum, pit_rows);
  return out;
}

// 10. Fixed seeds give byte-identical worlds, draws, and summaries.
Outcome check_determinism(const testutil::TempDir& tmp) {
  SynthConfig sc;
  sc.n_county = 4;
  sc.n_district = 2;
  sc.n_time = 5;
  sc.n_age = 3;
  sc.seed = 77;
  SyntheticWorld w1 = generate(sc);
  SyntheticWorld w2 = generate(sc);
  fs::path d1 = tmp.path() / "det_w1", d2 = tmp.path() / "det_w2";
  write_world(w1, sc, d1.string());
  write_world(w2, sc, d2.string());
  bool worlds_ok = true;
  for (const char* name :
       {"grid.csv", "populations.csv", "populations_holdout.csv",
        "migrations.csv", "wpp_population.csv", "wpp_mortality.csv",
        "truth_eta.csv", "world.ini"}) {
    std::string a = slurp(d1 / name), b = slurp(d2 / name);
    if (a.empty() || a != b) worlds_ok = false;
  }

  SamplerConfig scfg;
  scfg.n_chains = 2;
  scfg.n_warmup = 150;
  scfg.n_samples = 120;
  scfg.seed = 31;
  cli::ModelBundle mb = bundle_from_world(w1, scfg);
  PosteriorDraws r1 = cli::sample_posterior(mb);
  PosteriorDraws r2 = cli::sample_posterior(mb);
  fs::path f1 = tmp.path() / "det_f1", f2 = tmp.path() / "det_f2";
  write_draws(r1, (f1 / "draws").string());
  write_draws(r2, (f2 / "draws").string());
  write_summary(summarize(r1), (f1 / "summary.csv").string());
  write_summary(summarize(r2), (f2 / "summary.csv").string());
  bool draws_ok = true;
  for (const char* name : {"draws/chain_1.csv", "draws/chain_2.csv",
                           "summary.csv"}) {
    std::string a = slurp(f1 / name), b = slurp(f2 / name);
    if (a.empty() || a != b) draws_ok = false;
  }

  Outcome out;
  out.ok = worlds_ok && draws_ok;
  out.detail = fmt("worlds_identical=%d draws_and_summaries_identical=%d",
                   worlds_ok ? 1 : 0, draws_ok ? 1 : 0);
  return out;
}

}  // namespace

int main() {
  testutil::TempDir tmp;
  int failures = 0;
  auto report = [&](int n, const char* label, const Outcome& o) {
    std::printf("%s %2d %-28s %s\n", o.ok ? "PASS" : "FAIL", n, label,
                o.detail.c_str());
    std::fflush(stdout);
    failures += !o.ok;
  };
  auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  };

  report(1, "epsilon transform", guarded(check_epsilon_transform));
  report(2, "mortality basis", guarded(check_basis));
  report(3, "cohort recursion", guarded(check_recursion));
  report(4, "posterior oracle", guarded(check_oracle));
  report(5, "sampler on toy target", guarded(check_sampler_toy));
  report(6, "simulate and recover", guarded(check_recover));

  ReplicateOutcomes reps;
  try {
    reps = run_replicates();
    Outcome sup{reps.bayes_wins >= 9,
                fmt("bayes beats interpolation in %d/%d (rmse b/i: %s)",
                    reps.bayes_wins, reps.replicates, reps.rmse_log.c_str())};
    report(7, "holdout superiority", sup);
    Outcome cal{reps.ks_passes >= 9 && reps.worst_cov_sum_err <= 1e-12,
                fmt("KS uniform passes %d/%d, coverage row sum err=%.1e",
                    reps.ks_passes, reps.replicates, reps.worst_cov_sum_err)};
    report(8, "PIT calibration", cal);
  } catch (const std::exception& e) {
    Outcome bad{false, std::string("exception: ") + e.what()};
    report(7, "holdout superiority", bad);
    report(8, "PIT calibration", bad);
  }

  report(9, "output format parity",
         guarded([&] { return check_format_parity(tmp); }));
  report(10, "seeded determinism",
         guarded([&] { return check_determinism(tmp); }));

  return failures;
}
