#include "ccpop/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "ccpop/errors.hpp"
#include "ccpop/math.hpp"

namespace ccpop {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// log density of the half-normal N+(0,1) at sigma, plus the log-scale
// Jacobian, as a function of x = log sigma.
double half_normal_log_term(double x) {
  double sigma2 = std::exp(2.0 * x);
  return 0.5 * std::log(2.0 / 3.14159265358979323846) - 0.5 * sigma2 + x;
}

double log_sigmoid(double z) { return -softplus(-z); }

}  // namespace

PosteriorModel::PosteriorModel(const ModelGrid& grid, ObservationSet obs,
                               NationalInputs national, MortalityBasis basis,
                               BoundaryProportions boundary_props,
                               std::vector<double> psi_upper,
                               PosteriorOptions opt)
    : opt_(opt),
      national_(std::move(national)),
      basis_(std::move(basis)),
      psi_upper_(std::move(psi_upper)) {
  const std::size_t A = grid.n_age();
  const std::size_t T = grid.n_time();
  const std::size_t C = grid.n_county();
  layout_.A = A;
  layout_.T = T;
  layout_.C = C;
  layout_.alpha = 0;
  layout_.delta = layout_.alpha + C;
  layout_.lpsi_in = layout_.delta + T * C * 2;
  layout_.lpsi_out = layout_.lpsi_in + T * C;
  layout_.lpi_in = layout_.lpsi_out + T * C;
  layout_.lpi_out = layout_.lpi_in + A * C;
  layout_.zeta = layout_.lpi_out + A * C;
  layout_.leta_bnd = layout_.zeta + (A - 1) * T * C;
  layout_.lsigma = layout_.leta_bnd + C * (T + A - 1);
  layout_.lambda = layout_.lsigma + 5;
  layout_.omega = layout_.lambda + A * T;
  layout_.total = layout_.omega + A * T;

  n_district_ = grid.n_district();
  county_district_ = grid.county_district;
  ages_ = grid.age_groups;
  years_ = grid.time_points;
  counties_ = grid.counties;

  if (national_.wpp_pop.rows() != A || national_.wpp_pop.cols() != T) {
    throw InputError("posterior: WPP population array is not A x T");
  }
  if (psi_upper_.size() != C) {
    throw InputError("posterior: psi upper bounds must have one entry per "
                     "county");
  }
  if (basis_.national_coeffs.size() != T) {
    throw InputError("posterior: basis national coefficients must cover all "
                     "time points");
  }
  log_psi_upper_.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    if (!(psi_upper_[c] > 0.0)) {
      throw InputError("posterior: nonpositive psi upper bound");
    }
    log_psi_upper_[c] = std::log(psi_upper_[c]);
  }

  log_wpp_ = Array2(A, T);
  lambda_mu_ = Array2(A, T);
  omega_mu_ = Array2(A, T);
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t t = 0; t < T; ++t) {
      double w = national_.wpp_pop(a, t);
      log_wpp_(a, t) = std::log(w);
      lambda_mu_(a, t) = log_wpp_(a, t) + std::log(opt_.band_lower);
      omega_mu_(a, t) = log_wpp_(a, t) + std::log(opt_.band_upper);
    }
  }
  // Truncation constants of the bound priors are shared across cells.
  lambda_lognorm_ =
      std::log(std_normal_cdf(-std::log(opt_.band_lower) / opt_.bound_prior_sd));
  omega_lognorm_ =
      std::log(std_normal_cdf(std::log(opt_.band_upper) / opt_.bound_prior_sd));

  bnd_mean_age0_ = Array2(T, C);
  bnd_mean_time0_ = Array2(A, C);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      bnd_mean_age0_(t, c) =
          log_wpp_(0, t) + std::log(boundary_props.age0(t, c));
    }
  }
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t c = 0; c < C; ++c) {
      bnd_mean_time0_(a, c) =
          log_wpp_(a, 0) + std::log(boundary_props.time0(a, c));
    }
  }

  auto resolve = [&](const CellIndex& idx, RegionLevel level) {
    if (level == RegionLevel::county) {
      auto it = grid.county_index.find(idx.region);
      if (it == grid.county_index.end()) {
        throw InputError("posterior: unknown county '" + idx.region + "'");
      }
      return it->second;
    }
    auto it = grid.district_index.find(idx.region);
    if (it == grid.district_index.end()) {
      throw InputError("posterior: unknown district '" + idx.region + "'");
    }
    return it->second;
  };
  for (const auto& o : obs.populations) {
    if (!(o.count > 0.0) || !(o.sampling_var_log > 0.0)) {
      throw InputError("posterior: invalid population observation");
    }
    pop_obs_.push_back({o.index.age, o.index.time,
                        o.level == RegionLevel::county,
                        resolve(o.index, o.level), std::log(o.count),
                        o.sampling_var_log});
  }
  for (const auto& o : obs.migrations) {
    if (!(o.count > 0.0) || !(o.sampling_var_log > 0.0)) {
      throw InputError("posterior: invalid migration observation");
    }
    mig_obs_.push_back({o.index.age, o.index.time,
                        o.level == RegionLevel::county,
                        resolve(o.index, o.level), o.direction == Direction::in,
                        std::log(o.count), o.sampling_var_log});
  }
}

std::vector<std::string> PosteriorModel::param_names() const {
  const auto& L = layout_;
  std::vector<std::string> names(L.total);
  auto age = [&](std::size_t a) { return std::to_string(ages_[a]); };
  auto year = [&](std::size_t t) { return std::to_string(years_[t]); };
  for (std::size_t c = 0; c < L.C; ++c) {
    names[L.alpha_at(c)] = "alpha[" + counties_[c] + "]";
  }
  for (std::size_t t = 0; t < L.T; ++t) {
    for (std::size_t c = 0; c < L.C; ++c) {
      for (std::size_t k = 0; k < 2; ++k) {
        names[L.delta_at(t, c, k)] = "delta[" + year(t) + "," + counties_[c] +
                                     "," + std::to_string(k + 1) + "]";
      }
    }
  }
  for (std::size_t t = 0; t < L.T; ++t) {
    for (std::size_t c = 0; c < L.C; ++c) {
      names[L.lpsi_at(true, t, c)] =
          "log_psi_in[" + year(t) + "," + counties_[c] + "]";
      names[L.lpsi_at(false, t, c)] =
          "log_psi_out[" + year(t) + "," + counties_[c] + "]";
    }
  }
  for (std::size_t a = 0; a < L.A; ++a) {
    for (std::size_t c = 0; c < L.C; ++c) {
      names[L.lpi_at(true, a, c)] =
          "logit_pi_in[" + age(a) + "," + counties_[c] + "]";
      names[L.lpi_at(false, a, c)] =
          "logit_pi_out[" + age(a) + "," + counties_[c] + "]";
    }
  }
  for (std::size_t a = 0; a + 1 < L.A; ++a) {
    for (std::size_t t = 0; t < L.T; ++t) {
      for (std::size_t c = 0; c < L.C; ++c) {
        names[L.zeta_at(a, t, c)] =
            "zeta[" + age(a) + "," + year(t) + "," + counties_[c] + "]";
      }
    }
  }
  for (std::size_t c = 0; c < L.C; ++c) {
    for (std::size_t t = 0; t < L.T; ++t) {
      names[L.bnd_age0_at(t, c)] =
          "log_eta[" + age(0) + "," + year(t) + "," + counties_[c] + "]";
    }
    for (std::size_t a = 1; a < L.A; ++a) {
      names[L.bnd_time0_at(a, c)] =
          "log_eta[" + age(a) + "," + year(0) + "," + counties_[c] + "]";
    }
  }
  static const char* kSigmaNames[5] = {"log_sigma_alpha", "log_sigma_delta",
                                       "log_sigma_in", "log_sigma_out",
                                       "log_sigma_zeta"};
  for (std::size_t i = 0; i < 5; ++i) names[L.lsigma + i] = kSigmaNames[i];
  for (std::size_t a = 0; a < L.A; ++a) {
    for (std::size_t t = 0; t < L.T; ++t) {
      names[L.lambda_at(a, t)] = "lambda[" + age(a) + "," + year(t) + "]";
      names[L.omega_at(a, t)] = "omega[" + age(a) + "," + year(t) + "]";
    }
  }
  return names;
}

Workspace PosteriorModel::make_workspace() const {
  const auto& L = layout_;
  Workspace ws;
  ws.state.mort.alpha0.assign(L.C, 0.0);
  ws.state.mort.delta = Array3(L.T, L.C, 2);
  ws.state.mig.total_in = Array2(L.T, L.C);
  ws.state.mig.total_out = Array2(L.T, L.C);
  ws.state.mig.share_in_raw = Array2(L.A, L.C);
  ws.state.mig.share_out_raw = Array2(L.A, L.C);
  ws.state.mult.zeta = Array3(L.A - 1, L.T, L.C);
  ws.state.boundary.first_age = Array2(L.T, L.C);
  ws.state.boundary.first_time = Array2(L.A, L.C);
  ws.state.bounds.lambda = Array2(L.A, L.T);
  ws.state.bounds.omega = Array2(L.A, L.T);
  ws.eta = Array3(L.A, L.T, L.C);
  ws.share_in = Array2(L.A, L.C);
  ws.share_out = Array2(L.A, L.C);
  ws.transform = EpsilonTransform(L.A);
  return ws;
}

void PosteriorModel::pack(const ParameterState& state,
                          std::span<double> x) const {
  const auto& L = layout_;
  if (x.size() != L.total) throw InputError("pack: wrong vector length");
  for (std::size_t c = 0; c < L.C; ++c) {
    x[L.alpha_at(c)] = state.mort.alpha0[c];
  }
  for (std::size_t t = 0; t < L.T; ++t) {
    for (std::size_t c = 0; c < L.C; ++c) {
      for (std::size_t k = 0; k < 2; ++k) {
        x[L.delta_at(t, c, k)] = state.mort.delta(t, c, k);
      }
      x[L.lpsi_at(true, t, c)] = std::log(state.mig.total_in(t, c));
      x[L.lpsi_at(false, t, c)] = std::log(state.mig.total_out(t, c));
    }
  }
  for (std::size_t a = 0; a < L.A; ++a) {
    for (std::size_t c = 0; c < L.C; ++c) {
      x[L.lpi_at(true, a, c)] = logit(state.mig.share_in_raw(a, c));
      x[L.lpi_at(false, a, c)] = logit(state.mig.share_out_raw(a, c));
    }
  }
  for (std::size_t a = 0; a + 1 < L.A; ++a) {
    for (std::size_t t = 0; t < L.T; ++t) {
      for (std::size_t c = 0; c < L.C; ++c) {
        x[L.zeta_at(a, t, c)] = state.mult.zeta(a, t, c);
      }
    }
  }
  for (std::size_t c = 0; c < L.C; ++c) {
    for (std::size_t t = 0; t < L.T; ++t) {
      x[L.bnd_age0_at(t, c)] = std::log(state.boundary.first_age(t, c));
    }
    for (std::size_t a = 1; a < L.A; ++a) {
      x[L.bnd_time0_at(a, c)] = std::log(state.boundary.first_time(a, c));
    }
  }
  x[L.lsigma + 0] = std::log(state.variances.sigma_alpha);
  x[L.lsigma + 1] = std::log(state.variances.sigma_delta);
  x[L.lsigma + 2] = std::log(state.variances.sigma_in);
  x[L.lsigma + 3] = std::log(state.variances.sigma_out);
  x[L.lsigma + 4] = std::log(state.variances.sigma_zeta);
  for (std::size_t a = 0; a < L.A; ++a) {
    for (std::size_t t = 0; t < L.T; ++t) {
      x[L.lambda_at(a, t)] = state.bounds.lambda(a, t);
      x[L.omega_at(a, t)] = state.bounds.omega(a, t);
    }
  }
}

void PosteriorModel::unpack_into(std::span<const double> x,
                                 ParameterState& state) const {
  const auto& L = layout_;
  if (x.size() != L.total) throw InputError("unpack: wrong vector length");
  for (std::size_t c = 0; c < L.C; ++c) {
    state.mort.alpha0[c] = x[L.alpha_at(c)];
  }
  for (std::size_t t = 0; t < L.T; ++t) {
    for (std::size_t c = 0; c < L.C; ++c) {
      for (std::size_t k = 0; k < 2; ++k) {
        state.mort.delta(t, c, k) = x[L.delta_at(t, c, k)];
      }
      state.mig.total_in(t, c) = std::exp(x[L.lpsi_at(true, t, c)]);
      state.mig.total_out(t, c) = std::exp(x[L.lpsi_at(false, t, c)]);
    }
  }
  for (std::size_t a = 0; a < L.A; ++a) {
    for (std::size_t c = 0; c < L.C; ++c) {
      state.mig.share_in_raw(a, c) = expit(x[L.lpi_at(true, a, c)]);
      state.mig.share_out_raw(a, c) = expit(x[L.lpi_at(false, a, c)]);
    }
  }
  for (std::size_t a = 0; a + 1 < L.A; ++a) {
    for (std::size_t t = 0; t < L.T; ++t) {
      for (std::size_t c = 0; c < L.C; ++c) {
        state.mult.zeta(a, t, c) = x[L.zeta_at(a, t, c)];
      }
    }
  }
  for (std::size_t c = 0; c < L.C; ++c) {
    for (std::size_t t = 0; t < L.T; ++t) {
      state.boundary.first_age(t, c) = std::exp(x[L.bnd_age0_at(t, c)]);
    }
    state.boundary.first_time(0, c) = state.boundary.first_age(0, c);
    for (std::size_t a = 1; a < L.A; ++a) {
      state.boundary.first_time(a, c) = std::exp(x[L.bnd_time0_at(a, c)]);
    }
  }
  state.variances.sigma_alpha = std::exp(x[L.lsigma + 0]);
  state.variances.sigma_delta = std::exp(x[L.lsigma + 1]);
  state.variances.sigma_in = std::exp(x[L.lsigma + 2]);
  state.variances.sigma_out = std::exp(x[L.lsigma + 3]);
  state.variances.sigma_zeta = std::exp(x[L.lsigma + 4]);
  for (std::size_t a = 0; a < L.A; ++a) {
    for (std::size_t t = 0; t < L.T; ++t) {
      state.bounds.lambda(a, t) = x[L.lambda_at(a, t)];
      state.bounds.omega(a, t) = x[L.omega_at(a, t)];
    }
  }
}

ParameterState PosteriorModel::unpack(std::span<const double> x) const {
  Workspace ws = make_workspace();
  unpack_into(x, ws.state);
  return ws.state;
}

double PosteriorModel::prior_impl(std::span<const double> x) const {
  const auto& L = layout_;
  double lp = 0.0;

  double sigma_alpha = std::exp(x[L.lsigma + 0]);
  double sigma_delta = std::exp(x[L.lsigma + 1]);
  double sigma_in = std::exp(x[L.lsigma + 2]);
  double sigma_out = std::exp(x[L.lsigma + 3]);
  double sigma_zeta = std::exp(x[L.lsigma + 4]);
  for (std::size_t i = 0; i < 5; ++i) {
    lp += half_normal_log_term(x[L.lsigma + i]);
  }

  for (std::size_t c = 0; c < L.C; ++c) {
    lp += normal_logpdf(x[L.alpha_at(c)], 0.0, sigma_alpha);
  }

  // delta: first-order random walk per (county, component).
  for (std::size_t c = 0; c < L.C; ++c) {
    for (std::size_t k = 0; k < 2; ++k) {
      double prev = 0.0;
      for (std::size_t t = 0; t < L.T; ++t) {
        double cur = x[L.delta_at(t, c, k)];
        lp += normal_logpdf(cur, prev, sigma_delta);
        prev = cur;
      }
    }
  }

  // Psi: U(0, y_c) at the first time point (with the log-scale Jacobian),
  // second-order random walk on log Psi afterwards.
  for (int dir = 0; dir < 2; ++dir) {
    bool in = dir == 0;
    double sigma = in ? sigma_in : sigma_out;
    for (std::size_t c = 0; c < L.C; ++c) {
      double l0 = x[L.lpsi_at(in, 0, c)];
      if (l0 >= log_psi_upper_[c]) return kNegInf;
      lp += l0 - log_psi_upper_[c];
      if (L.T >= 2) {
        double l1 = x[L.lpsi_at(in, 1, c)];
        lp += normal_logpdf(l1, l0, sigma);
        double prev2 = l0, prev1 = l1;
        for (std::size_t t = 2; t < L.T; ++t) {
          double cur = x[L.lpsi_at(in, t, c)];
          lp += normal_logpdf(cur, 2.0 * prev1 - prev2, sigma);
          prev2 = prev1;
          prev1 = cur;
        }
      }
    }
  }

  // Pi* ~ U(0,1) on the logit scale.
  for (std::size_t a = 0; a < L.A; ++a) {
    for (std::size_t c = 0; c < L.C; ++c) {
      for (int dir = 0; dir < 2; ++dir) {
        double v = x[L.lpi_at(dir == 0, a, c)];
        lp += -softplus(v) - softplus(-v);
      }
    }
  }

  for (std::size_t a = 0; a + 1 < L.A; ++a) {
    for (std::size_t t = 0; t < L.T; ++t) {
      for (std::size_t c = 0; c < L.C; ++c) {
        lp += normal_logpdf(x[L.zeta_at(a, t, c)], 0.0, sigma_zeta);
      }
    }
  }

  for (std::size_t c = 0; c < L.C; ++c) {
    for (std::size_t t = 0; t < L.T; ++t) {
      lp += normal_logpdf(x[L.bnd_age0_at(t, c)], bnd_mean_age0_(t, c),
                          opt_.boundary_prior_sd);
    }
    for (std::size_t a = 1; a < L.A; ++a) {
      lp += normal_logpdf(x[L.bnd_time0_at(a, c)], bnd_mean_time0_(a, c),
                          opt_.boundary_prior_sd);
    }
  }

  // Bound priors: truncated normals around log(0.9 WPP) and log(1.1 WPP).
  for (std::size_t a = 0; a < L.A; ++a) {
    for (std::size_t t = 0; t < L.T; ++t) {
      double lam = x[L.lambda_at(a, t)];
      double om = x[L.omega_at(a, t)];
      if (lam >= log_wpp_(a, t) || om <= log_wpp_(a, t)) return kNegInf;
      lp += normal_logpdf(lam, lambda_mu_(a, t), opt_.bound_prior_sd) -
            lambda_lognorm_;
      lp += normal_logpdf(om, omega_mu_(a, t), opt_.bound_prior_sd) -
            omega_lognorm_;
    }
  }
  return lp;
}

double PosteriorModel::likelihood_impl(const ParameterState& state,
                                       const Array3& eta,
                                       const Array2& share_in,
                                       const Array2& share_out) const {
  double ll = 0.0;
  for (const auto& o : pop_obs_) {
    double model;
    if (o.county_level) {
      model = eta(o.age, o.time, o.region);
    } else {
      model = 0.0;
      for (std::size_t c = 0; c < layout_.C; ++c) {
        if (county_district_[c] == o.region) model += eta(o.age, o.time, c);
      }
    }
    ll += normal_logpdf(o.log_count, std::log(model), std::sqrt(o.var));
  }
  for (const auto& o : mig_obs_) {
    const Array2& total = o.in ? state.mig.total_in : state.mig.total_out;
    const Array2& share = o.in ? share_in : share_out;
    double model;
    if (o.county_level) {
      model = total(o.time, o.region) * share(o.age, o.region);
    } else {
      model = 0.0;
      for (std::size_t c = 0; c < layout_.C; ++c) {
        if (county_district_[c] == o.region) {
          model += total(o.time, c) * share(o.age, c);
        }
      }
    }
    ll += normal_logpdf(o.log_count, std::log(model), std::sqrt(o.var));
  }
  return ll;
}

double PosteriorModel::constraint_impl(const ParameterState& state,
                                       const Array3& eta,
                                       const Array2& share_in,
                                       const Array2& share_out) const {
  const auto& L = layout_;
  double lc = 0.0;
  for (std::size_t a = 0; a < L.A; ++a) {
    for (std::size_t t = 0; t < L.T; ++t) {
      double sum_eta = 0.0, sum_in = 0.0, sum_out = 0.0;
      for (std::size_t c = 0; c < L.C; ++c) {
        sum_eta += eta(a, t, c);
        sum_in += state.mig.total_in(t, c) * share_in(a, c);
        sum_out += state.mig.total_out(t, c) * share_out(a, c);
      }
      double log_sum = std::log(sum_eta);
      double lam = state.bounds.lambda(a, t);
      double om = state.bounds.omega(a, t);
      double bound = opt_.migration_balance * sum_eta;
      double imbalance = std::fabs(sum_in - sum_out);
      if (opt_.soft_constraints) {
        double s = opt_.soft_scale;
        lc += log_sigmoid((log_sum - lam) / s);
        lc += log_sigmoid((om - log_sum) / s);
        lc += log_sigmoid((bound - imbalance) / bound / s);
      } else {
        if (!(log_sum > lam) || !(log_sum <= om)) return kNegInf;
        if (imbalance > bound) return kNegInf;
      }
    }
  }
  return lc;
}

bool PosteriorModel::compute_eta(std::span<const double> x,
                                 Workspace& ws) const {
  unpack_into(x, ws.state);
  ws.share_in = normalized_shares(ws.state.mig.share_in_raw);
  ws.share_out = normalized_shares(ws.state.mig.share_out_raw);
  ForwardStatus st =
      forward_populate_into(ws.eta, ws.state.boundary, ws.state.mort,
                            ws.state.mig, ws.state.mult, basis_, ws.transform);
  return st.ok;
}

double PosteriorModel::log_prior(std::span<const double> x) const {
  return prior_impl(x);
}

double PosteriorModel::log_likelihood(std::span<const double> x,
                                      Workspace& ws) const {
  if (!compute_eta(x, ws)) return kNegInf;
  return likelihood_impl(ws.state, ws.eta, ws.share_in, ws.share_out);
}

double PosteriorModel::constraint_log_density(std::span<const double> x,
                                              Workspace& ws) const {
  if (!compute_eta(x, ws)) return kNegInf;
  return constraint_impl(ws.state, ws.eta, ws.share_in, ws.share_out);
}

double PosteriorModel::log_posterior(std::span<const double> x,
                                     Workspace& ws) const {
  double lp = prior_impl(x);
  if (lp == kNegInf) return kNegInf;
  if (!compute_eta(x, ws)) return kNegInf;
  double ll = likelihood_impl(ws.state, ws.eta, ws.share_in, ws.share_out);
  if (ll == kNegInf) return kNegInf;
  double lc = constraint_impl(ws.state, ws.eta, ws.share_in, ws.share_out);
  if (lc == kNegInf) return kNegInf;
  return lp + ll + lc;
}

double PosteriorModel::log_prior(const ParameterState& state) const {
  std::vector<double> x(layout_.total);
  pack(state, x);
  return prior_impl(x);
}

double PosteriorModel::log_likelihood(const ParameterState& state) const {
  ForwardResult fwd = forward_populate(state.boundary, state.mort, state.mig,
                                       state.mult, basis_);
  if (!fwd.status.ok) return kNegInf;
  Array2 share_in = normalized_shares(state.mig.share_in_raw);
  Array2 share_out = normalized_shares(state.mig.share_out_raw);
  return likelihood_impl(state, fwd.eta, share_in, share_out);
}

double PosteriorModel::constraint_log_density(
    const ParameterState& state) const {
  ForwardResult fwd = forward_populate(state.boundary, state.mort, state.mig,
                                       state.mult, basis_);
  if (!fwd.status.ok) return kNegInf;
  Array2 share_in = normalized_shares(state.mig.share_in_raw);
  Array2 share_out = normalized_shares(state.mig.share_out_raw);
  return constraint_impl(state, fwd.eta, share_in, share_out);
}

double PosteriorModel::log_posterior(const ParameterState& state) const {
  std::vector<double> x(layout_.total);
  pack(state, x);
  Workspace ws = make_workspace();
  return log_posterior(x, ws);
}

void PosteriorModel::bounds_gibbs(std::span<double> x, Workspace& ws,
                                  std::mt19937_64& rng) const {
  if (!compute_eta(x, ws)) return;  // invalid current state: leave bounds
  const auto& L = layout_;
  for (std::size_t a = 0; a < L.A; ++a) {
    for (std::size_t t = 0; t < L.T; ++t) {
      double log_sum = 0.0;
      double s = 0.0;
      for (std::size_t c = 0; c < L.C; ++c) s += ws.eta(a, t, c);
      log_sum = std::log(s);
      // Full conditionals are the truncated-normal priors further truncated
      // by the band indicator: lambda < min(log WPP, log sum),
      // omega >= max(log WPP strict, log sum).
      double hi = std::min(log_wpp_(a, t), log_sum);
      x[L.lambda_at(a, t)] = truncated_normal_sample(
          lambda_mu_(a, t), opt_.bound_prior_sd,
          -std::numeric_limits<double>::infinity(), hi, rng);
      double lo = std::max(log_wpp_(a, t), log_sum);
      x[L.omega_at(a, t)] = truncated_normal_sample(
          omega_mu_(a, t), opt_.bound_prior_sd, lo,
          std::numeric_limits<double>::infinity(), rng);
    }
  }
}

// Whole-path Metropolis moves for the random-walk parameters (migration
// totals, mortality deviations). The per-county blocks adapt one spherical
// step, which the tight walk priors pin to single-increment size, so the
// level, tilt, and ends of a path only move diffusively. Each path gets
// three path-shaped proposals per sweep, each with its own adapted scale
// (diminishing adaptation, so post-warmup use stays valid).
void PosteriorModel::path_moves(std::span<double> x, Workspace& ws,
                                PathMoveState& st,
                                std::mt19937_64& rng) const {
  const auto& L = layout_;
  const std::size_t T = L.T;
  if (T < 3) return;
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double lp = log_posterior(std::span<const double>(x), ws);
  if (!std::isfinite(lp)) return;
  const std::size_t cap = std::max(T, L.A);
  std::vector<double> w(cap), saved(cap);
  std::vector<std::size_t> idx(cap);
  std::size_t n = 0;  // live length of idx for the current path

  auto move = [&](std::size_t path, std::size_t shape) {
    if (shape == 1 && n < 2) return;
    if (shape == 2 && n < 3) return;
    const double mid = 0.5 * static_cast<double>(n - 1);
    if (shape == 0) {
      for (std::size_t t = 0; t < n; ++t) w[t] = 1.0;
    } else if (shape == 1) {
      for (std::size_t t = 0; t < n; ++t) {
        w[t] = (static_cast<double>(t) - mid) / mid;
      }
    } else {
      // swing one side around an interior pivot; reaches the weakly
      // observed ends without dragging the data-anchored middle along
      const std::size_t p =
          1 + static_cast<std::size_t>(unif(rng) * static_cast<double>(n - 2));
      const bool tail = unif(rng) < 0.5;
      for (std::size_t t = 0; t < n; ++t) {
        if (tail) {
          w[t] = t > p ? static_cast<double>(t - p) /
                             static_cast<double>(n - 1 - p)
                       : 0.0;
        } else {
          w[t] = t < p ? static_cast<double>(p - t) / static_cast<double>(p)
                       : 0.0;
        }
      }
    }
    const double step = std::exp(st.log_scale(path, shape)) * z(rng);
    for (std::size_t t = 0; t < n; ++t) {
      saved[t] = x[idx[t]];
      x[idx[t]] = saved[t] + step * w[t];
    }
    const double lpp = log_posterior(std::span<const double>(x), ws);
    const bool accept = std::log(unif(rng)) < lpp - lp;
    if (accept) {
      lp = lpp;
    } else {
      for (std::size_t t = 0; t < n; ++t) x[idx[t]] = saved[t];
    }
    const double k = (st.count(path, shape) += 1.0);
    st.log_scale(path, shape) +=
        std::pow(k, -0.6) * ((accept ? 1.0 : 0.0) - 0.44);
  };
  auto sweep_path = [&](std::size_t path) {
    for (std::size_t shape = 0; shape < 3; ++shape) move(path, shape);
  };

  std::size_t path = 0;
  for (int dir = 0; dir < 2; ++dir) {
    for (std::size_t c = 0; c < L.C; ++c, ++path) {
      n = T;
      for (std::size_t t = 0; t < T; ++t) {
        idx[t] = L.lpsi_at(dir == 0, t, c);
      }
      sweep_path(path);
    }
  }
  for (std::size_t c = 0; c < L.C; ++c) {
    for (std::size_t k = 0; k < 2; ++k, ++path) {
      n = T;
      for (std::size_t t = 0; t < T; ++t) idx[t] = L.delta_at(t, c, k);
      sweep_path(path);
    }
  }
  // The boundary cells form two more walk-shaped stretches per county (the
  // first age row in t, the first time column in a); the age share logits
  // drift the same way through the normalization.
  for (std::size_t c = 0; c < L.C; ++c, path += 2) {
    n = T;
    for (std::size_t t = 0; t < T; ++t) idx[t] = L.bnd_age0_at(t, c);
    sweep_path(path);
    n = L.A - 1;
    for (std::size_t a = 1; a < L.A; ++a) idx[a - 1] = L.bnd_time0_at(a, c);
    sweep_path(path + 1);
  }
  for (int dir = 0; dir < 2; ++dir) {
    for (std::size_t c = 0; c < L.C; ++c, ++path) {
      n = L.A;
      for (std::size_t a = 0; a < L.A; ++a) {
        idx[a] = L.lpi_at(dir == 0, a, c);
      }
      sweep_path(path);
    }
  }

  // Terminal slice: eta never reads the last time point of the walks (the
  // recursion looks at t-1), so away from a migration observation year the
  // posterior there is the walk extrapolation times the t=T-1 balance.
  // Propose straight from the walk conditionals; the proposal-density
  // correction makes the move exact even when data does sit there.
  {
    std::vector<std::pair<std::size_t, double>> prop;  // index, old value
    double qledger = 0.0;  // log q(old|new) - log q(new|old)
    auto push = [&](std::size_t i, double mean, double sd) {
      const double old = x[i];
      const double neu = mean + sd * z(rng);
      qledger += normal_logpdf(old, mean, sd) - normal_logpdf(neu, mean, sd);
      prop.emplace_back(i, old);
      x[i] = neu;
    };
    const double sig_in = std::exp(x[L.lsigma + 2]);
    const double sig_out = std::exp(x[L.lsigma + 3]);
    const double sig_delta = std::exp(x[L.lsigma + 1]);
    const double sig_zeta = std::exp(x[L.lsigma + 4]);
    for (int dir = 0; dir < 2; ++dir) {
      const bool in = dir == 0;
      for (std::size_t c = 0; c < L.C; ++c) {
        const double m = 2.0 * x[L.lpsi_at(in, T - 2, c)] -
                         x[L.lpsi_at(in, T - 3, c)];
        push(L.lpsi_at(in, T - 1, c), m, in ? sig_in : sig_out);
      }
    }
    for (std::size_t c = 0; c < L.C; ++c) {
      for (std::size_t k = 0; k < 2; ++k) {
        push(L.delta_at(T - 1, c, k), x[L.delta_at(T - 2, c, k)], sig_delta);
      }
    }
    for (std::size_t a = 0; a + 1 < L.A; ++a) {
      for (std::size_t c = 0; c < L.C; ++c) {
        push(L.zeta_at(a, T - 1, c), 0.0, sig_zeta);
      }
    }
    const double lpp = log_posterior(std::span<const double>(x), ws);
    if (std::log(unif(rng)) >= lpp - lp + qledger) {
      for (const auto& [i, old] : prop) x[i] = old;
    }
  }
}

BlockPlan PosteriorModel::default_block_plan() const {
  const auto& L = layout_;
  BlockPlan plan;
  auto county = [&](std::size_t c) { return counties_[c]; };

  for (std::size_t c = 0; c < L.C; ++c) {
    plan.blocks.push_back(
        {"alpha[" + county(c) + "]", {L.alpha_at(c)}, 0.1, 0.44});
  }
  for (std::size_t c = 0; c < L.C; ++c) {
    for (std::size_t k = 0; k < 2; ++k) {
      Block b;
      b.name = "delta[" + county(c) + "," + std::to_string(k + 1) + "]";
      for (std::size_t t = 0; t < L.T; ++t) {
        b.indices.push_back(L.delta_at(t, c, k));
      }
      b.init_scale = 0.05;
      b.target_accept = 0.23;
      plan.blocks.push_back(std::move(b));
    }
  }
  for (int dir = 0; dir < 2; ++dir) {
    bool in = dir == 0;
    for (std::size_t c = 0; c < L.C; ++c) {
      Block b;
      b.name = std::string("psi_") + (in ? "in[" : "out[") + county(c) + "]";
      for (std::size_t t = 0; t < L.T; ++t) {
        b.indices.push_back(L.lpsi_at(in, t, c));
      }
      b.init_scale = 0.1;
      b.target_accept = 0.23;
      plan.blocks.push_back(std::move(b));
    }
  }
  for (int dir = 0; dir < 2; ++dir) {
    bool in = dir == 0;
    for (std::size_t c = 0; c < L.C; ++c) {
      Block b;
      b.name = std::string("pi_") + (in ? "in[" : "out[") + county(c) + "]";
      for (std::size_t a = 0; a < L.A; ++a) {
        b.indices.push_back(L.lpi_at(in, a, c));
      }
      b.init_scale = 0.3;
      b.target_accept = 0.23;
      plan.blocks.push_back(std::move(b));
    }
  }
  for (std::size_t c = 0; c < L.C; ++c) {
    for (std::size_t t = 0; t < L.T; ++t) {
      Block b;
      b.name = "zeta[" + county(c) + "," + std::to_string(years_[t]) + "]";
      for (std::size_t a = 0; a + 1 < L.A; ++a) {
        b.indices.push_back(L.zeta_at(a, t, c));
      }
      b.init_scale = 0.05;
      b.target_accept = L.A > 2 ? 0.23 : 0.44;
      plan.blocks.push_back(std::move(b));
    }
  }
  for (std::size_t c = 0; c < L.C; ++c) {
    Block b;
    b.name = "eta_bnd[" + county(c) + "]";
    for (std::size_t t = 0; t < L.T; ++t) b.indices.push_back(L.bnd_age0_at(t, c));
    for (std::size_t a = 1; a < L.A; ++a) {
      b.indices.push_back(L.bnd_time0_at(a, c));
    }
    b.init_scale = 0.005;
    b.target_accept = 0.23;
    plan.blocks.push_back(std::move(b));
  }
  {
    Block b;
    b.name = "sigmas";
    for (std::size_t i = 0; i < 5; ++i) b.indices.push_back(L.lsigma + i);
    b.init_scale = 0.2;
    b.target_accept = 0.23;
    plan.blocks.push_back(std::move(b));
  }
  if (opt_.soft_constraints) {
    for (std::size_t a = 0; a < L.A; ++a) {
      for (std::size_t t = 0; t < L.T; ++t) {
        std::string cell = std::to_string(ages_[a]) + "," +
                           std::to_string(years_[t]);
        plan.blocks.push_back(
            {"lambda[" + cell + "]", {L.lambda_at(a, t)}, 0.05, 0.44});
        plan.blocks.push_back(
            {"omega[" + cell + "]", {L.omega_at(a, t)}, 0.05, 0.44});
      }
    }
  }
  {
    auto ws = std::make_shared<Workspace>(make_workspace());
    auto st = std::make_shared<PathMoveState>();
    const std::size_t n_paths = L.C * 8;
    st->log_scale = Array2(n_paths, 3);
    st->count = Array2(n_paths, 3);
    for (std::size_t p = 0; p < n_paths; ++p) {
      for (std::size_t s = 0; s < 3; ++s) {
        st->log_scale(p, s) = std::log(0.05);
      }
    }
    plan.hooks.push_back([this, ws, st](std::span<double> x,
                                        std::mt19937_64& rng) {
      path_moves(x, *ws, *st, rng);
    });
  }
  if (!opt_.soft_constraints) {
    // Bounds last so the band indicator is exact at the end of each sweep.
    auto ws = std::make_shared<Workspace>(make_workspace());
    plan.hooks.push_back([this, ws](std::span<double> x,
                                    std::mt19937_64& rng) {
      bounds_gibbs(x, *ws, rng);
    });
  }
  return plan;
}

std::vector<double> PosteriorModel::initial_point(std::mt19937_64& rng) const {
  const auto& L = layout_;
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> x(L.total, 0.0);

  for (std::size_t c = 0; c < L.C; ++c) x[L.alpha_at(c)] = 0.02 * z(rng);
  for (std::size_t t = 0; t < L.T; ++t) {
    for (std::size_t c = 0; c < L.C; ++c) {
      for (std::size_t k = 0; k < 2; ++k) {
        x[L.delta_at(t, c, k)] = 0.01 * z(rng);
      }
    }
  }
  for (int dir = 0; dir < 2; ++dir) {
    for (std::size_t c = 0; c < L.C; ++c) {
      double base = log_psi_upper_[c] + std::log(0.01);
      for (std::size_t t = 0; t < L.T; ++t) {
        x[L.lpsi_at(dir == 0, t, c)] = base + 0.05 * z(rng);
      }
    }
  }
  for (std::size_t a = 0; a < L.A; ++a) {
    for (std::size_t c = 0; c < L.C; ++c) {
      x[L.lpi_at(true, a, c)] = 0.1 * z(rng);
      x[L.lpi_at(false, a, c)] = 0.1 * z(rng);
    }
  }
  for (std::size_t a = 0; a + 1 < L.A; ++a) {
    for (std::size_t t = 0; t < L.T; ++t) {
      for (std::size_t c = 0; c < L.C; ++c) {
        x[L.zeta_at(a, t, c)] = 0.002 * z(rng);
      }
    }
  }
  for (std::size_t c = 0; c < L.C; ++c) {
    for (std::size_t t = 0; t < L.T; ++t) {
      x[L.bnd_age0_at(t, c)] = bnd_mean_age0_(t, c) + 0.005 * z(rng);
    }
    for (std::size_t a = 1; a < L.A; ++a) {
      x[L.bnd_time0_at(a, c)] = bnd_mean_time0_(a, c) + 0.005 * z(rng);
    }
  }
  static const double kSigmaInit[5] = {0.1, 0.05, 0.2, 0.2, 0.05};
  for (std::size_t i = 0; i < 5; ++i) {
    x[L.lsigma + i] = std::log(kSigmaInit[i]) + 0.1 * z(rng);
  }

  // Place the bounds around the implied national sums so the band indicator
  // holds at the start.
  Workspace ws = make_workspace();
  if (compute_eta(x, ws)) {
    for (std::size_t a = 0; a < L.A; ++a) {
      for (std::size_t t = 0; t < L.T; ++t) {
        double s = 0.0;
        for (std::size_t c = 0; c < L.C; ++c) s += ws.eta(a, t, c);
        double log_sum = std::log(s);
        x[L.lambda_at(a, t)] = std::min(lambda_mu_(a, t), log_sum) - 0.02 -
                               std::fabs(0.02 * z(rng));
        x[L.omega_at(a, t)] = std::max(omega_mu_(a, t), log_sum) + 0.02 +
                              std::fabs(0.02 * z(rng));
      }
    }
  }
  return x;
}

}  // namespace ccpop
