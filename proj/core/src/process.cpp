#include "ccpop/process.hpp"

#include <cmath>
#include <stdexcept>

#include "ccpop/math.hpp"

namespace ccpop {

EpsilonTransform::EpsilonTransform(std::size_t n_age) : n_age_(n_age) {
  if (n_age < 2) throw std::invalid_argument("EpsilonTransform: A < 2");
  // Forward-elimination coefficients for tridiag(-1, 2, -1) of size A-1.
  std::size_t n = n_age - 1;
  cp_.resize(n);
  cp_[0] = -0.5;
  for (std::size_t i = 1; i < n; ++i) {
    cp_[i] = -1.0 / (2.0 + cp_[i - 1]);
  }
}

void EpsilonTransform::apply(std::span<const double> zeta,
                             std::span<double> out) const {
  const std::size_t n = n_age_ - 1;
  if (zeta.size() != n || out.size() != n_age_) {
    throw std::invalid_argument("EpsilonTransform: size mismatch");
  }
  // Solve (DD') x = zeta, then expand log eps = D' x.
  std::vector<double> x(n);
  x[0] = zeta[0] / 2.0;
  for (std::size_t i = 1; i < n; ++i) {
    x[i] = (zeta[i] + x[i - 1]) / (2.0 + cp_[i - 1]);
  }
  for (std::size_t i = n - 1; i-- > 0;) {
    x[i] -= cp_[i] * x[i + 1];
  }
  out[0] = -x[0];
  for (std::size_t a = 1; a < n; ++a) out[a] = x[a - 1] - x[a];
  out[n] = x[n - 1];
  // The exact sum is zero; remove the accumulated rounding so downstream
  // sum-to-zero checks hold tightly. Differences shift by < 1 ulp.
  double m = 0.0;
  for (double v : out) m += v;
  m /= static_cast<double>(n_age_);
  for (auto& v : out) v -= m;
}

std::vector<double> epsilon_from_zeta(std::span<const double> zeta) {
  EpsilonTransform transform(zeta.size() + 1);
  std::vector<double> out(zeta.size() + 1);
  transform.apply(zeta, out);
  return out;
}

Array2 normalized_shares(const Array2& raw) {
  Array2 out(raw.rows(), raw.cols());
  for (std::size_t c = 0; c < raw.cols(); ++c) {
    double sum = 0.0;
    for (std::size_t a = 0; a < raw.rows(); ++a) sum += raw(a, c);
    for (std::size_t a = 0; a < raw.rows(); ++a) out(a, c) = raw(a, c) / sum;
  }
  return out;
}

double mortality_gamma(const MortalityBasis& basis,
                       const MortalityParams& mort, std::size_t a,
                       std::size_t t, std::size_t c) {
  double b1 = basis.national_coeffs[t][0] + mort.delta(t, c, 0);
  double b2 = basis.national_coeffs[t][1] + mort.delta(t, c, 1);
  return expit(mort.alpha0[c] + basis.mean_schedule[a] + b1 * basis.pc1[a] +
               b2 * basis.pc2[a]);
}

double net_migration_rate(const Array2& total_in, const Array2& total_out,
                          const Array2& share_in, const Array2& share_out,
                          double eta_prev, std::size_t a, std::size_t t,
                          std::size_t c) {
  return (total_in(t, c) * share_in(a, c) -
          total_out(t, c) * share_out(a, c)) /
         eta_prev;
}

double ccp_step(double eta_prev, double gamma, double phi, double eps_log) {
  return eta_prev * (1.0 - gamma) * (1.0 + phi) * std::exp(eps_log);
}

ForwardStatus forward_populate_into(Array3& eta,
                                    const BoundaryPopulations& boundary,
                                    const MortalityParams& mort,
                                    const MigrationParams& mig,
                                    const MultiplierParams& mult,
                                    const MortalityBasis& basis,
                                    const EpsilonTransform& eps_transform) {
  const std::size_t A = eta.dim0();
  const std::size_t T = eta.dim1();
  const std::size_t C = eta.dim2();

  Array2 share_in = normalized_shares(mig.share_in_raw);
  Array2 share_out = normalized_shares(mig.share_out_raw);

  // log eps slices are consumed at predecessor times 0..T-2 only.
  Array3 log_eps(A, T > 0 ? T - 1 : 0, C);
  std::vector<double> zeta_slice(A - 1), eps_slice(A);
  for (std::size_t t = 0; t + 1 < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t a = 0; a + 1 < A; ++a) {
        zeta_slice[a] = mult.zeta(a, t, c);
      }
      eps_transform.apply(zeta_slice, eps_slice);
      for (std::size_t a = 0; a < A; ++a) log_eps(a, t, c) = eps_slice[a];
    }
  }

  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < T; ++t) {
      double v = boundary.first_age(t, c);
      if (!(v > 0.0)) return {false, 0, t, c};
      eta(0, t, c) = v;
    }
    for (std::size_t a = 1; a < A; ++a) {
      double v = boundary.first_time(a, c);
      if (!(v > 0.0)) return {false, a, 0, c};
      eta(a, 0, c) = v;
    }
    for (std::size_t t = 1; t < T; ++t) {
      for (std::size_t a = 1; a < A; ++a) {
        double prev = eta(a - 1, t - 1, c);
        double gamma = mortality_gamma(basis, mort, a - 1, t - 1, c);
        double phi = net_migration_rate(mig.total_in, mig.total_out, share_in,
                                        share_out, prev, a - 1, t - 1, c);
        if (!(1.0 + phi > 0.0)) return {false, a, t, c};
        double next = ccp_step(prev, gamma, phi, log_eps(a - 1, t - 1, c));
        if (!(next > 0.0) || !std::isfinite(next)) return {false, a, t, c};
        eta(a, t, c) = next;
      }
    }
  }
  return {};
}

ForwardResult forward_populate(const BoundaryPopulations& boundary,
                               const MortalityParams& mort,
                               const MigrationParams& mig,
                               const MultiplierParams& mult,
                               const MortalityBasis& basis) {
  const std::size_t T = boundary.first_age.rows();
  const std::size_t C = boundary.first_age.cols();
  const std::size_t A = boundary.first_time.rows();
  ForwardResult result;
  result.eta = Array3(A, T, C);
  EpsilonTransform transform(A);
  result.status = forward_populate_into(result.eta, boundary, mort, mig, mult,
                                        basis, transform);
  return result;
}

}  // namespace ccpop
