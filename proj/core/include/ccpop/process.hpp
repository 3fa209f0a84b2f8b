#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ccpop/mortality_basis.hpp"
#include "ccpop/tensor.hpp"

namespace ccpop {

/// County mortality intercepts and random-walk deviations around the
/// national coefficients; beta_{t,c,k} = B^nat_{t,k} + delta_{t,c,k} is
/// always derived, never stored.
struct MortalityParams {
  std::vector<double> alpha0;  // C
  Array3 delta;                // T x C x 2
};

/// Migration totals per (time, county) and raw age shares per county.
/// Shares enter the model only through their per-county normalization.
struct MigrationParams {
  Array2 total_in;       // T x C, Psi^in > 0
  Array2 total_out;      // T x C, Psi^out > 0
  Array2 share_in_raw;   // A x C, Pi^in* in (0,1)
  Array2 share_out_raw;  // A x C, Pi^out* in (0,1)
};

/// Free multiplier coordinates; log eps is derived per (t,c) slice.
struct MultiplierParams {
  Array3 zeta;  // (A-1) x T x C
};

/// Populations on the grid boundary (first age group over all times, first
/// time point over all ages). The shared (a=0,t=0) cell lives in first_age;
/// first_time row 0 mirrors it.
struct BoundaryPopulations {
  Array2 first_age;   // T x C
  Array2 first_time;  // A x C
};

/// Precomputed solver for log eps = D'(DD')^{-1} zeta with D the
/// (A-1) x A first-difference matrix. The output sums to zero and its first
/// differences reproduce zeta.
class EpsilonTransform {
 public:
  explicit EpsilonTransform(std::size_t n_age);
  std::size_t n_age() const { return n_age_; }
  /// zeta has length A-1, out length A.
  void apply(std::span<const double> zeta, std::span<double> out) const;

 private:
  std::size_t n_age_;
  // LU factors of the constant tridiagonal DD' (2 on diag, -1 off).
  std::vector<double> cp_;
};

std::vector<double> epsilon_from_zeta(std::span<const double> zeta);

/// Normalizes raw age shares to sum to 1 within each county column.
Array2 normalized_shares(const Array2& raw);

/// Death probability gamma_{a,t,c} through the basis:
/// expit(alpha0_c + Y0_a + beta_{t,c,1} Y1_a + beta_{t,c,2} Y2_a).
double mortality_gamma(const MortalityBasis& basis, const MortalityParams& mort,
                       std::size_t a, std::size_t t, std::size_t c);

/// phi = (Psi^in Pi^in - Psi^out Pi^out) / eta_prev, with `share_*` already
/// normalized. phi > -1 is not guaranteed; callers treat 1+phi <= 0 as an
/// invalid state.
double net_migration_rate(const Array2& total_in, const Array2& total_out,
                          const Array2& share_in, const Array2& share_out,
                          double eta_prev, std::size_t a, std::size_t t,
                          std::size_t c);

/// One cohort step: eta_prev * (1-gamma) * (1+phi) * exp(eps_log).
double ccp_step(double eta_prev, double gamma, double phi, double eps_log);

struct ForwardStatus {
  bool ok = true;
  std::size_t age = 0, time = 0, county = 0;  // offending cell when !ok
};

struct ForwardResult {
  Array3 eta;  // A x T x C
  ForwardStatus status;
};

/// Fills eta from the boundary cells and the Eq.-2 recursion; gamma, phi and
/// eps are evaluated at the predecessor cell (a-1, t-1, c). Returns the
/// first invalid cell (1+phi <= 0 or nonpositive boundary) without throwing.
ForwardStatus forward_populate_into(Array3& eta,
                                    const BoundaryPopulations& boundary,
                                    const MortalityParams& mort,
                                    const MigrationParams& mig,
                                    const MultiplierParams& mult,
                                    const MortalityBasis& basis,
                                    const EpsilonTransform& eps_transform);

ForwardResult forward_populate(const BoundaryPopulations& boundary,
                               const MortalityParams& mort,
                               const MigrationParams& mig,
                               const MultiplierParams& mult,
                               const MortalityBasis& basis);

}  // namespace ccpop
