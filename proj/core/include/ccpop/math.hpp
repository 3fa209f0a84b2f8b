#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace ccpop {

inline constexpr double kLogTwoPi = 1.8378770664093454836;
inline constexpr double kNegHalfLogTwoPi = -0.9189385332046727418;

/// Inverse logit with the logit argument saturated at +-700 and the result
/// kept strictly inside (0,1) so survival factors stay positive.
double expit(double x);
double logit(double p);

/// log(1 + exp(x)) without overflow.
double softplus(double x);

double normal_logpdf(double x, double mu, double sd);

/// Standard normal CDF and its inverse (Wichura's PPND16 algorithm).
double std_normal_cdf(double z);
double std_normal_quantile(double p);

/// One draw from N(mu, sd^2) truncated to (lo, hi). Either bound may be
/// infinite. Falls back to tail rejection sampling (Robert 1995) when the
/// interval mass is too small for inverse-CDF sampling.
double truncated_normal_sample(double mu, double sd, double lo, double hi,
                               std::mt19937_64& rng);

/// Type-7 empirical quantile (linear interpolation of order statistics).
/// `sorted` must be ascending.
double quantile_type7_sorted(std::span<const double> sorted, double p);
double quantile_type7(std::vector<double> values, double p);

double mean(std::span<const double> v);
double sample_variance(std::span<const double> v);
double median(std::vector<double> values);

/// Two-sided Kolmogorov-Smirnov test of `values` against Uniform(0,1).
/// Returns the asymptotic p-value with Stephens' small-sample correction.
double ks_uniform_pvalue(std::vector<double> values);

/// Solves the (n x n) tridiagonal system with `diag` on the diagonal and
/// `off` on both off-diagonals (Thomas algorithm); used for small SPD
/// difference-operator systems.
void solve_tridiag_const(double diag, double off, std::span<const double> rhs,
                         std::span<double> out);

/// FNV-1a 64-bit hash, used to fingerprint input files in run manifests.
std::uint64_t fnv1a64(std::span<const char> bytes);

}  // namespace ccpop
