#include "ccpop/math.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace ccpop {

double expit(double x) {
  x = std::clamp(x, -700.0, 700.0);
  double p = 1.0 / (1.0 + std::exp(-x));
  // Keep the open interval so 1 - p never underflows to zero.
  return std::clamp(p, std::numeric_limits<double>::min(),
                    1.0 - std::numeric_limits<double>::epsilon() / 2);
}

double logit(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::domain_error("logit: argument must lie in (0,1)");
  }
  return std::log(p) - std::log1p(-p);
}

double softplus(double x) {
  if (x > 35.0) return x;
  if (x < -35.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double normal_logpdf(double x, double mu, double sd) {
  double z = (x - mu) / sd;
  return kNegHalfLogTwoPi - std::log(sd) - 0.5 * z * z;
}

double std_normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

// Wichura (1988), algorithm AS 241, PPND16. Relative error ~1e-16.
double std_normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw std::domain_error("std_normal_quantile: p outside [0,1]");
  }
  double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    double r = 0.180625 - q * q;
    double num = (((((((2.5090809287301226727e+3 * r +
                        3.3430575583588128105e+4) * r +
                       6.7265770927008700853e+4) * r +
                      4.5921953931549871457e+4) * r +
                     1.3731693765509461125e+4) * r +
                    1.9715909503065514427e+3) * r +
                   1.3314166789178437745e+2) * r +
                  3.3871328727963666080e+0);
    double den = (((((((5.2264952788528545610e+3 * r +
                        2.8729085735721942674e+4) * r +
                       3.9307895800092710610e+4) * r +
                      2.1213794301586595867e+4) * r +
                     5.3941960214247511077e+3) * r +
                    6.8718700749205790830e+2) * r +
                   4.2313330701600911252e+1) * r +
                  1.0);
    return q * num / den;
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    double num = (((((((7.74545014278341407640e-4 * r +
                        2.27238449892691845833e-2) * r +
                       2.41780725177450611770e-1) * r +
                      1.27045825245236838258e+0) * r +
                     3.64784832476320460504e+0) * r +
                    5.76949722146069140550e+0) * r +
                   4.63033784615654529590e+0) * r +
                  1.42343711074968357734e+0);
    double den = (((((((1.05075007164441684324e-9 * r +
                        5.47593808499534494600e-4) * r +
                       1.51986665636164571966e-2) * r +
                      1.48103976427480074590e-1) * r +
                     6.89767334985100004550e-1) * r +
                    1.67638483018380384940e+0) * r +
                   2.05319162663775882187e+0) * r +
                  1.0);
    val = num / den;
  } else {
    r -= 5.0;
    double num = (((((((2.01033439929228813265e-7 * r +
                        2.71155556874348757815e-5) * r +
                       1.24266094738807843860e-3) * r +
                      2.65321895265761230930e-2) * r +
                     2.96560571828504891230e-1) * r +
                    1.78482653991729133580e+0) * r +
                   5.46378491116411436990e+0) * r +
                  6.65790464350110377720e+0);
    double den = (((((((2.04426310338993978564e-15 * r +
                        1.42151175831644588870e-7) * r +
                       1.84631831751005468180e-5) * r +
                      7.86869131145613259100e-4) * r +
                     1.48753612908506148525e-2) * r +
                    1.36929880922735805310e-1) * r +
                   5.99832206555887937690e-1) * r +
                  1.0);
    val = num / den;
  }
  return (q < 0.0) ? -val : val;
}

namespace {

// One-sided truncated draw from the standard normal tail z >= lo (lo > 0),
// Robert (1995) exponential rejection.
double std_normal_tail_sample(double lo, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double alpha = 0.5 * (lo + std::sqrt(lo * lo + 4.0));
  for (;;) {
    double u = unif(rng);
    double z = lo - std::log(1.0 - u) / alpha;
    double rho = std::exp(-0.5 * (z - alpha) * (z - alpha));
    if (unif(rng) <= rho) return z;
  }
}

}  // namespace

double truncated_normal_sample(double mu, double sd, double lo, double hi,
                               std::mt19937_64& rng) {
  if (!(sd > 0.0)) throw std::domain_error("truncated_normal_sample: sd <= 0");
  if (!(lo < hi)) throw std::domain_error("truncated_normal_sample: lo >= hi");
  double a = (lo - mu) / sd;
  double b = (hi - mu) / sd;

  // Inverse-CDF sampling is accurate while the interval keeps enough CDF
  // mass; far tails lose all precision in Fa/Fb, so switch to rejection.
  double fa = std_normal_cdf(a);
  double fb = std_normal_cdf(b);
  if (fb - fa > 1e-10) {
    std::uniform_real_distribution<double> unif(fa, fb);
    double z = std_normal_quantile(unif(rng));
    z = std::clamp(z, a, b);
    return mu + sd * z;
  }

  if (a >= 0.0) {  // right tail
    for (;;) {
      double z = std_normal_tail_sample(a, rng);
      if (z <= b) return mu + sd * z;
    }
  }
  if (b <= 0.0) {  // left tail, mirror
    for (;;) {
      double z = -std_normal_tail_sample(-b, rng);
      if (z >= a) return mu + sd * z;
    }
  }
  // Interval straddles the mode yet has ~no mass: numerically impossible for
  // finite a < 0 < b, but keep a plain rejection loop as a safety net.
  std::normal_distribution<double> norm(0.0, 1.0);
  for (;;) {
    double z = norm(rng);
    if (z >= a && z <= b) return mu + sd * z;
  }
}

double quantile_type7_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  if (sorted.size() == 1) return sorted[0];
  double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  double fl = std::floor(h);
  std::size_t i = static_cast<std::size_t>(fl);
  if (i >= sorted.size() - 1) return sorted[sorted.size() - 1];
  return sorted[i] + (h - fl) * (sorted[i + 1] - sorted[i]);
}

double quantile_type7(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return quantile_type7_sorted(values, p);
}

double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean of empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) throw std::invalid_argument("variance needs >= 2 values");
  double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double median(std::vector<double> values) {
  return quantile_type7(std::move(values), 0.5);
}

double ks_uniform_pvalue(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("KS test on empty sample");
  std::sort(values.begin(), values.end());
  double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    double u = std::clamp(values[i], 0.0, 1.0);
    double hi = (static_cast<double>(i) + 1.0) / n - u;
    double lo = u - static_cast<double>(i) / n;
    d = std::max({d, hi, lo});
  }
  // Kolmogorov asymptotic distribution with Stephens' finite-n adjustment.
  double t = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    double term = 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * t * t);
    sum += term;
    if (std::fabs(term) < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

void solve_tridiag_const(double diag, double off, std::span<const double> rhs,
                         std::span<double> out) {
  std::size_t n = rhs.size();
  if (out.size() != n) throw std::invalid_argument("tridiag size mismatch");
  if (n == 0) return;
  std::vector<double> cp(n), dp(n);
  cp[0] = off / diag;
  dp[0] = rhs[0] / diag;
  for (std::size_t i = 1; i < n; ++i) {
    double m = diag - off * cp[i - 1];
    cp[i] = off / m;
    dp[i] = (rhs[i] - off * dp[i - 1]) / m;
  }
  out[n - 1] = dp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    out[i] = dp[i] - cp[i] * out[i + 1];
  }
}

std::uint64_t fnv1a64(std::span<const char> bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace ccpop
