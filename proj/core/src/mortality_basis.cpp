#include "ccpop/mortality_basis.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <cstdlib>

#include "ccpop/errors.hpp"
#include "ccpop/math.hpp"

namespace ccpop {

CenteredPcs centered_pcs(const Array2& centered) {
  const auto N = static_cast<Eigen::Index>(centered.rows());
  const auto A = static_cast<Eigen::Index>(centered.cols());
  Eigen::MatrixXd X(N, A);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < A; ++j) {
      X(i, j) = centered(static_cast<std::size_t>(i),
                         static_cast<std::size_t>(j));
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinV);
  double s0 = svd.singularValues()(0);
  double s1 = svd.singularValues()(1);

  CenteredPcs out;
  if (s0 < 1e-12) {
    // Zero matrix: any orthonormal pair represents it with zero
    // coefficients; use the leading coordinate axes for determinism.
    out.pc1.assign(static_cast<std::size_t>(A), 0.0);
    out.pc1[0] = 1.0;
    out.pc2.assign(static_cast<std::size_t>(A), 0.0);
    out.pc2[1] = 1.0;
    out.row_coeffs.assign(static_cast<std::size_t>(N), {0.0, 0.0});
    return out;
  }
  if (s1 < 1e-12 * s0) {
    throw InputError("mortality basis: centered schedule matrix has rank < 2");
  }
  Eigen::VectorXd v1 = svd.matrixV().col(0);
  Eigen::VectorXd v2 = svd.matrixV().col(1);
  // Singular vectors are sign-ambiguous; fix sum(v) >= 0 and flip the
  // coefficients with the vector so reconstructions are unchanged.
  if (v1.sum() < 0.0) {
    v1 = -v1;
    out.pc1_flipped = true;
  }
  if (v2.sum() < 0.0) {
    v2 = -v2;
    out.pc2_flipped = true;
  }
  out.pc1.assign(v1.data(), v1.data() + A);
  out.pc2.assign(v2.data(), v2.data() + A);
  out.row_coeffs.resize(static_cast<std::size_t>(N));
  for (Eigen::Index i = 0; i < N; ++i) {
    out.row_coeffs[static_cast<std::size_t>(i)] = {X.row(i).dot(v1),
                                                   X.row(i).dot(v2)};
  }
  return out;
}

MortalityBasis build_basis(const Array2& wpp_logit_q,
                           const std::vector<int>& wpp_years,
                           const std::vector<int>& model_years) {
  const std::size_t N = wpp_logit_q.rows();
  const std::size_t A = wpp_logit_q.cols();
  if (N < 3) {
    throw InputError("mortality basis: need at least 3 schedules, got " +
                     std::to_string(N));
  }
  if (A < 2) throw InputError("mortality basis: need at least 2 age groups");
  if (wpp_years.size() != N) {
    throw InputError("mortality basis: schedule year count mismatch");
  }

  MortalityBasis basis;
  basis.mean_schedule.assign(A, 0.0);
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t i = 0; i < N; ++i) {
      basis.mean_schedule[a] += wpp_logit_q(i, a);
    }
    basis.mean_schedule[a] /= static_cast<double>(N);
  }
  Array2 centered(N, A);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t a = 0; a < A; ++a) {
      centered(i, a) = wpp_logit_q(i, a) - basis.mean_schedule[a];
    }
  }

  CenteredPcs pcs = centered_pcs(centered);
  basis.pc1 = std::move(pcs.pc1);
  basis.pc2 = std::move(pcs.pc2);
  basis.pc1_flipped = pcs.pc1_flipped;
  basis.pc2_flipped = pcs.pc2_flipped;

  // B^nat at each model year: projection of the nearest WPP schedule year.
  basis.national_coeffs.resize(model_years.size());
  for (std::size_t t = 0; t < model_years.size(); ++t) {
    std::size_t best = 0;
    int best_dist = std::abs(model_years[t] - wpp_years[0]);
    for (std::size_t i = 1; i < N; ++i) {
      int dist = std::abs(model_years[t] - wpp_years[i]);
      if (dist < best_dist) {
        best = i;
        best_dist = dist;
      }
    }
    basis.national_coeffs[t] = pcs.row_coeffs[best];
  }
  return basis;
}

std::vector<double> reconstruct_schedule(const MortalityBasis& basis,
                                         double b1, double b2, double alpha0) {
  std::vector<double> gamma(basis.mean_schedule.size());
  for (std::size_t a = 0; a < gamma.size(); ++a) {
    gamma[a] = expit(alpha0 + basis.mean_schedule[a] + b1 * basis.pc1[a] +
                     b2 * basis.pc2[a]);
  }
  return gamma;
}

}  // namespace ccpop
