#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "ccpop/tensor.hpp"

namespace ccpop {

/// Principal-component mortality basis on the logit 5q_x scale: mean
/// schedule Y0, top two right singular vectors Y1, Y2 of the column-centered
/// schedule matrix, and national coefficients B^nat per model year.
struct MortalityBasis {
  std::vector<double> mean_schedule;           // Y0, length A
  std::vector<double> pc1;                     // Y1, unit norm
  std::vector<double> pc2;                     // Y2, unit norm
  std::vector<std::array<double, 2>> national_coeffs;  // B^nat[t][k]
  bool pc1_flipped = false;  // sign normalization applied (sum >= 0)
  bool pc2_flipped = false;
};

/// Centered-matrix principal components: top-2 right singular vectors of an
/// already-centered matrix plus per-row projection coefficients, under the
/// sum(pc) >= 0 sign convention. Exposed for direct testing of the SVD step.
struct CenteredPcs {
  std::vector<double> pc1;
  std::vector<double> pc2;
  std::vector<std::array<double, 2>> row_coeffs;
  bool pc1_flipped = false;
  bool pc2_flipped = false;
};
CenteredPcs centered_pcs(const Array2& centered);

/// Builds the basis from the N x A logit-q matrix: column means become Y0,
/// the centered matrix is decomposed by SVD, and each model year's B^nat row
/// is the projection of the nearest WPP schedule year onto (Y1, Y2).
MortalityBasis build_basis(const Array2& wpp_logit_q,
                           const std::vector<int>& wpp_years,
                           const std::vector<int>& model_years);

/// gamma_a = expit(alpha0 + Y0_a + b1 Y1_a + b2 Y2_a), all in (0,1).
std::vector<double> reconstruct_schedule(const MortalityBasis& basis,
                                         double b1, double b2, double alpha0);

}  // namespace ccpop
