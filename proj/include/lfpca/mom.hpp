#pragma once

#include "lfpca/gram_svd.hpp"
#include "lfpca/study_design.hpp"

#include <vector>

namespace lfpca {

struct VisitPair {
  Index subject;
  Index first;   // j1
  Index second;  // j2
};

// Method-of-moments design for the pairwise quadratics Y~_{ij1} Y~_{ij2}'.
// Columns follow subject order, then (j1, j2) row-major within a subject.
struct MomDesign {
  Index q = 0;
  Matrix F;  // ((q+1)^2 + 1) x m
  Matrix H;  // m x ((q+1)^2 + 1); empty until compute_h
  std::vector<VisitPair> pairs;
  std::vector<Index> subject_offsets;  // first pair column of each subject

  Index parameter_count() const { return F.rows(); }
  Index pair_count() const { return F.cols(); }
  // 0-based row of F (column of H) that carries the (k, s) covariance block.
  Index block_row(Index k, Index s) const { return s + k * (q + 1); }
  Index white_row() const { return (q + 1) * (q + 1); }
};

// Row s + k(q+1) of column (i, j1, j2) is Z_{ij1,k} Z_{ij2,s}; the last row is
// the Kronecker delta of (j1, j2).
MomDesign build_f(const StudyDesign& design);

// Intercept/slope form for q = 1: columns (1, T_{ij2}, T_{ij1}, T_{ij1} T_{ij2}, delta).
MomDesign build_f_intercept_slope(const StudyDesign& design);

inline constexpr double kMomConditionLimit = 1e12;

// H = F'(FF')^{-1}. Throws an identifiability error when cond(FF') > 1e12.
Matrix compute_h(const Matrix& F);
void attach_h(MomDesign& mom);

struct IntrinsicCovariances {
  Index q = 0;
  Index r = 0;
  Matrix KX;  // (q+1) r square, r x r blocks K^{ks}
  Matrix KW;  // r x r
  double trace_KX_raw = 0.0;
  double trace_KW_raw = 0.0;

  auto block(Index k, Index s) const { return KX.block(k * r, s * r, r, r); }
};

// K^{ks} = sum over pairs of c_{ij1} c_{ij2}' h^{(k,s)}_{ij1j2} with c = S^{1/2} U_{ij},
// accumulated per subject as C_i W_i C_i' with W_i the J_i x J_i weight block.
IntrinsicCovariances intrinsic_covariances(const IntrinsicDecomposition& decomposition,
                                           const MomDesign& mom, const StudyDesign& design);

// Same estimator from arbitrary per-visit coordinates (r x n), e.g. S^{1/2} U'.
IntrinsicCovariances intrinsic_covariances(const Matrix& coordinates, const MomDesign& mom,
                                           const StudyDesign& design);

}  // namespace lfpca
