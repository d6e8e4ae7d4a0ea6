#pragma once

#include "lfpca/panel.hpp"

#include <cstdint>
#include <optional>

namespace lfpca {

// Y~ = V S^{1/2} U' for the centered p x n panel, obtained from the n x n Gram.
struct IntrinsicDecomposition {
  Matrix U;  // n x r, orthonormal columns
  Vector S;  // r eigenvalues of Y~'Y~ (squared singular values), descending
  double total_gram_trace = 0.0;  // sum over all n eigenvalues before truncation
  std::optional<std::uint64_t> power_seed;  // set when the power backend was used

  Index rank() const { return S.size(); }
  Index n() const { return U.rows(); }
};

inline constexpr double kRankEpsilon = 1e-12;

// G = sum_l (Y~^l)' Y~^l combined in ascending slice order, then (G + G')/2.
Matrix accumulate_gram(const DataPanel& panel, int threads = 1);

// Full symmetric eigendecomposition; eigenvalues below 1e-12 * max(S_1, 1)
// are dropped from the retained rank.
IntrinsicDecomposition eigen_gram(const Matrix& gram);

struct PowerIterationOptions {
  Index oversampling = 4;
  int max_iterations = 300;
  double tolerance = 1e-10;  // on ||G u - s u|| / s
  std::uint64_t seed = 20140101;
};

// Leading `rank` eigenpairs of G by block subspace iteration with
// Rayleigh-Ritz extraction. Throws a numerical error if it does not converge.
IntrinsicDecomposition power_eigen_gram(const Matrix& gram, Index rank,
                                        const PowerIterationOptions& options = {});

struct RankPolicy {
  // Explicit rank; otherwise the variance threshold is used.
  std::optional<Index> rank;
  double threshold = 0.9999;
  // Model orders, when known, floor an explicit rank at min(2 N_X + N_W, #positive)
  // (in general (q+1) N_X + N_W).
  std::optional<Index> model_dimension;
};

Index truncated_rank(const Vector& eigenvalues, const RankPolicy& policy);

IntrinsicDecomposition truncate(const IntrinsicDecomposition& decomposition, Index rank);

// Flips columns of U so that every left singular vector has a nonnegative voxel
// sum, 1'V_k = (Y~'1)'U_k / sqrt(S_k) >= 0. Unlike the eigensolver's arbitrary
// signs this does not depend on the order of the visits. Columns whose voxel
// sum vanishes relative to ||Y~'1|| are left alone.
void orient_left_vectors(IntrinsicDecomposition& decomposition, const Vector& column_sums);

// V = Y~ U S^{-1/2}, restricted to the first `rank` components, as a panel
// computed slice by slice from the centered data.
DataPanel left_vectors(const DataPanel& centered, const IntrinsicDecomposition& decomposition,
                       Index rank);
DataPanel left_vectors(const DataPanel& centered, const IntrinsicDecomposition& decomposition);

}  // namespace lfpca
