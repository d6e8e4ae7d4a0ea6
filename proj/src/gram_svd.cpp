#include "lfpca/gram_svd.hpp"

#include "lfpca/error.hpp"
#include "lfpca/parallel.hpp"
#include "lfpca/rng.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace lfpca {

Matrix accumulate_gram(const DataPanel& panel, int threads) {
  require(panel.centered(), ErrorKind::validation, "Gram accumulation needs a centered panel");
  const Index n = panel.n();
  const auto& layout = panel.layout();
  const std::size_t L = static_cast<std::size_t>(panel.slice_count());
  const std::size_t wave = static_cast<std::size_t>(std::max(1, threads));
  std::vector<Matrix> partial(std::min(L, wave));
  Matrix gram = Matrix::Zero(n, n);
  ordered_parallel_for(
      L, threads,
      [&](std::size_t l) {
        const Matrix slice = panel.slice(static_cast<Index>(l));
        require(slice.rows() == layout.slice_rows(static_cast<Index>(l)) && slice.cols() == n,
                ErrorKind::validation,
                "slice " + std::to_string(l) + " has the wrong dimensions");
        Matrix& g = partial[l % wave];
        g.setZero(n, n);
        // Eigen's rank update divides by the depth, so empty slices are skipped
        if (slice.rows() > 0) g.selfadjointView<Eigen::Lower>().rankUpdate(slice.transpose());
      },
      [&](std::size_t l) { gram.triangularView<Eigen::Lower>() += partial[l % wave]; });
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  require(gram.allFinite(), ErrorKind::numerical, "Gram matrix has non-finite entries");
  return symmetrized(gram);
}

IntrinsicDecomposition eigen_gram(const Matrix& gram) {
  require(gram.allFinite(), ErrorKind::numerical, "Gram matrix has non-finite entries");
  require(gram.rows() == gram.cols(), ErrorKind::validation, "Gram matrix is not square");
  const SymmetricEigen eig = symmetric_eigen_descending(gram);
  IntrinsicDecomposition out;
  out.total_gram_trace = eig.values.sum();
  const double top = eig.values.size() > 0 ? eig.values(0) : 0.0;
  const double cutoff = kRankEpsilon * std::max(top, 1.0);
  Index rank = 0;
  while (rank < eig.values.size() && eig.values(rank) >= cutoff) ++rank;
  out.S = eig.values.head(rank);
  out.U = eig.vectors.leftCols(rank);
  return out;
}

IntrinsicDecomposition power_eigen_gram(const Matrix& gram, Index rank,
                                        const PowerIterationOptions& options) {
  require(gram.allFinite(), ErrorKind::numerical, "Gram matrix has non-finite entries");
  const Index n = gram.rows();
  require(rank >= 1 && rank <= n, ErrorKind::validation,
          "power iteration rank must lie in [1, n]");
  const Index block = std::min(n, rank + options.oversampling);

  Rng rng(options.seed);
  Matrix q(n, block);
  for (Index j = 0; j < block; ++j)
    for (Index i = 0; i < n; ++i) q(i, j) = rng.normal();

  auto orthonormalize = [&](const Matrix& m) {
    Eigen::HouseholderQR<Matrix> qr(m);
    return Matrix(qr.householderQ() * Matrix::Identity(n, block));
  };
  q = orthonormalize(q);

  const double scale = std::max(gram.diagonal().cwiseAbs().maxCoeff(), 1.0);
  SymmetricEigen ritz;
  Matrix vectors;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    q = orthonormalize(gram * q);
    const Matrix gq = gram * q;
    ritz = symmetric_eigen_descending(symmetrized(q.transpose() * gq));
    vectors = q * ritz.vectors;
    const Matrix residual = gq * ritz.vectors - vectors * ritz.values.asDiagonal();
    bool converged = true;
    for (Index k = 0; k < rank && converged; ++k) {
      const double s = ritz.values(k);
      if (s <= kRankEpsilon * scale) continue;  // null direction
      converged = residual.col(k).norm() / s <= options.tolerance;
    }
    if (converged) {
      IntrinsicDecomposition out;
      out.total_gram_trace = gram.trace();
      out.power_seed = options.seed;
      const double cutoff = kRankEpsilon * std::max(ritz.values(0), 1.0);
      Index kept = 0;
      while (kept < rank && ritz.values(kept) >= cutoff) ++kept;
      out.S = ritz.values.head(kept);
      out.U = vectors.leftCols(kept);
      return out;
    }
  }
  fail(ErrorKind::numerical, "power iteration did not converge in " +
                                 std::to_string(options.max_iterations) +
                                 " iterations; the requested rank likely ends inside a cluster of "
                                 "eigenvalues (raise the oversampling or use the dense backend)");
}

void orient_left_vectors(IntrinsicDecomposition& decomposition, const Vector& column_sums) {
  require(column_sums.size() == decomposition.n(), ErrorKind::validation,
          "column sums do not match the decomposition");
  const double scale = column_sums.norm();
  for (Index k = 0; k < decomposition.rank(); ++k) {
    const double d = column_sums.dot(decomposition.U.col(k));
    if (d < 0.0 && std::abs(d) > 1e-10 * scale) decomposition.U.col(k) *= -1.0;
  }
}

Index truncated_rank(const Vector& eigenvalues, const RankPolicy& policy) {
  const double top = eigenvalues.size() > 0 ? std::max(eigenvalues(0), 0.0) : 0.0;
  const double cutoff = kRankEpsilon * std::max(top, 1.0);
  Index positive = 0;
  double total = 0.0;
  for (Index k = 0; k < eigenvalues.size(); ++k) {
    if (eigenvalues(k) >= cutoff) {
      ++positive;
      total += eigenvalues(k);
    }
  }
  if (policy.rank) {
    Index r = *policy.rank;
    require(r >= 1, ErrorKind::validation, "rank must be at least 1");
    require(r <= positive, ErrorKind::validation,
            "requested rank " + std::to_string(r) + " exceeds the " + std::to_string(positive) +
                " positive eigenvalues");
    if (policy.model_dimension) r = std::max(r, std::min(*policy.model_dimension, positive));
    return r;
  }
  require(policy.threshold > 0.0 && policy.threshold <= 1.0, ErrorKind::validation,
          "variance threshold must lie in (0, 1]");
  double cumulative = 0.0;
  for (Index k = 0; k < positive; ++k) {
    cumulative += eigenvalues(k);
    if (cumulative >= policy.threshold * total) return k + 1;
  }
  return positive;
}

IntrinsicDecomposition truncate(const IntrinsicDecomposition& decomposition, Index rank) {
  require(rank >= 0 && rank <= decomposition.rank(), ErrorKind::validation,
          "cannot truncate to rank " + std::to_string(rank) + " beyond the retained rank " +
              std::to_string(decomposition.rank()));
  IntrinsicDecomposition out = decomposition;
  out.S = decomposition.S.head(rank);
  out.U = decomposition.U.leftCols(rank);
  return out;
}

DataPanel left_vectors(const DataPanel& centered, const IntrinsicDecomposition& decomposition,
                       Index rank) {
  require(centered.centered(), ErrorKind::validation, "left vectors need a centered panel");
  require(rank <= decomposition.rank(), ErrorKind::validation,
          "requested " + std::to_string(rank) + " left vectors beyond the retained rank " +
              std::to_string(decomposition.rank()));
  require(centered.n() == decomposition.n(), ErrorKind::validation,
          "decomposition does not match the panel columns");
  const Vector inv_sqrt = decomposition.S.head(rank).cwiseSqrt().cwiseInverse();
  return multiply_right(centered, decomposition.U.leftCols(rank) * inv_sqrt.asDiagonal());
}

DataPanel left_vectors(const DataPanel& centered, const IntrinsicDecomposition& decomposition) {
  return left_vectors(centered, decomposition, decomposition.rank());
}

}  // namespace lfpca
