#include "lfpca/linalg.hpp"

#include "lfpca/error.hpp"

#include <Eigen/Eigenvalues>

namespace lfpca {

SymmetricEigen symmetric_eigen_descending(const Matrix& m) {
  require(m.rows() == m.cols(), ErrorKind::numerical, "eigendecomposition of a non-square matrix");
  require(all_finite(m), ErrorKind::numerical, "matrix has non-finite entries");
  SymmetricEigen out;
  if (m.rows() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  require(solver.info() == Eigen::Success, ErrorKind::numerical,
          "symmetric eigendecomposition failed to converge");
  // Eigen returns ascending order.
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

void canonicalize_signs(Matrix& columns) {
  for (Index c = 0; c < columns.cols(); ++c) {
    Index arg = 0;
    columns.col(c).cwiseAbs().maxCoeff(&arg);
    if (columns(arg, c) < 0) columns.col(c) *= -1.0;
  }
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace lfpca
