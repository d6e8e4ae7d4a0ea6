#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace lfpca {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
};

SymmetricEigen symmetric_eigen_descending(const Matrix& m);

// Flip each column so that its entry of largest magnitude is positive.
void canonicalize_signs(Matrix& columns);

// (m + m') / 2
Matrix symmetrized(const Matrix& m);

bool all_finite(const Matrix& m);

}  // namespace lfpca
