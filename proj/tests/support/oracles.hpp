#pragma once

// Dense, p-dimensional reference computations. Everything here works on the
// full voxel-space matrices and shares no code with the streaming/intrinsic
// path beyond Eigen itself.

#include <Eigen/Dense>

#include <algorithm>
#include <vector>

namespace lfpca::oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Per subject: J_i x (q+1) covariates.
using Covariates = std::vector<Mat>;

inline int total_visits(const Covariates& z) {
  int n = 0;
  for (const auto& zi : z) n += static_cast<int>(zi.rows());
  return n;
}

// Design matrix built from the Kronecker product vec(Z_{ij1} (x) Z_{ij2}).
// With column-major vec, entry s + k(q+1) is Z_{ij1,k} Z_{ij2,s}.
inline Mat kron_design(const Covariates& z) {
  const int width = static_cast<int>(z.front().cols());
  int m = 0;
  for (const auto& zi : z) m += static_cast<int>(zi.rows() * zi.rows());
  Mat F(width * width + 1, m);
  int col = 0;
  for (const auto& zi : z) {
    for (int j1 = 0; j1 < zi.rows(); ++j1) {
      for (int j2 = 0; j2 < zi.rows(); ++j2, ++col) {
        // kron(a, b) for column vectors stacks a_k * b.
        const Vec a = zi.row(j1).transpose();
        const Vec b = zi.row(j2).transpose();
        Vec kron(width * width);
        for (int k = 0; k < width; ++k) kron.segment(k * width, width) = a(k) * b;
        F.col(col).head(width * width) = kron;
        F(width * width, col) = j1 == j2 ? 1.0 : 0.0;
      }
    }
  }
  return F;
}

inline int numerical_rank(const Mat& m, double rel = 1e-10) {
  Eigen::JacobiSVD<Mat> svd(m);
  const Vec s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  return static_cast<int>((s.array() > rel * s(0)).count());
}

// Moore-Penrose weights through a complete orthogonal decomposition.
inline Mat pinv_weights(const Mat& F) {
  return F.completeOrthogonalDecomposition().pseudoInverse();
}

struct DenseCovariances {
  Mat KX;  // (q+1)p square
  Mat KW;  // p x p
};

// Voxel-space moment estimators summed directly over visit pairs.
inline DenseCovariances dense_mom(const Mat& centered, const Covariates& z, const Mat& H) {
  const int p = static_cast<int>(centered.rows());
  const int width = static_cast<int>(z.front().cols());
  DenseCovariances out{Mat::Zero(width * p, width * p), Mat::Zero(p, p)};
  int pair = 0;
  int offset = 0;
  for (const auto& zi : z) {
    const int J = static_cast<int>(zi.rows());
    for (int j1 = 0; j1 < J; ++j1) {
      for (int j2 = 0; j2 < J; ++j2, ++pair) {
        const Mat outer = centered.col(offset + j1) * centered.col(offset + j2).transpose();
        for (int k = 0; k < width; ++k)
          for (int s = 0; s < width; ++s)
            out.KX.block(k * p, s * p, p, p) += H(pair, s + k * width) * outer;
        out.KW += H(pair, width * width) * outer;
      }
    }
    offset += J;
  }
  out.KX = 0.5 * (out.KX + out.KX.transpose());
  out.KW = 0.5 * (out.KW + out.KW.transpose());
  return out;
}

struct DenseEigen {
  Vec values;   // descending
  Mat vectors;
};

inline DenseEigen dense_eigen(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> solver(m);
  return {solver.eigenvalues().reverse(), solver.eigenvectors().rowwise().reverse()};
}

inline Mat center_columns(const Mat& y) {
  const Vec mean = y.rowwise().mean();
  return y.colwise() - mean;
}

// Per-subject design B_i = [sum_k Z_{i,k} (x) Phi^{X,k} | I_J (x) Phi^W].
inline Mat subject_design(const std::vector<Mat>& phi_x, const Mat& phi_w, const Mat& zi) {
  const int p = static_cast<int>(phi_w.rows());
  const int J = static_cast<int>(zi.rows());
  const int nx = static_cast<int>(phi_x.front().cols());
  const int nw = static_cast<int>(phi_w.cols());
  Mat B = Mat::Zero(p * J, nx + J * nw);
  for (int j = 0; j < J; ++j) {
    for (int k = 0; k < static_cast<int>(phi_x.size()); ++k) B.block(j * p, 0, p, nx) += zi(j, k) * phi_x[k];
    B.block(j * p, nx + j * nw, p, nw) = phi_w;
  }
  return B;
}

// (B'B)^{-1} B' vec(Y_i) through a QR least-squares solve.
inline Vec dense_blup(const std::vector<Mat>& phi_x, const Mat& phi_w, const Mat& zi,
                      const Mat& yi) {
  const Mat B = subject_design(phi_x, phi_w, zi);
  const Vec y = Eigen::Map<const Vec>(yi.data(), yi.size());
  return B.colPivHouseholderQr().solve(y);
}

}  // namespace lfpca::oracle

namespace lfpca::oracle {

struct DenseFit {
  DenseEigen x;  // eigenpairs of the (q+1)p square K^X
  DenseEigen w;  // eigenpairs of the p x p K^W
  double sigma2 = 0.0;
};

// Full high-dimensional pipeline: center, weights by pseudo-inverse,
// voxel-space moments, dense eigendecomposition.
inline DenseFit dense_fit(const Mat& y, const Covariates& z, int nw) {
  const Mat centered = center_columns(y);
  const Mat H = pinv_weights(kron_design(z));
  const DenseCovariances cov = dense_mom(centered, z, H);
  DenseFit fit{dense_eigen(cov.KX), dense_eigen(cov.KW), 0.0};
  const double head = fit.w.values.head(nw).cwiseMax(0.0).sum();
  fit.sigma2 = std::max((cov.KW.trace() - head) / static_cast<double>(y.rows() - nw), 0.0);
  return fit;
}

}  // namespace lfpca::oracle
