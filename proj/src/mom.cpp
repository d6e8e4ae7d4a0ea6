#include "lfpca/mom.hpp"

#include "lfpca/error.hpp"

#include <Eigen/Cholesky>

namespace lfpca {
namespace {

MomDesign empty_design(const StudyDesign& design) {
  MomDesign mom;
  mom.q = design.q();
  const Index width = design.covariate_width();
  mom.F.resize(width * width + 1, design.pair_count());
  mom.pairs.reserve(static_cast<std::size_t>(design.pair_count()));
  mom.subject_offsets.reserve(static_cast<std::size_t>(design.subject_count()));
  return mom;
}

}  // namespace

MomDesign build_f(const StudyDesign& design) {
  MomDesign mom = empty_design(design);
  const Index width = design.covariate_width();
  Index col = 0;
  for (Index i = 0; i < design.subject_count(); ++i) {
    const Matrix& z = design.subject(i).covariates;
    mom.subject_offsets.push_back(col);
    for (Index j1 = 0; j1 < z.rows(); ++j1) {
      for (Index j2 = 0; j2 < z.rows(); ++j2, ++col) {
        for (Index k = 0; k < width; ++k)
          for (Index s = 0; s < width; ++s) mom.F(mom.block_row(k, s), col) = z(j1, k) * z(j2, s);
        mom.F(mom.white_row(), col) = j1 == j2 ? 1.0 : 0.0;
        mom.pairs.push_back({i, j1, j2});
      }
    }
  }
  return mom;
}

MomDesign build_f_intercept_slope(const StudyDesign& design) {
  require(design.q() == 1, ErrorKind::validation,
          "the intercept/slope model needs exactly one time covariate");
  MomDesign mom = empty_design(design);
  Index col = 0;
  for (Index i = 0; i < design.subject_count(); ++i) {
    const Matrix& z = design.subject(i).covariates;
    mom.subject_offsets.push_back(col);
    for (Index j1 = 0; j1 < z.rows(); ++j1) {
      for (Index j2 = 0; j2 < z.rows(); ++j2, ++col) {
        const double t1 = z(j1, 1);
        const double t2 = z(j2, 1);
        mom.F.col(col) << 1.0, t2, t1, t1 * t2, (j1 == j2 ? 1.0 : 0.0);
        mom.pairs.push_back({i, j1, j2});
      }
    }
  }
  return mom;
}

Matrix compute_h(const Matrix& F) {
  const Matrix ffT = symmetrized(F * F.transpose());
  const SymmetricEigen eig = symmetric_eigen_descending(ffT);
  const double top = eig.values.size() ? eig.values(0) : 0.0;
  const double bottom = eig.values.size() ? eig.values(eig.values.size() - 1) : 0.0;
  if (!(top > 0.0) || !(bottom > 0.0) || top / bottom > kMomConditionLimit) {
    fail(ErrorKind::identifiability,
         "moment design matrix F F' is singular or ill-conditioned (cond > 1e12); "
         "the study design fails validate_design");
  }
  Eigen::LLT<Matrix> llt(ffT);
  require(llt.info() == Eigen::Success, ErrorKind::identifiability,
          "moment design matrix F F' is not positive definite");
  return llt.solve(F).transpose();
}

void attach_h(MomDesign& mom) { mom.H = compute_h(mom.F); }

IntrinsicCovariances intrinsic_covariances(const Matrix& coordinates, const MomDesign& mom,
                                           const StudyDesign& design) {
  require(mom.H.rows() == mom.pair_count() && mom.H.cols() == mom.parameter_count(),
          ErrorKind::validation, "moment weights H have not been computed");
  require(mom.q == design.q() && mom.pair_count() == design.pair_count(),
          ErrorKind::validation, "moment design does not match the study design");
  require(coordinates.cols() == design.total_visits(), ErrorKind::validation,
          "intrinsic coordinates do not match the design's visit count");

  const Index r = coordinates.rows();
  const Index width = design.covariate_width();
  IntrinsicCovariances cov;
  cov.q = design.q();
  cov.r = r;
  cov.KX = Matrix::Zero(width * r, width * r);
  cov.KW = Matrix::Zero(r, r);

  for (Index i = 0; i < design.subject_count(); ++i) {
    const Index J = design.visit_count(i);
    const auto c = coordinates.middleCols(design.column_offset(i), J);
    const Index base = mom.subject_offsets[i];
    auto weights = [&](Index row) {
      Matrix w(J, J);
      for (Index j1 = 0; j1 < J; ++j1)
        for (Index j2 = 0; j2 < J; ++j2) w(j1, j2) = mom.H(base + j1 * J + j2, row);
      return w;
    };
    for (Index k = 0; k < width; ++k) {
      for (Index s = 0; s < width; ++s) {
        cov.KX.block(k * r, s * r, r, r).noalias() += c * weights(mom.block_row(k, s)) * c.transpose();
      }
    }
    cov.KW.noalias() += c * weights(mom.white_row()) * c.transpose();
  }
  cov.trace_KX_raw = cov.KX.trace();
  cov.trace_KW_raw = cov.KW.trace();
  cov.KX = symmetrized(cov.KX);
  cov.KW = symmetrized(cov.KW);
  return cov;
}

IntrinsicCovariances intrinsic_covariances(const IntrinsicDecomposition& decomposition,
                                           const MomDesign& mom, const StudyDesign& design) {
  const Matrix coordinates =
      decomposition.S.cwiseSqrt().asDiagonal() * decomposition.U.transpose();
  return intrinsic_covariances(coordinates, mom, design);
}

}  // namespace lfpca
