#include "lfpca/blup.hpp"

#include "lfpca/error.hpp"
#include "lfpca/parallel.hpp"

#include <Eigen/Cholesky>

#include <algorithm>

namespace lfpca {

bool ScorePanel::any_rank_deficient() const {
  return std::any_of(subjects.begin(), subjects.end(),
                     [](const SubjectScores& s) { return s.rank_deficient; });
}

namespace {

Matrix stacked_coefficients(const FittedModel& model) {
  const Index width = model.q + 1;
  Matrix all(model.r, width * model.nx() + model.nw());
  for (Index k = 0; k < width; ++k) all.middleCols(k * model.nx(), model.nx()) = model.a_x_block(k);
  all.rightCols(model.nw()) = model.A_W;
  return all;
}

}  // namespace

ScoreSystem intrinsic_score_system(const FittedModel& model,
                                   const IntrinsicDecomposition& decomposition) {
  require(decomposition.rank() == model.r, ErrorKind::validation,
          "decomposition rank " + std::to_string(decomposition.rank()) +
              " does not match the fitted model rank " + std::to_string(model.r));
  const Matrix all = stacked_coefficients(model);
  ScoreSystem system{model.q, model.nx(), model.nw(), all.transpose() * all, {}};
  system.projections =
      all.transpose() * decomposition.S.cwiseSqrt().asDiagonal() * decomposition.U.transpose();
  return system;
}

ScoreSystem lifted_score_system(const FittedModel& model, const DataPanel& centered, int threads) {
  require(model.has_basis(), ErrorKind::validation, "model has no lifted basis");
  require(centered.centered(), ErrorKind::validation, "scores need a centered panel");
  require(centered.p() == model.phi_w->p(), ErrorKind::validation,
          "panel has p = " + std::to_string(centered.p()) + " but the model basis has p = " +
              std::to_string(model.phi_w->p()));
  const Index width = model.q + 1;
  const Index nx = model.nx();
  const Index dim = width * nx + model.nw();
  const SliceLayout& layout = centered.layout();
  std::vector<DataPanel> blocks;
  for (const auto& phi : model.phi_x) blocks.push_back(phi.with_layout(layout));
  const DataPanel phi_w = model.phi_w->with_layout(layout);

  ScoreSystem system{model.q, nx, model.nw(), Matrix::Zero(dim, dim),
                     Matrix::Zero(dim, centered.n())};
  const std::size_t L = static_cast<std::size_t>(layout.slice_count());
  const std::size_t wave = static_cast<std::size_t>(std::max(1, threads));
  std::vector<std::pair<Matrix, Matrix>> partial(std::min(L, wave));
  ordered_parallel_for(
      L, threads,
      [&](std::size_t l) {
        const Index li = static_cast<Index>(l);
        Matrix basis(layout.slice_rows(li), dim);
        for (Index k = 0; k < width; ++k) basis.middleCols(k * nx, nx) = blocks[k].slice(li);
        basis.rightCols(model.nw()) = phi_w.slice(li);
        partial[l % wave] = {basis.transpose() * basis, basis.transpose() * centered.slice(li)};
      },
      [&](std::size_t l) {
        system.gram += partial[l % wave].first;
        system.projections += partial[l % wave].second;
      });
  system.gram = symmetrized(system.gram);
  return system;
}

ScorePanel solve_scores(const ScoreSystem& system, const StudyDesign& design) {
  require(system.q == design.q(), ErrorKind::validation,
          "model and design disagree on the number of covariates");
  require(system.projections.cols() == design.total_visits(), ErrorKind::validation,
          "projections do not match the design's visit count");
  const Index width = system.q + 1;
  const Index nx = system.nx;
  const Index nw = system.nw;
  const Index w0 = width * nx;
  auto gx = [&](Index k, Index s) { return system.gram.block(k * nx, s * nx, nx, nx); };
  auto gxw = [&](Index k) { return system.gram.block(k * nx, w0, nx, nw); };
  const Matrix gww = system.gram.block(w0, w0, nw, nw);

  ScorePanel out;
  out.subjects.reserve(static_cast<std::size_t>(design.subject_count()));
  for (Index i = 0; i < design.subject_count(); ++i) {
    const Subject& subject = design.subject(i);
    const Matrix& z = subject.covariates;
    const Index J = subject.visit_count();
    const Index dim = nx + J * nw;
    Matrix normal = Matrix::Zero(dim, dim);
    Vector rhs = Vector::Zero(dim);
    for (Index j = 0; j < J; ++j) {
      const Index col = design.column(i, j);
      for (Index k = 0; k < width; ++k) {
        for (Index s = 0; s < width; ++s) normal.topLeftCorner(nx, nx) += z(j, k) * z(j, s) * gx(k, s);
        normal.block(0, nx + j * nw, nx, nw) += z(j, k) * gxw(k);
        rhs.head(nx) += z(j, k) * system.projections.col(col).segment(k * nx, nx);
      }
      normal.block(nx + j * nw, nx + j * nw, nw, nw) = gww;
      rhs.segment(nx + j * nw, nw) = system.projections.col(col).tail(nw);
    }
    normal.bottomLeftCorner(J * nw, nx) = normal.topRightCorner(nx, J * nw).transpose();
    normal = symmetrized(normal);

    SubjectScores scores;
    scores.subject_id = subject.id;
    Vector omega = Vector::Zero(dim);
    if (dim > 0) {
      const SymmetricEigen eig = symmetric_eigen_descending(normal);
      const double top = eig.values(0);
      const double bottom = eig.values(dim - 1);
      if (top > 0.0 && bottom > 0.0 && top / bottom <= kBlupConditionLimit) {
        omega = normal.llt().solve(rhs);
      } else {
        // Minimum-norm least squares through the pseudo-inverse of B'B.
        scores.rank_deficient = true;
        const double cutoff = top / kBlupConditionLimit;
        for (Index k = 0; k < dim && top > 0.0; ++k) {
          if (eig.values(k) <= cutoff) break;
          omega += eig.vectors.col(k) * (eig.vectors.col(k).dot(rhs) / eig.values(k));
        }
      }
    }
    scores.xi = omega.head(nx);
    scores.zeta = Matrix(J, nw);
    for (Index j = 0; j < J; ++j) scores.zeta.row(j) = omega.segment(nx + j * nw, nw).transpose();
    out.subjects.push_back(std::move(scores));
  }
  return out;
}

ScorePanel score_blups(const FittedModel& model, const IntrinsicDecomposition& decomposition,
                       const StudyDesign& design) {
  return solve_scores(intrinsic_score_system(model, decomposition), design);
}

Vector reconstruct(const FittedModel& model, const ScorePanel& scores, const StudyDesign& design,
                   Index subject, Index visit) {
  require(model.has_basis(), ErrorKind::validation, "model has no lifted basis");
  require(subject >= 0 && subject < design.subject_count() &&
              subject < static_cast<Index>(scores.subjects.size()),
          ErrorKind::validation, "unknown subject " + std::to_string(subject));
  require(visit >= 0 && visit < design.visit_count(subject), ErrorKind::validation,
          "unknown visit " + std::to_string(visit) + " of subject " + std::to_string(subject));
  const auto& s = scores.subjects[static_cast<std::size_t>(subject)];
  const Matrix& z = design.subject(subject).covariates;
  const DataPanel& phi_w = *model.phi_w;
  const SliceLayout& layout = phi_w.layout();
  std::vector<DataPanel> phi_x;
  for (const auto& phi : model.phi_x) phi_x.push_back(phi.with_layout(layout));
  Vector out = model.mean ? *model.mean : Vector::Zero(phi_w.p());
  for (Index l = 0; l < layout.slice_count(); ++l) {
    auto segment = out.segment(layout.begin(l), layout.slice_rows(l));
    for (Index k = 0; k <= model.q; ++k) segment += z(visit, k) * (phi_x[k].slice(l) * s.xi);
    segment += phi_w.slice(l) * s.zeta.row(visit).transpose();
  }
  return out;
}

}  // namespace lfpca
