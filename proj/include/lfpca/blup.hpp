#pragma once

#include "lfpca/gram_svd.hpp"
#include "lfpca/model_fit.hpp"
#include "lfpca/study_design.hpp"

#include <string>
#include <vector>

namespace lfpca {

struct SubjectScores {
  std::string subject_id;
  Vector xi;     // N_X
  Matrix zeta;   // J_i x N_W
  bool rank_deficient = false;
};

struct ScorePanel {
  std::vector<SubjectScores> subjects;

  bool any_rank_deficient() const;
};

inline constexpr double kBlupConditionLimit = 1e10;

// Inner products needed by the normal equations of every subject. With
// basis columns ordered [Phi^{X,0} .. Phi^{X,q} Phi^W]:
//   gram        = basis' basis
//   projections = basis' Y~ (one column per visit)
struct ScoreSystem {
  Index q = 0;
  Index nx = 0;
  Index nw = 0;
  Matrix gram;
  Matrix projections;
};

// Low-dimensional route: basis' basis = A'A and basis' Y~ = A' S^{1/2} U'.
ScoreSystem intrinsic_score_system(const FittedModel& model,
                                   const IntrinsicDecomposition& decomposition);

// Voxel-space route for data not used in the fit: streams the lifted basis
// and the centered panel.
ScoreSystem lifted_score_system(const FittedModel& model, const DataPanel& centered,
                                int threads = 1);

// Solves (B_i'B_i) omega_i = B_i' vec(Y~_i) per subject with
// vec stacking visits; minimum-norm solution when cond > 1e10.
ScorePanel solve_scores(const ScoreSystem& system, const StudyDesign& design);

ScorePanel score_blups(const FittedModel& model, const IntrinsicDecomposition& decomposition,
                       const StudyDesign& design);

// eta + sum_k Z_{ij,k} Phi^{X,k} xi_i + Phi^W zeta_ij, slice by slice.
Vector reconstruct(const FittedModel& model, const ScorePanel& scores,
                   const StudyDesign& design, Index subject, Index visit);

}  // namespace lfpca
