#pragma once

#include "lfpca/blup.hpp"
#include "lfpca/gram_svd.hpp"
#include "lfpca/model_fit.hpp"
#include "lfpca/mom.hpp"
#include "lfpca/study_design.hpp"

#include <optional>

namespace lfpca {

enum class ModelForm { intercept_slope, general };
enum class GramBackend { dense, power };

struct FitOptions {
  OrderPolicy orders;
  RankPolicy rank;          // default: full numerical rank
  bool auto_rank = false;   // use rank.threshold instead of the full rank
  ModelForm form = ModelForm::general;
  GramBackend backend = GramBackend::dense;
  PowerIterationOptions power;
  bool normalize_covariates = true;
  bool compute_scores = true;
  int threads = 1;
};

struct FitResult {
  StudyDesign design;  // after normalization
  CovariateTransform transform;
  DataPanel centered;
  Matrix gram;
  IntrinsicDecomposition decomposition;
  MomDesign mom;
  IntrinsicCovariances covariances;
  IntrinsicEigen eigen;
  FittedModel model;  // basis lifted lazily from `centered`
  std::optional<ScorePanel> scores;
};

// Centering, Gram, SVD, moments, eigendecomposition, lifting, sigma^2 and
// scores. The panel must have n == design.total_visits().
FitResult fit_model(const DataPanel& raw, const StudyDesign& design, const FitOptions& options);

}  // namespace lfpca
