#include "lfpca/pipeline.hpp"

#include "lfpca/error.hpp"

namespace lfpca {

FitResult fit_model(const DataPanel& raw, const StudyDesign& design, const FitOptions& options) {
  require(raw.n() == design.total_visits(), ErrorKind::validation,
          "panel has " + std::to_string(raw.n()) + " columns but the design has " +
              std::to_string(design.total_visits()) + " visits");
  FitResult fit;
  if (options.normalize_covariates) {
    NormalizedDesign normalized = normalize_covariates(design);
    fit.design = std::move(normalized.design);
    fit.transform = std::move(normalized.transform);
  } else {
    fit.design = design;
    fit.transform.shift = Vector::Zero(design.q());
    fit.transform.scale = Vector::Ones(design.q());
  }

  const ValidationReport report = validate_design(fit.design);
  if (!report.ok) {
    std::string message = "design is not identifiable:";
    for (const auto& f : report.failures) message += "\n  - " + f;
    fail(ErrorKind::identifiability, message);
  }

  fit.centered = center_panel(raw, options.threads);
  fit.gram = accumulate_gram(fit.centered, options.threads);

  RankPolicy rank_policy = options.rank;
  if (options.orders.nx && options.orders.nw) {
    rank_policy.model_dimension = fit.design.covariate_width() * *options.orders.nx + *options.orders.nw;
  }
  if (options.backend == GramBackend::power) {
    require(rank_policy.rank.has_value(), ErrorKind::validation,
            "the power-iteration backend needs an explicit rank");
    Index rank = *rank_policy.rank;
    if (rank_policy.model_dimension) rank = std::max(rank, *rank_policy.model_dimension);
    fit.decomposition = power_eigen_gram(fit.gram, std::min(rank, fit.gram.rows()), options.power);
  } else {
    fit.decomposition = eigen_gram(fit.gram);
    if (rank_policy.rank || options.auto_rank) {
      fit.decomposition =
          truncate(fit.decomposition, truncated_rank(fit.decomposition.S, rank_policy));
    }
  }
  require(fit.decomposition.rank() > 0, ErrorKind::numerical,
          "centered panel is zero; nothing to decompose");
  orient_left_vectors(fit.decomposition, column_sums(fit.centered, options.threads));

  fit.mom = options.form == ModelForm::intercept_slope ? build_f_intercept_slope(fit.design)
                                                       : build_f(fit.design);
  attach_h(fit.mom);
  fit.covariances = intrinsic_covariances(fit.decomposition, fit.mom, fit.design);
  fit.eigen = decompose_intrinsic(fit.covariances, options.orders);
  FittedModel& model = fit.model;
  model.q = fit.design.q();
  model.r = fit.decomposition.rank();
  model.p = raw.p();
  model.A_X = fit.eigen.A_X;
  model.lambda_X = fit.eigen.lambda_X;
  model.A_W = fit.eigen.A_W;
  model.lambda_W = fit.eigen.lambda_W;
  model.trace_KX = fit.covariances.trace_KX_raw;
  model.trace_KW = fit.covariances.trace_KW_raw;
  model.clipped_count = fit.eigen.clipped_count;
  model.sigma2 = estimate_sigma2(fit.covariances, model.lambda_W, model.p);
  lift_model(model, left_vectors(fit.centered, fit.decomposition));
  model.mean = fit.centered.mean();

  if (options.compute_scores) fit.scores = score_blups(model, fit.decomposition, fit.design);
  return fit;
}

}  // namespace lfpca
