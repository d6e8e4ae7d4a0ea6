#include "lfpca/evaluate.hpp"

#include "lfpca/error.hpp"

#include <algorithm>
#include <cmath>

namespace lfpca {
namespace {

Vector stacked_column(const std::vector<Matrix>& blocks, Index m) {
  Index p = blocks.front().rows();
  Vector out(p * static_cast<Index>(blocks.size()));
  for (std::size_t k = 0; k < blocks.size(); ++k) out.segment(static_cast<Index>(k) * p, p) = blocks[k].col(m);
  return out;
}

ScoreErrorSummary summarize(std::vector<double> errors) {
  ScoreErrorSummary summary;
  for (std::size_t k = 0; k < kScoreQuantileLevels.size(); ++k)
    summary.quantiles[k] = errors.empty() ? 0.0 : quantile(errors, kScoreQuantileLevels[k]);
  summary.errors = std::move(errors);
  return summary;
}

}  // namespace

double aligned_distance(const Vector& truth, const Vector& estimate) {
  require(truth.size() == estimate.size(), ErrorKind::validation,
          "eigenvector lengths differ: " + std::to_string(truth.size()) + " vs " +
              std::to_string(estimate.size()));
  return std::min((truth - estimate).squaredNorm(), (truth + estimate).squaredNorm());
}

double quantile(std::vector<double> values, double level) {
  require(!values.empty(), ErrorKind::validation, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double position = level * static_cast<double>(values.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(position));
  const auto upper = std::min(lower + 1, values.size() - 1);
  const double frac = position - static_cast<double>(lower);
  return values[lower] + frac * (values[upper] - values[lower]);
}

FittedComponents dense_components(const FittedModel& model,
                                  const std::optional<ScorePanel>& scores) {
  require(model.has_basis(), ErrorKind::validation, "model has no lifted basis");
  FittedComponents out;
  for (const auto& phi : model.phi_x) out.phi_x.push_back(phi.to_dense());
  out.phi_w = model.phi_w->to_dense();
  out.lambda_x = model.lambda_X;
  out.lambda_w = model.lambda_W;
  out.scores = scores;
  return out;
}

EvaluationMetrics evaluate(const GroundTruth& truth, const FittedComponents& fitted) {
  const Index nx = truth.nx();
  const Index nw = truth.nw();
  const Index blocks = static_cast<Index>(truth.phi_x.size());
  require(static_cast<Index>(fitted.phi_x.size()) == blocks, ErrorKind::validation,
          "fitted and true models have different covariate counts");
  require(fitted.lambda_x.size() == nx && fitted.lambda_w.size() == nw, ErrorKind::validation,
          "fitted component counts (" + std::to_string(fitted.lambda_x.size()) + ", " +
              std::to_string(fitted.lambda_w.size()) + ") do not match the truth (" +
              std::to_string(nx) + ", " + std::to_string(nw) + ")");

  EvaluationMetrics metrics;
  metrics.x_distance.resize(blocks, nx);
  metrics.w_distance.resize(nw);
  metrics.x_eigen_error = (fitted.lambda_x - truth.lambda_x).cwiseQuotient(truth.lambda_x);
  metrics.w_eigen_error = (fitted.lambda_w - truth.lambda_w).cwiseQuotient(truth.lambda_w);

  Vector x_sign(nx);
  for (Index m = 0; m < nx; ++m) {
    for (Index k = 0; k < blocks; ++k)
      metrics.x_distance(k, m) = aligned_distance(truth.phi_x[k].col(m), fitted.phi_x[k].col(m));
    x_sign(m) = stacked_column(truth.phi_x, m).dot(stacked_column(fitted.phi_x, m)) < 0 ? -1.0 : 1.0;
  }
  Vector w_sign(nw);
  for (Index l = 0; l < nw; ++l) {
    metrics.w_distance(l) = aligned_distance(truth.phi_w.col(l), fitted.phi_w.col(l));
    w_sign(l) = truth.phi_w.col(l).dot(fitted.phi_w.col(l)) < 0 ? -1.0 : 1.0;
  }

  if (fitted.scores) {
    const auto& est = fitted.scores->subjects;
    const auto& tru = truth.scores.subjects;
    require(est.size() == tru.size(), ErrorKind::validation,
            "fitted and true score panels have different subject counts");
    for (Index m = 0; m < nx; ++m) {
      std::vector<double> errors;
      for (std::size_t i = 0; i < tru.size(); ++i)
        errors.push_back((tru[i].xi(m) - x_sign(m) * est[i].xi(m)) / std::sqrt(truth.lambda_x(m)));
      metrics.xi_errors.push_back(summarize(std::move(errors)));
    }
    for (Index l = 0; l < nw; ++l) {
      std::vector<double> errors;
      for (std::size_t i = 0; i < tru.size(); ++i) {
        require(est[i].zeta.rows() == tru[i].zeta.rows(), ErrorKind::validation,
                "visit counts differ for subject " + tru[i].subject_id);
        for (Index j = 0; j < tru[i].zeta.rows(); ++j)
          errors.push_back((tru[i].zeta(j, l) - w_sign(l) * est[i].zeta(j, l)) /
                           std::sqrt(truth.lambda_w(l)));
      }
      metrics.zeta_errors.push_back(summarize(std::move(errors)));
    }
  }
  return metrics;
}

}  // namespace lfpca
