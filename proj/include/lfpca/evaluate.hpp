#pragma once

#include "lfpca/blup.hpp"
#include "lfpca/simulate.hpp"

#include <array>
#include <optional>
#include <vector>

namespace lfpca {

// min(||a - b||^2, ||a + b||^2). X blocks are compared as they sit in the
// unit-norm stacked eigenvector, without rescaling.
double aligned_distance(const Vector& truth, const Vector& estimate);

inline constexpr std::array<double, 5> kScoreQuantileLevels = {0.005, 0.05, 0.5, 0.95, 0.995};

struct ScoreErrorSummary {
  std::vector<double> errors;  // (true - estimated) / sqrt(lambda)
  std::array<double, 5> quantiles{};
};

struct EvaluationMetrics {
  Matrix x_distance;   // (q+1) x N_X
  Vector w_distance;   // N_W
  Vector x_eigen_error;  // (lambda_hat - lambda) / lambda
  Vector w_eigen_error;
  std::vector<ScoreErrorSummary> xi_errors;    // per X component
  std::vector<ScoreErrorSummary> zeta_errors;  // per W component
};

struct FittedComponents {
  std::vector<Matrix> phi_x;  // dense lifted blocks
  Matrix phi_w;
  Vector lambda_x;
  Vector lambda_w;
  std::optional<ScorePanel> scores;
};

FittedComponents dense_components(const FittedModel& model,
                                  const std::optional<ScorePanel>& scores);

// Scores are sign-aligned with the stacked eigenvector they belong to.
EvaluationMetrics evaluate(const GroundTruth& truth, const FittedComponents& fitted);

double quantile(std::vector<double> values, double level);

}  // namespace lfpca
