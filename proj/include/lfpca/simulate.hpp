#pragma once

#include "lfpca/blup.hpp"
#include "lfpca/model_fit.hpp"
#include "lfpca/panel.hpp"
#include "lfpca/rng.hpp"
#include "lfpca/study_design.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lfpca {

enum class ScoreLaw {
  normal,   // N(0, lambda)
  // 0.5 N(-sqrt(lambda/3), 2 lambda/3) + 0.5 N(sqrt(lambda/3), 2 lambda/3): the
  // symmetric two-normal mixture whose mode gap is sqrt(2) component sds,
  // scaled to variance lambda.
  mixture,
  zero,
};

struct ScenarioSpec {
  int scenario = 1;
  Index p = 750;
  Index subjects = 100;
  Index visits = 4;
  double sigma2 = 1e-4;
  Vector lambda_x;
  Vector lambda_w;
  ScoreLaw law = ScoreLaw::mixture;
  std::uint64_t seed = 1;
};

// 0.5^{k-1}, k = 1..count
Vector geometric_eigenvalues(Index count);

ScenarioSpec scenario1_spec(Index p, double sigma2, std::uint64_t seed);
ScenarioSpec scenario2_spec(std::uint64_t seed);

inline constexpr Index kScenario2Extent[3] = {38, 72, 11};
inline constexpr Index kScenario2Voxels = 38 * 72 * 11;

// Axis-aligned box [lo, hi) on the Scenario 2 lattice, voxel (x, y, z) unfolded
// to x + 38 (y + 72 z).
struct LatticeBlock {
  std::string family;  // "X0", "X1" or "W"
  Index component = 0;  // 1-based
  Index lo[3] = {0, 0, 0};
  Index hi[3] = {0, 0, 0};
};

struct GroundTruth {
  int scenario = 0;
  std::uint64_t seed = 0;
  double sigma2 = 0.0;
  ScoreLaw law = ScoreLaw::normal;
  std::vector<Matrix> phi_x;  // q+1 blocks, p x N_X; stacked columns have unit norm
  Matrix phi_w;               // p x N_W, unit columns
  Vector lambda_x;
  Vector lambda_w;
  ScorePanel scores;
  std::vector<LatticeBlock> blocks;

  Index nx() const { return lambda_x.size(); }
  Index nw() const { return lambda_w.size(); }
};

struct SimulatedStudy {
  DataPanel panel;  // raw, uncentered, in memory
  StudyDesign design;
  GroundTruth truth;
};

// Times: T_i1 ~ U(0,1), increments ~ U(0,1), then pooled normalization.
StudyDesign simulate_times(Index subjects, Index visits, Rng& rng);

// The eight Scenario 1 basis functions on the regular grid v_t = t / (p-1),
// before normalization: columns phi^{X,0}_1..4, phi^{X,1}_1..4, phi^W_1..4.
Matrix scenario1_raw_basis(Index p);

SimulatedStudy generate_scenario1(const ScenarioSpec& spec);
SimulatedStudy generate_scenario2(const ScenarioSpec& spec);
std::vector<LatticeBlock> scenario2_blocks();

struct ModelSimulationOptions {
  ScoreLaw law = ScoreLaw::mixture;
  // Score variances; defaults to the model eigenvalues.
  std::optional<Vector> lambda_x;
  std::optional<Vector> lambda_w;
  double sigma2 = 0.0;
  std::uint64_t seed = 1;
};

// Synthesizes eta + sum_k Z_{ij,k} Phi^{X,k} xi_i + Phi^W zeta_ij (+ noise) on
// the template design using the model's lifted basis.
SimulatedStudy generate_from_model(const FittedModel& model, const StudyDesign& design,
                                   const ModelSimulationOptions& options);

}  // namespace lfpca
