#include "lfpca/simulate.hpp"

#include "lfpca/error.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace lfpca {
namespace {

std::string subject_label(Index i) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "S%04ld", static_cast<long>(i + 1));
  return buffer;
}

double draw_score(ScoreLaw law, double lambda, Rng& rng) {
  switch (law) {
    case ScoreLaw::zero:
      return 0.0;
    case ScoreLaw::normal:
      return rng.normal(0.0, std::sqrt(lambda));
    case ScoreLaw::mixture: {
      // Equal mixture N(-m, s^2), N(m, s^2) with m = sqrt(lambda/3) and
      // s^2 = 2 lambda/3: variance m^2 + s^2 = lambda, modes 2m apart = sqrt(2) s.
      const double m = std::sqrt(lambda / 3.0);
      const double center = rng.uniform() < 0.5 ? -m : m;
      return rng.normal(center, std::sqrt(2.0 * lambda / 3.0));
    }
  }
  return 0.0;
}

Vector unit(const Vector& v) {
  const double norm = v.norm();
  return norm > 0.0 ? Vector(v / norm) : v;
}

// Blocks unit-normalized, then every stacked X column scaled to unit norm.
void normalize_basis(std::vector<Matrix>& phi_x, Matrix& phi_w) {
  for (auto& block : phi_x)
    for (Index m = 0; m < block.cols(); ++m) block.col(m) = unit(block.col(m));
  for (Index m = 0; m < phi_x.front().cols(); ++m) {
    double norm2 = 0.0;
    for (const auto& block : phi_x) norm2 += block.col(m).squaredNorm();
    if (norm2 > 0.0)
      for (auto& block : phi_x) block.col(m) /= std::sqrt(norm2);
  }
  for (Index m = 0; m < phi_w.cols(); ++m) phi_w.col(m) = unit(phi_w.col(m));
}

struct Synthesis {
  Matrix data;
  ScorePanel scores;
};

// Scores for all subjects are drawn first (xi then zeta, subject by subject),
// then the noise column by column, so changing sigma2 only rescales the noise.
Synthesis synthesize(const std::vector<Matrix>& phi_x, const Matrix& phi_w, const Vector* mean,
                     const StudyDesign& design, const Vector& lambda_x, const Vector& lambda_w,
                     ScoreLaw law, double sigma2, Rng& rng) {
  const Index p = phi_w.rows();
  const Index nx = lambda_x.size();
  const Index nw = lambda_w.size();
  require(static_cast<Index>(phi_x.size()) == design.covariate_width(), ErrorKind::validation,
          "basis blocks do not match the design covariates");
  require(sigma2 >= 0.0, ErrorKind::validation, "noise variance must be nonnegative");
  Synthesis out;
  for (Index i = 0; i < design.subject_count(); ++i) {
    SubjectScores s;
    s.subject_id = design.subject(i).id;
    s.xi.resize(nx);
    for (Index k = 0; k < nx; ++k) s.xi(k) = draw_score(law, lambda_x(k), rng);
    s.zeta.resize(design.visit_count(i), nw);
    for (Index j = 0; j < design.visit_count(i); ++j)
      for (Index l = 0; l < nw; ++l) s.zeta(j, l) = draw_score(law, lambda_w(l), rng);
    out.scores.subjects.push_back(std::move(s));
  }
  out.data.resize(p, design.total_visits());
  const double sd = std::sqrt(sigma2);
  for (Index i = 0; i < design.subject_count(); ++i) {
    const Matrix& z = design.subject(i).covariates;
    const SubjectScores& s = out.scores.subjects[i];
    for (Index j = 0; j < design.visit_count(i); ++j) {
      auto column = out.data.col(design.column(i, j));
      column = phi_w.leftCols(nw) * s.zeta.row(j).transpose();
      for (Index k = 0; k < design.covariate_width(); ++k)
        column += z(j, k) * (phi_x[k].leftCols(nx) * s.xi);
      if (mean) column += *mean;
    }
  }
  if (sigma2 > 0.0) {
    for (Index c = 0; c < out.data.cols(); ++c)
      for (Index v = 0; v < p; ++v) out.data(v, c) += sd * rng.normal();
  }
  return out;
}

void check_spec(const ScenarioSpec& spec, Index max_nx, Index max_nw) {
  require(spec.p >= 1, ErrorKind::validation, "p must be positive");
  require(spec.subjects >= 1 && spec.visits >= 1, ErrorKind::validation,
          "subjects and visits must be positive");
  require(spec.sigma2 >= 0.0, ErrorKind::validation, "noise variance must be nonnegative");
  require(spec.lambda_x.size() <= max_nx && spec.lambda_w.size() <= max_nw,
          ErrorKind::validation, "more components requested than the scenario defines");
  require((spec.lambda_x.array() > 0).all() && (spec.lambda_w.array() > 0).all(),
          ErrorKind::validation, "eigenvalues must be positive");
}

GroundTruth make_truth(const ScenarioSpec& spec, std::vector<Matrix> phi_x, Matrix phi_w,
                       ScorePanel scores) {
  GroundTruth truth;
  truth.scenario = spec.scenario;
  truth.seed = spec.seed;
  truth.sigma2 = spec.sigma2;
  truth.law = spec.law;
  for (auto& block : phi_x) block = block.leftCols(spec.lambda_x.size()).eval();
  truth.phi_x = std::move(phi_x);
  truth.phi_w = phi_w.leftCols(spec.lambda_w.size());
  truth.lambda_x = spec.lambda_x;
  truth.lambda_w = spec.lambda_w;
  truth.scores = std::move(scores);
  return truth;
}

}  // namespace

Vector geometric_eigenvalues(Index count) {
  Vector out(count);
  for (Index k = 0; k < count; ++k) out(k) = std::pow(0.5, static_cast<double>(k));
  return out;
}

ScenarioSpec scenario1_spec(Index p, double sigma2, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.scenario = 1;
  spec.p = p;
  spec.subjects = 100;
  spec.visits = 4;
  spec.sigma2 = sigma2;
  spec.lambda_x = geometric_eigenvalues(4);
  spec.lambda_w = geometric_eigenvalues(4);
  spec.law = ScoreLaw::mixture;
  spec.seed = seed;
  return spec;
}

ScenarioSpec scenario2_spec(std::uint64_t seed) {
  ScenarioSpec spec;
  spec.scenario = 2;
  spec.p = kScenario2Voxels;
  spec.subjects = 150;
  spec.visits = 6;
  spec.sigma2 = 0.0;
  spec.lambda_x = geometric_eigenvalues(3);
  spec.lambda_w = geometric_eigenvalues(2);
  spec.law = ScoreLaw::normal;
  spec.seed = seed;
  return spec;
}

StudyDesign simulate_times(Index subjects, Index visits, Rng& rng) {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> times;
  for (Index i = 0; i < subjects; ++i) {
    ids.push_back(subject_label(i));
    std::vector<double> t(static_cast<std::size_t>(visits));
    double current = rng.uniform();
    for (Index j = 0; j < visits; ++j) {
      if (j > 0) current += rng.uniform();
      t[static_cast<std::size_t>(j)] = current;
    }
    times.push_back(std::move(t));
  }
  return normalize_covariates(StudyDesign::from_times(ids, times)).design;
}

Matrix scenario1_raw_basis(Index p) {
  const double pi = std::numbers::pi;
  Matrix basis(p, 12);
  for (Index t = 0; t < p; ++t) {
    const double v = p > 1 ? static_cast<double>(t) / static_cast<double>(p - 1) : 0.0;
    const double a = std::sqrt(2.0 / 3.0);
    basis(t, 0) = a * std::sin(2 * pi * v);
    basis(t, 1) = a * std::cos(2 * pi * v);
    basis(t, 2) = a * std::sin(4 * pi * v);
    basis(t, 3) = a * std::cos(4 * pi * v);
    basis(t, 4) = 0.5;
    basis(t, 5) = std::sqrt(3.0) * (2 * v - 1) / 2;
    basis(t, 6) = std::sqrt(5.0) * (6 * v * v - 6 * v + 1) / 2;
    basis(t, 7) = std::sqrt(7.0) * (20 * v * v * v - 30 * v * v + 12 * v - 1) / 2;
    basis(t, 8) = std::sqrt(4.0) * basis(t, 4);
    basis(t, 9) = std::sqrt(4.0 / 3.0) * basis(t, 0);
    basis(t, 10) = std::sqrt(4.0 / 3.0) * basis(t, 1);
    basis(t, 11) = std::sqrt(4.0 / 3.0) * basis(t, 2);
  }
  return basis;
}

SimulatedStudy generate_scenario1(const ScenarioSpec& spec) {
  check_spec(spec, 4, 4);
  Rng rng(spec.seed);
  StudyDesign design = simulate_times(spec.subjects, spec.visits, rng);
  const Matrix raw = scenario1_raw_basis(spec.p);
  std::vector<Matrix> phi_x = {raw.middleCols(0, 4), raw.middleCols(4, 4)};
  Matrix phi_w = raw.middleCols(8, 4);
  normalize_basis(phi_x, phi_w);

  Synthesis synth = synthesize(phi_x, phi_w, nullptr, design, spec.lambda_x, spec.lambda_w,
                               spec.law, spec.sigma2, rng);
  SimulatedStudy study;
  study.panel = DataPanel::from_matrix(std::move(synth.data));
  study.design = std::move(design);
  study.truth = make_truth(spec, std::move(phi_x), std::move(phi_w), std::move(synth.scores));
  return study;
}

std::vector<LatticeBlock> scenario2_blocks() {
  std::vector<LatticeBlock> blocks;
  auto add = [&](const char* family, Index component, Index x0, Index x1) {
    LatticeBlock b;
    b.family = family;
    b.component = component;
    const Index y0 = 4 + 22 * (component - 1);
    b.lo[0] = x0;
    b.hi[0] = x1;
    b.lo[1] = y0;
    b.hi[1] = y0 + 16;
    b.lo[2] = 0;
    b.hi[2] = kScenario2Extent[2];
    blocks.push_back(b);
  };
  for (Index k = 1; k <= 3; ++k) add("X0", k, 2, 12);
  for (Index k = 1; k <= 3; ++k) add("X1", k, 10, 28);
  for (Index l = 1; l <= 2; ++l) add("W", l, 26, 36);
  return blocks;
}

SimulatedStudy generate_scenario2(const ScenarioSpec& spec) {
  check_spec(spec, 3, 2);
  require(spec.p == kScenario2Voxels, ErrorKind::validation,
          "scenario 2 lives on the 38 x 72 x 11 lattice (p = 30096)");
  Rng rng(spec.seed);
  StudyDesign design = simulate_times(spec.subjects, spec.visits, rng);

  const auto blocks = scenario2_blocks();
  std::vector<Matrix> phi_x = {Matrix::Zero(spec.p, 3), Matrix::Zero(spec.p, 3)};
  Matrix phi_w = Matrix::Zero(spec.p, 2);
  for (const auto& b : blocks) {
    Matrix& target = b.family == "X0" ? phi_x[0] : b.family == "X1" ? phi_x[1] : phi_w;
    for (Index z = b.lo[2]; z < b.hi[2]; ++z)
      for (Index y = b.lo[1]; y < b.hi[1]; ++y)
        for (Index x = b.lo[0]; x < b.hi[0]; ++x)
          target(x + kScenario2Extent[0] * (y + kScenario2Extent[1] * z), b.component - 1) = 1.0;
  }
  normalize_basis(phi_x, phi_w);

  Synthesis synth = synthesize(phi_x, phi_w, nullptr, design, spec.lambda_x, spec.lambda_w,
                               spec.law, spec.sigma2, rng);
  SimulatedStudy study;
  study.panel = DataPanel::from_matrix(std::move(synth.data));
  study.design = std::move(design);
  study.truth = make_truth(spec, std::move(phi_x), std::move(phi_w), std::move(synth.scores));
  study.truth.blocks = blocks;
  return study;
}

SimulatedStudy generate_from_model(const FittedModel& model, const StudyDesign& design,
                                   const ModelSimulationOptions& options) {
  require(model.has_basis(), ErrorKind::validation,
          "model has no lifted basis to simulate from");
  const Vector lambda_x = options.lambda_x.value_or(model.lambda_X);
  const Vector lambda_w = options.lambda_w.value_or(model.lambda_W);
  require(lambda_x.size() <= model.nx() && lambda_w.size() <= model.nw(), ErrorKind::validation,
          "more score variances than model components");
  std::vector<Matrix> phi_x;
  for (const auto& phi : model.phi_x) phi_x.push_back(phi.to_dense());
  const Matrix phi_w = model.phi_w->to_dense();
  const Vector mean = model.mean.value_or(Vector::Zero(phi_w.rows()));

  Rng rng(options.seed);
  Synthesis synth =
      synthesize(phi_x, phi_w, &mean, design, lambda_x, lambda_w, options.law, options.sigma2, rng);
  SimulatedStudy study;
  study.panel = DataPanel::from_matrix(std::move(synth.data));
  study.design = design;
  GroundTruth& truth = study.truth;
  truth.scenario = 3;
  truth.seed = options.seed;
  truth.sigma2 = options.sigma2;
  truth.law = options.law;
  for (auto& block : phi_x) truth.phi_x.push_back(block.leftCols(lambda_x.size()));
  truth.phi_w = phi_w.leftCols(lambda_w.size());
  truth.lambda_x = lambda_x;
  truth.lambda_w = lambda_w;
  truth.scores = std::move(synth.scores);
  return study;
}

}  // namespace lfpca
