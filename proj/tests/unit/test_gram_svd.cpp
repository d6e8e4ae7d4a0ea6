#include "lfpca/error.hpp"
#include "lfpca/gram_svd.hpp"
#include "lfpca/simulate.hpp"
#include "support/helpers.hpp"

#include <gtest/gtest.h>

using namespace lfpca;
using lfpca::testing::random_matrix;

namespace {

DataPanel centered_identity(Index slices) {
  return DataPanel(DataPanel::from_matrix(Matrix::Identity(4, 4), slices).source(), Vector::Zero(4),
                   true);
}

DataPanel as_centered(const Matrix& m, Index slices) {
  return DataPanel(DataPanel::from_matrix(m, slices).source(), Vector::Zero(m.rows()), true);
}

}  // namespace

TEST(AccumulateGram, IdentityForAnySliceCount) {
  for (Index l : {1, 2, 3, 4, 7}) EXPECT_EQ(accumulate_gram(centered_identity(l)), Matrix::Identity(4, 4));
}

TEST(AccumulateGram, ZeroPanel) {
  EXPECT_TRUE(accumulate_gram(as_centered(Matrix::Zero(6, 3), 2)).isZero(0));
}

TEST(AccumulateGram, MatchesDenseProduct) {
  Rng rng(1);
  const Matrix y = random_matrix(rng, 6, 3);
  const Matrix g = accumulate_gram(as_centered(y, 2));
  EXPECT_LE((g - y.transpose() * y).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(g, g.transpose());
}

TEST(AccumulateGram, EmptyTrailingSlicesOnWidePanel) {
  Rng rng(8);
  const Matrix y = random_matrix(rng, 10, 400);
  ASSERT_EQ(as_centered(y, 7).layout().slice_rows(6), 0);
  EXPECT_LE((accumulate_gram(as_centered(y, 7)) - accumulate_gram(as_centered(y, 1))).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(AccumulateGram, RequiresCenteredPanel) {
  EXPECT_THROW(accumulate_gram(DataPanel::from_matrix(Matrix::Ones(3, 3))), Error);
}

TEST(AccumulateGram, BitIdenticalAcrossThreadCounts) {
  Rng rng(2);
  const DataPanel c = as_centered(random_matrix(rng, 300, 20), 9);
  EXPECT_EQ(accumulate_gram(c, 1), accumulate_gram(c, 4));
}

TEST(EigenGram, DiagonalDropsZero) {
  const Matrix g = Vector(Eigen::Vector3d(4, 1, 0)).asDiagonal();
  const IntrinsicDecomposition d = eigen_gram(g);
  ASSERT_EQ(d.rank(), 2);
  EXPECT_DOUBLE_EQ(d.S(0), 4.0);
  EXPECT_DOUBLE_EQ(d.S(1), 1.0);
  EXPECT_NEAR(std::abs(d.U(0, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(d.U(1, 1)), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(d.total_gram_trace, 5.0);
}

TEST(EigenGram, DegenerateSpectrumReconstructs) {
  const IntrinsicDecomposition d = eigen_gram(Matrix::Identity(3, 3));
  ASSERT_EQ(d.rank(), 3);
  EXPECT_LE((d.U.transpose() * d.U - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((d.U * d.S.asDiagonal() * d.U.transpose() - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(EigenGram, RankTwoOuterProducts) {
  Rng rng(3);
  const Matrix a = random_matrix(rng, 9, 1), b = random_matrix(rng, 5, 1);
  const Matrix c = random_matrix(rng, 9, 1), e = random_matrix(rng, 5, 1);
  const Matrix y = a * b.transpose() + c * e.transpose();
  const Matrix g = y.transpose() * y;
  const IntrinsicDecomposition d = eigen_gram(g);
  EXPECT_EQ(d.rank(), 2);
  EXPECT_LE((d.U * d.S.asDiagonal() * d.U.transpose() - g).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(EigenGram, RejectsNonFinite) {
  Matrix g = Matrix::Identity(2, 2);
  g(0, 1) = g(1, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(eigen_gram(g), Error);
}

TEST(PowerEigenGram, MatchesDenseLeadingPairs) {
  Rng rng(4);
  const Matrix y = random_matrix(rng, 80, 30);
  const Matrix g = y.transpose() * y;
  const IntrinsicDecomposition dense = eigen_gram(g);
  const IntrinsicDecomposition power = power_eigen_gram(g, 5);
  ASSERT_EQ(power.rank(), 5);
  ASSERT_TRUE(power.power_seed.has_value());
  for (Index k = 0; k < 5; ++k) {
    EXPECT_NEAR(power.S(k), dense.S(k), 1e-8 * dense.S(0));
    EXPECT_NEAR(std::abs(power.U.col(k).dot(dense.U.col(k))), 1.0, 1e-8);
  }
}

TEST(TruncatedRank, PolicyExamples) {
  EXPECT_EQ(truncated_rank(Eigen::Vector3d(4, 1, 0), RankPolicy{}), 2);
  RankPolicy p;
  p.threshold = 0.8;
  EXPECT_EQ(truncated_rank(Eigen::Vector3d(8, 1, 1), p), 1);
  RankPolicy explicit_rank;
  explicit_rank.rank = 1;
  explicit_rank.model_dimension = 3;
  EXPECT_EQ(truncated_rank(Eigen::Vector3d(8, 1, 1), explicit_rank), 3);
  explicit_rank.rank = 4;
  EXPECT_THROW(truncated_rank(Eigen::Vector3d(8, 1, 1), explicit_rank), Error);
}

TEST(TruncatedRank, NoiselessScenarioOneSpectrum) {
  ScenarioSpec spec = scenario1_spec(200, 0.0, 7);
  const SimulatedStudy s = generate_scenario1(spec);
  const IntrinsicDecomposition d = eigen_gram(accumulate_gram(center_panel(s.panel)));
  EXPECT_LE(truncated_rank(d.S, RankPolicy{}), 12);
}

TEST(LeftVectors, IdentityPanel) {
  const DataPanel c = centered_identity(2);
  const IntrinsicDecomposition d = eigen_gram(accumulate_gram(c));
  const Matrix v = left_vectors(c, d).to_dense();
  EXPECT_LE((v - d.U).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(LeftVectors, FullRankReconstruction) {
  Rng rng(5);
  const Matrix y = random_matrix(rng, 50, 8);
  const DataPanel c = as_centered(y, 3);
  const IntrinsicDecomposition d = eigen_gram(accumulate_gram(c));
  const Matrix v = left_vectors(c, d).to_dense();
  EXPECT_LE((v.transpose() * v - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-10);
  const Matrix back = v * d.S.cwiseSqrt().asDiagonal() * d.U.transpose();
  EXPECT_LE((back - y).norm(), 1e-10 * y.norm());
  // Dense SVD oracle.
  Eigen::JacobiSVD<Matrix> svd(y);
  for (Index k = 0; k < 8; ++k) EXPECT_NEAR(std::sqrt(d.S(k)), svd.singularValues()(k), 1e-10);
}

TEST(LeftVectors, RankTwoPanel) {
  Rng rng(6);
  const Matrix y = random_matrix(rng, 30, 2) * random_matrix(rng, 2, 6);
  const DataPanel c = as_centered(y, 4);
  const IntrinsicDecomposition d = eigen_gram(accumulate_gram(c));
  ASSERT_EQ(d.rank(), 2);
  const Matrix v = left_vectors(c, d, 2).to_dense();
  EXPECT_LE((v * d.S.cwiseSqrt().asDiagonal() * d.U.transpose() - y).norm(), 1e-10 * y.norm());
  EXPECT_THROW(left_vectors(c, d, 3), Error);
}

TEST(OrientLeftVectors, IndependentOfColumnOrder) {
  Rng rng(7);
  const Matrix y = random_matrix(rng, 40, 9);
  const Matrix centered = y.colwise() - y.rowwise().mean();
  std::vector<Index> order = {4, 1, 8, 0, 6, 2, 7, 3, 5};
  Matrix permuted(40, 9);
  for (Index c = 0; c < 9; ++c) permuted.col(c) = centered.col(order[c]);

  auto oriented_v = [](const Matrix& m) {
    const DataPanel c = as_centered(m, 2);
    IntrinsicDecomposition d = eigen_gram(accumulate_gram(c));
    orient_left_vectors(d, column_sums(c));
    const Matrix v = left_vectors(c, d).to_dense();
    for (Index k = 0; k < v.cols(); ++k) EXPECT_GE(v.col(k).sum(), -1e-12);
    return v;
  };
  const Matrix a = oriented_v(centered);
  const Matrix b = oriented_v(permuted);
  // The last direction of a centered panel is null and is not retained.
  ASSERT_EQ(a.cols(), b.cols());
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-10);
}
