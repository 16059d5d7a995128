#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "dmap/kernel_graph.hpp"
#include "test_helpers.hpp"

namespace dmap {
namespace {

TEST(PairwiseDistances, OneElementHandValue) {
  Eigen::MatrixXd rows(2, 1);
  rows << 1.0, 3.0;
  const Eigen::MatrixXd d = pairwise_sq_distances(rows);
  EXPECT_EQ(d(0, 0), 0.0);
  EXPECT_EQ(d(0, 1), 4.0);
  EXPECT_EQ(d(1, 0), 4.0);
}

TEST(PairwiseDistances, MatchesNaiveDoubleLoop) {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd rows = dmap::testing::random_rows(3, 17, rng);
  const Eigen::MatrixXd d = pairwise_sq_distances(rows);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double naive = 0.0;
      for (int e = 0; e < 17; ++e) naive += (rows(i, e) - rows(j, e)) * (rows(i, e) - rows(j, e));
      EXPECT_NEAR(d(i, j), naive, 1e-12);
      EXPECT_EQ(d(i, j), d(j, i));
    }
}

TEST(BuildKernel, HandValues) {
  Eigen::MatrixXd d(2, 2);
  d << 0.0, 8.0, 8.0, 0.0;
  const KernelMatrix k = build_kernel(d, {8.0, 1});
  EXPECT_EQ(k.values(0, 0), 1.0);
  EXPECT_NEAR(k.values(0, 1), 0.36787944117144233, 1e-16);
}

TEST(BuildKernel, LargerAlphaRaisesOffDiagonal) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd d = pairwise_sq_distances(dmap::testing::random_rows(6, 4, rng));
  const auto narrow = build_kernel(d, {2.0, 1});
  const auto wide = build_kernel(d, {4.0, 1});
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      if (i == j) continue;
      EXPECT_GT(wide.values(i, j), narrow.values(i, j));
      EXPECT_GT(narrow.values(i, j), 0.0);
      EXPECT_LE(narrow.values(i, j), 1.0);
    }
}

TEST(BuildKernel, RejectsBadConfig) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  EXPECT_THROW(build_kernel(d, {0.0, 1}), Error);
  EXPECT_THROW(build_kernel(d, {1.0, 0}), Error);
}

TEST(BuildMarkov, TwoPointHandValue) {
  KernelMatrix k{Eigen::MatrixXd(2, 2), {8.0, 1}};
  k.values << 1.0, 0.5, 0.5, 1.0;
  const MarkovGraph g = build_markov(k);
  EXPECT_NEAR(g.transition(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(g.transition(0, 1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(g.transition(1, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(g.transition(1, 1), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(g.degrees[0], 1.5);
}

TEST(BuildMarkov, SinglePoint) {
  const MarkovGraph g = build_markov(build_kernel(Eigen::MatrixXd::Zero(1, 1), {8.0, 1}));
  EXPECT_EQ(g.transition(0, 0), 1.0);
}

TEST(BuildMarkov, RowsSumToOneAndDegreesAreRowSums) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = build_markov(build_kernel(pairwise_sq_distances(dmap::testing::random_rows(25, 5, rng)), {8.0, 1}));
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      EXPECT_NEAR(g.transition.row(i).sum(), 1.0, 1e-12);
      EXPECT_EQ(g.degrees[i], row_sum(g.kernel.values.row(i)));
      EXPECT_GE(g.transition.row(i).minCoeff(), 0.0);
    }
  }
}

TEST(BuildMarkov, PermutationEquivariance) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd rows = dmap::testing::random_rows(12, 4, rng);
  std::vector<int> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd permuted(12, 4);
  for (int i = 0; i < 12; ++i) permuted.row(i) = rows.row(perm[i]);
  const auto g = build_markov(build_kernel(pairwise_sq_distances(rows), {3.0, 1}));
  const auto gp = build_markov(build_kernel(pairwise_sq_distances(permuted), {3.0, 1}));
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) EXPECT_NEAR(gp.transition(i, j), g.transition(perm[i], perm[j]), 1e-15);
}

TEST(TransitionPower, TwoStepsEqualsMatrixProduct) {
  std::mt19937_64 rng(6);
  const auto g = build_markov(build_kernel(pairwise_sq_distances(dmap::testing::random_rows(15, 3, rng)), {2.0, 2}));
  const Eigen::MatrixXd p2 = transition_power(g);
  Eigen::MatrixXd direct = Eigen::MatrixXd::Zero(15, 15);
  for (int i = 0; i < 15; ++i)
    for (int j = 0; j < 15; ++j)
      for (int k = 0; k < 15; ++k) direct(i, j) += g.transition(i, k) * g.transition(k, j);
  EXPECT_LT((p2 - direct).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DiffusionDistance, HandValueAndSymmetry) {
  KernelMatrix k{Eigen::MatrixXd(2, 2), {8.0, 1}};
  k.values << 1.0, 0.5, 0.5, 1.0;
  const MarkovGraph g = build_markov(k);
  EXPECT_EQ(diffusion_distance(g, 0, 0), 0.0);
  EXPECT_NEAR(diffusion_distance(g, 0, 1), 0.47140452079103173, 1e-15);
  EXPECT_EQ(diffusion_distance(g, 0, 1), diffusion_distance(g, 1, 0));
}

TEST(DiffusionDistance, IndexOutOfRange) {
  const MarkovGraph g = build_markov(build_kernel(Eigen::MatrixXd::Zero(2, 2), {1.0, 1}));
  try {
    diffusion_distance(g, 0, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
  }
}

TEST(DiffusionDistance, UsesPowerForLaterTimes) {
  std::mt19937_64 rng(7);
  const auto rows = dmap::testing::random_rows(8, 2, rng);
  const auto g = build_markov(build_kernel(pairwise_sq_distances(rows), {2.0, 3}));
  const Eigen::MatrixXd p3 = g.transition * g.transition * g.transition;
  EXPECT_NEAR(diffusion_distance(g, 1, 4), (p3.row(1) - p3.row(4)).norm(), 1e-13);
}

TEST(MatrixCsv, SeventeenDigits) {
  const auto dir = dmap::testing::scratch_dir("csv");
  Eigen::MatrixXd m(1, 2);
  m << 1.0 / 3.0, 2.0;
  write_matrix_csv(dir / "m.csv", m);
  std::ifstream in(dir / "m.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "0.33333333333333331,2");
}

}  // namespace
}  // namespace dmap
