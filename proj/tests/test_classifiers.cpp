#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "dmap/classifiers.hpp"
#include "dmap/metrics.hpp"
#include "lda_oracle.hpp"

namespace dmap {
namespace {

using testing::brute_force_lda_2d;
using testing::gaussian_classes;
using testing::Labeled;

TEST(Lda, SymmetricOneDimensionalClasses) {
  Eigen::MatrixXd x(6, 1);
  x << -1.2, -1.0, -0.8, 0.8, 1.0, 1.2;
  const std::vector<int> y = {0, 0, 0, 1, 1, 1};
  const LdaModel model = lda_fit(x, y);
  EXPECT_GT(model.weights[0], 0.0);
  EXPECT_NEAR(model.bias, 0.0, 1e-12);

  Eigen::MatrixXd means(2, 1);
  means << -1.0, 1.0;
  EXPECT_EQ(lda_predict(model, means).labels, (std::vector<int>{0, 1}));
}

TEST(Lda, BoundaryTieGoesToNormal) {
  Eigen::MatrixXd x(4, 1);
  x << -2.0, -1.0, 1.0, 2.0;
  const LdaModel model = lda_fit(x, std::vector<int>{0, 0, 1, 1});
  Eigen::MatrixXd origin = Eigen::MatrixXd::Zero(1, 1);
  const Prediction p = lda_predict(model, origin);
  EXPECT_EQ(p.scores[0], 0.0);
  EXPECT_EQ(p.labels[0], 0);
}

TEST(Lda, ErrorsAndCovariance) {
  std::mt19937_64 rng(31);
  const Labeled data = gaussian_classes(rng, 20, 4, 2.0);
  try {
    lda_fit(data.x, std::vector<int>(40, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingleClass);
  }
  EXPECT_THROW(lda_fit(data.x, std::vector<int>(39, 0)), Error);
  const LdaModel model = lda_fit(data.x, data.y);
  EXPECT_LT((model.pooled_covariance - model.pooled_covariance.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(model.pooled_covariance).eigenvalues().minCoeff(), 0.0);
  try {
    lda_predict(model, Eigen::MatrixXd::Zero(2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(Lda, RankDeficientStillInvertible) {
  std::mt19937_64 rng(32);
  const Labeled data = gaussian_classes(rng, 5, 30, 3.0);
  const LdaModel model = lda_fit(data.x, data.y);
  EXPECT_TRUE(model.weights.allFinite());
  EXPECT_EQ(lda_predict(model, data.x).labels, data.y);
}

TEST(Lda, MatchesBruteForceOnRandomPlanes) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> sep(0.5, 4.0);
  std::uniform_int_distribution<int> size(5, 40);
  for (int trial = 0; trial < 100; ++trial) {
    const Labeled train = gaussian_classes(rng, size(rng), 2, sep(rng));
    const Labeled test = gaussian_classes(rng, 30, 2, 1.5);
    EXPECT_EQ(lda_predict(lda_fit(train.x, train.y), test.x).labels, brute_force_lda_2d(train, test.x))
        << "trial " << trial;
  }
}

TEST(Lda, InvariantUnderShiftsAndDiagonalScalings) {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> scale(0.2, 5.0);
  std::normal_distribution<double> shift(0.0, 10.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Labeled train = gaussian_classes(rng, 30, 3, 2.0);
    const Labeled test = gaussian_classes(rng, 30, 3, 2.0);
    const auto base = lda_predict(lda_fit(train.x, train.y), test.x).labels;

    Eigen::RowVectorXd offset(3);
    for (int d = 0; d < 3; ++d) offset[d] = shift(rng);
    EXPECT_EQ(lda_predict(lda_fit(train.x.rowwise() + offset, train.y), test.x.rowwise() + offset).labels, base);

    Eigen::VectorXd s(3);
    for (int d = 0; d < 3; ++d) s[d] = scale(rng);
    const Eigen::MatrixXd tx = train.x * s.asDiagonal();
    const Eigen::MatrixXd sx = test.x * s.asDiagonal();
    const LdaModel scaled_model = lda_fit(tx, train.y);
    const auto scaled = lda_predict(scaled_model, sx).labels;
    // Shrinkage toward (trace/k) I is not scale-invariant: it perturbs the discriminant by a
    // relative amount of about gamma * (trace/k) / lambda_min. Points inside that band may flip.
    const Eigen::VectorXd ev =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(scaled_model.pooled_covariance).eigenvalues();
    const double band = 10.0 * kLdaShrinkage * (ev.sum() / 3.0) / ev.minCoeff();
    const auto scores = lda_predict(lda_fit(train.x, train.y), test.x).scores;
    double max_score = 0.0;
    for (double v : scores) max_score = std::max(max_score, std::abs(v));
    for (std::size_t i = 0; i < base.size(); ++i)
      if (std::abs(scores[i]) > band * max_score) {
        EXPECT_EQ(scaled[i], base[i]) << scores[i];
      }
  }
}

TEST(Logistic, SymmetricClassesHaveZeroBias) {
  Eigen::MatrixXd x(8, 1);
  x << -2.0, -1.5, -1.0, 0.5, -0.5, 1.0, 1.5, 2.0;
  const std::vector<int> y = {0, 0, 0, 0, 1, 1, 1, 1};
  const LogisticModel model = logistic_fit(x, y);
  EXPECT_TRUE(model.converged);
  EXPECT_NEAR(model.bias, 0.0, 1e-8);
  EXPECT_GT(model.weights[0], 0.0);
}

TEST(Logistic, SeparableDataStaysFinite) {
  Eigen::MatrixXd x(6, 2);
  x << -3, 0, -2, 1, -1, 0, 1, 0, 2, -1, 3, 0;
  const std::vector<int> y = {0, 0, 0, 1, 1, 1};
  const LogisticModel model = logistic_fit(x, y);
  EXPECT_TRUE(model.weights.allFinite());
  EXPECT_TRUE(std::isfinite(model.bias));
  EXPECT_EQ(logistic_predict(model, x).labels, y);
}

TEST(Logistic, GradientVanishesAndMatchesFiniteDifferences) {
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 10; ++trial) {
    const Labeled data = gaussian_classes(rng, 25, 3, 1.0);
    const LogisticOptions opt;
    const LogisticModel model = logistic_fit(data.x, data.y, opt);
    ASSERT_TRUE(model.converged);
    const Eigen::VectorXd grad = logistic_gradient(data.x, data.y, model.weights, model.bias, opt.l2);
    EXPECT_LT(grad.cwiseAbs().maxCoeff(), 1e-6);

    // Central differences of the objective at a perturbed point.
    Eigen::VectorXd w = model.weights.array() + 0.3;
    const double b = model.bias - 0.2;
    const Eigen::VectorXd analytic = logistic_gradient(data.x, data.y, w, b, opt.l2);
    const double h = 1e-6;
    for (int d = 0; d <= 3; ++d) {
      Eigen::VectorXd wp = w, wm = w;
      double bp = b, bm = b;
      if (d < 3) {
        wp[d] += h;
        wm[d] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double numeric = (logistic_objective(data.x, data.y, wp, bp, opt.l2) -
                              logistic_objective(data.x, data.y, wm, bm, opt.l2)) / (2 * h);
      EXPECT_NEAR(analytic[d], numeric, 1e-6);
    }
  }
}

TEST(Logistic, LossDecreasesMonotonically) {
  std::mt19937_64 rng(36);
  const Labeled data = gaussian_classes(rng, 40, 5, 0.8);
  const LogisticModel model = logistic_fit(data.x, data.y);
  ASSERT_GE(model.loss_history.size(), 2u);
  for (std::size_t i = 1; i < model.loss_history.size(); ++i)
    EXPECT_LT(model.loss_history[i], model.loss_history[i - 1]);
}

TEST(Logistic, SingleClassRejected) {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 2);
  EXPECT_THROW(logistic_fit(x, std::vector<int>{1, 1, 1}), Error);
}

TEST(Classifier, JsonRoundTripPredictsIdentically) {
  std::mt19937_64 rng(37);
  const Labeled data = gaussian_classes(rng, 20, 3, 1.5);
  for (ClassifierKind kind : {ClassifierKind::LDA, ClassifierKind::Logistic}) {
    const Classifier c = fit_classifier(kind, data.x, data.y);
    const nlohmann::json j = nlohmann::json::parse(to_json(c).dump());
    const Classifier back = classifier_from_json(j);
    EXPECT_EQ(back.kind(), kind);
    EXPECT_EQ(back.predict(data.x).scores, c.predict(data.x).scores);
  }
  EXPECT_FALSE(parse_classifier("svm"));
}

TEST(Metrics, PerfectPrediction) {
  const std::vector<int> y = {0, 1, 1, 0};
  const Metrics m = compute_metrics(y, y);
  EXPECT_EQ(*m.accuracy, 1.0);
  EXPECT_EQ(*m.sensitivity, 1.0);
  EXPECT_EQ(*m.specificity, 1.0);
  EXPECT_EQ(*m.precision, 1.0);
}

TEST(Metrics, HandTabulatedCounts) {
  std::vector<int> pred, truth;
  auto push = [&](int p, int t, int count) {
    for (int i = 0; i < count; ++i) {
      pred.push_back(p);
      truth.push_back(t);
    }
  };
  push(1, 1, 48);
  push(0, 1, 2);
  push(0, 0, 42);
  push(1, 0, 8);
  const Metrics m = compute_metrics(pred, truth);
  EXPECT_EQ(m.confusion.tp, 48u);
  EXPECT_EQ(m.confusion.fn, 2u);
  EXPECT_EQ(m.confusion.tn, 42u);
  EXPECT_EQ(m.confusion.fp, 8u);
  EXPECT_NEAR(*m.accuracy, 0.90, 1e-15);
  EXPECT_NEAR(*m.sensitivity, 0.96, 1e-15);
  EXPECT_NEAR(*m.specificity, 0.84, 1e-15);
  EXPECT_NEAR(*m.precision, 0.8571428571428571, 1e-15);

  std::mt19937_64 rng(38);
  std::vector<std::size_t> order(pred.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> p2, t2;
  for (auto i : order) {
    p2.push_back(pred[i]);
    t2.push_back(truth[i]);
  }
  const Metrics shuffled = compute_metrics(p2, t2);
  EXPECT_EQ(shuffled.accuracy, m.accuracy);
  EXPECT_EQ(shuffled.precision, m.precision);
}

TEST(Metrics, UndefinedRatiosAreAbsent) {
  const Metrics m = compute_metrics(std::vector<int>{0, 0, 0}, std::vector<int>{0, 1, 0});
  EXPECT_FALSE(m.precision);
  EXPECT_EQ(*m.sensitivity, 0.0);
  const Metrics only_normal = compute_metrics(std::vector<int>{0, 0}, std::vector<int>{0, 0});
  EXPECT_FALSE(only_normal.sensitivity);
  EXPECT_FALSE(only_normal.precision);
  EXPECT_EQ(*only_normal.specificity, 1.0);
  EXPECT_THROW(compute_metrics(std::vector<int>{}, std::vector<int>{}), Error);
  EXPECT_THROW(compute_metrics(std::vector<int>{0}, std::vector<int>{0, 1}), Error);
}

}  // namespace
}  // namespace dmap
