#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles/qp_oracle.hpp"
#include "vibrodiag/classifiers/svm.hpp"

using namespace vibrodiag;

namespace {

struct Problem {
  RowMatrix x;
  std::vector<int> labels;  // 0 / 1
  std::vector<int> y;       // +1 / -1
};

// Two Gaussian blobs in 2-D; separable when `gap` is large.
Problem blobs(std::size_t n, double gap, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Problem p;
  p.x = RowMatrix(0, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const int cls = i % 2 == 0 ? 0 : 1;
    const double cx = cls == 0 ? -gap : gap;
    const std::array<double, 2> row = {cx + dist(rng), dist(rng)};
    p.x.push_row(row);
    p.labels.push_back(cls);
    p.y.push_back(cls == 0 ? 1 : -1);
  }
  return p;
}

std::vector<std::vector<double>> dense_gram(const RowMatrix& x, double gamma) {
  std::vector<std::vector<double>> k(x.rows(), std::vector<double>(x.rows()));
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.rows(); ++j) k[i][j] = svm::rbf(x.row(i), x.row(j), gamma);
  return k;
}

}  // namespace

TEST(SvmFit, TwoPointsSplitAtTheBisector) {
  RowMatrix x(0, 2);
  x.push_row(std::array<double, 2>{0.0, 0.0});
  x.push_row(std::array<double, 2>{2.0, 0.0});
  const std::vector<int> labels = {0, 1};
  svm::Params params;
  params.c = 1.0;
  params.gamma = 0.5;
  const auto model = svm::fit(x, labels, params);
  ASSERT_EQ(model.machines.size(), 1u);
  RowMatrix mid(0, 2);
  mid.push_row(std::array<double, 2>{1.0, 0.0});
  mid.push_row(std::array<double, 2>{1.0, 5.0});
  mid.push_row(std::array<double, 2>{-1.0, 0.0});
  mid.push_row(std::array<double, 2>{3.0, 0.0});
  const auto f = svm::decision_values(model, mid);
  EXPECT_NEAR(f(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(f(1, 0), 0.0, 1e-12);
  EXPECT_EQ(svm::predict(model, mid)[2], 0);
  EXPECT_EQ(svm::predict(model, mid)[3], 1);
}

TEST(SvmSolve, MatchesReferenceQpObjectiveAndKkt) {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = blobs(40, 0.8, rng);  // overlapping: some alphas at C
    const double gamma = 0.5, c = 2.0;
    const svm::Gram gram(p.x, gamma);
    svm::Params params;
    params.c = c;
    std::vector<double> trace;
    const auto res = svm::solve_binary(gram, p.y, params, &trace);
    ASSERT_TRUE(res.converged);
    const auto ref = oracle::solve_svm_dual(dense_gram(p.x, gamma), p.y, c);
    EXPECT_NEAR(res.objective, ref.dual_objective, 1e-4);

    double balance = 0.0;
    for (std::size_t i = 0; i < res.alpha.size(); ++i) {
      EXPECT_GE(res.alpha[i], 0.0);
      EXPECT_LE(res.alpha[i], c);
      balance += res.alpha[i] * p.y[i];
    }
    EXPECT_NEAR(balance, 0.0, 1e-8);

    for (std::size_t i = 0; i < res.alpha.size(); ++i) {
      double f = res.bias;
      for (std::size_t j = 0; j < res.alpha.size(); ++j) f += res.alpha[j] * p.y[j] * gram(i, j);
      const double margin = p.y[i] * f;
      if (res.alpha[i] > 1e-8 && res.alpha[i] < c - 1e-8) {
        EXPECT_NEAR(margin, 1.0, 1e-3);
      } else if (res.alpha[i] <= 1e-8) {
        EXPECT_GE(margin, 1.0 - 1e-3);
      } else {
        EXPECT_LE(margin, 1.0 + 1e-3);
      }
    }

    for (std::size_t t = 1; t < trace.size(); ++t) EXPECT_GE(trace[t], trace[t - 1] - 1e-12);
  }
}

TEST(SvmFit, PermutingTrainingRowsKeepsPredictions) {
  std::mt19937_64 rng(5);
  const auto p = blobs(60, 1.0, rng);
  svm::Params params;
  params.c = 10.0;
  params.gamma = 0.3;
  params.tolerance = 1e-6;
  const auto model = svm::fit(p.x, p.labels, params);

  std::vector<std::size_t> order(p.x.rows());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const RowMatrix xs = p.x.select_rows(order);
  std::vector<int> ls;
  for (auto i : order) ls.push_back(p.labels[i]);
  const auto shuffled = svm::fit(xs, ls, params);

  const auto queries = blobs(200, 1.0, rng).x;
  const auto f1 = svm::decision_values(model, queries);
  const auto f2 = svm::decision_values(shuffled, queries);
  std::size_t agree = 0;
  for (std::size_t r = 0; r < queries.rows(); ++r) {
    EXPECT_NEAR(f1(r, 0), f2(r, 0), 1e-4);
    agree += (f1(r, 0) > 0) == (f2(r, 0) > 0);
  }
  EXPECT_GE(agree, queries.rows() - 1);
}

TEST(SvmFit, SignOfDecisionMatchesBinaryPrediction) {
  std::mt19937_64 rng(8);
  const auto p = blobs(50, 1.2, rng);
  svm::Params params;
  const auto model = svm::fit(p.x, p.labels, params);
  const auto queries = blobs(100, 1.2, rng).x;
  const auto f = svm::decision_values(model, queries);
  const auto pred = svm::predict(model, queries);
  for (std::size_t r = 0; r < queries.rows(); ++r)
    if (f(r, 0) != 0.0) {
      EXPECT_EQ(pred[r], f(r, 0) > 0 ? 0 : 1);
    }
}

TEST(SvmFit, AutoGammaUsesFeatureVariance) {
  RowMatrix x(0, 2);
  x.push_row(std::array<double, 2>{0.0, 2.0});
  x.push_row(std::array<double, 2>{2.0, 0.0});
  // all values {0,2,2,0}: variance 1, d = 2
  EXPECT_DOUBLE_EQ(svm::auto_gamma(x), 0.5);
}

TEST(SvmPredict, OneVsOneVotesAndTieBreak) {
  svm::Model model;
  model.classes = {0, 1, 2};
  model.machines.resize(3);
  model.machines[0].positive = 0; model.machines[0].negative = 1;
  model.machines[1].positive = 0; model.machines[1].negative = 2;
  model.machines[2].positive = 1; model.machines[2].negative = 2;
  RowMatrix d(0, 3);
  d.push_row(std::array<double, 3>{1.0, 1.0, -1.0});    // 0 wins twice
  d.push_row(std::array<double, 3>{1.0, -1.0, 1.0});    // cycle: 0,1,2 one vote each
  d.push_row(std::array<double, 3>{0.1, -0.2, 3.0});    // cycle, class 1 strongest
  d.push_row(std::array<double, 3>{-1.0, -1.0, -1.0});  // 2 wins twice
  const auto pred = svm::predict_from_decisions(model, d);
  EXPECT_EQ(pred[0], 0);
  EXPECT_EQ(pred[1], 0);
  EXPECT_EQ(pred[2], 1);
  EXPECT_EQ(pred[3], 2);
}
