#include <gtest/gtest.h>

#include <random>

#include "oracles/knn_oracle.hpp"
#include "vibrodiag/classifiers.hpp"

using namespace vibrodiag;

TEST(Knn, SingleNeighbourExample) {
  RowMatrix x(0, 1);
  for (double v : {0.0, 1.0, 10.0}) x.push_row(std::array<double, 1>{v});
  const std::vector<int> labels = {0, 0, 1};
  const auto model = knn::fit(x, labels, 1);
  RowMatrix q(0, 1);
  q.push_row(std::array<double, 1>{9.0});
  q.push_row(std::array<double, 1>{0.4});
  EXPECT_EQ(knn::predict(model, q), (std::vector<int>{1, 0}));
}

TEST(Knn, MatchesFullSortOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr std::size_t n = 500, d = 27, nq = 100;
  RowMatrix x(n, d);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < d; ++f) x(i, f) = u(rng);
    labels[i] = static_cast<int>(rng() % 4);
  }
  RowMatrix q(nq, d);
  for (std::size_t i = 0; i < nq; ++i)
    for (std::size_t f = 0; f < d; ++f) q(i, f) = u(rng);
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < d; ++f) rows[i][f] = x(i, f);
  for (std::size_t k : {1u, 5u, 50u}) {
    const auto model = knn::fit(x, labels, k);
    const auto pred = knn::predict(model, q);
    for (std::size_t i = 0; i < nq; ++i) {
      const auto ref = oracle::knn_full_sort(rows, labels, {q.row(i).begin(), q.row(i).end()}, k);
      EXPECT_EQ(pred[i], ref.label) << "k=" << k << " query " << i;
      EXPECT_EQ(knn::neighbours(model, q.row(i)), ref.neighbours);
    }
  }
}

TEST(Knn, KEqualsNPredictsMajority) {
  std::mt19937_64 rng(3);
  RowMatrix x(0, 2);
  std::vector<int> labels;
  for (int i = 0; i < 21; ++i) {
    x.push_row(std::array<double, 2>{static_cast<double>(rng() % 100), static_cast<double>(rng() % 100)});
    labels.push_back(i < 11 ? 2 : (i < 16 ? 0 : 1));
  }
  const auto model = knn::fit(x, labels, labels.size());
  for (int v : knn::predict(model, x)) EXPECT_EQ(v, 2);
}

TEST(Knn, TiesGoToLowestCode) {
  const std::vector<int> nl = {3, 1, 3, 1};
  EXPECT_EQ(knn::vote(nl), 1);
}

TEST(Knn, KLargerThanTrainingSetIsRejected) {
  RowMatrix x(0, 1);
  for (double v : {0.0, 1.0, 2.0}) x.push_row(std::array<double, 1>{v});
  const std::vector<int> labels = {0, 1, 1};
  ClassifierSpec spec;
  spec.kind = ClassifierKind::Knn;
  spec.knn_k = 4;
  try {
    fit(spec, x, labels);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::KTooLarge);
  }
}
