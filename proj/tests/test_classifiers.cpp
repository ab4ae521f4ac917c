#include <gtest/gtest.h>

#include <random>

#include "vibrodiag/classifiers.hpp"
#include "vibrodiag/features.hpp"

using namespace vibrodiag;

namespace {

// Four well separated blobs in `d` dimensions, one per condition code.
LabeledData four_blobs(std::size_t per_class, std::size_t d, double sep, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  LabeledData data;
  data.features = RowMatrix(0, d);
  std::vector<double> row(d);
  for (std::size_t i = 0; i < per_class * 4; ++i) {
    const int cls = static_cast<int>(i % 4);
    for (std::size_t f = 0; f < d; ++f) row[f] = dist(rng) + (f % 4 == static_cast<std::size_t>(cls) ? sep : 0.0);
    data.features.push_row(row);
    data.labels.push_back(cls);
  }
  return data;
}

ClassifierSpec spec_of(ClassifierKind kind) {
  ClassifierSpec s;
  s.kind = kind;
  s.knn_k = 3;
  return s;
}

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

}  // namespace

class AllKinds : public ::testing::TestWithParam<ClassifierKind> {};

TEST_P(AllKinds, SeparatedBlobsAreClassifiedPerfectly) {
  const auto train = four_blobs(30, 8, 10.0, 1);
  const auto test = four_blobs(25, 8, 10.0, 2);
  const auto model = fit(spec_of(GetParam()), train.features, train.labels);
  EXPECT_EQ(model_kind(model), GetParam());
  EXPECT_EQ(model_dims(model), 8u);
  EXPECT_EQ(predict(model, test.features), test.labels);
}

TEST_P(AllKinds, SaveLoadRoundTripIsBitExact) {
  const auto train = four_blobs(20, 5, 2.0, 3);
  const auto test = four_blobs(50, 5, 2.0, 4);
  const auto model = fit(spec_of(GetParam()), train.features, train.labels);
  const auto text = save_model(model);
  const auto back = load_model(text);
  EXPECT_EQ(save_model(back), text);
  EXPECT_EQ(predict(back, test.features), predict(model, test.features));
  if (GetParam() == ClassifierKind::Svm) {
    const auto a = decision_values(model, test.features), b = decision_values(back, test.features);
    EXPECT_EQ(a.data().size(), b.data().size());
    for (std::size_t i = 0; i < a.data().size(); ++i) EXPECT_EQ(a.data()[i], b.data()[i]);
  }
}

TEST_P(AllKinds, RejectsWrongDimensionAtPredict) {
  const auto train = four_blobs(10, 4, 5.0, 5);
  const auto model = fit(spec_of(GetParam()), train.features, train.labels);
  const auto wrong = four_blobs(2, 3, 5.0, 6);
  EXPECT_EQ(code_of([&] { predict(model, wrong.features); }), ErrorCode::DimensionMismatch);
}

INSTANTIATE_TEST_SUITE_P(Classifiers, AllKinds,
                         ::testing::Values(ClassifierKind::Svm, ClassifierKind::Knn, ClassifierKind::Gnb),
                         [](const auto& info) { return std::string(kind_name(info.param)); });

TEST(ClassifierFit, ErrorKinds) {
  auto data = four_blobs(5, 3, 5.0, 7);
  const auto svm_spec = spec_of(ClassifierKind::Svm);
  const std::vector<int> one_class(data.labels.size(), 2);
  EXPECT_EQ(code_of([&] { fit(svm_spec, data.features, one_class); }), ErrorCode::SingleClass);
  const std::vector<int> short_labels(3, 0);
  EXPECT_EQ(code_of([&] { fit(svm_spec, data.features, short_labels); }), ErrorCode::DimensionMismatch);
  auto bad = data;
  bad.features(1, 1) = std::nan("");
  EXPECT_EQ(code_of([&] { fit(svm_spec, bad.features, bad.labels); }), ErrorCode::NonFiniteInput);
  auto bad_c = svm_spec;
  bad_c.svm_c = 0.0;
  EXPECT_EQ(code_of([&] { fit(bad_c, data.features, data.labels); }), ErrorCode::InvalidSpec);
  auto bad_eps = spec_of(ClassifierKind::Gnb);
  bad_eps.gnb_smoothing = 0.0;
  EXPECT_EQ(code_of([&] { fit(bad_eps, data.features, data.labels); }), ErrorCode::InvalidSpec);
}

TEST(ClassifierDecision, OnlySvmHasDecisionValues) {
  const auto data = four_blobs(5, 3, 5.0, 8);
  const auto model = fit(spec_of(ClassifierKind::Gnb), data.features, data.labels);
  EXPECT_EQ(code_of([&] { decision_values(model, data.features); }), ErrorCode::WrongModelKind);
  const auto svm = fit(spec_of(ClassifierKind::Svm), data.features, data.labels);
  EXPECT_EQ(decision_values(svm, data.features).cols(), 6u);
}

TEST(ModelFile, MalformedInputIsRejected) {
  EXPECT_EQ(code_of([] { load_model(""); }), ErrorCode::MalformedModel);
  EXPECT_EQ(code_of([] { load_model("vibrodiag-model v1 tree\n"); }), ErrorCode::MalformedModel);
  const auto data = four_blobs(5, 3, 5.0, 9);
  auto text = save_model(fit(spec_of(ClassifierKind::Knn), data.features, data.labels));
  text.resize(text.size() / 2);
  EXPECT_EQ(code_of([&] { load_model(text); }), ErrorCode::MalformedModel);
}

TEST(ClassifierSpecText, ParseAndDescribe) {
  EXPECT_EQ(parse_kind("svm"), ClassifierKind::Svm);
  EXPECT_EQ(parse_kind("GNB"), ClassifierKind::Gnb);
  EXPECT_FALSE(parse_kind("tree").has_value());
  ClassifierSpec s;
  s.kind = ClassifierKind::Knn;
  s.knn_k = 7;
  EXPECT_EQ(describe(s), "knn K=7");
}
