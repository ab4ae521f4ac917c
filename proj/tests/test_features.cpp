#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles/feature_oracle.hpp"
#include "vibrodiag/features.hpp"

using namespace vibrodiag;

namespace {

Spectrum spectrum_of(std::vector<double> x, std::vector<double> y, std::vector<double> z) {
  Spectrum s;
  s.magnitudes_x = std::move(x);
  s.magnitudes_y = std::move(y);
  s.magnitudes_z = std::move(z);
  s.n_time = 2 * (s.magnitudes_x.size() - 1);
  s.bin_hz = 1.0;
  return s;
}

std::vector<double> random_magnitudes(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> dist(0.3);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

double d(const AxisDescriptors& a, Descriptor which) { return a.values[static_cast<std::size_t>(which)]; }

void expect_rel(double a, double b, double tol) {
  EXPECT_LE(std::abs(a - b), tol * std::max(std::abs(a), std::abs(b))) << a << " vs " << b;
}

FeatureVector row_with(double fill, ConditionLabel label = ConditionLabel::Normal) {
  FeatureVector v;
  v.values.fill(fill);
  v.label = label;
  return v;
}

}  // namespace

TEST(DescribeAxis, TwoPointArithmetic) {
  const std::vector<double> bins = {0.0, 4.0};
  const auto a = describe_axis(bins);
  EXPECT_EQ(a.flags, kFlagNone);
  EXPECT_DOUBLE_EQ(d(a, Descriptor::Mean), 2.0);
  EXPECT_DOUBLE_EQ(d(a, Descriptor::Std), 2.0);
  EXPECT_NEAR(d(a, Descriptor::Rms), 2.828427, 1e-6);
  EXPECT_DOUBLE_EQ(d(a, Descriptor::PeakToPeak), 4.0);
  EXPECT_DOUBLE_EQ(d(a, Descriptor::ImpulseFactor), 2.0);
  EXPECT_NEAR(d(a, Descriptor::CrestFactor), 1.414214, 1e-6);
  EXPECT_DOUBLE_EQ(d(a, Descriptor::ShapeFactor), 0.5);
  EXPECT_DOUBLE_EQ(d(a, Descriptor::Skewness), 0.0);
  EXPECT_DOUBLE_EQ(d(a, Descriptor::Kurtosis), 1.0);
}

TEST(DescribeAxis, ZeroVarianceIsDegenerate) {
  const std::vector<double> bins = {2.0, 2.0, 2.0};
  const auto a = describe_axis(bins);
  EXPECT_TRUE(a.flags & kFlagDegenerateSignal);
  EXPECT_DOUBLE_EQ(d(a, Descriptor::Mean), 2.0);
  EXPECT_DOUBLE_EQ(d(a, Descriptor::Std), 0.0);
  EXPECT_TRUE(std::isnan(d(a, Descriptor::Skewness)));
  EXPECT_TRUE(std::isnan(d(a, Descriptor::Kurtosis)));
}

TEST(DescribeAxis, ZeroMeanFlagsImpulseAndShape) {
  const std::vector<double> bins = {0.0, 0.0, 0.0, 0.0};
  const auto a = describe_axis(bins);
  EXPECT_TRUE(a.flags & kFlagZeroMean);
  EXPECT_TRUE(a.flags & kFlagDegenerateSignal);
  EXPECT_TRUE(std::isnan(d(a, Descriptor::ImpulseFactor)));
  EXPECT_TRUE(std::isnan(d(a, Descriptor::ShapeFactor)));
}

TEST(DescribeAxis, ConventionalShapeFactor) {
  const std::vector<double> bins = {1.0, 3.0};
  const auto a = describe_axis(bins, ShapeFactorMode::Conventional);
  EXPECT_DOUBLE_EQ(d(a, Descriptor::ShapeFactor), std::sqrt(5.0) / 2.0);
}

TEST(ExtractFeatures, MatchesDirectSummationOracle) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 8 + rng() % 1000;
    const auto spec =
        spectrum_of(random_magnitudes(n, rng), random_magnitudes(n, rng), random_magnitudes(n, rng));
    const auto fv = extract_features(spec);
    EXPECT_FALSE(fv.filterable());
    const std::array<const std::vector<double>*, 3> axes = {&spec.magnitudes_x, &spec.magnitudes_y,
                                                            &spec.magnitudes_z};
    for (std::size_t a = 0; a < 3; ++a) {
      const auto ref = oracle::spectral_statistics(*axes[a]);
      for (std::size_t k = 0; k < 9; ++k) expect_rel(fv.values[a * 9 + k], ref[k], 1e-12);
    }
  }
}

TEST(ExtractFeatures, OrderIsDescriptorsWithinAxis) {
  const auto spec = spectrum_of({0, 4}, {1, 1, 4}, {2, 6});
  const auto fv = extract_features(spec, {}, ConditionLabel::BearingFault, "p.csv");
  EXPECT_EQ(fv.label, ConditionLabel::BearingFault);
  EXPECT_EQ(fv.source_path, "p.csv");
  EXPECT_DOUBLE_EQ(fv.values[feature_index(Descriptor::Mean, 0)], 2.0);
  EXPECT_DOUBLE_EQ(fv.values[feature_index(Descriptor::Mean, 1)], 2.0);
  EXPECT_DOUBLE_EQ(fv.values[feature_index(Descriptor::Mean, 2)], 4.0);
  EXPECT_DOUBLE_EQ(fv.values[feature_index(Descriptor::PeakToPeak, 1)], 3.0);
  EXPECT_EQ(feature_column_name(0), "mean_x");
  EXPECT_EQ(feature_column_name(26), "shape_z");
}

TEST(ExtractFeatures, DegenerateAxisFlagsWholeVector) {
  const auto fv = extract_features(spectrum_of({1, 2, 3}, {2, 2, 2}, {1, 5, 2}));
  EXPECT_TRUE(fv.filterable());
  EXPECT_TRUE(fv.flags & kFlagDegenerateSignal);
}

TEST(ExtractFeatures, PermutationInvariance) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 16 + rng() % 300;
    auto x = random_magnitudes(n, rng), y = random_magnitudes(n, rng), z = random_magnitudes(n, rng);
    const auto before = extract_features(spectrum_of(x, y, z));
    std::shuffle(x.begin(), x.end(), rng);
    std::shuffle(y.begin(), y.end(), rng);
    std::shuffle(z.begin(), z.end(), rng);
    const auto after = extract_features(spectrum_of(x, y, z));
    for (std::size_t k = 0; k < kNumFeatures; ++k) expect_rel(before.values[k], after.values[k], 1e-10);
  }
}

TEST(ExtractFeatures, ScalingProperty) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> alpha_dist(0.01, 100.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 16 + rng() % 300;
    const auto x = random_magnitudes(n, rng);
    const double alpha = alpha_dist(rng);
    std::vector<double> xs(x);
    for (double& v : xs) v *= alpha;
    const auto a = describe_axis(x), b = describe_axis(xs);
    for (auto which : {Descriptor::Mean, Descriptor::Std, Descriptor::Rms, Descriptor::PeakToPeak})
      expect_rel(d(b, which), alpha * d(a, which), 1e-10);
    expect_rel(d(b, Descriptor::ShapeFactor), d(a, Descriptor::ShapeFactor) / alpha, 1e-10);
    for (auto which : {Descriptor::ImpulseFactor, Descriptor::Skewness, Descriptor::Kurtosis,
                       Descriptor::CrestFactor})
      expect_rel(d(b, which), d(a, which), 1e-10);
  }
}

TEST(NormalizeMinmax, ColumnExamples) {
  FeatureMatrix m;
  m.rows = {row_with(0), row_with(0), row_with(0)};
  const double col0[] = {1, 2, 4}, col1[] = {5, 5, 5};
  for (int r = 0; r < 3; ++r) {
    m.rows[r].values[0] = col0[r];
    m.rows[r].values[1] = col1[r];
  }
  const auto out = normalize_minmax(m);
  EXPECT_EQ(out.normalization.kind, Normalization::Kind::MinMax);
  EXPECT_DOUBLE_EQ(out.rows[0].values[0], 0.0);
  EXPECT_DOUBLE_EQ(out.rows[1].values[0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(out.rows[2].values[0], 1.0);
  for (int r = 0; r < 3; ++r) EXPECT_EQ(out.rows[r].values[1], 0.0);
  EXPECT_TRUE(out.normalization.constant(1));
  EXPECT_FALSE(out.normalization.constant(0));

  FeatureMatrix two;
  two.rows = {row_with(3), row_with(7)};
  const auto t = normalize_minmax(two);
  EXPECT_EQ(t.rows[0].values[5], 0.0);
  EXPECT_EQ(t.rows[1].values[5], 1.0);
}

TEST(NormalizeMinmax, TooFewRows) {
  FeatureMatrix m;
  EXPECT_THROW(normalize_minmax(m), Error);
  m.rows = {row_with(1)};
  try {
    normalize_minmax(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyMatrix);
  }
}

TEST(NormalizeMinmax, IdempotentBoundedAndReapplicable) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> dist(5.0, 20.0);
  FeatureMatrix m;
  for (int r = 0; r < 40; ++r) {
    FeatureVector v;
    for (double& x : v.values) x = dist(rng);
    m.rows.push_back(v);
  }
  const auto once = normalize_minmax(m);
  const auto twice = normalize_minmax(once);
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    EXPECT_EQ(once.rows[r].values, twice.rows[r].values);
    for (double v : once.rows[r].values) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  // Stored ranges reproduce the transform, also after the second pass.
  const auto reapplied = apply_normalization(m, twice.normalization);
  for (std::size_t r = 0; r < m.rows.size(); ++r)
    for (std::size_t c = 0; c < kNumFeatures; ++c)
      EXPECT_DOUBLE_EQ(reapplied.rows[r].values[c], once.rows[r].values[c]);
}

TEST(DropMissing, RemovesExactlyTheCorruptedRows) {
  FeatureMatrix m;
  for (int r = 0; r < 4; ++r) m.rows.push_back(row_with(r));
  m.rows[2].values[13] = std::nan("");
  auto [kept, dropped] = drop_missing(m);
  EXPECT_EQ(dropped, 1u);
  ASSERT_EQ(kept.rows.size(), 3u);
  EXPECT_EQ(kept.rows[0].values[0], 0.0);
  EXPECT_EQ(kept.rows[1].values[0], 1.0);
  EXPECT_EQ(kept.rows[2].values[0], 3.0);
}

TEST(DropMissing, IdentityWithoutMissingValues) {
  FeatureMatrix m;
  for (int r = 0; r < 5; ++r) m.rows.push_back(row_with(r * 0.5));
  auto [kept, dropped] = drop_missing(m);
  EXPECT_EQ(dropped, 0u);
  ASSERT_EQ(kept.rows.size(), m.rows.size());
  for (std::size_t r = 0; r < m.rows.size(); ++r) EXPECT_EQ(kept.rows[r].values, m.rows[r].values);
}

TEST(DropMissing, KnownCorruptionMask) {
  std::mt19937_64 rng(17);
  FeatureMatrix m;
  std::vector<bool> corrupt(60);
  for (std::size_t r = 0; r < corrupt.size(); ++r) {
    auto v = row_with(static_cast<double>(r));
    corrupt[r] = rng() % 4 == 0;
    if (corrupt[r]) {
      if (r % 3 == 0) v.values[rng() % kNumFeatures] = std::nan("");
      else if (r % 3 == 1) v.values[rng() % kNumFeatures] = INFINITY;
      else v.flags = kFlagDegenerateSignal;
    }
    m.rows.push_back(v);
  }
  auto [kept, dropped] = drop_missing(m);
  std::vector<double> expected;
  for (std::size_t r = 0; r < corrupt.size(); ++r)
    if (!corrupt[r]) expected.push_back(static_cast<double>(r));
  EXPECT_EQ(dropped, static_cast<std::size_t>(std::count(corrupt.begin(), corrupt.end(), true)));
  ASSERT_EQ(kept.rows.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(kept.rows[i].values[0], expected[i]);
    EXPECT_EQ(kept.rows[i].values, row_with(expected[i]).values);
  }
}

TEST(DropMissing, AllRowsDropped) {
  FeatureMatrix m;
  m.rows = {row_with(std::nan(""))};
  try {
    drop_missing(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllRowsDropped);
  }
}

TEST(FeatureCsv, HeaderAndRoundTrip) {
  FeatureMatrix m;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> dist;
  for (int r = 0; r < 8; ++r) {
    FeatureVector v;
    for (double& x : v.values) x = dist(rng);
    v.label = static_cast<ConditionLabel>(r % 4);
    v.source_path = r == 3 ? "odd, \"name\".csv" : "dir/file" + std::to_string(r) + ".csv";
    m.rows.push_back(v);
  }
  const auto csv = features_to_csv(m);
  EXPECT_TRUE(csv.starts_with(
      "label,source,mean_x,std_x,rms_x,pp_x,if_x,skew_x,kurt_x,crest_x,shape_x,mean_y,std_y,rms_y,pp_y,"
      "if_y,skew_y,kurt_y,crest_y,shape_y,mean_z,std_z,rms_z,pp_z,if_z,skew_z,kurt_z,crest_z,shape_z\n"));
  const auto back = features_from_csv(csv);
  ASSERT_EQ(back.rows.size(), m.rows.size());
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    EXPECT_EQ(back.rows[r].values, m.rows[r].values);
    EXPECT_EQ(back.rows[r].label, m.rows[r].label);
    EXPECT_EQ(back.rows[r].source_path, m.rows[r].source_path);
  }
  EXPECT_THROW(features_from_csv("label,source\n"), Error);
  EXPECT_THROW(features_from_csv(feature_csv_header() + "\n7,a" + std::string(27, ',') + "\n"), Error);
}

TEST(NormalizationCsv, RoundTrip) {
  Normalization n;
  n.kind = Normalization::Kind::MinMax;
  for (std::size_t c = 0; c < kNumFeatures; ++c) {
    n.min[c] = -1.0 / (c + 3.0);
    n.max[c] = c * 1.7;
  }
  const auto back = normalization_from_csv(normalization_to_csv(n));
  EXPECT_EQ(back.min, n.min);
  EXPECT_EQ(back.max, n.max);
}

TEST(MinmaxSpectrum, MapsEachAxisToUnitRange) {
  auto s = spectrum_of({2, 4, 6}, {1, 1, 1}, {0, 10, 5});
  minmax_spectrum(s);
  EXPECT_EQ(s.magnitudes_x, (std::vector<double>{0, 0.5, 1}));
  EXPECT_EQ(s.magnitudes_y, (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(s.magnitudes_z, (std::vector<double>{0, 1, 0.5}));
}
