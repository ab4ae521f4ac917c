#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vibrodiag/error.hpp"
#include "vibrodiag/labels.hpp"
#include "vibrodiag/matrix.hpp"
#include "vibrodiag/spectrum.hpp"
#include "vibrodiag/text.hpp"

namespace vibrodiag {

inline constexpr std::size_t kDescriptorsPerAxis = 9;
inline constexpr std::size_t kNumAxes = 3;
inline constexpr std::size_t kNumFeatures = kDescriptorsPerAxis * kNumAxes;

// Per-axis descriptor order inside a feature vector.
enum class Descriptor : std::size_t {
  Mean, Std, Rms, PeakToPeak, ImpulseFactor, Skewness, Kurtosis, CrestFactor, ShapeFactor,
};

inline constexpr std::array<std::string_view, kDescriptorsPerAxis> kDescriptorShortNames = {
    "mean", "std", "rms", "pp", "if", "skew", "kurt", "crest", "shape"};
inline constexpr std::array<std::string_view, kNumAxes> kAxisNames = {"x", "y", "z"};

inline std::string feature_column_name(std::size_t column) {
  return std::string(kDescriptorShortNames[column % kDescriptorsPerAxis]) + "_" +
         std::string(kAxisNames[column / kDescriptorsPerAxis]);
}

constexpr std::size_t feature_index(Descriptor d, std::size_t axis) noexcept {
  return axis * kDescriptorsPerAxis + static_cast<std::size_t>(d);
}

enum class ShapeFactorMode {
  Reciprocal,    // 1 / mean (default)
  Conventional,  // rms / mean(|x|)
};

// Reasons a vector cannot be used for training.
enum FeatureFlag : std::uint8_t {
  kFlagNone = 0,
  kFlagDegenerateSignal = 1,  // std < 1e-12: skewness and kurtosis undefined
  kFlagZeroMean = 2,          // mean == 0: impulse and shape factor undefined
  kFlagNonFinite = 4,
};

inline constexpr double kDegenerateStd = 1e-12;

struct FeatureVector {
  std::array<double, kNumFeatures> values{};
  ConditionLabel label = ConditionLabel::Normal;
  std::string source_path;
  std::uint8_t flags = kFlagNone;

  bool filterable() const noexcept {
    return flags != kFlagNone ||
           std::any_of(values.begin(), values.end(),
                       [](double v) { return !std::isfinite(v); });
  }
};

struct AxisDescriptors {
  std::array<double, kDescriptorsPerAxis> values{};
  std::uint8_t flags = kFlagNone;
};

/// The nine statistics of one axis' magnitude bins, population (1/N) form.
inline AxisDescriptors describe_axis(std::span<const double> bins,
                                     ShapeFactorMode shape_mode = ShapeFactorMode::Reciprocal) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  AxisDescriptors out;
  if (bins.empty()) {
    out.values.fill(nan);
    out.flags = kFlagNonFinite;
    return out;
  }
  const double n = static_cast<double>(bins.size());
  double sum = 0.0, sum_sq = 0.0, sum_abs = 0.0;
  double lo = bins[0], hi = bins[0];
  for (double v : bins) {
    sum += v;
    sum_sq += v * v;
    sum_abs += std::abs(v);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double mean = sum / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : bins) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  const double std_dev = std::sqrt(m2 / n);
  const double rms = std::sqrt(sum_sq / n);

  auto& f = out.values;
  f[static_cast<std::size_t>(Descriptor::Mean)] = mean;
  f[static_cast<std::size_t>(Descriptor::Std)] = std_dev;
  f[static_cast<std::size_t>(Descriptor::Rms)] = rms;
  f[static_cast<std::size_t>(Descriptor::PeakToPeak)] = hi - lo;
  f[static_cast<std::size_t>(Descriptor::CrestFactor)] = rms > 0.0 ? std::abs(hi) / rms : nan;

  if (std_dev < kDegenerateStd) {
    out.flags |= kFlagDegenerateSignal;
    f[static_cast<std::size_t>(Descriptor::Skewness)] = nan;
    f[static_cast<std::size_t>(Descriptor::Kurtosis)] = nan;
  } else {
    const double s3 = std_dev * std_dev * std_dev;
    f[static_cast<std::size_t>(Descriptor::Skewness)] = m3 / n / s3;
    f[static_cast<std::size_t>(Descriptor::Kurtosis)] = m4 / n / (s3 * std_dev);
  }

  if (mean == 0.0) {
    out.flags |= kFlagZeroMean;
    f[static_cast<std::size_t>(Descriptor::ImpulseFactor)] = nan;
    f[static_cast<std::size_t>(Descriptor::ShapeFactor)] = nan;
  } else {
    f[static_cast<std::size_t>(Descriptor::ImpulseFactor)] = hi / mean;
    f[static_cast<std::size_t>(Descriptor::ShapeFactor)] =
        shape_mode == ShapeFactorMode::Reciprocal
            ? 1.0 / mean
            : (sum_abs > 0.0 ? rms / (sum_abs / n) : nan);
  }
  for (double v : f)
    if (!std::isfinite(v)) out.flags |= kFlagNonFinite;
  return out;
}

struct FeatureOptions {
  ShapeFactorMode shape_factor = ShapeFactorMode::Reciprocal;
};

/// 27-dim vector: the nine descriptors of x, then y, then z. Undefined
/// statistics become NaN and set flags instead of throwing.
inline FeatureVector extract_features(const Spectrum& spec, const FeatureOptions& options = {},
                                      ConditionLabel label = ConditionLabel::Normal,
                                      std::string source_path = {}) {
  FeatureVector fv;
  fv.label = label;
  fv.source_path = std::move(source_path);
  const std::array<const std::vector<double>*, kNumAxes> axes = {
      &spec.magnitudes_x, &spec.magnitudes_y, &spec.magnitudes_z};
  for (std::size_t a = 0; a < kNumAxes; ++a) {
    const auto d = describe_axis(*axes[a], options.shape_factor);
    std::copy(d.values.begin(), d.values.end(),
              fv.values.begin() + static_cast<std::ptrdiff_t>(a * kDescriptorsPerAxis));
    fv.flags |= d.flags;
  }
  return fv;
}

/// Rescales each axis of a spectrum onto [0, 1] over its own bins; constant
/// axes become all zero. Used when normalization is placed before feature
/// extraction.
inline void minmax_spectrum(Spectrum& spec) {
  for (auto* axis : {&spec.magnitudes_x, &spec.magnitudes_y, &spec.magnitudes_z}) {
    if (axis->empty()) continue;
    const auto [lo, hi] = std::minmax_element(axis->begin(), axis->end());
    const double min = *lo, range = *hi - *lo;
    for (double& v : *axis) v = range > 0.0 ? (v - min) / range : 0.0;
  }
}

// ---------------------------------------------------------------------------
// Feature matrix

/// Per-column min-max parameters. `kind == Raw` means no scaling applied.
struct Normalization {
  enum class Kind { Raw, MinMax };
  Kind kind = Kind::Raw;
  std::array<double, kNumFeatures> min{};
  std::array<double, kNumFeatures> max{};

  bool constant(std::size_t column) const noexcept { return !(max[column] > min[column]); }

  double apply(std::size_t column, double v) const noexcept {
    if (kind == Kind::Raw) return v;
    if (constant(column)) return std::isfinite(v) ? 0.0 : v;
    return (v - min[column]) / (max[column] - min[column]);
  }
};

struct FeatureMatrix {
  std::vector<FeatureVector> rows;
  Normalization normalization;

  std::size_t size() const noexcept { return rows.size(); }
};

/// Applies stored min-max parameters to other data (e.g. unseen records).
inline FeatureMatrix apply_normalization(FeatureMatrix matrix, const Normalization& norm) {
  for (auto& row : matrix.rows)
    for (std::size_t c = 0; c < kNumFeatures; ++c) row.values[c] = norm.apply(c, row.values[c]);
  matrix.normalization = norm;
  return matrix;
}

/// x_norm = (x - x_min) / (x_max - x_min) per column over all usable rows.
/// Constant columns map to 0. Rows flagged filterable do not contribute to
/// the column ranges.
inline FeatureMatrix normalize_minmax(const FeatureMatrix& matrix) {
  if (matrix.rows.size() < 2)
    throw Error(ErrorCode::EmptyMatrix, "min-max normalization needs at least 2 rows");
  Normalization fresh;
  fresh.kind = Normalization::Kind::MinMax;
  fresh.min.fill(std::numeric_limits<double>::infinity());
  fresh.max.fill(-std::numeric_limits<double>::infinity());
  bool any = false;
  for (const auto& row : matrix.rows) {
    if (row.filterable()) continue;
    any = true;
    for (std::size_t c = 0; c < kNumFeatures; ++c) {
      fresh.min[c] = std::min(fresh.min[c], row.values[c]);
      fresh.max[c] = std::max(fresh.max[c], row.values[c]);
    }
  }
  if (!any) throw Error(ErrorCode::EmptyMatrix, "no usable rows to normalize");

  FeatureMatrix out = apply_normalization(matrix, fresh);
  // Express the stored parameters in the units of the original raw data so
  // they stay valid after repeated normalization.
  if (matrix.normalization.kind == Normalization::Kind::MinMax) {
    const auto& old = matrix.normalization;
    for (std::size_t c = 0; c < kNumFeatures; ++c) {
      const double range = old.max[c] - old.min[c];
      if (old.constant(c)) {
        out.normalization.min[c] = old.min[c];
        out.normalization.max[c] = old.max[c];
      } else {
        out.normalization.min[c] = old.min[c] + fresh.min[c] * range;
        out.normalization.max[c] = old.min[c] + fresh.max[c] * range;
      }
    }
  }
  return out;
}

/// Removes every row with a flag or a non-finite value, preserving order.
inline std::pair<FeatureMatrix, std::size_t> drop_missing(const FeatureMatrix& matrix) {
  FeatureMatrix kept;
  kept.normalization = matrix.normalization;
  for (const auto& row : matrix.rows)
    if (!row.filterable()) kept.rows.push_back(row);
  const std::size_t dropped = matrix.rows.size() - kept.rows.size();
  if (kept.rows.empty())
    throw Error(ErrorCode::AllRowsDropped,
                std::to_string(dropped) + " rows, all with missing values");
  return {std::move(kept), dropped};
}

/// Classifier view: feature values as a dense matrix plus integer codes.
struct LabeledData {
  RowMatrix features;
  std::vector<int> labels;
};

inline LabeledData to_labeled(const FeatureMatrix& matrix) {
  LabeledData data;
  data.features = RowMatrix(matrix.rows.size(), kNumFeatures);
  data.labels.reserve(matrix.rows.size());
  for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
    std::copy(matrix.rows[i].values.begin(), matrix.rows[i].values.end(),
              data.features.row(i).begin());
    data.labels.push_back(to_code(matrix.rows[i].label));
  }
  return data;
}

// ---------------------------------------------------------------------------
// Feature CSV: label,source,mean_x,...,shape_x,mean_y,...,shape_z

namespace detail {

inline void append_csv_field(std::string& out, std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
    out += field;
    return;
  }
  out += '"';
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
}

// Splits one CSV line honouring double-quoted fields.
inline std::vector<std::string> split_csv_quoted(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        fields.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back();
    } else {
      fields.back() += ch;
    }
  }
  return fields;
}

}  // namespace detail

inline std::string feature_csv_header() {
  std::string out = "label,source";
  for (std::size_t c = 0; c < kNumFeatures; ++c) out += "," + feature_column_name(c);
  return out;
}

inline std::string features_to_csv(const FeatureMatrix& matrix) {
  std::string out = feature_csv_header() + "\n";
  for (const auto& row : matrix.rows) {
    out += std::to_string(to_code(row.label));
    out += ',';
    detail::append_csv_field(out, row.source_path);
    for (double v : row.values) {
      out += ',';
      text::append_double(out, v);
    }
    out += '\n';
  }
  return out;
}

inline FeatureMatrix features_from_csv(std::string_view content, std::string_view where = "features") {
  FeatureMatrix matrix;
  std::size_t pos = 0, line_no = 0;
  bool header_seen = false;
  const std::string expected_header = feature_csv_header();
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (text::trim(line).empty()) continue;
    const std::string loc = std::string(where) + ":" + std::to_string(line_no);
    if (!header_seen) {
      if (!text::iequals(text::trim(line), expected_header))
        throw Error(ErrorCode::MalformedCsv, loc + ": unexpected feature CSV header");
      header_seen = true;
      continue;
    }
    const auto fields = detail::split_csv_quoted(line);
    if (fields.size() != kNumFeatures + 2)
      throw Error(ErrorCode::MalformedCsv, loc + ": expected " +
                                               std::to_string(kNumFeatures + 2) + " columns");
    FeatureVector row;
    const auto code = text::parse_int(fields[0]);
    const auto label = code ? from_code(static_cast<int>(*code)) : std::nullopt;
    if (!label) throw Error(ErrorCode::MalformedCsv, loc + ": label must be an integer 0-3");
    row.label = *label;
    row.source_path = fields[1];
    for (std::size_t c = 0; c < kNumFeatures; ++c) {
      const auto v = text::parse_double(fields[c + 2]);
      row.values[c] = v.value_or(std::numeric_limits<double>::quiet_NaN());
      if (!v || !std::isfinite(*v)) row.flags |= kFlagNonFinite;
    }
    matrix.rows.push_back(std::move(row));
  }
  if (!header_seen) throw Error(ErrorCode::MalformedCsv, std::string(where) + ": empty file");
  return matrix;
}

/// column,min,max for each feature column.
inline std::string normalization_to_csv(const Normalization& norm) {
  std::string out = "column,min,max\n";
  for (std::size_t c = 0; c < kNumFeatures; ++c) {
    out += feature_column_name(c) + ",";
    text::append_double(out, norm.min[c]);
    out += ',';
    text::append_double(out, norm.max[c]);
    out += '\n';
  }
  return out;
}

inline Normalization normalization_from_csv(std::string_view content) {
  Normalization norm;
  norm.kind = Normalization::Kind::MinMax;
  std::size_t pos = 0, row = 0;
  bool header = true;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    const auto line = text::trim(content.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto fields = text::split(line, ',');
    if (fields.size() != 3 || row >= kNumFeatures ||
        text::trim(fields[0]) != feature_column_name(row))
      throw Error(ErrorCode::MalformedCsv, "bad normalization row " + std::to_string(row));
    const auto lo = text::parse_double(fields[1]);
    const auto hi = text::parse_double(fields[2]);
    if (!lo || !hi) throw Error(ErrorCode::MalformedCsv, "bad normalization value");
    norm.min[row] = *lo;
    norm.max[row] = *hi;
    ++row;
  }
  if (row != kNumFeatures) throw Error(ErrorCode::MalformedCsv, "normalization file is incomplete");
  return norm;
}

}  // namespace vibrodiag
