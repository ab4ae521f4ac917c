#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "vibrodiag/classifiers/gnb.hpp"
#include "vibrodiag/classifiers/knn.hpp"
#include "vibrodiag/classifiers/svm.hpp"
#include "vibrodiag/error.hpp"
#include "vibrodiag/matrix.hpp"
#include "vibrodiag/text.hpp"

namespace vibrodiag {

enum class ClassifierKind { Svm, Knn, Gnb };

constexpr std::string_view kind_name(ClassifierKind kind) noexcept {
  switch (kind) {
    case ClassifierKind::Svm: return "svm";
    case ClassifierKind::Knn: return "knn";
    case ClassifierKind::Gnb: return "gnb";
  }
  return "?";
}

inline std::optional<ClassifierKind> parse_kind(std::string_view s) {
  for (auto k : {ClassifierKind::Svm, ClassifierKind::Knn, ClassifierKind::Gnb})
    if (text::iequals(s, kind_name(k))) return k;
  return std::nullopt;
}

/// Which classifier and its hyperparameters. Only the fields of `kind` matter.
struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::Svm;
  double svm_c = 1.0;
  std::optional<double> svm_gamma;  // nullopt = auto
  std::size_t knn_k = 5;
  double gnb_smoothing = 1e-9;

  friend bool operator==(const ClassifierSpec&, const ClassifierSpec&) = default;
};

inline std::string describe(const ClassifierSpec& spec) {
  switch (spec.kind) {
    case ClassifierKind::Svm:
      return "svm C=" + text::format_double(spec.svm_c) + " gamma=" +
             (spec.svm_gamma ? text::format_double(*spec.svm_gamma) : std::string("auto"));
    case ClassifierKind::Knn:
      return "knn K=" + std::to_string(spec.knn_k);
    case ClassifierKind::Gnb:
      return "gnb var_smoothing=" + text::format_double(spec.gnb_smoothing);
  }
  return "?";
}

/// Checks the parameter ranges that do not depend on the training data.
inline void validate(const ClassifierSpec& spec) {
  switch (spec.kind) {
    case ClassifierKind::Svm:
      if (!(spec.svm_c > 0.0) || !std::isfinite(spec.svm_c))
        throw Error(ErrorCode::InvalidSpec, "SVM C must be positive");
      if (spec.svm_gamma && !(*spec.svm_gamma > 0.0))
        throw Error(ErrorCode::InvalidSpec, "SVM gamma must be positive");
      break;
    case ClassifierKind::Knn:
      if (spec.knn_k < 1) throw Error(ErrorCode::InvalidSpec, "KNN K must be >= 1");
      break;
    case ClassifierKind::Gnb:
      if (!(spec.gnb_smoothing > 0.0 && spec.gnb_smoothing <= 1.0))
        throw Error(ErrorCode::InvalidSpec, "GNB smoothing must lie in (0, 1]");
      break;
  }
}

using TrainedModel = std::variant<svm::Model, knn::Model, gnb::Model>;

inline ClassifierKind model_kind(const TrainedModel& model) {
  return static_cast<ClassifierKind>(model.index());
}

inline std::size_t model_dims(const TrainedModel& model) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, svm::Model>) return m.dims;
        else if constexpr (std::is_same_v<M, knn::Model>) return m.rows.cols();
        else return m.means.cols();
      },
      model);
}

/// Fits the classifier described by `spec`. `gram` optionally supplies a
/// precomputed SVM kernel over exactly these rows (its gamma wins).
inline TrainedModel fit(const ClassifierSpec& spec, const RowMatrix& x, std::span<const int> y,
                        const svm::Gram* gram = nullptr) {
  validate(spec);
  if (x.rows() != y.size())
    throw Error(ErrorCode::DimensionMismatch, "feature rows and labels differ in count");
  for (double v : x.data())
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "training data contains NaN or Inf");
  const std::set<int> classes(y.begin(), y.end());
  if (classes.size() < 2)
    throw Error(ErrorCode::SingleClass, "training data needs at least two classes");

  switch (spec.kind) {
    case ClassifierKind::Svm: {
      svm::Params params;
      params.c = spec.svm_c;
      params.gamma = spec.svm_gamma;
      return svm::fit(x, y, params, gram);
    }
    case ClassifierKind::Knn:
      if (spec.knn_k > x.rows())
        throw Error(ErrorCode::KTooLarge, "K=" + std::to_string(spec.knn_k) + " exceeds " +
                                              std::to_string(x.rows()) + " training rows");
      return knn::fit(x, y, spec.knn_k);
    case ClassifierKind::Gnb:
      return gnb::fit(x, y, spec.gnb_smoothing);
  }
  throw Error(ErrorCode::InvalidSpec, "unknown classifier kind");
}

inline std::vector<int> predict(const TrainedModel& model, const RowMatrix& x) {
  if (x.rows() > 0 && x.cols() != model_dims(model))
    throw Error(ErrorCode::DimensionMismatch, "query has " + std::to_string(x.cols()) +
                                                  " columns, model expects " +
                                                  std::to_string(model_dims(model)));
  return std::visit(
      [&](const auto& m) -> std::vector<int> {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, svm::Model>) return svm::predict(m, x);
        else if constexpr (std::is_same_v<M, knn::Model>) return knn::predict(m, x);
        else return gnb::predict(m, x);
      },
      model);
}

/// Pairwise SVM scores f(x) = sum alpha_i y_i k(x_i, x) + b, one column per
/// class pair in lexicographic order.
inline RowMatrix decision_values(const TrainedModel& model, const RowMatrix& x) {
  const auto* m = std::get_if<svm::Model>(&model);
  if (!m) throw Error(ErrorCode::WrongModelKind, "decision values exist only for SVM models");
  if (x.rows() > 0 && x.cols() != m->dims)
    throw Error(ErrorCode::DimensionMismatch, "query dimensionality differs from the model");
  return svm::decision_values(*m, x);
}

// ---------------------------------------------------------------------------
// Model files
//
//   vibrodiag-model v1 <svm|knn|gnb>
//   <keyword> <values...>
//
// Numbers carry 17 significant digits so a save/load cycle is bit exact.

namespace detail {

class ModelWriter {
 public:
  ModelWriter& key(std::string_view k) {
    out_ += k;
    return *this;
  }
  ModelWriter& num(double v) {
    out_ += ' ';
    out_ += text::format_double17(v);
    return *this;
  }
  ModelWriter& integer(long long v) {
    out_ += ' ';
    out_ += std::to_string(v);
    return *this;
  }
  ModelWriter& nums(std::span<const double> vs) {
    for (double v : vs) num(v);
    return *this;
  }
  ModelWriter& end() {
    out_ += '\n';
    return *this;
  }
  std::string str() && { return std::move(out_); }

 private:
  std::string out_;
};

class ModelReader {
 public:
  explicit ModelReader(std::string_view content) : in_(std::string(content)) {}

  void expect(std::string_view word) {
    std::string w;
    if (!(in_ >> w) || w != word)
      throw Error(ErrorCode::MalformedModel, "expected '" + std::string(word) + "', found '" + w + "'");
  }
  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw Error(ErrorCode::MalformedModel, "unexpected end of model file");
    return w;
  }
  double num() {
    const auto w = word();
    const auto v = text::parse_double(w);
    if (!v) throw Error(ErrorCode::MalformedModel, "bad number '" + w + "'");
    return *v;
  }
  long long integer() {
    const auto w = word();
    const auto v = text::parse_int(w);
    if (!v) throw Error(ErrorCode::MalformedModel, "bad integer '" + w + "'");
    return *v;
  }
  std::size_t count() {
    const auto v = integer();
    if (v < 0) throw Error(ErrorCode::MalformedModel, "negative count");
    return static_cast<std::size_t>(v);
  }
  void row(std::span<double> out) {
    for (double& v : out) v = num();
  }
  void finish() {
    std::string w;
    if (in_ >> w) throw Error(ErrorCode::MalformedModel, "trailing content '" + w + "'");
  }

 private:
  std::istringstream in_;
};

}  // namespace detail

inline std::string save_model(const TrainedModel& model) {
  detail::ModelWriter w;
  w.key("vibrodiag-model v1 ").key(kind_name(model_kind(model))).end();
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, svm::Model>) {
          w.key("dims").integer(static_cast<long long>(m.dims)).end();
          w.key("gamma").num(m.gamma).end();
          w.key("c").num(m.c).end();
          w.key("classes").integer(static_cast<long long>(m.classes.size()));
          for (int c : m.classes) w.integer(c);
          w.end();
          w.key("machines").integer(static_cast<long long>(m.machines.size())).end();
          for (const auto& bm : m.machines) {
            w.key("machine").integer(bm.positive).integer(bm.negative)
                .integer(static_cast<long long>(bm.alpha.size())).num(bm.bias)
                .integer(bm.converged ? 1 : 0).end();
            for (std::size_t s = 0; s < bm.alpha.size(); ++s)
              w.key("sv").num(bm.alpha[s]).integer(bm.y[s]).nums(bm.support_vectors.row(s)).end();
          }
        } else if constexpr (std::is_same_v<M, knn::Model>) {
          w.key("dims").integer(static_cast<long long>(m.rows.cols())).end();
          w.key("k").integer(static_cast<long long>(m.k)).end();
          w.key("rows").integer(static_cast<long long>(m.rows.rows())).end();
          for (std::size_t r = 0; r < m.rows.rows(); ++r)
            w.key("row").integer(m.labels[r]).nums(m.rows.row(r)).end();
        } else {
          w.key("dims").integer(static_cast<long long>(m.means.cols())).end();
          w.key("epsilon").num(m.epsilon).end();
          w.key("classes").integer(static_cast<long long>(m.classes.size())).end();
          for (std::size_t c = 0; c < m.classes.size(); ++c) {
            w.key("class").integer(m.classes[c]).num(m.priors[c]).end();
            w.key("mean").nums(m.means.row(c)).end();
            w.key("var").nums(m.variances.row(c)).end();
          }
        }
      },
      model);
  return std::move(w).str();
}

inline TrainedModel load_model(std::string_view content) {
  detail::ModelReader r(content);
  r.expect("vibrodiag-model");
  const auto version = r.word();
  if (version != "v1") throw Error(ErrorCode::MalformedModel, "unsupported model version " + version);
  const auto kind = parse_kind(r.word());
  if (!kind) throw Error(ErrorCode::MalformedModel, "unknown model kind");

  switch (*kind) {
    case ClassifierKind::Svm: {
      svm::Model m;
      r.expect("dims");
      m.dims = r.count();
      r.expect("gamma");
      m.gamma = r.num();
      r.expect("c");
      m.c = r.num();
      r.expect("classes");
      m.classes.resize(r.count());
      for (int& c : m.classes) c = static_cast<int>(r.integer());
      r.expect("machines");
      m.machines.resize(r.count());
      for (auto& bm : m.machines) {
        r.expect("machine");
        bm.positive = static_cast<int>(r.integer());
        bm.negative = static_cast<int>(r.integer());
        const auto n_sv = r.count();
        bm.bias = r.num();
        bm.converged = r.integer() != 0;
        bm.support_vectors = RowMatrix(n_sv, m.dims);
        bm.alpha.resize(n_sv);
        bm.y.resize(n_sv);
        for (std::size_t s = 0; s < n_sv; ++s) {
          r.expect("sv");
          bm.alpha[s] = r.num();
          bm.y[s] = static_cast<int>(r.integer());
          r.row(bm.support_vectors.row(s));
        }
      }
      r.finish();
      return m;
    }
    case ClassifierKind::Knn: {
      knn::Model m;
      r.expect("dims");
      const auto dims = r.count();
      r.expect("k");
      m.k = r.count();
      r.expect("rows");
      const auto n = r.count();
      m.rows = RowMatrix(n, dims);
      m.labels.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        r.expect("row");
        m.labels[i] = static_cast<int>(r.integer());
        r.row(m.rows.row(i));
      }
      r.finish();
      return m;
    }
    case ClassifierKind::Gnb: {
      gnb::Model m;
      r.expect("dims");
      const auto dims = r.count();
      r.expect("epsilon");
      m.epsilon = r.num();
      r.expect("classes");
      const auto k = r.count();
      m.classes.resize(k);
      m.priors.resize(k);
      m.means = RowMatrix(k, dims);
      m.variances = RowMatrix(k, dims);
      for (std::size_t c = 0; c < k; ++c) {
        r.expect("class");
        m.classes[c] = static_cast<int>(r.integer());
        m.priors[c] = r.num();
        r.expect("mean");
        r.row(m.means.row(c));
        r.expect("var");
        r.row(m.variances.row(c));
      }
      r.finish();
      return m;
    }
  }
  throw Error(ErrorCode::MalformedModel, "unreachable");
}

}  // namespace vibrodiag
