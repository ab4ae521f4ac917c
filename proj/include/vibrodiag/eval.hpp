#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vibrodiag/classifiers.hpp"
#include "vibrodiag/error.hpp"
#include "vibrodiag/features.hpp"
#include "vibrodiag/labels.hpp"
#include "vibrodiag/parallel.hpp"
#include "vibrodiag/random.hpp"
#include "vibrodiag/text.hpp"

namespace vibrodiag {

/// Holdout is the single stratified train/test split ("1-fold"); KFold is
/// k-fold cross-validation.
struct SplitPlan {
  enum class Mode { Holdout, KFold };
  Mode mode = Mode::KFold;
  double test_fraction = 0.2;
  std::size_t k = 5;
  bool stratified = true;
  std::uint64_t seed = 42;

  static SplitPlan holdout(double fraction = 0.2, std::uint64_t seed = 42) {
    return {Mode::Holdout, fraction, 5, true, seed};
  }
  static SplitPlan kfold(std::size_t k = 5, std::uint64_t seed = 42) {
    return {Mode::KFold, 0.2, k, true, seed};
  }
};

inline std::string describe(const SplitPlan& plan) {
  if (plan.mode == SplitPlan::Mode::Holdout)
    return "holdout test_fraction=" + text::format_double(plan.test_fraction);
  return std::to_string(plan.k) + "-fold";
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

namespace detail {

inline std::map<int, std::vector<std::size_t>> group_by_label(std::span<const int> labels) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  return groups;
}

inline Split complement_split(std::size_t n, std::vector<std::size_t> test) {
  std::sort(test.begin(), test.end());
  Split s;
  s.train.reserve(n - test.size());
  std::size_t t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (t < test.size() && test[t] == i) ++t;
    else s.train.push_back(i);
  }
  s.test = std::move(test);
  return s;
}

}  // namespace detail

/// Seeded, optionally stratified splits. Index lists come back sorted.
/// Stratified holdout takes round(test_fraction * n_c) rows of each class;
/// stratified k-fold deals each class's shuffled rows round-robin over the
/// folds, continuing where the previous class stopped.
inline std::vector<Split> make_splits(std::size_t n_rows, std::span<const int> labels,
                                      const SplitPlan& plan) {
  if (labels.size() != n_rows)
    throw Error(ErrorCode::DimensionMismatch, "label count differs from row count");
  Rng rng(plan.seed);

  std::vector<std::vector<std::size_t>> groups;
  if (plan.stratified) {
    for (auto& [label, idx] : detail::group_by_label(labels)) groups.push_back(std::move(idx));
  } else {
    std::vector<std::size_t> all(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) all[i] = i;
    groups.push_back(std::move(all));
  }
  for (auto& g : groups) rng.shuffle(std::span(g));

  if (plan.mode == SplitPlan::Mode::Holdout) {
    if (!(plan.test_fraction > 0.0 && plan.test_fraction < 1.0))
      throw Error(ErrorCode::InvalidConfig, "test fraction must lie in (0, 1)");
    if (n_rows < 2) throw Error(ErrorCode::TooFewRows, "holdout needs at least 2 rows");
    std::vector<std::size_t> test;
    for (const auto& g : groups) {
      const auto take = static_cast<std::size_t>(
          std::llround(plan.test_fraction * static_cast<double>(g.size())));
      test.insert(test.end(), g.begin(), g.begin() + static_cast<std::ptrdiff_t>(std::min(take, g.size())));
    }
    if (test.empty() || test.size() == n_rows)
      throw Error(ErrorCode::TooFewRows, "holdout leaves an empty train or test set");
    return {detail::complement_split(n_rows, std::move(test))};
  }

  if (plan.k < 2) throw Error(ErrorCode::InvalidConfig, "k-fold needs k >= 2");
  if (n_rows < plan.k)
    throw Error(ErrorCode::TooFewRows, std::to_string(n_rows) + " rows cannot fill " +
                                           std::to_string(plan.k) + " folds");
  if (plan.stratified) {
    for (const auto& g : groups)
      if (g.size() < plan.k)
        throw Error(ErrorCode::ClassBelowFoldCount,
                    "a class has " + std::to_string(g.size()) + " rows, fewer than " +
                        std::to_string(plan.k) + " folds");
  }
  std::vector<std::vector<std::size_t>> folds(plan.k);
  std::size_t next = 0;
  for (const auto& g : groups) {
    for (auto idx : g) {
      folds[next].push_back(idx);
      next = (next + 1) % plan.k;
    }
  }
  std::vector<Split> splits;
  for (auto& f : folds) splits.push_back(detail::complement_split(n_rows, std::move(f)));
  return splits;
}

// ---------------------------------------------------------------------------
// Metrics

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = kNumConditions)
      : n_(classes), counts_(classes * classes, 0) {}

  std::size_t classes() const noexcept { return n_; }
  std::size_t operator()(std::size_t truth, std::size_t predicted) const noexcept {
    return counts_[truth * n_ + predicted];
  }

  void add(int truth, int predicted) {
    if (truth < 0 || predicted < 0 || static_cast<std::size_t>(truth) >= n_ ||
        static_cast<std::size_t>(predicted) >= n_)
      throw Error(ErrorCode::DimensionMismatch, "label outside the confusion matrix");
    ++counts_[static_cast<std::size_t>(truth) * n_ + static_cast<std::size_t>(predicted)];
  }

  void add(std::span<const int> truth, std::span<const int> predicted) {
    for (std::size_t i = 0; i < truth.size(); ++i) add(truth[i], predicted[i]);
  }

  std::size_t row_total(std::size_t truth) const noexcept {
    std::size_t s = 0;
    for (std::size_t p = 0; p < n_; ++p) s += (*this)(truth, p);
    return s;
  }
  std::size_t total() const noexcept {
    std::size_t s = 0;
    for (auto c : counts_) s += c;
    return s;
  }
  std::size_t trace() const noexcept {
    std::size_t s = 0;
    for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, i);
    return s;
  }

  // Percent; NaN for a class with no test rows.
  double recall(std::size_t truth) const noexcept {
    const auto t = row_total(truth);
    return t == 0 ? std::numeric_limits<double>::quiet_NaN()
                  : 100.0 * static_cast<double>((*this)(truth, truth)) / static_cast<double>(t);
  }
  double accuracy() const noexcept {
    const auto t = total();
    return t == 0 ? 0.0 : 100.0 * static_cast<double>(trace()) / static_cast<double>(t);
  }
  // Mean recall over the classes present in the test data.
  double weighted_accuracy() const noexcept {
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < n_; ++c) {
      if (row_total(c) == 0) continue;
      sum += recall(c);
      ++present;
    }
    return present == 0 ? 0.0 : sum / static_cast<double>(present);
  }

 private:
  std::size_t n_;
  std::vector<std::size_t> counts_;
};

inline double accuracy_percent(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == predicted[i];
  return 100.0 * static_cast<double>(hit) / static_cast<double>(truth.size());
}

struct EvalReport {
  ClassifierSpec spec;
  SplitPlan plan;
  ConfusionMatrix confusion;  // summed over folds
  std::vector<double> per_class_recall;
  double weighted_accuracy = 0.0;
  std::vector<double> fold_accuracies;
  std::vector<double> fold_train_accuracies;

  double mean_fold_accuracy() const {
    if (fold_accuracies.empty()) return 0.0;
    double s = 0.0;
    for (double a : fold_accuracies) s += a;
    return s / static_cast<double>(fold_accuracies.size());
  }
};

struct EvalOptions {
  // Recompute min-max ranges on each training split instead of trusting the
  // globally normalized input.
  bool strict_normalization = false;
};

namespace detail {

// Train/test matrices for one split, rescaled by the training ranges when
// strict normalization is requested.
struct SplitData {
  RowMatrix train_x, test_x;
  std::vector<int> train_y, test_y;
};

inline SplitData materialize(const LabeledData& data, const Split& split, bool strict) {
  SplitData sd;
  sd.train_x = data.features.select_rows(split.train);
  sd.test_x = data.features.select_rows(split.test);
  for (auto i : split.train) sd.train_y.push_back(data.labels[i]);
  for (auto i : split.test) sd.test_y.push_back(data.labels[i]);
  if (strict && sd.train_x.rows() > 0) {
    for (std::size_t c = 0; c < sd.train_x.cols(); ++c) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t r = 0; r < sd.train_x.rows(); ++r) {
        lo = std::min(lo, sd.train_x(r, c));
        hi = std::max(hi, sd.train_x(r, c));
      }
      const double range = hi - lo;
      auto scale = [&](double v) { return range > 0.0 ? (v - lo) / range : 0.0; };
      for (std::size_t r = 0; r < sd.train_x.rows(); ++r) sd.train_x(r, c) = scale(sd.train_x(r, c));
      for (std::size_t r = 0; r < sd.test_x.rows(); ++r) sd.test_x(r, c) = scale(sd.test_x(r, c));
    }
  }
  return sd;
}

inline std::size_t class_count(std::span<const int> labels) {
  int top = kNumConditions - 1;
  for (int l : labels) top = std::max(top, l);
  return static_cast<std::size_t>(top + 1);
}

}  // namespace detail

/// Fits on every training split and scores the matching test split.
inline EvalReport evaluate(const ClassifierSpec& spec, const LabeledData& data,
                           const SplitPlan& plan, const EvalOptions& options = {}) {
  const auto splits = make_splits(data.features.rows(), data.labels, plan);
  EvalReport report{spec, plan, ConfusionMatrix(detail::class_count(data.labels)), {}, 0.0, {}, {}};
  for (const auto& split : splits) {
    const auto sd = detail::materialize(data, split, options.strict_normalization);
    const auto model = fit(spec, sd.train_x, sd.train_y);
    const auto predicted = predict(model, sd.test_x);
    report.confusion.add(sd.test_y, predicted);
    report.fold_accuracies.push_back(accuracy_percent(sd.test_y, predicted));
    report.fold_train_accuracies.push_back(accuracy_percent(sd.train_y, predict(model, sd.train_x)));
  }
  for (std::size_t c = 0; c < report.confusion.classes(); ++c)
    report.per_class_recall.push_back(report.confusion.recall(c));
  report.weighted_accuracy = report.confusion.weighted_accuracy();
  return report;
}

// ---------------------------------------------------------------------------
// Hyperparameter sweeps

struct CurvePoint {
  double param = 0.0;
  double train_accuracy = 0.0;  // mean over splits
  double eval_accuracy = 0.0;   // mean over splits
};

struct GridResult {
  ClassifierSpec best;
  std::size_t best_index = 0;
  std::vector<CurvePoint> curve;
};

/// The swept value of a spec: C, K, or the var_smoothing exponent n in 10^-n.
inline double sweep_param(const ClassifierSpec& spec) {
  switch (spec.kind) {
    case ClassifierKind::Svm: return spec.svm_c;
    case ClassifierKind::Knn: return static_cast<double>(spec.knn_k);
    case ClassifierKind::Gnb: return -std::log10(spec.gnb_smoothing);
  }
  return 0.0;
}

/// C = 1..100.
inline std::vector<ClassifierSpec> svm_grid(std::size_t max_c = 100) {
  std::vector<ClassifierSpec> grid;
  for (std::size_t c = 1; c <= max_c; ++c) {
    ClassifierSpec s;
    s.kind = ClassifierKind::Svm;
    s.svm_c = static_cast<double>(c);
    grid.push_back(s);
  }
  return grid;
}

/// K = 1..100.
inline std::vector<ClassifierSpec> knn_grid(std::size_t max_k = 100) {
  std::vector<ClassifierSpec> grid;
  for (std::size_t k = 1; k <= max_k; ++k) {
    ClassifierSpec s;
    s.kind = ClassifierKind::Knn;
    s.knn_k = k;
    grid.push_back(s);
  }
  return grid;
}

/// var_smoothing = 10^-1 .. 10^-100.
inline std::vector<ClassifierSpec> gnb_grid(int max_exponent = 100) {
  std::vector<ClassifierSpec> grid;
  for (int e = 1; e <= max_exponent; ++e) {
    ClassifierSpec s;
    s.kind = ClassifierKind::Gnb;
    s.gnb_smoothing = std::pow(10.0, -e);
    grid.push_back(s);
  }
  return grid;
}

inline std::vector<ClassifierSpec> default_grid(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::Svm: return svm_grid();
    case ClassifierKind::Knn: return knn_grid();
    case ClassifierKind::Gnb: return gnb_grid();
  }
  return {};
}

/// Scores every grid point on the same splits. The best point maximizes the
/// mean held-out accuracy; ties keep the earliest grid entry.
inline GridResult grid_search(const std::vector<ClassifierSpec>& grid, const LabeledData& data,
                              const SplitPlan& plan, const EvalOptions& options = {}) {
  if (grid.empty()) throw Error(ErrorCode::EmptyGrid, "no hyperparameters to search");
  for (const auto& spec : grid) validate(spec);
  const auto splits = make_splits(data.features.rows(), data.labels, plan);

  std::vector<std::vector<double>> train_acc(grid.size()), eval_acc(grid.size());
  for (const auto& split : splits) {
    const auto sd = detail::materialize(data, split, options.strict_normalization);

    // SVM grid points with the same gamma share one kernel matrix.
    std::map<std::optional<double>, svm::Gram> grams;
    for (const auto& spec : grid) {
      if (spec.kind != ClassifierKind::Svm || grams.contains(spec.svm_gamma)) continue;
      grams.emplace(spec.svm_gamma,
                    svm::Gram(sd.train_x, spec.svm_gamma.value_or(svm::auto_gamma(sd.train_x))));
    }

    std::vector<double> tr(grid.size()), ev(grid.size());
    parallel_for(grid.size(), [&](std::size_t g) {
      const auto& spec = grid[g];
      const svm::Gram* gram =
          spec.kind == ClassifierKind::Svm ? &grams.at(spec.svm_gamma) : nullptr;
      const auto model = fit(spec, sd.train_x, sd.train_y, gram);
      tr[g] = accuracy_percent(sd.train_y, predict(model, sd.train_x));
      ev[g] = accuracy_percent(sd.test_y, predict(model, sd.test_x));
    });
    for (std::size_t g = 0; g < grid.size(); ++g) {
      train_acc[g].push_back(tr[g]);
      eval_acc[g].push_back(ev[g]);
    }
  }

  GridResult result;
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  double best = -1.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const CurvePoint p{sweep_param(grid[g]), mean(train_acc[g]), mean(eval_acc[g])};
    result.curve.push_back(p);
    if (p.eval_accuracy > best) {
      best = p.eval_accuracy;
      result.best_index = g;
    }
  }
  result.best = grid[result.best_index];
  return result;
}

// ---------------------------------------------------------------------------
// CSV output

inline std::string curve_csv(const GridResult& result) {
  std::string out = "param,train_accuracy,eval_accuracy\n";
  for (const auto& p : result.curve) {
    text::append_double(out, p.param);
    out += ',';
    text::append_double(out, p.train_accuracy);
    out += ',';
    text::append_double(out, p.eval_accuracy);
    out += '\n';
  }
  return out;
}

inline std::string class_display_name(std::size_t c) {
  if (auto l = from_code(static_cast<int>(c))) return std::string(label_name(*l));
  return "class" + std::to_string(c);
}

/// Blocks separated by blank lines: summary, fold accuracies, confusion
/// counts, row-normalized confusion (recall layout), per-class recall.
inline std::string report_csv(const EvalReport& report) {
  const std::size_t k = report.confusion.classes();
  std::string out;
  out += "key,value\n";
  out += "classifier," + std::string(kind_name(report.spec.kind)) + "\n";
  out += "params," + describe(report.spec) + "\n";
  out += "mode," + describe(report.plan) + "\n";
  out += "seed," + std::to_string(report.plan.seed) + "\n";
  out += "weighted_accuracy,";
  text::append_double(out, report.weighted_accuracy);
  out += "\nmean_fold_accuracy,";
  text::append_double(out, report.mean_fold_accuracy());
  out += "\n\nfold,accuracy,train_accuracy\n";
  for (std::size_t f = 0; f < report.fold_accuracies.size(); ++f) {
    out += std::to_string(f + 1) + ",";
    text::append_double(out, report.fold_accuracies[f]);
    out += ',';
    text::append_double(out, report.fold_train_accuracies[f]);
    out += '\n';
  }
  auto header = [&](std::string_view title) {
    out += "\n";
    out += title;
    for (std::size_t c = 0; c < k; ++c) out += "," + class_display_name(c);
    out += '\n';
  };
  header("confusion_counts");
  for (std::size_t t = 0; t < k; ++t) {
    out += class_display_name(t);
    for (std::size_t p = 0; p < k; ++p) out += "," + std::to_string(report.confusion(t, p));
    out += '\n';
  }
  header("confusion_normalized");
  for (std::size_t t = 0; t < k; ++t) {
    out += class_display_name(t);
    const auto total = report.confusion.row_total(t);
    for (std::size_t p = 0; p < k; ++p) {
      out += ',';
      text::append_double(out, total == 0 ? 0.0
                                          : static_cast<double>(report.confusion(t, p)) /
                                                static_cast<double>(total));
    }
    out += '\n';
  }
  out += "\nclass,recall\n";
  for (std::size_t c = 0; c < k; ++c) {
    out += class_display_name(c) + ",";
    text::append_double(out, report.per_class_recall[c]);
    out += '\n';
  }
  return out;
}

/// Fixed-width row-normalized confusion matrix for terminals.
inline std::string format_confusion(const ConfusionMatrix& cm) {
  std::string out = "true\\pred    ";
  char buf[64];
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    std::snprintf(buf, sizeof buf, " %13.13s", class_display_name(c).c_str());
    out += buf;
  }
  out += '\n';
  for (std::size_t t = 0; t < cm.classes(); ++t) {
    std::snprintf(buf, sizeof buf, "%-13.13s", class_display_name(t).c_str());
    out += buf;
    const auto total = cm.row_total(t);
    for (std::size_t p = 0; p < cm.classes(); ++p) {
      const double v = total == 0 ? 0.0 : static_cast<double>(cm(t, p)) / static_cast<double>(total);
      std::snprintf(buf, sizeof buf, " %13.2f", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace vibrodiag
