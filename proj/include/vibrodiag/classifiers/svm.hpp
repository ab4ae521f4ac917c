#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "vibrodiag/error.hpp"
#include "vibrodiag/matrix.hpp"
#include "vibrodiag/parallel.hpp"

namespace vibrodiag::svm {

struct Params {
  double c = 1.0;
  std::optional<double> gamma;  // nullopt: 1 / (d * Var(X))
  double tolerance = 1e-3;      // KKT gap at termination
  std::size_t max_passes = 10000;
};

/// Kernel gram matrix over a fixed set of rows.
class Gram {
 public:
  Gram() = default;
  Gram(const RowMatrix& x, double gamma) : n_(x.rows()), gamma_(gamma), k_(n_ * n_) {
    parallel_for(n_, [&](std::size_t i) {
      k_[i * n_ + i] = 1.0;
      for (std::size_t j = 0; j < i; ++j) {
        const double v = std::exp(-gamma * squared_distance(x.row(i), x.row(j)));
        k_[i * n_ + j] = v;
        k_[j * n_ + i] = v;
      }
    });
  }

  std::size_t size() const noexcept { return n_; }
  double gamma() const noexcept { return gamma_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return k_[i * n_ + j]; }

 private:
  std::size_t n_ = 0;
  double gamma_ = 0.0;
  std::vector<double> k_;
};

inline double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
  return std::exp(-gamma * squared_distance(a, b));
}

/// 1 / (d * Var(X)) with Var taken over every value of X pooled.
inline double auto_gamma(const RowMatrix& x) {
  const auto values = x.data();
  if (values.empty()) return 1.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  if (!(var > 0.0)) return 1.0;
  return 1.0 / (static_cast<double>(x.cols()) * var);
}

/// Dual solution of one binary problem.
struct BinaryResult {
  std::vector<double> alpha;
  double bias = 0.0;  // f(x) = sum alpha_i y_i k(x_i, x) + bias
  std::size_t iterations = 0;
  bool converged = true;
  double objective = 0.0;  // dual objective sum(alpha) - 1/2 alpha'Q alpha
};

/// SMO on the C-SVC dual with maximal-violating-pair selection.
///   max  sum a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
///   s.t. 0 <= a_i <= C,  sum a_i y_i = 0
/// `kernel(i, j)` returns K over the problem's own indices; `y` is +-1.
/// If `objective_trace` is set, the dual objective after every update is
/// appended to it.
template <typename Kernel>
BinaryResult solve_binary(const Kernel& kernel, std::span<const int> y, const Params& params,
                          std::vector<double>* objective_trace = nullptr) {
  const std::size_t n = y.size();
  const double c = params.c;
  constexpr double kTau = 1e-12;

  BinaryResult res;
  res.alpha.assign(n, 0.0);
  auto& alpha = res.alpha;
  std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - e'a

  auto q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * kernel(i, j); };
  auto in_up = [&](std::size_t t) {
    return (y[t] == 1 && alpha[t] < c) || (y[t] == -1 && alpha[t] > 0.0);
  };
  auto in_low = [&](std::size_t t) {
    return (y[t] == 1 && alpha[t] > 0.0) || (y[t] == -1 && alpha[t] < c);
  };
  auto dual_objective = [&] {
    double f = 0.0;
    for (std::size_t t = 0; t < n; ++t) f += alpha[t] * (grad[t] - 1.0);
    return -0.5 * f;
  };

  const std::size_t max_iter = std::max<std::size_t>(1, params.max_passes) * std::max<std::size_t>(1, n);
  std::vector<double> qi(n), qj(n);
  res.converged = false;
  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (in_up(t) && v > g_max) { g_max = v; i = t; }
      if (in_low(t) && v < g_min) { g_min = v; j = t; }
    }
    if (i == n || j == n || g_max - g_min < params.tolerance) {
      res.converged = true;
      break;
    }

    for (std::size_t t = 0; t < n; ++t) {
      qi[t] = q(i, t);
      qj[t] = q(j, t);
    }
    const double old_ai = alpha[i], old_aj = alpha[j];
    if (y[i] != y[j]) {
      double quad = qi[i] + qj[j] + 2.0 * qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = -diff; }
      }
      if (diff > 0.0) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = c - diff; }
      } else {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = c + diff; }
      }
    } else {
      double quad = qi[i] + qj[j] - 2.0 * qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = sum - c; }
      } else {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = sum; }
      }
      if (sum > c) {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = sum - c; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = sum; }
      }
    }
    const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += qi[t] * dai + qj[t] * daj;
    if (objective_trace) objective_trace->push_back(dual_objective());
  }

  // Bias from the free vectors, or the middle of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= c) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  res.bias = -rho;
  res.objective = dual_objective();
  return res;
}

/// One-vs-one machine for classes (positive, negative).
struct BinaryMachine {
  int positive = 0;  // y = +1, the lower class code
  int negative = 1;  // y = -1
  RowMatrix support_vectors;
  std::vector<double> alpha;  // 0 < alpha <= C
  std::vector<int> y;         // +-1 per support vector
  double bias = 0.0;
  bool converged = true;

  double decision(std::span<const double> x, double gamma) const {
    double f = bias;
    for (std::size_t s = 0; s < alpha.size(); ++s)
      f += alpha[s] * y[s] * rbf(support_vectors.row(s), x, gamma);
    return f;
  }
};

struct Model {
  double gamma = 1.0;
  double c = 1.0;
  std::size_t dims = 0;
  std::vector<int> classes;  // ascending
  std::vector<BinaryMachine> machines;  // pairs (a, b), a < b, lexicographic
};

/// Trains all class pairs. `gram`, when given, must cover exactly the rows of
/// `x` with the gamma that will be used.
inline Model fit(const RowMatrix& x, std::span<const int> labels, const Params& params,
                 const Gram* gram = nullptr) {
  Model model;
  model.c = params.c;
  model.dims = x.cols();
  model.gamma = gram ? gram->gamma() : params.gamma.value_or(auto_gamma(x));
  model.classes.assign(labels.begin(), labels.end());
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());

  std::optional<Gram> own;
  if (!gram) {
    own.emplace(x, model.gamma);
    gram = &*own;
  }

  for (std::size_t a = 0; a < model.classes.size(); ++a) {
    for (std::size_t b = a + 1; b < model.classes.size(); ++b) {
      std::vector<std::size_t> idx;
      std::vector<int> y;
      for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] == model.classes[a]) { idx.push_back(r); y.push_back(1); }
        else if (labels[r] == model.classes[b]) { idx.push_back(r); y.push_back(-1); }
      }
      const auto kernel = [&](std::size_t i, std::size_t j) { return (*gram)(idx[i], idx[j]); };
      const auto res = solve_binary(kernel, y, params);

      BinaryMachine m;
      m.positive = model.classes[a];
      m.negative = model.classes[b];
      m.bias = res.bias;
      m.converged = res.converged;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if (res.alpha[i] <= 0.0) continue;
        m.support_vectors.push_row(x.row(idx[i]));
        m.alpha.push_back(res.alpha[i]);
        m.y.push_back(y[i]);
      }
      model.machines.push_back(std::move(m));
    }
  }
  return model;
}

/// Raw f(x) for every machine, one row per query.
inline RowMatrix decision_values(const Model& model, const RowMatrix& x) {
  RowMatrix out(x.rows(), model.machines.size());
  parallel_for(x.rows(), [&](std::size_t r) {
    for (std::size_t m = 0; m < model.machines.size(); ++m)
      out(r, m) = model.machines[m].decision(x.row(r), model.gamma);
  });
  return out;
}

/// Majority vote over the pairwise machines. f > 0 votes for the lower class.
/// Vote ties go to the class with the largest summed |f| over the pairs it
/// won, then to the lowest class code.
inline std::vector<int> predict_from_decisions(const Model& model, const RowMatrix& decisions) {
  const std::size_t k = model.classes.size();
  std::vector<int> out(decisions.rows());
  std::vector<int> votes(k);
  std::vector<double> strength(k);
  for (std::size_t r = 0; r < decisions.rows(); ++r) {
    std::fill(votes.begin(), votes.end(), 0);
    std::fill(strength.begin(), strength.end(), 0.0);
    std::size_t m = 0;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b, ++m) {
        const double f = decisions(r, m);
        const std::size_t winner = f > 0.0 ? a : b;
        ++votes[winner];
        strength[winner] += std::abs(f);
      }
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (votes[c] > votes[best] || (votes[c] == votes[best] && strength[c] > strength[best]))
        best = c;
    }
    out[r] = model.classes[best];
  }
  return out;
}

inline std::vector<int> predict(const Model& model, const RowMatrix& x) {
  return predict_from_decisions(model, decision_values(model, x));
}

}  // namespace vibrodiag::svm
