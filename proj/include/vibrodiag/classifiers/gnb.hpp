#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "vibrodiag/matrix.hpp"

namespace vibrodiag::gnb {

struct Model {
  std::vector<int> classes;   // ascending
  std::vector<double> priors; // class frequencies
  RowMatrix means;            // classes x features
  RowMatrix variances;        // classes x features, smoothed
  double epsilon = 0.0;       // added to every variance
};

/// Per-class Gaussian fit. epsilon = smoothing * (largest per-feature
/// variance over all rows); with all features constant, epsilon = smoothing.
inline Model fit(const RowMatrix& x, std::span<const int> labels, double smoothing) {
  Model model;
  model.classes.assign(labels.begin(), labels.end());
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());

  const std::size_t n = x.rows(), d = x.cols(), k = model.classes.size();
  double max_var = 0.0;
  for (std::size_t f = 0; f < d; ++f) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += x(r, f);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (x(r, f) - mean) * (x(r, f) - mean);
    max_var = std::max(max_var, var / static_cast<double>(n));
  }
  model.epsilon = smoothing * (max_var > 0.0 ? max_var : 1.0);

  model.means = RowMatrix(k, d);
  model.variances = RowMatrix(k, d);
  model.priors.assign(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t r = 0; r < n; ++r)
      if (labels[r] == model.classes[c]) members.push_back(r);
    const double m = static_cast<double>(members.size());
    model.priors[c] = m / static_cast<double>(n);
    for (std::size_t f = 0; f < d; ++f) {
      double mean = 0.0;
      for (auto r : members) mean += x(r, f);
      mean /= m;
      double var = 0.0;
      for (auto r : members) var += (x(r, f) - mean) * (x(r, f) - mean);
      model.means(c, f) = mean;
      model.variances(c, f) = var / m + model.epsilon;
    }
  }
  return model;
}

/// log P(c) + sum_f log N(x_f; mu_cf, var_cf), one entry per class.
inline std::vector<double> joint_log_likelihood(const Model& model, std::span<const double> x) {
  std::vector<double> out(model.classes.size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    double ll = std::log(model.priors[c]);
    for (std::size_t f = 0; f < x.size(); ++f) {
      const double var = model.variances(c, f);
      const double diff = x[f] - model.means(c, f);
      ll -= 0.5 * std::log(2.0 * std::numbers::pi * var) + 0.5 * diff * diff / var;
    }
    out[c] = ll;
  }
  return out;
}

/// Normalized class posteriors (log-sum-exp).
inline std::vector<double> posterior(const Model& model, std::span<const double> x) {
  auto jll = joint_log_likelihood(model, x);
  const double top = *std::max_element(jll.begin(), jll.end());
  double total = 0.0;
  for (double& v : jll) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : jll) v /= total;
  return jll;
}

inline std::vector<int> predict(const Model& model, const RowMatrix& x) {
  std::vector<int> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto jll = joint_log_likelihood(model, x.row(r));
    const auto best = std::max_element(jll.begin(), jll.end());  // first maximum
    out[r] = model.classes[static_cast<std::size_t>(best - jll.begin())];
  }
  return out;
}

}  // namespace vibrodiag::gnb
