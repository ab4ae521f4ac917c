#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "vibrodiag/matrix.hpp"
#include "vibrodiag/parallel.hpp"

namespace vibrodiag::knn {

struct Model {
  RowMatrix rows;
  std::vector<int> labels;
  std::size_t k = 5;
};

inline Model fit(const RowMatrix& x, std::span<const int> labels, std::size_t k) {
  return Model{x, std::vector<int>(labels.begin(), labels.end()), k};
}

/// Indices of the k stored rows nearest to `query`, nearest first. Equal
/// distances keep the earlier stored row first.
inline std::vector<std::size_t> neighbours(const Model& model, std::span<const double> query) {
  std::vector<std::pair<double, std::size_t>> dist(model.rows.rows());
  for (std::size_t i = 0; i < dist.size(); ++i)
    dist[i] = {squared_distance(model.rows.row(i), query), i};
  const std::size_t k = std::min(model.k, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

/// Majority label among the neighbours; equal counts go to the lowest code.
inline int vote(std::span<const int> neighbour_labels) {
  if (neighbour_labels.empty()) return 0;
  const int top = *std::max_element(neighbour_labels.begin(), neighbour_labels.end());
  const int bottom = *std::min_element(neighbour_labels.begin(), neighbour_labels.end());
  std::vector<std::size_t> counts(static_cast<std::size_t>(top - bottom + 1), 0);
  for (int l : neighbour_labels) ++counts[static_cast<std::size_t>(l - bottom)];
  const auto best = std::max_element(counts.begin(), counts.end());  // first maximum
  return bottom + static_cast<int>(best - counts.begin());
}

inline std::vector<int> predict(const Model& model, const RowMatrix& x) {
  std::vector<int> out(x.rows());
  parallel_for(x.rows(), [&](std::size_t r) {
    const auto nn = neighbours(model, x.row(r));
    std::vector<int> nl(nn.size());
    for (std::size_t i = 0; i < nn.size(); ++i) nl[i] = model.labels[nn[i]];
    out[r] = vote(nl);
  });
  return out;
}

}  // namespace vibrodiag::knn
