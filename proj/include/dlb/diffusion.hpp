#pragma once

// The diffusion matrix P of the balancing processes:
//   P[i][j] = 1/(2*max_degree) on edges, P[i][i] = 1 - degree(i)/(2*max_degree).
// Every entry is an exact rational with the common denominator 2*max_degree,
// so the matrix is stored as that denominator plus the graph's adjacency;
// integer numerators make all exact arithmetic pure integer arithmetic.
// P is symmetric and doubly stochastic with all diagonal entries >= 1/2,
// hence every eigenvalue lies in [0, 1].

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dlb/exact.hpp"
#include "dlb/graph.hpp"

namespace dlb {

struct DiffusionMatrix {
  const Graph* graph = nullptr;
  std::int64_t denom = 0;  // 2 * max_degree, shared by all entries

  std::int64_t entry_numer(int i, int j) const {
    if (i == j) return denom - graph->degree(i);
    return graph->has_edge(i, j) ? 1 : 0;
  }
  double entry(int i, int j) const {
    return static_cast<double>(entry_numer(i, j)) / static_cast<double>(denom);
  }
  std::int64_t row_sum_numer(int i) const {
    return denom - graph->degree(i) + graph->degree(i);
  }

  // y = x * P in doubles (P symmetric, so row/column convention is immaterial).
  std::vector<double> apply(const std::vector<double>& x) const {
    const Graph& g = *graph;
    std::vector<double> y(g.n);
    for (int i = 0; i < g.n; ++i) {
      double acc = static_cast<double>(denom - g.degree(i)) * x[i];
      for (int j : g.adjacency[i]) acc += x[j];
      y[i] = acc / static_cast<double>(denom);
    }
    return y;
  }

  // y = x * (denom * P), the integer matrix M; no division, exact.
  void apply_scaled(const std::vector<bigint>& x, std::vector<bigint>& y) const {
    const Graph& g = *graph;
    for (int i = 0; i < g.n; ++i) {
      y[i] = x[i];
      y[i] *= denom - g.degree(i);
      for (int j : g.adjacency[i]) y[i] += x[j];
    }
  }
};

inline DiffusionMatrix diffusion_matrix(const Graph& g) {
  if (g.n < 1 || g.max_degree < 1) throw std::invalid_argument("graph has no edges");
  return DiffusionMatrix{&g, 2 * static_cast<std::int64_t>(g.max_degree)};
}

}  // namespace dlb
