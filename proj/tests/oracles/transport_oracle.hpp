#pragma once

// Exact transportation optimum by enumerating bases of the transportation
// polytope. Test-only; independent of the library's successive-shortest-path
// solver.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cglab/transport.hpp"

namespace oracle {

namespace detail {

// Solves A x = b (rows x cols, rows >= cols) by Gaussian elimination with
// partial pivoting. Returns false when A lacks full column rank or the
// system is inconsistent.
inline bool solve_overdetermined(std::vector<std::vector<double>> a, std::vector<double> b, std::vector<double>& x) {
  const std::size_t rows = a.size();
  const std::size_t cols = a.empty() ? 0 : a[0].size();
  std::size_t r = 0;
  std::vector<std::size_t> pivot_row(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    std::size_t best = r;
    for (std::size_t i = r; i < rows; ++i) {
      if (std::abs(a[i][c]) > std::abs(a[best][c])) best = i;
    }
    if (best >= rows || std::abs(a[best][c]) < 1e-12) return false;
    std::swap(a[r], a[best]);
    std::swap(b[r], b[best]);
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r) continue;
      const double f = a[i][c] / a[r][c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k < cols; ++k) a[i][k] -= f * a[r][k];
      b[i] -= f * b[r];
    }
    pivot_row[c] = r;
    ++r;
  }
  for (std::size_t i = r; i < rows; ++i) {
    if (std::abs(b[i]) > 1e-9) return false;
  }
  x.assign(cols, 0.0);
  for (std::size_t c = 0; c < cols; ++c) x[c] = b[pivot_row[c]] / a[pivot_row[c]][c];
  return true;
}

}  // namespace detail

/// Minimum transport cost (unnormalized) between equal-mass vectors.
inline double transport_cost(const std::vector<double>& a, const std::vector<double>& b,
                             const cglab::GroundMetric& metric) {
  const std::size_t m = a.size();
  const std::size_t n = b.size();
  if (m > 4 || n > 4) throw std::invalid_argument("oracle supports n <= 4");
  const std::size_t cells = m * n;
  const std::size_t basis = m + n - 1;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(cells, 0);
  std::fill(pick.end() - static_cast<long>(basis), pick.end(), 1);
  do {
    std::vector<std::size_t> chosen;
    for (std::size_t k = 0; k < cells; ++k) {
      if (pick[k]) chosen.push_back(k);
    }
    std::vector<std::vector<double>> rows(m + n, std::vector<double>(basis, 0.0));
    std::vector<double> rhs(m + n);
    for (std::size_t i = 0; i < m; ++i) rhs[i] = a[i];
    for (std::size_t j = 0; j < n; ++j) rhs[m + j] = b[j];
    for (std::size_t v = 0; v < basis; ++v) {
      const std::size_t i = chosen[v] / n;
      const std::size_t j = chosen[v] % n;
      rows[i][v] = 1.0;
      rows[m + j][v] = 1.0;
    }
    std::vector<double> x;
    if (!detail::solve_overdetermined(rows, rhs, x)) continue;
    bool feasible = true;
    double cost = 0.0;
    for (std::size_t v = 0; v < basis; ++v) {
      if (x[v] < -1e-9) {
        feasible = false;
        break;
      }
      cost += x[v] * metric(chosen[v] / n, chosen[v] % n);
    }
    if (feasible) best = std::min(best, cost);
  } while (std::next_permutation(pick.begin(), pick.end()));
  return best;
}

inline double emd(const cglab::FlowDistribution& a, const cglab::FlowDistribution& b,
                  const cglab::GroundMetric& metric) {
  const std::vector<double> va(a.counts().begin(), a.counts().end());
  const std::vector<double> vb(b.counts().begin(), b.counts().end());
  return transport_cost(va, vb, metric) / a.total();
}

}  // namespace oracle
