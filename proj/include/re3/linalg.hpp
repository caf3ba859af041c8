#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace re3 {

/// Solves the dense system A x = b by Gaussian elimination with partial
/// pivoting. A is row-major n x n and is consumed. A zero pivot column
/// (singular system, e.g. ridge lambda = 0 with collinear features) yields
/// 0 for that solution component instead of failing.
inline std::vector<double> solve_linear_system(std::vector<double> a,
                                               std::vector<double> b) {
  const std::size_t n = b.size();
  std::vector<std::size_t> cols; // columns with a usable pivot, in order
  cols.reserve(n);
  std::vector<bool> dead(n, false);

  std::size_t row = 0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = row;
    double best = std::fabs(a[row * n + col]);
    for (std::size_t r = row + 1; r < n; ++r) {
      double v = std::fabs(a[r * n + col]);
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best < 1e-12) {
      dead[col] = true;
      continue;
    }
    if (pivot != row) {
      for (std::size_t c = 0; c < n; ++c)
        std::swap(a[pivot * n + c], a[row * n + c]);
      std::swap(b[pivot], b[row]);
    }
    for (std::size_t r = row + 1; r < n; ++r) {
      double factor = a[r * n + col] / a[row * n + col];
      if (factor == 0.0)
        continue;
      for (std::size_t c = col; c < n; ++c)
        a[r * n + c] -= factor * a[row * n + c];
      b[r] -= factor * b[row];
    }
    cols.push_back(col);
    ++row;
  }

  std::vector<double> x(n, 0.0);
  for (std::size_t k = cols.size(); k-- > 0;) {
    std::size_t r = k;
    std::size_t col = cols[k];
    double sum = b[r];
    for (std::size_t c = col + 1; c < n; ++c)
      if (!dead[c])
        sum -= a[r * n + c] * x[c];
    x[col] = sum / a[r * n + col];
  }
  return x;
}

} // namespace re3
