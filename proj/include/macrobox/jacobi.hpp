#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace macrobox {

template <std::size_t Dim>
using SquareMatrix = std::array<std::array<double, Dim>, Dim>;

template <std::size_t Dim>
double off_diagonal_norm(const SquareMatrix<Dim>& a) {
  double s = 0.0;
  for (std::size_t p = 0; p < Dim; ++p)
    for (std::size_t q = 0; q < Dim; ++q)
      if (p != q) s += a[p][q] * a[p][q];
  return std::sqrt(s);
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations,
/// sorted ascending. Sweeps stop once the off-diagonal Frobenius norm drops
/// below `tolerance` times max(1, ||A||_F).
template <std::size_t Dim>
std::array<double, Dim> jacobi_eigenvalues(SquareMatrix<Dim> a, double tolerance = 1e-12, int max_sweeps = 64) {
  double scale = 0.0;
  for (const auto& row : a)
    for (double v : row) scale += v * v;
  const double threshold = tolerance * std::max(1.0, std::sqrt(scale));

  for (int sweep = 0; sweep < max_sweeps && off_diagonal_norm(a) >= threshold; ++sweep) {
    for (std::size_t p = 0; p + 1 < Dim; ++p) {
      for (std::size_t q = p + 1; q < Dim; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < Dim; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < Dim; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        a[p][q] = a[q][p] = 0.0;
      }
    }
  }
  std::array<double, Dim> out{};
  for (std::size_t k = 0; k < Dim; ++k) out[k] = a[k][k];
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace macrobox
