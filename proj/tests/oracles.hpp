#pragma once

// Independent reference computations used by the tests. Each works from
// first principles (explicit inverses, loops over pairs) rather than the
// library's factorized paths.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

#include "covloc/core.hpp"

namespace oracle {

using covloc::Index;
using covloc::Matrix;
using covloc::Vector;

inline Matrix gain(const Matrix& b, const Matrix& r, const Matrix& h) {
  return b * h.transpose() * (h * b * h.transpose() + r).inverse();
}

// (2 J_b, 2 J_o) at the analysis, with explicit inverses.
inline std::pair<double, double> twice_costs(const Matrix& b, const Matrix& r, const Matrix& h,
                                             const Vector& xb, const Vector& y) {
  const Matrix k = gain(b, r, h);
  const Vector xa = xb + k * (y - h * xb);
  const Vector dx = xa - xb;
  const Vector res = y - h * xa;
  return {dx.dot(b.inverse() * dx), res.dot(r.inverse() * res)};
}

// S = |H|^T |H| with a zeroed diagonal.
inline Matrix similarity(const Matrix& h) {
  Matrix s = h.cwiseAbs().transpose() * h.cwiseAbs();
  s.diagonal().setZero();
  return s;
}

// Brute force over all vertex pairs.
inline double performance(const Matrix& adjacency, const std::vector<int>& labels) {
  const Index n = adjacency.rows();
  if (n < 2) return 1.0;
  std::int64_t good = 0, pairs = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      ++pairs;
      const bool same = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)];
      const bool edge = adjacency(i, j) != 0.0;
      if (same == edge) ++good;
    }
  return static_cast<double>(good) / static_cast<double>(pairs);
}

// Sample mean and its standard error.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += x;
  const double m = s / n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace oracle
