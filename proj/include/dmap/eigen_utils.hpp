#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "dmap/error.hpp"

namespace dmap {

/// Eigenvalues below this gap are treated as one degenerate block when ordering.
inline constexpr double kDegenerateGap = 1e-10;

struct EigenPairs {
  Eigen::VectorXd values;   // sorted per request
  Eigen::MatrixXd vectors;  // unit columns, largest-magnitude entry positive
};

/// Normalizes v to unit norm and flips it so its largest-magnitude entry (first on ties) is
/// positive.
inline void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      arg = i;
    }
  }
  if (v.size() > 0 && v[arg] < 0.0) v = -v;
}

/// Deterministic ordering inside a degenerate block: larger entry at the first differing index
/// comes first.
inline bool lexicographically_greater(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return a[i] > b[i];
  return false;
}

/// Applies the sign convention to every column, then orders columns inside each degenerate
/// block of the (already sorted) values.
inline void canonicalize(const Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  const Eigen::Index n = values.size();
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) fix_sign(vectors.col(c));
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index stop = start + 1;
    while (stop < n && std::abs(values[stop] - values[stop - 1]) < kDegenerateGap) ++stop;
    if (stop - start > 1) {
      std::vector<Eigen::VectorXd> block;
      for (Eigen::Index c = start; c < stop; ++c) block.emplace_back(vectors.col(c));
      std::stable_sort(block.begin(), block.end(), lexicographically_greater);
      for (Eigen::Index c = start; c < stop; ++c)
        vectors.col(c) = block[static_cast<std::size_t>(c - start)];
    }
    start = stop;
  }
}

/// `count` leading eigenpairs of a symmetric matrix, largest first (or smallest first when
/// `ascending`), with the sign convention and degenerate-block ordering applied.
inline EigenPairs symmetric_eigenpairs(const Eigen::MatrixXd& sym, Eigen::Index count,
                                       bool ascending = false) {
  const Eigen::Index n = sym.rows();
  if (count < 0 || count > n)
    throw Error(ErrorCode::DimensionTooLarge, "requested more eigenpairs than the matrix order");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::Configuration, "symmetric eigensolver did not converge");

  // Solver returns ascending order.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  if (!ascending) std::reverse(order.begin(), order.end());

  Eigen::VectorXd values(n);
  Eigen::MatrixXd vectors(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    values[c] = solver.eigenvalues()[order[static_cast<std::size_t>(c)]];
    vectors.col(c) = solver.eigenvectors().col(order[static_cast<std::size_t>(c)]);
  }
  canonicalize(values, vectors);
  return {values.head(count), vectors.leftCols(count)};
}

}  // namespace dmap
