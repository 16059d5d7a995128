#pragma once

// Diffusion-map coordinates from the spectrum of the Markov matrix.
//
// P = D^{-1} K is similar to the symmetric A = D^{-1/2} K D^{-1/2}; if A v = lambda v then
// psi = D^{-1/2} v is a right eigenvector of P with the same eigenvalue. Eigenvectors are then
// rescaled to unit norm and sign-fixed (largest-magnitude entry positive).

#include <cmath>

#include <Eigen/Dense>

#include "dmap/eigen_utils.hpp"
#include "dmap/error.hpp"
#include "dmap/kernel_graph.hpp"

namespace dmap {

struct SpectralBasis {
  Eigen::VectorXd eigenvalues;   // k + 1 values, descending; [0] is the trivial 1
  Eigen::MatrixXd eigenvectors;  // n x (k + 1) right eigenvectors of P
  int k = 0;
  int t = 1;
};

/// n x k matrix; row i is (lambda_1^t psi_1(i), ..., lambda_k^t psi_k(i)).
using EmbeddingCoords = Eigen::MatrixXd;

inline SpectralBasis decompose(const MarkovGraph& graph, int k) {
  const Eigen::Index n = graph.size();
  if (k < 1) throw Error(ErrorCode::Configuration, "embedding dimension must be >= 1");
  if (k >= n)
    throw Error(ErrorCode::DimensionTooLarge, "embedding dimension " + std::to_string(k) +
                                                  " requires more than " + std::to_string(n) +
                                                  " samples");

  const Eigen::VectorXd sqrt_deg = graph.degrees.cwiseSqrt();
  const Eigen::VectorXd inv_sqrt_deg = sqrt_deg.cwiseInverse();
  Eigen::MatrixXd sym(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      sym(i, j) = graph.kernel.values(i, j) * (inv_sqrt_deg[i] * inv_sqrt_deg[j]);

  // D^{1/2} 1 is an exact eigenvector of A for eigenvalue 1. Moving it to -1 (A is positive
  // semidefinite for a Gaussian kernel) keeps the constant psi_0 apart from other unit
  // eigenvalues of nearly disconnected graphs and from the rest of the spectrum.
  const Eigen::VectorXd v0 = sqrt_deg / sqrt_deg.norm();
  sym.noalias() -= 2.0 * v0 * v0.transpose();
  EigenPairs all = symmetric_eigenpairs(sym, n);
  Eigen::Index trivial = 0;
  (all.vectors.transpose() * v0).cwiseAbs().maxCoeff(&trivial);

  SpectralBasis basis;
  basis.k = k;
  basis.t = graph.t();
  basis.eigenvalues.resize(k + 1);
  basis.eigenvectors.resize(n, k + 1);
  basis.eigenvalues[0] = 1.0;
  basis.eigenvectors.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  for (Eigen::Index c = 0, l = 1; l <= k; ++c) {
    if (c == trivial) continue;
    basis.eigenvalues[l] = all.values[c];
    basis.eigenvectors.col(l) = inv_sqrt_deg.asDiagonal() * all.vectors.col(c);
    ++l;
  }
  Eigen::MatrixXd retained = basis.eigenvectors.rightCols(k);
  canonicalize(basis.eigenvalues.tail(k), retained);
  basis.eigenvectors.rightCols(k) = retained;
  return basis;
}

/// lambda^t with t >= 1.
inline double eigenvalue_power(double lambda, int t) {
  double out = lambda;
  for (int i = 1; i < t; ++i) out *= lambda;
  return out;
}

/// Diffusion coordinates; the trivial pair (lambda_0, psi_0) is dropped.
inline EmbeddingCoords embed(const SpectralBasis& basis) {
  EmbeddingCoords coords(basis.eigenvectors.rows(), basis.k);
  for (int l = 1; l <= basis.k; ++l)
    coords.col(l - 1) = eigenvalue_power(basis.eigenvalues[l], basis.t) * basis.eigenvectors.col(l);
  return coords;
}

/// max over retained pairs of ||P psi_l - lambda_l psi_l||_inf against the one-step P.
inline double eigen_residual(const MarkovGraph& graph, const SpectralBasis& basis) {
  double worst = 0.0;
  for (Eigen::Index l = 0; l < basis.eigenvalues.size(); ++l) {
    const Eigen::VectorXd r = graph.transition * basis.eigenvectors.col(l) -
                              basis.eigenvalues[l] * basis.eigenvectors.col(l);
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace dmap
