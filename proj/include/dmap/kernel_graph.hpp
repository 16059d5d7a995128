#pragma once

// Gaussian-kernel graph over samples and its Markov transition matrix.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <Eigen/Dense>

#include "dmap/error.hpp"
#include "dmap/tensor.hpp"

namespace dmap {

struct KernelConfig {
  double alpha = 8.0;  // kernel scale
  int t = 1;           // diffusion time step

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw Error(ErrorCode::Configuration, "kernel alpha must be positive");
    if (t < 1) throw Error(ErrorCode::Configuration, "diffusion time t must be >= 1");
  }
};

/// Squared Euclidean distance, accumulated left to right in double.
inline double squared_distance(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                               const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  double sum = 0.0;
  for (Eigen::Index e = 0; e < a.size(); ++e) {
    const double d = a[e] - b[e];
    sum += d * d;
  }
  return sum;
}

/// Symmetric matrix of squared distances between rows; diagonal is exactly zero.
inline Eigen::MatrixXd pairwise_sq_distances(const Eigen::MatrixXd& rows) {
  const Eigen::Index n = rows.rows();
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = squared_distance(rows.row(i), rows.row(j));
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  return dist;
}

inline Eigen::MatrixXd pairwise_sq_distances(const Dataset& dataset) {
  return pairwise_sq_distances(to_matrix(dataset));
}

/// Squared distances from one query row to every row of `rows`.
inline Eigen::VectorXd sq_distances_to(const Eigen::MatrixXd& rows,
                                       const Eigen::Ref<const Eigen::RowVectorXd>& query) {
  Eigen::VectorXd out(rows.rows());
  for (Eigen::Index j = 0; j < rows.rows(); ++j) out[j] = squared_distance(query, rows.row(j));
  return out;
}

struct KernelMatrix {
  Eigen::MatrixXd values;
  KernelConfig config;
};

inline double gaussian_kernel(double sq_distance, double alpha) {
  return std::exp(-sq_distance / alpha);
}

/// K_ij = exp(-d_ij / alpha).
inline KernelMatrix build_kernel(const Eigen::MatrixXd& sq_dists, const KernelConfig& config) {
  config.validate();
  if (sq_dists.rows() != sq_dists.cols())
    throw Error(ErrorCode::DimensionMismatch, "distance matrix must be square");
  KernelMatrix kernel{Eigen::MatrixXd(sq_dists.rows(), sq_dists.cols()), config};
  const Eigen::Index n = sq_dists.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    kernel.values(i, i) = gaussian_kernel(sq_dists(i, i), config.alpha);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double k = gaussian_kernel(sq_dists(i, j), config.alpha);
      kernel.values(i, j) = k;
      kernel.values(j, i) = k;
    }
  }
  return kernel;
}

/// Row sum of a kernel row, accumulated left to right.
inline double row_sum(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < row.size(); ++j) sum += row[j];
  return sum;
}

/// Kernel, degrees and the one-step transition matrix P = D^{-1} K. Powers of P for t > 1 are
/// applied to the spectrum instead of being stored; see `transition_power`.
struct MarkovGraph {
  KernelMatrix kernel;
  Eigen::VectorXd degrees;
  Eigen::MatrixXd transition;

  Eigen::Index size() const { return transition.rows(); }
  int t() const { return kernel.config.t; }
};

inline MarkovGraph build_markov(KernelMatrix kernel) {
  const Eigen::Index n = kernel.values.rows();
  MarkovGraph graph{std::move(kernel), Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    graph.degrees[i] = row_sum(graph.kernel.values.row(i));
    graph.transition.row(i) = graph.kernel.values.row(i) / graph.degrees[i];
  }
  return graph;
}

/// P^t by repeated multiplication.
inline Eigen::MatrixXd transition_power(const MarkovGraph& graph) {
  Eigen::MatrixXd out = graph.transition;
  for (int step = 1; step < graph.t(); ++step) out = out * graph.transition;
  return out;
}

/// sqrt(sum_k (R_ik - R_jk)^2) over rows of R.
inline double row_distance(const Eigen::MatrixXd& rows, Eigen::Index i, Eigen::Index j) {
  if (i < 0 || j < 0 || i >= rows.rows() || j >= rows.rows())
    throw Error(ErrorCode::IndexOutOfRange, "index outside graph of size " +
                                                std::to_string(rows.rows()));
  return std::sqrt(squared_distance(rows.row(i), rows.row(j)));
}

/// Diffusion distance between nodes i and j at the graph's time step: Euclidean distance between
/// rows i and j of P^t.
inline double diffusion_distance(const MarkovGraph& graph, Eigen::Index i, Eigen::Index j) {
  if (graph.t() == 1) return row_distance(graph.transition, i, j);
  return row_distance(transition_power(graph), i, j);
}

/// Row-major CSV dump with 17 significant digits.
inline void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  char buf[40];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace dmap
