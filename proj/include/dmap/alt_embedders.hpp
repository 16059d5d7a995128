#pragma once

// Comparison embedders: locally linear embedding, Isomap and Gaussian kernel PCA, each with an
// out-of-sample map for unseen samples.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dmap/eigen_utils.hpp"
#include "dmap/error.hpp"
#include "dmap/kernel_graph.hpp"

namespace dmap {

inline constexpr double kLleRegularization = 1e-3;
inline constexpr double kMinSpectralValue = 1e-12;

namespace detail {

inline void check_embedding_args(Eigen::Index n, int k, int neighbors, bool uses_neighbors) {
  if (k < 1) throw Error(ErrorCode::Configuration, "embedding dimension must be >= 1");
  if (k > n - 1)
    throw Error(ErrorCode::DimensionTooLarge, "embedding dimension " + std::to_string(k) +
                                                  " must be below the sample count " +
                                                  std::to_string(n));
  if (uses_neighbors && (neighbors < 1 || neighbors >= n))
    throw Error(ErrorCode::Configuration, "neighbor count must be in [1, n)");
}

}  // namespace detail

/// Indices of the `count` nearest entries of `sq_dists`, nearest first, ties by index.
/// `exclude` (if >= 0) is skipped.
inline std::vector<Eigen::Index> nearest_neighbors(const Eigen::Ref<const Eigen::VectorXd>& sq_dists,
                                                   int count, Eigen::Index exclude = -1) {
  std::vector<Eigen::Index> idx;
  idx.reserve(static_cast<std::size_t>(sq_dists.size()));
  for (Eigen::Index j = 0; j < sq_dists.size(); ++j)
    if (j != exclude) idx.push_back(j);
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(count), idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                    [&](Eigen::Index a, Eigen::Index b) {
                      return sq_dists[a] < sq_dists[b] || (sq_dists[a] == sq_dists[b] && a < b);
                    });
  idx.resize(take);
  return idx;
}

/// k-NN lists for every row of a full squared-distance matrix.
inline std::vector<std::vector<Eigen::Index>> knn_graph(const Eigen::MatrixXd& sq_dists,
                                                        int neighbors) {
  std::vector<std::vector<Eigen::Index>> graph;
  graph.reserve(static_cast<std::size_t>(sq_dists.rows()));
  for (Eigen::Index i = 0; i < sq_dists.rows(); ++i)
    graph.push_back(nearest_neighbors(sq_dists.row(i).transpose(), neighbors, i));
  return graph;
}

/// Number of connected components of the symmetrized k-NN graph.
inline std::size_t connected_components(const std::vector<std::vector<Eigen::Index>>& knn) {
  const std::size_t n = knn.size();
  std::vector<std::vector<Eigen::Index>> adj(n);
  for (std::size_t i = 0; i < n; ++i)
    for (auto j : knn[i]) {
      adj[i].push_back(j);
      adj[static_cast<std::size_t>(j)].push_back(static_cast<Eigen::Index>(i));
    }
  std::vector<bool> seen(n, false);
  std::size_t components = 0;
  for (std::size_t start = 0; start < n; ++start) {
    if (seen[start]) continue;
    ++components;
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (auto v : adj[u]) {
        const auto vi = static_cast<std::size_t>(v);
        if (!seen[vi]) {
          seen[vi] = true;
          stack.push_back(vi);
        }
      }
    }
  }
  return components;
}

// ---------------------------------------------------------------------------------------------
// Locally linear embedding

/// Reconstruction weights of `point` from `neighbors` (rows): minimize |point - sum w_j n_j|^2
/// subject to sum w = 1, with the local Gram matrix regularized by 1e-3 * trace.
inline Eigen::VectorXd lle_weights(const Eigen::Ref<const Eigen::RowVectorXd>& point,
                                   const Eigen::MatrixXd& neighbors) {
  const Eigen::MatrixXd centered = neighbors.rowwise() - point;
  Eigen::MatrixXd gram = centered * centered.transpose();
  const double trace = gram.trace();
  const double reg = trace > 0.0 ? kLleRegularization * trace : kLleRegularization;
  gram.diagonal().array() += reg;
  Eigen::VectorXd w = gram.ldlt().solve(Eigen::VectorXd::Ones(gram.rows()));
  return w / w.sum();
}

struct LleSpace {
  Eigen::MatrixXd train;
  int neighbors = 10;
  std::vector<std::vector<Eigen::Index>> knn;
  Eigen::MatrixXd weights;  // n x n reconstruction weights, rows sum to 1
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd coords;   // n x k
};

inline LleSpace fit_lle(const Eigen::MatrixXd& train, int k, int neighbors) {
  const Eigen::Index n = train.rows();
  detail::check_embedding_args(n, k, neighbors, true);
  LleSpace space;
  space.train = train;
  space.neighbors = neighbors;
  space.knn = knn_graph(pairwise_sq_distances(train), neighbors);
  if (connected_components(space.knn) > 1)
    throw Error(ErrorCode::DisconnectedGraph, "k-NN graph for LLE is disconnected; raise neighbors");

  space.weights = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& nb = space.knn[static_cast<std::size_t>(i)];
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(nb.size()), train.cols());
    for (std::size_t r = 0; r < nb.size(); ++r) rows.row(static_cast<Eigen::Index>(r)) = train.row(nb[r]);
    const Eigen::VectorXd w = lle_weights(train.row(i), rows);
    for (std::size_t r = 0; r < nb.size(); ++r) space.weights(i, nb[r]) = w[static_cast<Eigen::Index>(r)];
  }

  const Eigen::MatrixXd residual = Eigen::MatrixXd::Identity(n, n) - space.weights;
  const Eigen::MatrixXd cost = residual.transpose() * residual;
  EigenPairs pairs = symmetric_eigenpairs(cost, k + 1, true);
  // Bottom eigenvector is the constant null vector.
  space.eigenvalues = pairs.values.tail(k);
  space.coords = pairs.vectors.rightCols(k);
  return space;
}

/// Coordinates of a new sample as the weighted combination of its training neighbors'
/// coordinates. A sample coinciding with a training sample takes that sample's coordinates.
inline Eigen::VectorXd extend_lle(const LleSpace& space,
                                  const Eigen::Ref<const Eigen::RowVectorXd>& sample) {
  if (sample.size() != space.train.cols())
    throw Error(ErrorCode::ShapeMismatch, "sample size does not match the LLE training data");
  const Eigen::VectorXd d = sq_distances_to(space.train, sample);
  const auto nb = nearest_neighbors(d, space.neighbors);
  if (d[nb.front()] == 0.0) return space.coords.row(nb.front()).transpose();
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(nb.size()), space.train.cols());
  for (std::size_t r = 0; r < nb.size(); ++r) rows.row(static_cast<Eigen::Index>(r)) = space.train.row(nb[r]);
  const Eigen::VectorXd w = lle_weights(sample, rows);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(space.coords.cols());
  for (std::size_t r = 0; r < nb.size(); ++r)
    out += w[static_cast<Eigen::Index>(r)] * space.coords.row(nb[r]).transpose();
  return out;
}

// ---------------------------------------------------------------------------------------------
// Isomap

/// Single-source shortest path lengths over the symmetrized k-NN graph with Euclidean edges.
inline Eigen::VectorXd dijkstra(const std::vector<std::vector<std::pair<Eigen::Index, double>>>& adj,
                                Eigen::Index source) {
  const auto n = static_cast<Eigen::Index>(adj.size());
  Eigen::VectorXd dist = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, Eigen::Index>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [du, u] = queue.top();
    queue.pop();
    if (du > dist[u]) continue;
    for (const auto& [v, w] : adj[static_cast<std::size_t>(u)]) {
      const double cand = du + w;
      if (cand < dist[v]) {
        dist[v] = cand;
        queue.emplace(cand, v);
      }
    }
  }
  return dist;
}

struct IsomapSpace {
  Eigen::MatrixXd train;
  int neighbors = 10;
  Eigen::MatrixXd geodesic;          // n x n shortest path lengths
  Eigen::VectorXd sq_geodesic_col_mean;
  double sq_geodesic_mean = 0.0;
  Eigen::VectorXd eigenvalues;       // k, descending
  Eigen::MatrixXd eigenvectors;      // n x k unit columns
  Eigen::MatrixXd coords;            // sqrt(lambda) * v
};

inline IsomapSpace fit_isomap(const Eigen::MatrixXd& train, int k, int neighbors) {
  const Eigen::Index n = train.rows();
  detail::check_embedding_args(n, k, neighbors, true);
  IsomapSpace space;
  space.train = train;
  space.neighbors = neighbors;

  const Eigen::MatrixXd sq = pairwise_sq_distances(train);
  const auto knn = knn_graph(sq, neighbors);
  if (connected_components(knn) > 1)
    throw Error(ErrorCode::DisconnectedGraph, "k-NN graph for Isomap is disconnected; raise neighbors");
  std::vector<std::vector<std::pair<Eigen::Index, double>>> adj(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (auto j : knn[static_cast<std::size_t>(i)]) {
      const double w = std::sqrt(sq(i, j));
      adj[static_cast<std::size_t>(i)].emplace_back(j, w);
      adj[static_cast<std::size_t>(j)].emplace_back(i, w);
    }

  space.geodesic.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) space.geodesic.row(i) = dijkstra(adj, i).transpose();
  // Enforce exact symmetry; both directions are shortest paths over the same undirected graph.
  space.geodesic = 0.5 * (space.geodesic + space.geodesic.transpose()).eval();

  const Eigen::MatrixXd g2 = space.geodesic.cwiseProduct(space.geodesic);
  space.sq_geodesic_col_mean = g2.colwise().mean().transpose();
  space.sq_geodesic_mean = g2.mean();
  Eigen::MatrixXd centered(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      centered(i, j) = -0.5 * (g2(i, j) - space.sq_geodesic_col_mean[i] -
                               space.sq_geodesic_col_mean[j] + space.sq_geodesic_mean);

  EigenPairs pairs = symmetric_eigenpairs(centered, k);
  space.eigenvalues = pairs.values;
  space.eigenvectors = pairs.vectors;
  space.coords.resize(n, k);
  for (int l = 0; l < k; ++l) {
    const double lambda = space.eigenvalues[l];
    space.coords.col(l) = (lambda > kMinSpectralValue ? std::sqrt(lambda) : 0.0) * space.eigenvectors.col(l);
  }
  return space;
}

/// Geodesic distances from the new sample through its k nearest training samples, then the
/// double-centered kernel projection onto the training eigenvectors.
inline Eigen::VectorXd extend_isomap(const IsomapSpace& space,
                                     const Eigen::Ref<const Eigen::RowVectorXd>& sample) {
  if (sample.size() != space.train.cols())
    throw Error(ErrorCode::ShapeMismatch, "sample size does not match the Isomap training data");
  const Eigen::Index n = space.train.rows();
  const Eigen::VectorXd d = sq_distances_to(space.train, sample);
  const auto nb = nearest_neighbors(d, space.neighbors);
  Eigen::VectorXd geo = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  for (auto m : nb) {
    const double edge = std::sqrt(d[m]);
    for (Eigen::Index j = 0; j < n; ++j) geo[j] = std::min(geo[j], edge + space.geodesic(m, j));
  }
  const Eigen::VectorXd g2 = geo.cwiseProduct(geo);
  const double g2_mean = g2.mean();
  Eigen::VectorXd kernel(n);
  for (Eigen::Index j = 0; j < n; ++j)
    kernel[j] = -0.5 * (g2[j] - g2_mean - space.sq_geodesic_col_mean[j] + space.sq_geodesic_mean);

  Eigen::VectorXd out(space.coords.cols());
  for (Eigen::Index l = 0; l < out.size(); ++l) {
    const double lambda = space.eigenvalues[l];
    out[l] = lambda > kMinSpectralValue ? space.eigenvectors.col(l).dot(kernel) / std::sqrt(lambda) : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Kernel PCA

struct KpcaSpace {
  Eigen::MatrixXd train;
  double alpha = 8.0;
  Eigen::VectorXd kernel_col_mean;
  double kernel_mean = 0.0;
  Eigen::VectorXd eigenvalues;   // k, descending
  Eigen::MatrixXd eigenvectors;  // n x k unit columns
  Eigen::MatrixXd coords;        // sqrt(lambda) * v
};

inline KpcaSpace fit_kpca(const Eigen::MatrixXd& train, int k, double alpha) {
  const Eigen::Index n = train.rows();
  detail::check_embedding_args(n, k, 0, false);
  KernelConfig{alpha, 1}.validate();
  KpcaSpace space;
  space.train = train;
  space.alpha = alpha;
  const Eigen::MatrixXd kernel = build_kernel(pairwise_sq_distances(train), {alpha, 1}).values;
  space.kernel_col_mean = kernel.colwise().mean().transpose();
  space.kernel_mean = kernel.mean();
  Eigen::MatrixXd centered(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      centered(i, j) = kernel(i, j) - space.kernel_col_mean[i] - space.kernel_col_mean[j] + space.kernel_mean;

  EigenPairs pairs = symmetric_eigenpairs(centered, k);
  space.eigenvalues = pairs.values;
  space.eigenvectors = pairs.vectors;
  space.coords.resize(n, k);
  for (int l = 0; l < k; ++l) {
    const double lambda = space.eigenvalues[l];
    space.coords.col(l) = (lambda > kMinSpectralValue ? std::sqrt(lambda) : 0.0) * space.eigenvectors.col(l);
  }
  return space;
}

/// Nystrom projection of the centered kernel row.
inline Eigen::VectorXd extend_kpca(const KpcaSpace& space,
                                   const Eigen::Ref<const Eigen::RowVectorXd>& sample) {
  if (sample.size() != space.train.cols())
    throw Error(ErrorCode::ShapeMismatch, "sample size does not match the KPCA training data");
  const Eigen::Index n = space.train.rows();
  Eigen::VectorXd row(n);
  for (Eigen::Index j = 0; j < n; ++j)
    row[j] = gaussian_kernel(squared_distance(sample, space.train.row(j)), space.alpha);
  const double row_mean = row.mean();
  Eigen::VectorXd centered(n);
  for (Eigen::Index j = 0; j < n; ++j)
    centered[j] = row[j] - row_mean - space.kernel_col_mean[j] + space.kernel_mean;

  Eigen::VectorXd out(space.coords.cols());
  for (Eigen::Index l = 0; l < out.size(); ++l) {
    const double lambda = space.eigenvalues[l];
    out[l] = lambda > kMinSpectralValue ? space.eigenvectors.col(l).dot(centered) / std::sqrt(lambda) : 0.0;
  }
  return out;
}

}  // namespace dmap
