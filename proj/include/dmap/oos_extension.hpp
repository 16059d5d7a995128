#pragma once

// Nystrom out-of-sample extension of a trained diffusion-map space.
//
// A new standardized sample x gets the kernel row K_j = exp(-|x - x_j|^2 / alpha) against the n
// training samples, the transition row p = K / sum(K), and eigenfunction values
//   psi_l(x) = (1 / lambda_l) * sum_j p_j psi_l(x_j),
// scaled by lambda_l^t to land in the same coordinates as the training embedding. For a copy of
// training sample j, p equals row j of P and the identity P psi = lambda psi returns row j of the
// embedding.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmap/error.hpp"
#include "dmap/kernel_graph.hpp"
#include "dmap/spectral_embed.hpp"
#include "dmap/tensor.hpp"

namespace dmap {

inline constexpr double kMinExtensionEigenvalue = 1e-12;
inline constexpr double kMinKernelRowSum = 1e-300;

/// Frozen training artifacts needed to place new samples.
struct TrainedSpace {
  std::vector<std::string> ids;
  Shape shape;
  Eigen::MatrixXd train;  // n x m standardized, flattened samples
  SpectralBasis basis;
  KernelConfig config;
  Eigen::VectorXd degrees;
  EmbeddingCoords coords;  // training embedding, n x k

  Eigen::Index size() const { return train.rows(); }
  int k() const { return basis.k; }
};

inline void check_extension_eigenvalues(const SpectralBasis& basis) {
  for (int l = 1; l <= basis.k; ++l) {
    if (!(std::abs(basis.eigenvalues[l]) > kMinExtensionEigenvalue))
      throw Error(ErrorCode::Configuration,
                  "eigenvalue " + std::to_string(l) + " is below 1e-12 in magnitude; the "
                  "out-of-sample extension would be unstable, reduce the embedding dimension k "
                  "below " + std::to_string(l));
  }
}

/// Builds the diffusion space over already standardized rows.
inline TrainedSpace train_space(Eigen::MatrixXd train, const KernelConfig& config, int k,
                                std::vector<std::string> ids = {}, Shape shape = {}) {
  config.validate();
  if (ids.empty()) {
    for (Eigen::Index i = 0; i < train.rows(); ++i) ids.push_back(std::to_string(i));
  }
  if (static_cast<Eigen::Index>(ids.size()) != train.rows())
    throw Error(ErrorCode::LengthMismatch, "one id per training row required");
  const auto m = static_cast<std::size_t>(train.cols());
  if (shape.size() != m) shape = Shape{1, 1, m, 1};

  MarkovGraph graph = build_markov(build_kernel(pairwise_sq_distances(train), config));
  TrainedSpace space;
  space.basis = decompose(graph, k);
  check_extension_eigenvalues(space.basis);
  space.ids = std::move(ids);
  space.shape = shape;
  space.train = std::move(train);
  space.config = config;
  space.degrees = std::move(graph.degrees);
  space.coords = embed(space.basis);
  return space;
}

/// Trains on a dataset whose samples are already standardized.
inline TrainedSpace train_space(const Dataset& standardized, const KernelConfig& config, int k) {
  std::vector<std::string> ids;
  for (const auto& s : standardized) ids.push_back(s.id);
  return train_space(to_matrix(standardized), config, k, std::move(ids), standardized.shape());
}

struct ExtensionVector {
  Eigen::VectorXd kernel_row;     // K_new,j against every training sample
  double row_sum = 0.0;           // D_new
  Eigen::VectorXd p_row;          // K_new / D_new
  Eigen::VectorXd eigenfunctions; // psi_l(x_new), l = 1..k
  Eigen::VectorXd coords;         // lambda_l^t psi_l(x_new)
};

inline ExtensionVector extend(const TrainedSpace& space,
                              const Eigen::Ref<const Eigen::RowVectorXd>& sample) {
  if (sample.size() != space.train.cols())
    throw Error(ErrorCode::ShapeMismatch, "sample has " + std::to_string(sample.size()) +
                                              " elements, trained space expects " +
                                              std::to_string(space.train.cols()));
  const Eigen::Index n = space.size();
  const int k = space.k();
  ExtensionVector ext;
  ext.kernel_row.resize(n);
  for (Eigen::Index j = 0; j < n; ++j)
    ext.kernel_row[j] =
        gaussian_kernel(squared_distance(sample, space.train.row(j)), space.config.alpha);
  ext.row_sum = row_sum(ext.kernel_row.transpose());
  if (!(ext.row_sum >= kMinKernelRowSum))
    throw Error(ErrorCode::NumericalUnderflow,
                "sample is too far from every training sample (kernel row sum underflows)");
  ext.p_row = ext.kernel_row / ext.row_sum;

  ext.eigenfunctions.resize(k);
  ext.coords.resize(k);
  for (int l = 1; l <= k; ++l) {
    const double lambda = space.basis.eigenvalues[l];
    const double psi = ext.p_row.dot(space.basis.eigenvectors.col(l)) / lambda;
    ext.eigenfunctions[l - 1] = psi;
    ext.coords[l - 1] = eigenvalue_power(lambda, space.basis.t) * psi;
  }
  return ext;
}

inline ExtensionVector extend(const TrainedSpace& space, const SampleTensor& standardized) {
  if (!(standardized.shape == space.shape))
    throw Error(ErrorCode::ShapeMismatch, "sample '" + standardized.id + "' has shape " +
                                              standardized.shape.str() + ", trained space uses " +
                                              space.shape.str());
  return extend(space, Eigen::Map<const Eigen::RowVectorXd>(
                           standardized.data.data(), static_cast<Eigen::Index>(standardized.data.size())));
}

/// Coordinates for every row of `samples`, in order.
inline Eigen::MatrixXd batch_extend(const TrainedSpace& space, const Eigen::MatrixXd& samples) {
  Eigen::MatrixXd out(samples.rows(), space.k());
  for (Eigen::Index i = 0; i < samples.rows(); ++i) out.row(i) = extend(space, samples.row(i)).coords;
  return out;
}

/// Per-sample extension of standardized samples; errors name the failing sample.
inline Eigen::MatrixXd batch_extend(const TrainedSpace& space, const Dataset& standardized) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(standardized.size()), space.k());
  for (std::size_t i = 0; i < standardized.size(); ++i) {
    try {
      out.row(static_cast<Eigen::Index>(i)) = extend(space, standardized[i]).coords;
    } catch (const Error& e) {
      throw e.within("sample '" + standardized[i].id + "'");
    }
  }
  return out;
}

/// Frobenius norm between the extended coordinates of `samples` and their coordinates from a
/// full decomposition of the training + sample graph. Each recomputed eigenvector is rescaled so
/// its training part has unit norm and sign-aligned with the trained eigenvector first.
inline double embedding_distortion(const TrainedSpace& space, const Eigen::MatrixXd& samples) {
  if (samples.rows() == 0) return 0.0;
  const Eigen::MatrixXd extended = batch_extend(space, samples);

  const Eigen::Index n = space.size();
  Eigen::MatrixXd all(n + samples.rows(), space.train.cols());
  all.topRows(n) = space.train;
  all.bottomRows(samples.rows()) = samples;
  const MarkovGraph graph = build_markov(build_kernel(pairwise_sq_distances(all), space.config));
  const SpectralBasis full = decompose(graph, space.k());

  Eigen::MatrixXd recomputed(samples.rows(), space.k());
  for (int l = 1; l <= space.k(); ++l) {
    const auto train_part = full.eigenvectors.col(l).head(n);
    const double norm = train_part.norm();
    const double sign = train_part.dot(space.basis.eigenvectors.col(l)) < 0.0 ? -1.0 : 1.0;
    const double scale = norm > 0.0 ? sign / norm : 0.0;
    recomputed.col(l - 1) = eigenvalue_power(full.eigenvalues[l], full.t) * scale *
                            full.eigenvectors.col(l).tail(samples.rows());
  }
  return (extended - recomputed).norm();
}

inline double embedding_distortion(const TrainedSpace& space, const Dataset& standardized) {
  for (const auto& s : standardized)
    if (!(s.shape == space.shape))
      throw Error(ErrorCode::ShapeMismatch, "sample '" + s.id + "' is not shape-compatible");
  return embedding_distortion(space, to_matrix(standardized));
}

}  // namespace dmap
