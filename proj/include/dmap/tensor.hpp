#pragma once

// Sample tensors, datasets and per-sample standardization.

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dmap/error.hpp"

namespace dmap {

/// Tensor extent as (slices, height, width, channels).
struct Shape {
  std::size_t slices = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t channels = 1;

  std::size_t size() const { return slices * height * width * channels; }
  bool valid() const { return slices >= 1 && height >= 1 && width >= 1 && channels >= 1; }
  bool operator==(const Shape&) const = default;

  std::string str() const {
    return std::to_string(slices) + "x" + std::to_string(height) + "x" + std::to_string(width) +
           "x" + std::to_string(channels);
  }
};

/// One subject's image stack, row-major over (s, h, w, c).
struct SampleTensor {
  std::string id;
  Shape shape;
  std::vector<double> data;
  std::optional<int> label;  // 0 = normal, 1 = abnormal
  std::optional<double> age;

  double at(std::size_t s, std::size_t h, std::size_t w, std::size_t c) const {
    return data[((s * shape.height + h) * shape.width + w) * shape.channels + c];
  }
};

inline void validate(const SampleTensor& sample) {
  if (!sample.shape.valid())
    throw Error(ErrorCode::ShapeMismatch, "sample '" + sample.id + "' has a zero dimension");
  if (sample.data.size() != sample.shape.size())
    throw Error(ErrorCode::ShapeMismatch, "sample '" + sample.id + "' holds " +
                                              std::to_string(sample.data.size()) +
                                              " values for shape " + sample.shape.str());
  for (double v : sample.data)
    if (!std::isfinite(v))
      throw Error(ErrorCode::InvalidArgument, "sample '" + sample.id + "' has non-finite values");
  if (sample.label && *sample.label != 0 && *sample.label != 1)
    throw Error(ErrorCode::InvalidArgument, "sample '" + sample.id + "' label must be 0 or 1");
}

struct NormalizationStats {
  double mean = 0.0;
  double sdev = 0.0;
};

inline constexpr double kDegenerateSdev = 1e-12;

/// Grand mean and sample standard deviation (denominator count - 1) over every element.
inline NormalizationStats normalization_stats(const std::vector<double>& values) {
  NormalizationStats stats;
  const std::size_t count = values.size();
  if (count == 0) return stats;
  double sum = 0.0;
  for (double v : values) sum += v;
  stats.mean = sum / static_cast<double>(count);
  if (count < 2) return stats;
  double ss = 0.0;
  for (double v : values) {
    const double d = v - stats.mean;
    ss += d * d;
  }
  stats.sdev = std::sqrt(ss / static_cast<double>(count - 1));
  return stats;
}

/// Z-scores the whole tensor with its own statistics. Multi-slice stacks are treated as one
/// tensor. Throws DegenerateSample for constant (or single-element) samples.
inline std::pair<SampleTensor, NormalizationStats> standardize(const SampleTensor& sample) {
  for (double v : sample.data)
    if (!std::isfinite(v))
      throw Error(ErrorCode::InvalidArgument, "sample '" + sample.id + "' has non-finite values");
  const NormalizationStats stats = normalization_stats(sample.data);
  if (!(stats.sdev >= kDegenerateSdev))
    throw Error(ErrorCode::DegenerateSample,
                "sample '" + sample.id + "' has zero variance and cannot be standardized");
  SampleTensor out = sample;
  for (double& v : out.data) v = (v - stats.mean) / stats.sdev;
  return {std::move(out), stats};
}

/// Ordered collection of equally shaped samples with unique ids.
class Dataset {
 public:
  Dataset() = default;

  explicit Dataset(std::vector<SampleTensor> samples) {
    samples_.reserve(samples.size());
    for (auto& s : samples) add(std::move(s));
  }

  void add(SampleTensor sample) {
    validate(sample);
    if (!samples_.empty() && !(sample.shape == samples_.front().shape))
      throw Error(ErrorCode::ShapeMismatch, "sample '" + sample.id + "' has shape " +
                                                sample.shape.str() + ", expected " +
                                                samples_.front().shape.str());
    if (!ids_.insert(sample.id).second)
      throw Error(ErrorCode::DuplicateId, "duplicate sample id '" + sample.id + "'");
    if (sample.label) ++class_counts_[*sample.label];
    samples_.push_back(std::move(sample));
  }

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const SampleTensor& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<SampleTensor>& samples() const { return samples_; }
  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

  /// Per-label counts over labeled samples.
  const std::map<int, std::size_t>& class_counts() const { return class_counts_; }

  Shape shape() const { return samples_.empty() ? Shape{} : samples_.front().shape; }

  bool fully_labeled() const {
    for (const auto& s : samples_)
      if (!s.label) return false;
    return true;
  }

  std::vector<int> labels() const {
    std::vector<int> out;
    out.reserve(samples_.size());
    for (const auto& s : samples_) {
      if (!s.label) throw Error(ErrorCode::InvalidArgument, "sample '" + s.id + "' has no label");
      out.push_back(*s.label);
    }
    return out;
  }

 private:
  std::vector<SampleTensor> samples_;
  std::unordered_set<std::string> ids_;
  std::map<int, std::size_t> class_counts_;
};

/// Standardizes every sample independently.
inline Dataset standardize_all(const Dataset& dataset) {
  Dataset out;
  for (const auto& s : dataset) out.add(standardize(s).first);
  return out;
}

/// Stacks flattened samples as matrix rows (n x element count).
inline Eigen::MatrixXd to_matrix(const Dataset& dataset) {
  const auto n = static_cast<Eigen::Index>(dataset.size());
  const auto m = static_cast<Eigen::Index>(dataset.shape().size());
  Eigen::MatrixXd rows(n, dataset.empty() ? 0 : m);
  for (Eigen::Index i = 0; i < n; ++i)
    rows.row(i) = Eigen::Map<const Eigen::RowVectorXd>(dataset[i].data.data(), m);
  return rows;
}

inline Eigen::MatrixXd to_matrix(const Dataset& dataset, const std::vector<std::size_t>& indices) {
  const auto m = static_cast<Eigen::Index>(dataset.shape().size());
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(indices.size()), m);
  for (std::size_t r = 0; r < indices.size(); ++r)
    rows.row(static_cast<Eigen::Index>(r)) =
        Eigen::Map<const Eigen::RowVectorXd>(dataset[indices[r]].data.data(), m);
  return rows;
}

}  // namespace dmap
