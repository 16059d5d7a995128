#pragma once

// Synthetic striatum phantoms standing in for transaxial DaT-SPECT slices.
//
// Class 0 (normal): two bright comma shapes mirrored about the vertical midline, each a
// rounded head with a tail curving down and outward.
// Class 1 (abnormal): shrunken round/oval blobs at reduced intensity, often asymmetric.
//
// Shape parameters and the noise field come from separate generators, so changing
// noise_sigma never moves the underlying shapes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <vector>

#include "dmap/error.hpp"
#include "dmap/tensor.hpp"

namespace dmap {

inline constexpr double kPhantomPeak = 10.0;
inline constexpr double kPhantomBackground = 1.5;

namespace detail {

struct Blob {
  double cx, cy, radius, amplitude;
};

inline std::vector<double> render_blobs(const std::vector<Blob>& blobs, std::size_t height,
                                        std::size_t width) {
  std::vector<double> img(height * width, 0.0);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double v = 0.0;
      for (const auto& b : blobs) {
        const double dx = static_cast<double>(x) - b.cx;
        const double dy = static_cast<double>(y) - b.cy;
        v = std::max(v, b.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * b.radius * b.radius)));
      }
      img[y * width + x] = v;
    }
  }
  return img;
}

inline std::seed_seq noise_seed(std::uint64_t seed, std::uint64_t index) {
  return std::seed_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                       0x6e6f6973u};
}

}  // namespace detail

/// Standard-normal field added (times noise_sigma) to phantom number `index`.
inline std::vector<double> phantom_noise_field(std::uint64_t seed, std::size_t index,
                                               const Shape& shape) {
  auto seq = detail::noise_seed(seed, index);
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(shape.size());
  for (double& v : z) v = normal(rng);
  return z;
}

/// Noise-free intensity of the phantom layer for one class, drawn from `rng`.
inline std::vector<double> render_phantom(int label, std::size_t height, std::size_t width,
                                          std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const double sx = static_cast<double>(width) / 32.0;
  const double sy = static_cast<double>(height) / 32.0;
  const double jitter_x = uniform(-1.0, 1.0) * sx;
  const double jitter_y = uniform(-1.0, 1.0) * sy;
  const double scale = uniform(0.9, 1.1);
  const double amplitude = uniform(0.9, 1.1);
  const double mid_x = static_cast<double>(width) / 2.0;
  const double head_y = static_cast<double>(height) * 0.38 + jitter_y;

  std::vector<detail::Blob> blobs;
  if (label == 0) {
    for (int side : {-1, 1}) {
      const double head_x = mid_x + side * 4.0 * sx * scale + jitter_x;
      constexpr int kSegments = 8;
      for (int i = 0; i < kSegments; ++i) {
        const double s = static_cast<double>(i) / (kSegments - 1);
        const double angle = 1.1 * s;
        blobs.push_back({head_x + side * 7.0 * sx * scale * std::sin(angle),
                         head_y + (9.0 * (1.0 - std::cos(angle)) + 5.0 * s) * sy * scale,
                         2.6 * sx * scale * (1.0 - 0.45 * s), amplitude});
      }
    }
  } else {
    const double reduction = uniform(0.35, 0.6);
    const double asymmetry = uniform(0.6, 1.0);
    for (int side : {-1, 1}) {
      const double head_x = mid_x + side * 4.0 * sx * scale + jitter_x;
      const double radius = 2.6 * sx * scale * uniform(0.9, 1.2);
      const double level = reduction * (side == 1 ? asymmetry : 1.0) * amplitude;
      blobs.push_back({head_x, head_y, radius, level});
    }
  }
  std::vector<double> img = detail::render_blobs(blobs, height, width);
  for (double& v : img) v = kPhantomBackground + kPhantomPeak * v;
  return img;
}

/// Deterministic phantom dataset: n_per_class normal samples followed by n_per_class
/// abnormal ones. Values are rounded to float32 so tensor files round-trip exactly.
inline Dataset generate_phantoms(std::size_t n_per_class, const Shape& shape, double noise_sigma,
                                 std::uint64_t seed) {
  if (n_per_class < 1) throw Error(ErrorCode::InvalidArgument, "n_per_class must be >= 1");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw Error(ErrorCode::InvalidArgument, "noise_sigma must be >= 0");
  if (!shape.valid()) throw Error(ErrorCode::InvalidArgument, "phantom shape has a zero dimension");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> age_dist(68.3, 8.0);
  const double mid_slice = (static_cast<double>(shape.slices) - 1.0) / 2.0;

  Dataset dataset;
  std::size_t index = 0;
  for (int label : {0, 1}) {
    for (std::size_t i = 0; i < n_per_class; ++i, ++index) {
      const std::vector<double> layer = render_phantom(label, shape.height, shape.width, rng);
      const double age = std::round(std::clamp(age_dist(rng), 40.0, 95.0) * 10.0) / 10.0;
      const std::vector<double> noise = phantom_noise_field(seed, index, shape);

      SampleTensor sample;
      char id[32];
      std::snprintf(id, sizeof id, "ph%05zu", index);
      sample.id = id;
      sample.shape = shape;
      sample.label = label;
      sample.age = age;
      sample.data.resize(shape.size());
      std::size_t e = 0;
      for (std::size_t s = 0; s < shape.slices; ++s) {
        const double slice_gain =
            mid_slice > 0.0 ? 1.0 - 0.2 * std::abs(static_cast<double>(s) - mid_slice) / mid_slice
                            : 1.0;
        for (std::size_t p = 0; p < shape.height * shape.width; ++p) {
          for (std::size_t c = 0; c < shape.channels; ++c, ++e) {
            const double v = layer[p] * slice_gain + noise_sigma * noise[e];
            sample.data[e] = static_cast<double>(static_cast<float>(v));
          }
        }
      }
      dataset.add(std::move(sample));
    }
  }
  return dataset;
}

}  // namespace dmap
