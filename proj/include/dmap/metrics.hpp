#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "dmap/error.hpp"

namespace dmap {

/// Binary confusion counts; label 1 (abnormal) is the positive class.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
};

/// Ratios are empty when their denominator is zero.
struct Metrics {
  Confusion confusion;
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
};

inline std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

inline Metrics metrics_from(const Confusion& c) {
  Metrics m;
  m.confusion = c;
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.sensitivity = ratio(c.tp, c.tp + c.fn);
  m.specificity = ratio(c.tn, c.tn + c.fp);
  return m;
}

inline Metrics compute_metrics(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size())
    throw Error(ErrorCode::LengthMismatch, "predicted and true label counts differ");
  if (predicted.empty()) throw Error(ErrorCode::LengthMismatch, "no labels to score");
  Confusion c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] == 1;
    const bool t = truth[i] == 1;
    if (p && t) {
      ++c.tp;
    } else if (p) {
      ++c.fp;
    } else if (t) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return metrics_from(c);
}

}  // namespace dmap
