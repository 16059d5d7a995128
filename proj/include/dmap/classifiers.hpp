#pragma once

// Two-class linear classifiers on embedded coordinates.

#include <cmath>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "dmap/error.hpp"

namespace dmap {

struct Prediction {
  std::vector<int> labels;
  std::vector<double> scores;
};

namespace detail {

inline void check_training_input(const Eigen::MatrixXd& coords, std::span<const int> labels) {
  if (static_cast<std::size_t>(coords.rows()) != labels.size())
    throw Error(ErrorCode::LengthMismatch, "one label per coordinate row required");
  bool has0 = false, has1 = false;
  for (int y : labels) {
    if (y == 0) {
      has0 = true;
    } else if (y == 1) {
      has1 = true;
    } else {
      throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
    }
  }
  if (!has0 || !has1) throw Error(ErrorCode::SingleClass, "both classes are required to fit");
}

inline Prediction linear_predict(const Eigen::VectorXd& weights, double bias,
                                 const Eigen::MatrixXd& coords) {
  if (coords.cols() != weights.size())
    throw Error(ErrorCode::DimensionMismatch, "coordinates have " + std::to_string(coords.cols()) +
                                                  " columns, model expects " +
                                                  std::to_string(weights.size()));
  Prediction out;
  out.scores.resize(static_cast<std::size_t>(coords.rows()));
  out.labels.resize(static_cast<std::size_t>(coords.rows()));
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    const double s = coords.row(i).dot(weights) + bias;
    out.scores[static_cast<std::size_t>(i)] = s;
    out.labels[static_cast<std::size_t>(i)] = s > 0.0 ? 1 : 0;  // ties go to class 0
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------------------------
// Fisher LDA

inline constexpr double kLdaShrinkage = 1e-4;

struct LdaModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  Eigen::VectorXd mean0;
  Eigen::VectorXd mean1;
  Eigen::MatrixXd pooled_covariance;
};

/// Pooled within-class covariance shrunk toward (trace / k) I, weights = S^{-1}(mu1 - mu0), bias
/// placing the boundary at the midpoint of the class means (equal priors).
inline LdaModel lda_fit(const Eigen::MatrixXd& coords, std::span<const int> labels) {
  detail::check_training_input(coords, labels);
  const Eigen::Index k = coords.cols();
  LdaModel model;
  model.mean0 = Eigen::VectorXd::Zero(k);
  model.mean1 = Eigen::VectorXd::Zero(k);
  Eigen::Index n0 = 0, n1 = 0;
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    if (labels[static_cast<std::size_t>(i)] == 1) {
      model.mean1 += coords.row(i).transpose();
      ++n1;
    } else {
      model.mean0 += coords.row(i).transpose();
      ++n0;
    }
  }
  model.mean0 /= static_cast<double>(n0);
  model.mean1 /= static_cast<double>(n1);

  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    const Eigen::VectorXd d = coords.row(i).transpose() -
                              (labels[static_cast<std::size_t>(i)] == 1 ? model.mean1 : model.mean0);
    scatter.selfadjointView<Eigen::Lower>().rankUpdate(d);
  }
  scatter = scatter.selfadjointView<Eigen::Lower>();
  const Eigen::Index dof = coords.rows() > 2 ? coords.rows() - 2 : coords.rows();
  Eigen::MatrixXd cov = scatter / static_cast<double>(dof);

  double target = cov.trace() / static_cast<double>(k);
  if (!(target > 0.0)) target = 1.0;  // no within-class spread at all
  model.pooled_covariance = (1.0 - kLdaShrinkage) * cov;
  model.pooled_covariance.diagonal().array() += kLdaShrinkage * target;

  model.weights = model.pooled_covariance.llt().solve(model.mean1 - model.mean0);
  model.bias = -0.5 * model.weights.dot(model.mean0 + model.mean1);
  return model;
}

inline Prediction lda_predict(const LdaModel& model, const Eigen::MatrixXd& coords) {
  return detail::linear_predict(model.weights, model.bias, coords);
}

// ---------------------------------------------------------------------------------------------
// Logistic regression

struct LogisticOptions {
  int max_iter = 500;
  double tol = 1e-8;
  double l2 = 1e-6;
};

struct LogisticModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  std::vector<double> loss_history;  // objective after each accepted step, starting at w = 0
};

/// Mean negative log-likelihood plus (l2 / 2) |w|^2; the bias is not penalized.
inline double logistic_objective(const Eigen::MatrixXd& coords, std::span<const int> labels,
                                 const Eigen::VectorXd& weights, double bias, double l2) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    const double z = coords.row(i).dot(weights) + bias;
    // log(1 + e^z) - y z, evaluated stably
    const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    loss += softplus - labels[static_cast<std::size_t>(i)] * z;
  }
  return loss / static_cast<double>(coords.rows()) + 0.5 * l2 * weights.squaredNorm();
}

/// Gradient of `logistic_objective` with respect to (w, b), bias last.
inline Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& coords, std::span<const int> labels,
                                         const Eigen::VectorXd& weights, double bias, double l2) {
  const Eigen::Index k = coords.cols();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(k + 1);
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    const double z = coords.row(i).dot(weights) + bias;
    const double p = 1.0 / (1.0 + std::exp(-z));
    const double r = p - labels[static_cast<std::size_t>(i)];
    grad.head(k) += r * coords.row(i).transpose();
    grad[k] += r;
  }
  grad /= static_cast<double>(coords.rows());
  grad.head(k) += l2 * weights;
  return grad;
}

/// Newton (IRLS) iterations with backtracking so every accepted step lowers the objective.
inline LogisticModel logistic_fit(const Eigen::MatrixXd& coords, std::span<const int> labels,
                                  const LogisticOptions& options = {}) {
  detail::check_training_input(coords, labels);
  const Eigen::Index n = coords.rows();
  const Eigen::Index k = coords.cols();
  LogisticModel model;
  model.weights = Eigen::VectorXd::Zero(k);
  double loss = logistic_objective(coords, labels, model.weights, model.bias, options.l2);
  model.loss_history.push_back(loss);

  Eigen::MatrixXd design(n, k + 1);
  design.leftCols(k) = coords;
  design.col(k).setOnes();

  for (int iter = 0; iter < options.max_iter; ++iter) {
    const Eigen::VectorXd grad = logistic_gradient(coords, labels, model.weights, model.bias, options.l2);
    model.gradient_norm = grad.cwiseAbs().maxCoeff();
    if (model.gradient_norm < options.tol) {
      model.converged = true;
      break;
    }
    Eigen::VectorXd curvature(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = 1.0 / (1.0 + std::exp(-(coords.row(i).dot(model.weights) + model.bias)));
      curvature[i] = p * (1.0 - p);
    }
    Eigen::MatrixXd hessian = design.transpose() * curvature.asDiagonal() * design / static_cast<double>(n);
    hessian.diagonal().head(k).array() += options.l2;
    hessian(k, k) += 1e-12;  // bias direction is unpenalized
    const Eigen::VectorXd step = hessian.ldlt().solve(grad);

    double scale = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, scale *= 0.5) {
      const Eigen::VectorXd w = model.weights - scale * step.head(k);
      const double b = model.bias - scale * step[k];
      const double candidate = logistic_objective(coords, labels, w, b, options.l2);
      if (candidate < loss) {
        model.weights = w;
        model.bias = b;
        loss = candidate;
        accepted = true;
        break;
      }
    }
    model.iterations = iter + 1;
    if (!accepted) {
      // No decrease representable in double precision; treat as stationary.
      model.converged = model.gradient_norm < 1e3 * options.tol;
      break;
    }
    model.loss_history.push_back(loss);
  }
  if (!model.converged) {
    model.gradient_norm =
        logistic_gradient(coords, labels, model.weights, model.bias, options.l2).cwiseAbs().maxCoeff();
    model.converged = model.gradient_norm < options.tol;
  }
  return model;
}

inline Prediction logistic_predict(const LogisticModel& model, const Eigen::MatrixXd& coords) {
  return detail::linear_predict(model.weights, model.bias, coords);
}

// ---------------------------------------------------------------------------------------------
// Classifier selection

enum class ClassifierKind { LDA, Logistic };

inline std::string_view to_string(ClassifierKind kind) {
  return kind == ClassifierKind::LDA ? "lda" : "logistic";
}

inline std::optional<ClassifierKind> parse_classifier(std::string_view text) {
  if (text == "lda") return ClassifierKind::LDA;
  if (text == "logistic") return ClassifierKind::Logistic;
  return std::nullopt;
}

class Classifier {
 public:
  using Model = std::variant<LdaModel, LogisticModel>;

  explicit Classifier(Model model) : model_(std::move(model)) {}

  ClassifierKind kind() const {
    return std::holds_alternative<LdaModel>(model_) ? ClassifierKind::LDA : ClassifierKind::Logistic;
  }
  const Model& model() const { return model_; }

  const Eigen::VectorXd& weights() const {
    return std::visit([](const auto& m) -> const Eigen::VectorXd& { return m.weights; }, model_);
  }
  double bias() const { return std::visit([](const auto& m) { return m.bias; }, model_); }

  Prediction predict(const Eigen::MatrixXd& coords) const {
    return detail::linear_predict(weights(), bias(), coords);
  }

 private:
  Model model_;
};

inline Classifier fit_classifier(ClassifierKind kind, const Eigen::MatrixXd& coords,
                                 std::span<const int> labels) {
  if (kind == ClassifierKind::LDA) return Classifier(lda_fit(coords, labels));
  return Classifier(logistic_fit(coords, labels));
}

// ---------------------------------------------------------------------------------------------
// JSON export

inline nlohmann::json to_json_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Eigen::VectorXd from_json_vector(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline nlohmann::json to_json(const Classifier& classifier) {
  nlohmann::json j = {{"kind", std::string(to_string(classifier.kind()))},
                      {"weights", to_json_vector(classifier.weights())},
                      {"bias", classifier.bias()}};
  if (const auto* lda = std::get_if<LdaModel>(&classifier.model())) {
    j["mean0"] = to_json_vector(lda->mean0);
    j["mean1"] = to_json_vector(lda->mean1);
  } else if (const auto* lr = std::get_if<LogisticModel>(&classifier.model())) {
    j["iterations"] = lr->iterations;
    j["converged"] = lr->converged;
  }
  return j;
}

/// Restores a classifier exported by `to_json`; enough to predict.
inline Classifier classifier_from_json(const nlohmann::json& j) {
  const auto kind = parse_classifier(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::VersionMismatch, "unknown classifier kind in model file");
  if (*kind == ClassifierKind::LDA) {
    LdaModel m;
    m.weights = from_json_vector(j.at("weights"));
    m.bias = j.at("bias").get<double>();
    m.mean0 = from_json_vector(j.at("mean0"));
    m.mean1 = from_json_vector(j.at("mean1"));
    return Classifier(std::move(m));
  }
  LogisticModel m;
  m.weights = from_json_vector(j.at("weights"));
  m.bias = j.at("bias").get<double>();
  m.iterations = j.value("iterations", 0);
  m.converged = j.value("converged", false);
  return Classifier(std::move(m));
}

}  // namespace dmap
