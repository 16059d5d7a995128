#pragma once

// One train/extend interface over the four embedding methods.

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <Eigen/Dense>

#include "dmap/alt_embedders.hpp"
#include "dmap/error.hpp"
#include "dmap/oos_extension.hpp"

namespace dmap {

enum class Method { DM, LLE, Isomap, KPCA };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::DM: return "dm";
    case Method::LLE: return "lle";
    case Method::Isomap: return "isomap";
    case Method::KPCA: return "kpca";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view text) {
  if (text == "dm") return Method::DM;
  if (text == "lle") return Method::LLE;
  if (text == "isomap") return Method::Isomap;
  if (text == "kpca") return Method::KPCA;
  return std::nullopt;
}

struct EmbedderSpec {
  Method method = Method::DM;
  int k = 200;
  int neighbors = 10;  // LLE / Isomap
  double alpha = 8.0;  // DM / KPCA
  int t = 1;           // DM
};

class TrainedEmbedding {
 public:
  using Space = std::variant<TrainedSpace, LleSpace, IsomapSpace, KpcaSpace>;

  TrainedEmbedding(EmbedderSpec spec, Space space) : spec_(spec), space_(std::move(space)) {}

  const EmbedderSpec& spec() const { return spec_; }
  const Space& space() const { return space_; }

  /// Training coordinates, n x k.
  const Eigen::MatrixXd& coords() const {
    return std::visit([](const auto& s) -> const Eigen::MatrixXd& { return s.coords; }, space_);
  }

  Eigen::VectorXd extend(const Eigen::Ref<const Eigen::RowVectorXd>& sample) const {
    struct Visitor {
      const Eigen::Ref<const Eigen::RowVectorXd>& x;
      Eigen::VectorXd operator()(const TrainedSpace& s) const { return dmap::extend(s, x).coords; }
      Eigen::VectorXd operator()(const LleSpace& s) const { return extend_lle(s, x); }
      Eigen::VectorXd operator()(const IsomapSpace& s) const { return extend_isomap(s, x); }
      Eigen::VectorXd operator()(const KpcaSpace& s) const { return extend_kpca(s, x); }
    };
    return std::visit(Visitor{sample}, space_);
  }

  Eigen::MatrixXd extend_rows(const Eigen::MatrixXd& samples) const {
    Eigen::MatrixXd out(samples.rows(), spec_.k);
    for (Eigen::Index i = 0; i < samples.rows(); ++i) out.row(i) = extend(samples.row(i)).transpose();
    return out;
  }

 private:
  EmbedderSpec spec_;
  Space space_;
};

/// Fits the chosen method on standardized, flattened samples (rows).
inline TrainedEmbedding fit(const EmbedderSpec& spec, const Eigen::MatrixXd& train) {
  switch (spec.method) {
    case Method::DM: return {spec, train_space(train, KernelConfig{spec.alpha, spec.t}, spec.k)};
    case Method::LLE: return {spec, fit_lle(train, spec.k, spec.neighbors)};
    case Method::Isomap: return {spec, fit_isomap(train, spec.k, spec.neighbors)};
    case Method::KPCA: return {spec, fit_kpca(train, spec.k, spec.alpha)};
  }
  throw Error(ErrorCode::Configuration, "unknown embedding method");
}

}  // namespace dmap
