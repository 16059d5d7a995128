#pragma once

// Persisted trained diffusion space.
//
// Layout (little-endian):
//   magic[4] "DMTS"
//   u32      header byte length
//   header   JSON: format_version, alpha, t, k, n, m, shape, ids, extra
//   tensors  float64 tensor framing ("TND1"), in order: training rows (n x m),
//            eigenvalues (k + 1), eigenvectors (n x (k + 1)), degrees (n)

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "dmap/error.hpp"
#include "dmap/oos_extension.hpp"
#include "dmap/tensor_io.hpp"

namespace dmap {

inline constexpr std::array<char, 4> kSpaceMagic = {'D', 'M', 'T', 'S'};
inline constexpr int kSpaceFormatVersion = 1;

namespace detail {

inline void write_matrix_tensor(std::ostream& out, const Eigen::MatrixXd& m) {
  // Eigen is column-major; payload is row-major.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  write_tensor(out, {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())},
               rm.data(), static_cast<std::size_t>(rm.size()), true);
}

inline void write_vector_tensor(std::ostream& out, const Eigen::VectorXd& v) {
  write_tensor(out, {static_cast<std::uint32_t>(v.size())}, v.data(),
               static_cast<std::size_t>(v.size()), true);
}

inline Eigen::MatrixXd read_matrix_tensor(std::istream& in, Eigen::Index rows, Eigen::Index cols,
                                          const std::string& what) {
  TensorBlob blob = read_tensor(in, what);
  if (blob.dims.size() != 2 || blob.dims[0] != rows || blob.dims[1] != cols)
    throw Error(ErrorCode::VersionMismatch, what + ": tensor dims disagree with header");
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      blob.values.data(), rows, cols);
}

inline Eigen::VectorXd read_vector_tensor(std::istream& in, Eigen::Index size,
                                          const std::string& what) {
  TensorBlob blob = read_tensor(in, what);
  if (blob.dims.size() != 1 || blob.dims[0] != size)
    throw Error(ErrorCode::VersionMismatch, what + ": tensor dims disagree with header");
  return Eigen::Map<const Eigen::VectorXd>(blob.values.data(), size);
}

}  // namespace detail

/// Writes the space; `extra` is stored verbatim in the header (e.g. a fitted classifier).
inline void save_space(const std::filesystem::path& path, const TrainedSpace& space,
                       const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json header = {
      {"format_version", kSpaceFormatVersion},
      {"alpha", space.config.alpha},
      {"t", space.config.t},
      {"k", space.k()},
      {"n", space.size()},
      {"m", space.train.cols()},
      {"shape", {space.shape.slices, space.shape.height, space.shape.width, space.shape.channels}},
      {"ids", space.ids},
      {"extra", extra},
  };
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out.write(kSpaceMagic.data(), 4);
  detail::put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  detail::write_matrix_tensor(out, space.train);
  detail::write_vector_tensor(out, space.basis.eigenvalues);
  detail::write_matrix_tensor(out, space.basis.eigenvectors);
  detail::write_vector_tensor(out, space.degrees);
  if (!out) throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

struct LoadedSpace {
  TrainedSpace space;
  nlohmann::json extra;
};

inline LoadedSpace load_space(const std::filesystem::path& path) {
  const std::string what = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + what + "'");
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || magic != kSpaceMagic)
    throw Error(ErrorCode::VersionMismatch, what + ": not a trained-space file");
  const std::uint32_t len = detail::get_u32(in, what);
  std::string text(len, '\0');
  if (!in.read(text.data(), len)) throw Error(ErrorCode::VersionMismatch, what + ": truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::VersionMismatch, what + ": unreadable header (" + e.what() + ")");
  }
  if (header.value("format_version", -1) != kSpaceFormatVersion)
    throw Error(ErrorCode::VersionMismatch,
                what + ": format version " + header.value("format_version", nlohmann::json()).dump() +
                    ", this build reads version " + std::to_string(kSpaceFormatVersion));

  LoadedSpace loaded;
  TrainedSpace& space = loaded.space;
  try {
    space.config.alpha = header.at("alpha").get<double>();
    space.config.t = header.at("t").get<int>();
    const int k = header.at("k").get<int>();
    const auto n = header.at("n").get<Eigen::Index>();
    const auto m = header.at("m").get<Eigen::Index>();
    const auto shape = header.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 4) throw Error(ErrorCode::VersionMismatch, what + ": bad shape");
    space.shape = Shape{shape[0], shape[1], shape[2], shape[3]};
    space.ids = header.at("ids").get<std::vector<std::string>>();
    loaded.extra = header.value("extra", nlohmann::json::object());

    space.train = detail::read_matrix_tensor(in, n, m, what);
    space.basis.k = k;
    space.basis.t = space.config.t;
    space.basis.eigenvalues = detail::read_vector_tensor(in, k + 1, what);
    space.basis.eigenvectors = detail::read_matrix_tensor(in, n, k + 1, what);
    space.degrees = detail::read_vector_tensor(in, n, what);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::VersionMismatch, what + ": header missing fields (" + e.what() + ")");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::TensorParse) throw Error(ErrorCode::VersionMismatch, e.detail());
    throw;
  }
  space.config.validate();
  if (static_cast<Eigen::Index>(space.ids.size()) != space.train.rows())
    throw Error(ErrorCode::VersionMismatch, what + ": id count disagrees with training rows");
  space.coords = embed(space.basis);
  return loaded;
}

}  // namespace dmap
