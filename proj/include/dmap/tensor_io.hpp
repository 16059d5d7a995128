#pragma once

// Binary tensor files and CSV dataset manifests.
//
// Tensor file layout (little-endian):
//   magic[4]  "TNS1" (float32 payload) or "TND1" (float64 payload)
//   u32       ndim
//   u32[ndim] dims
//   payload   row-major, prod(dims) elements

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dmap/error.hpp"
#include "dmap/tensor.hpp"

namespace dmap {

inline constexpr std::array<char, 4> kTensorMagicF32 = {'T', 'N', 'S', '1'};
inline constexpr std::array<char, 4> kTensorMagicF64 = {'T', 'N', 'D', '1'};

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

inline std::uint32_t get_u32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw Error(ErrorCode::TensorParse, what + ": truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t get_u64(std::istream& in, const std::string& what) {
  const std::uint64_t lo = get_u32(in, what);
  const std::uint64_t hi = get_u32(in, what);
  return lo | (hi << 32);
}

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline bool parse_double(const std::string& text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace detail

/// Raw tensor contents as read from disk.
struct TensorBlob {
  std::vector<std::uint32_t> dims;
  std::vector<double> values;
};

/// Writes a tensor. float32 payloads are exact only for values representable in float.
inline void write_tensor(std::ostream& out, const std::vector<std::uint32_t>& dims,
                         const double* values, std::size_t count, bool float64 = false) {
  std::size_t expected = 1;
  for (auto d : dims) expected *= d;
  if (expected != count)
    throw Error(ErrorCode::ShapeMismatch, "tensor dims do not match payload size");
  const auto& magic = float64 ? kTensorMagicF64 : kTensorMagicF32;
  out.write(magic.data(), 4);
  detail::put_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) detail::put_u32(out, d);
  for (std::size_t i = 0; i < count; ++i) {
    if (float64) {
      detail::put_u64(out, std::bit_cast<std::uint64_t>(values[i]));
    } else {
      detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(values[i])));
    }
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing tensor payload");
}

inline TensorBlob read_tensor(std::istream& in, const std::string& what = "tensor") {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4)) throw Error(ErrorCode::TensorParse, what + ": missing magic");
  bool float64 = false;
  if (magic == kTensorMagicF64) {
    float64 = true;
  } else if (magic != kTensorMagicF32) {
    throw Error(ErrorCode::TensorParse, what + ": bad magic bytes");
  }
  TensorBlob blob;
  const std::uint32_t ndim = detail::get_u32(in, what);
  if (ndim == 0 || ndim > 16) throw Error(ErrorCode::TensorParse, what + ": invalid ndim");
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    blob.dims.push_back(detail::get_u32(in, what));
    count *= blob.dims.back();
    if (count > (std::uint64_t{1} << 34)) throw Error(ErrorCode::TensorParse, what + ": too large");
  }
  blob.values.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    if (float64) {
      blob.values[i] = std::bit_cast<double>(detail::get_u64(in, what));
    } else {
      blob.values[i] = static_cast<double>(std::bit_cast<float>(detail::get_u32(in, what)));
    }
  }
  return blob;
}

/// Maps file dims onto (s, h, w, c): 1-D -> width, 2-D -> (h, w), 3-D -> (h, w, c), 4-D as is.
inline Shape shape_from_dims(const std::vector<std::uint32_t>& dims, const std::string& what) {
  switch (dims.size()) {
    case 1: return Shape{1, 1, dims[0], 1};
    case 2: return Shape{1, dims[0], dims[1], 1};
    case 3: return Shape{1, dims[0], dims[1], dims[2]};
    case 4: return Shape{dims[0], dims[1], dims[2], dims[3]};
    default: throw Error(ErrorCode::TensorParse, what + ": expected 1 to 4 dimensions");
  }
}

inline void save_sample(const std::filesystem::path& path, const SampleTensor& sample) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  const Shape& s = sample.shape;
  write_tensor(out,
               {static_cast<std::uint32_t>(s.slices), static_cast<std::uint32_t>(s.height),
                static_cast<std::uint32_t>(s.width), static_cast<std::uint32_t>(s.channels)},
               sample.data.data(), sample.data.size());
}

inline SampleTensor load_sample(const std::filesystem::path& path, std::string id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::TensorParse, "cannot open tensor file '" + path.string() + "'");
  TensorBlob blob = read_tensor(in, path.string());
  if (in.peek() != std::char_traits<char>::eof())
    throw Error(ErrorCode::TensorParse, path.string() + ": trailing bytes after payload");
  SampleTensor sample;
  sample.id = std::move(id);
  sample.shape = shape_from_dims(blob.dims, path.string());
  sample.data = std::move(blob.values);
  for (double v : sample.data)
    if (!std::isfinite(v)) throw Error(ErrorCode::TensorParse, path.string() + ": non-finite value");
  return sample;
}

/// Reads a manifest CSV with header `id,label,age,path`. Paths are relative to the manifest.
inline Dataset load_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in)
    throw Error(ErrorCode::ManifestParse, "cannot open manifest '" + manifest_path.string() + "'");
  const auto base = manifest_path.parent_path();
  std::string line;
  if (!std::getline(in, line) || detail::split_csv_line(line) !=
                                     std::vector<std::string>{"id", "label", "age", "path"})
    throw Error(ErrorCode::ManifestParse, "manifest header must be 'id,label,age,path'");

  Dataset dataset;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    const std::string where = manifest_path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 4) throw Error(ErrorCode::ManifestParse, where + ": expected 4 fields");
    if (fields[0].empty()) throw Error(ErrorCode::ManifestParse, where + ": empty id");
    if (fields[3].empty()) throw Error(ErrorCode::ManifestParse, where + ": empty path");

    SampleTensor sample = load_sample(base / fields[3], fields[0]);
    if (!fields[1].empty()) {
      if (fields[1] == "0") {
        sample.label = 0;
      } else if (fields[1] == "1") {
        sample.label = 1;
      } else {
        throw Error(ErrorCode::ManifestParse, where + ": label must be 0, 1 or empty");
      }
    }
    if (!fields[2].empty()) {
      double age = 0.0;
      if (!detail::parse_double(fields[2], age) || !std::isfinite(age))
        throw Error(ErrorCode::ManifestParse, where + ": age is not a number");
      sample.age = age;
    }
    dataset.add(std::move(sample));
  }
  return dataset;
}

/// Writes `manifest.csv` plus one tensor file per sample under `dir/tensors/`.
inline std::filesystem::path save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "tensors");
  const fs::path manifest = dir / "manifest.csv";
  std::ofstream out(manifest);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + manifest.string() + "'");
  out << "id,label,age,path\n";
  for (const auto& sample : dataset) {
    const fs::path rel = fs::path("tensors") / (sample.id + ".tns");
    save_sample(dir / rel, sample);
    out << sample.id << ',';
    if (sample.label) out << *sample.label;
    out << ',';
    if (sample.age) {
      char buf[64];
      auto res = std::to_chars(buf, buf + sizeof buf, *sample.age);
      out.write(buf, res.ptr - buf);
    }
    out << ',' << rel.generic_string() << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing manifest");
  return manifest;
}

}  // namespace dmap
