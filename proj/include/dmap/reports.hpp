#pragma once

// CSV / JSON reports of a cross-validation run.
//
//   metrics.csv    method,classifier,dimension,fold_i,fold_j,acc,sens,spec,prec
//   votes.csv      id,true_label,age,p,final,v1..v25
//   two_model.json per true label, 2x2 cells over (model A call, model B call) with id lists
//   diagnosis.csv  id,age,proportion
//   embedding.csv  id,coord_1..coord_k
//
// Undefined values are written as empty fields. Reals use the shortest round-trip form.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "dmap/ensemble.hpp"
#include "dmap/error.hpp"
#include "dmap/tensor_io.hpp"

namespace dmap {

inline std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_real(*v) : std::string();
}

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  return out;
}

inline std::string one_based(int i) { return std::to_string(i + 1); }

}  // namespace detail

inline void write_metrics_csv(const std::filesystem::path& path, const std::vector<FoldResult>& folds,
                              const EmbedderSpec& spec, ClassifierKind classifier) {
  auto out = detail::open_for_write(path);
  out << "method,classifier,dimension,fold_i,fold_j,acc,sens,spec,prec\n";
  for (const auto& f : folds) {
    out << to_string(spec.method) << ',' << to_string(classifier) << ',' << spec.k << ','
        << detail::one_based(f.fold_i) << ',' << detail::one_based(f.fold_j) << ','
        << format_optional(f.validation.accuracy) << ',' << format_optional(f.validation.sensitivity)
        << ',' << format_optional(f.validation.specificity) << ','
        << format_optional(f.validation.precision) << '\n';
  }
}

inline void write_votes_csv(const std::filesystem::path& path, const std::vector<VoteRecord>& records) {
  auto out = detail::open_for_write(path);
  out << "id,true_label,age,p,final";
  for (int v = 1; v <= kCombos; ++v) out << ",v" << v;
  out << '\n';
  for (const auto& r : records) {
    out << r.subject_id << ',';
    if (r.true_label) out << *r.true_label;
    out << ',' << format_optional(r.age) << ',' << format_real(r.proportion) << ',' << r.final;
    for (int v : r.votes) out << ',' << v;
    out << '\n';
  }
}

/// Reads votes.csv back; proportion and final are taken from the file.
inline std::vector<VoteRecord> read_votes_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ManifestParse, path.string() + ": empty file");
  const auto header = detail::split_csv_line(line);
  if (header.size() != 5 + static_cast<std::size_t>(kCombos) || header[0] != "id" || header[3] != "p" ||
      header[4] != "final")
    throw Error(ErrorCode::ManifestParse, path.string() + ": not a votes.csv file");
  std::vector<VoteRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != header.size()) throw Error(ErrorCode::ManifestParse, where + ": wrong field count");
    VoteRecord r;
    r.subject_id = f[0];
    if (!f[1].empty()) {
      if (f[1] != "0" && f[1] != "1") throw Error(ErrorCode::ManifestParse, where + ": bad true_label");
      r.true_label = f[1] == "1" ? 1 : 0;
    }
    if (!f[2].empty()) {
      double age = 0.0;
      if (!detail::parse_double(f[2], age)) throw Error(ErrorCode::ManifestParse, where + ": bad age");
      r.age = age;
    }
    if (!detail::parse_double(f[3], r.proportion)) throw Error(ErrorCode::ManifestParse, where + ": bad p");
    if (f[4] != "0" && f[4] != "1") throw Error(ErrorCode::ManifestParse, where + ": bad final");
    r.final = f[4] == "1" ? 1 : 0;
    for (std::size_t v = 5; v < f.size(); ++v) {
      if (f[v] != "0" && f[v] != "1") throw Error(ErrorCode::ManifestParse, where + ": bad vote");
      r.votes.push_back(f[v] == "1" ? 1 : 0);
    }
    records.push_back(std::move(r));
  }
  return records;
}

inline nlohmann::json to_json(const TwoModelConfusion& table, const std::string& name_a,
                              const std::string& name_b) {
  nlohmann::json by_label = nlohmann::json::object();
  for (int label = 0; label < 2; ++label) {
    nlohmann::json cells = nlohmann::json::object();
    std::size_t total = 0;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        const auto& cell = table.at(label, a, b);
        total += cell.count;
        cells["a" + std::to_string(a) + "_b" + std::to_string(b)] = {{"count", cell.count},
                                                                      {"ids", cell.ids}};
      }
    }
    by_label[std::to_string(label)] = {{"subjects", total}, {"cells", cells}};
  }
  return {{"model_a", name_a}, {"model_b", name_b}, {"by_true_label", by_label}};
}

inline void write_two_model_json(const std::filesystem::path& path, const TwoModelConfusion& table,
                                 const std::string& name_a, const std::string& name_b) {
  auto out = detail::open_for_write(path);
  out << to_json(table, name_a, name_b).dump(2) << '\n';
}

inline void write_diagnosis_csv(const std::filesystem::path& path, const std::vector<DiagnosisRow>& rows) {
  auto out = detail::open_for_write(path);
  out << "id,age,proportion\n";
  for (const auto& r : rows)
    out << r.id << ',' << format_optional(r.age) << ',' << format_real(r.proportion) << '\n';
}

inline void write_embedding_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                                const Eigen::MatrixXd& coords) {
  if (static_cast<Eigen::Index>(ids.size()) != coords.rows())
    throw Error(ErrorCode::LengthMismatch, "one id per embedding row required");
  auto out = detail::open_for_write(path);
  out << "id";
  for (Eigen::Index c = 1; c <= coords.cols(); ++c) out << ",coord_" << c;
  out << '\n';
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    out << ids[static_cast<std::size_t>(i)];
    for (Eigen::Index c = 0; c < coords.cols(); ++c) out << ',' << format_real(coords(i, c));
    out << '\n';
  }
}

inline nlohmann::json to_json(const MetricSummary& s) {
  nlohmann::json j = nlohmann::json::object();
  j["mean"] = s.mean ? nlohmann::json(*s.mean) : nlohmann::json(nullptr);
  j["sdev"] = s.sdev ? nlohmann::json(*s.sdev) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json to_json(const Metrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"acc", opt(m.accuracy)},
          {"sens", opt(m.sensitivity)},
          {"spec", opt(m.specificity)},
          {"prec", opt(m.precision)},
          {"tp", m.confusion.tp},
          {"fp", m.confusion.fp},
          {"fn", m.confusion.fn},
          {"tn", m.confusion.tn}};
}

/// Both readings of the headline numbers: averages over the 25 validation splits and the
/// test-set metrics after voting.
inline nlohmann::json summary_json(const CrossvalResult& result, const CrossvalConfig& config) {
  nlohmann::json j;
  j["method"] = std::string(to_string(config.embedder.method));
  j["classifier"] = std::string(to_string(config.classifier));
  j["dimension"] = config.embedder.k;
  j["seed"] = config.seed;
  j["validation_over_25_combinations"] = {{"acc", to_json(result.validation.accuracy)},
                                          {"sens", to_json(result.validation.sensitivity)},
                                          {"spec", to_json(result.validation.specificity)},
                                          {"prec", to_json(result.validation.precision)}};
  j["test_after_voting"] = result.test_metrics ? to_json(*result.test_metrics) : nlohmann::json(nullptr);
  j["test_subjects"] = result.plan.test_set.size();
  return j;
}

/// Writes every report of a run into `dir`.
inline void write_crossval_reports(const std::filesystem::path& dir, const CrossvalResult& result,
                                   const CrossvalConfig& config) {
  std::filesystem::create_directories(dir);
  write_metrics_csv(dir / "metrics.csv", result.folds, config.embedder, config.classifier);
  write_votes_csv(dir / "votes.csv", result.votes);
  const std::string name(to_string(config.embedder.method));
  write_two_model_json(dir / "two_model.json", two_model_confusion(result.votes, result.votes), name, name);
  write_diagnosis_csv(dir / "diagnosis.csv", diagnosis_table(result.votes));
  if (config.export_embedding)
    write_embedding_csv(dir / "embedding.csv", result.embedding_ids, result.embedding);
  auto out = detail::open_for_write(dir / "summary.json");
  out << summary_json(result, config).dump(2) << '\n';
}

}  // namespace dmap
