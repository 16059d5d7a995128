// dmap: phantom synthesis, 25-combination cross-validation, train/predict, report merging.
//
// Exit codes: 0 success, 1 runtime or data error, 2 usage error.
// Option precedence: command-line flag > --config JSON file > built-in default.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dmap/dmap.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());

  // synth
  int n = 300;
  std::string shape = "1,16,16,1";
  double noise = 0.3;

  // shared
  std::uint64_t seed = 0;
  std::string data;
  std::string out;

  // embedding / classification
  std::string method = "dm";
  std::string classifier = "lda";
  int k = 200;
  double alpha = 8.0;
  int t = 1;
  int neighbors = 10;
  double threshold = 0.5;

  // test selection
  std::size_t test_count = 100;
  double test_fraction = 0.0;
  std::string test_ids;

  // predict / merge
  std::string model;
  std::string votes_a, votes_b, name_a = "a", name_b = "b";
  std::string votes;
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw UsageError("config file must hold a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw UsageError("config file '" + path + "': " + e.what());
  }
}

/// Applies a config value when the flag itself was not given.
template <class T>
void fill(const CLI::App& cmd, const json& config, const std::string& key, T& target) {
  const std::string flag = "--" + key;
  const CLI::Option* opt = nullptr;
  try {
    opt = cmd.get_option(flag);
  } catch (const CLI::OptionNotFound&) {
    return;
  }
  if (opt->count() > 0) return;
  const std::string json_key = [&] {
    std::string s = key;
    std::replace(s.begin(), s.end(), '-', '_');
    return s;
  }();
  if (!config.contains(json_key)) return;
  try {
    target = config.at(json_key).get<T>();
  } catch (const json::exception&) {
    throw UsageError("config key '" + json_key + "' has the wrong type");
  }
}

void apply_config(const CLI::App& cmd, const json& config, Options& o) {
  fill(cmd, config, "n", o.n);
  fill(cmd, config, "shape", o.shape);
  fill(cmd, config, "noise", o.noise);
  fill(cmd, config, "seed", o.seed);
  fill(cmd, config, "data", o.data);
  fill(cmd, config, "out", o.out);
  fill(cmd, config, "method", o.method);
  fill(cmd, config, "classifier", o.classifier);
  fill(cmd, config, "k", o.k);
  fill(cmd, config, "alpha", o.alpha);
  fill(cmd, config, "t", o.t);
  fill(cmd, config, "neighbors", o.neighbors);
  fill(cmd, config, "threshold", o.threshold);
  fill(cmd, config, "test-count", o.test_count);
  fill(cmd, config, "test-fraction", o.test_fraction);
  fill(cmd, config, "test-ids", o.test_ids);
  fill(cmd, config, "model", o.model);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

dmap::Shape parse_shape(const std::string& text) {
  const auto parts = split_list(text);
  if (parts.size() != 4) throw UsageError("--shape expects S,H,W,C");
  std::size_t dims[4];
  for (int i = 0; i < 4; ++i) {
    try {
      std::size_t pos = 0;
      const long v = std::stol(parts[static_cast<std::size_t>(i)], &pos);
      if (pos != parts[static_cast<std::size_t>(i)].size() || v < 1) throw UsageError("");
      dims[i] = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw UsageError("--shape entries must be positive integers");
    }
  }
  return {dims[0], dims[1], dims[2], dims[3]};
}

void require(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

dmap::EmbedderSpec embedder_spec(const Options& o) {
  const auto method = dmap::parse_method(o.method);
  require(method.has_value(), "--method must be one of dm, lle, isomap, kpca");
  require(o.k >= 1, "--k must be >= 1");
  require(o.alpha > 0.0, "--alpha must be > 0");
  require(o.t >= 1, "--t must be >= 1");
  require(o.neighbors >= 1, "--neighbors must be >= 1");
  dmap::EmbedderSpec spec;
  spec.method = *method;
  spec.k = o.k;
  spec.alpha = o.alpha;
  spec.t = o.t;
  spec.neighbors = o.neighbors;
  return spec;
}

dmap::ClassifierKind classifier_kind(const Options& o) {
  const auto kind = dmap::parse_classifier(o.classifier);
  require(kind.has_value(), "--classifier must be lda or logistic");
  return *kind;
}

void require_paths(const Options& o, bool data) {
  if (data) require(!o.data.empty(), "--data is required");
  require(!o.out.empty(), "--out is required");
}

// ---------------------------------------------------------------------------------------------

int cmd_synth(const Options& o) {
  require(o.n >= 1, "--n must be >= 1");
  require(o.noise >= 0.0, "--noise must be >= 0");
  require(!o.out.empty(), "--out must not be empty");
  const dmap::Shape shape = parse_shape(o.shape);
  const dmap::Dataset ds = dmap::generate_phantoms(static_cast<std::size_t>(o.n), shape, o.noise, o.seed);
  dmap::save_dataset(ds, o.out);
  std::cout << "wrote " << ds.size() << " samples to " << (fs::path(o.out) / "manifest.csv").string() << '\n';
  return 0;
}

int cmd_crossval(const Options& o) {
  require_paths(o, true);
  dmap::CrossvalConfig config;
  config.embedder = embedder_spec(o);
  config.classifier = classifier_kind(o);
  require(o.threshold > 0.0 && o.threshold < 1.0, "--threshold must be in (0, 1)");
  config.threshold = o.threshold;
  config.threads = std::max(1u, o.threads);
  config.seed = o.seed;
  if (!o.test_ids.empty()) {
    config.test.ids = split_list(o.test_ids);
  } else if (o.test_fraction > 0.0) {
    require(o.test_fraction < 1.0, "--test-fraction must be in [0, 1)");
    config.test.fraction = o.test_fraction;
  } else {
    config.test.count = o.test_count;
  }

  const dmap::Dataset ds = dmap::load_dataset(o.data);
  const dmap::CrossvalResult result = dmap::run_crossval(ds, config);
  dmap::write_crossval_reports(o.out, result, config);

  const auto& acc = result.validation.accuracy;
  std::cout << dmap::to_string(config.embedder.method) << '+' << dmap::to_string(config.classifier)
            << " k=" << config.embedder.k << ": validation accuracy "
            << dmap::format_optional(acc.mean) << " (sd " << dmap::format_optional(acc.sdev) << ")";
  if (result.test_metrics)
    std::cout << ", test accuracy after voting " << dmap::format_optional(result.test_metrics->accuracy);
  std::cout << '\n';
  return 0;
}

void write_predictions(const fs::path& path, const std::vector<std::string>& ids, const dmap::Prediction& p) {
  std::ofstream out(path);
  if (!out) throw dmap::Error(dmap::ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << "id,label,score\n";
  for (std::size_t i = 0; i < ids.size(); ++i)
    out << ids[i] << ',' << p.labels[i] << ',' << dmap::format_real(p.scores[i]) << '\n';
}

std::vector<std::string> ids_of(const dmap::Dataset& ds) {
  std::vector<std::string> ids;
  for (const auto& s : ds) ids.push_back(s.id);
  return ids;
}

int cmd_train(const Options& o) {
  require_paths(o, true);
  const dmap::EmbedderSpec spec = embedder_spec(o);
  require(spec.method == dmap::Method::DM, "train persists diffusion-map spaces only (--method dm)");
  const dmap::ClassifierKind kind = classifier_kind(o);

  const dmap::Dataset ds = dmap::load_dataset(o.data);
  dmap::require_labels(ds);
  const dmap::Dataset standardized = dmap::standardize_all(ds);
  const dmap::TrainedSpace space = dmap::train_space(standardized, {spec.alpha, spec.t}, spec.k);
  const dmap::Classifier classifier = dmap::fit_classifier(kind, space.coords, standardized.labels());

  fs::create_directories(o.out);
  dmap::save_space(fs::path(o.out) / "model.dmts", space, {{"classifier", dmap::to_json(classifier)}});
  write_predictions(fs::path(o.out) / "train_predictions.csv", ids_of(ds), classifier.predict(space.coords));
  std::cout << "trained on " << ds.size() << " samples, model at "
            << (fs::path(o.out) / "model.dmts").string() << '\n';
  return 0;
}

int cmd_predict(const Options& o) {
  require_paths(o, true);
  require(!o.model.empty(), "--model is required");
  const dmap::LoadedSpace loaded = dmap::load_space(o.model);
  if (!loaded.extra.contains("classifier"))
    throw dmap::Error(dmap::ErrorCode::VersionMismatch, "model file carries no classifier");
  const dmap::Classifier classifier = dmap::classifier_from_json(loaded.extra.at("classifier"));

  const dmap::Dataset ds = dmap::load_dataset(o.data);
  const dmap::Dataset standardized = dmap::standardize_all(ds);
  const Eigen::MatrixXd coords = dmap::batch_extend(loaded.space, standardized);
  fs::create_directories(o.out);
  write_predictions(fs::path(o.out) / "predictions.csv", ids_of(ds), classifier.predict(coords));
  std::cout << "predicted " << ds.size() << " samples\n";
  return 0;
}

int cmd_two_model(const Options& o) {
  require(!o.votes_a.empty() && !o.votes_b.empty(), "--a and --b votes files are required");
  require(!o.out.empty(), "--out is required");
  const auto a = dmap::read_votes_csv(o.votes_a);
  const auto b = dmap::read_votes_csv(o.votes_b);
  const auto table = dmap::two_model_confusion(a, b);
  fs::create_directories(o.out);
  dmap::write_two_model_json(fs::path(o.out) / "two_model.json", table, o.name_a, o.name_b);
  return 0;
}

int cmd_diagnose(const Options& o) {
  require(!o.votes.empty(), "--votes is required");
  require(!o.out.empty(), "--out is required");
  const auto rows = dmap::diagnosis_table(dmap::read_votes_csv(o.votes));
  fs::create_directories(o.out);
  dmap::write_diagnosis_csv(fs::path(o.out) / "diagnosis.csv", rows);
  std::cout << rows.size() << " false negatives\n";
  return 0;
}

void add_embedding_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--method", o.method, "dm, lle, isomap or kpca")->capture_default_str();
  cmd->add_option("--k", o.k, "embedding dimension")->capture_default_str();
  cmd->add_option("--alpha", o.alpha, "Gaussian kernel width (dm, kpca)")->capture_default_str();
  cmd->add_option("--t", o.t, "diffusion time (dm)")->capture_default_str();
  cmd->add_option("--neighbors", o.neighbors, "k-NN size (lle, isomap)")->capture_default_str();
  cmd->add_option("--classifier", o.classifier, "lda or logistic")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Diffusion-map embedding and ensemble classification of volumetric scans"};
  app.require_subcommand(1);
  app.add_option("--config", o.config_path, "JSON file with option defaults");
  app.add_option("--threads", o.threads, "worker cap")->capture_default_str();

  auto* synth = app.add_subcommand("synth", "generate a labeled phantom dataset");
  synth->add_option("--n", o.n, "samples per class")->capture_default_str();
  synth->add_option("--shape", o.shape, "S,H,W,C")->capture_default_str();
  synth->add_option("--noise", o.noise, "noise standard deviation")->capture_default_str();
  synth->add_option("--seed", o.seed)->capture_default_str();
  synth->add_option("--out", o.out, "output directory (default: phantoms)");

  auto* crossval = app.add_subcommand("crossval", "25-combination cross-validation with test-set voting");
  crossval->add_option("--data", o.data, "manifest.csv");
  crossval->add_option("--out", o.out, "report directory");
  add_embedding_flags(crossval, o);
  crossval->add_option("--threshold", o.threshold, "vote proportion needed for an abnormal call")
      ->capture_default_str();
  crossval->add_option("--seed", o.seed)->capture_default_str();
  crossval->add_option("--test-count", o.test_count, "held-out test subjects")->capture_default_str();
  crossval->add_option("--test-fraction", o.test_fraction, "held-out fraction (overrides count)");
  crossval->add_option("--test-ids", o.test_ids, "comma-separated held-out ids (overrides both)");

  auto* train = app.add_subcommand("train", "fit and persist an embedding plus classifier");
  train->add_option("--data", o.data, "manifest.csv");
  train->add_option("--out", o.out, "model directory");
  add_embedding_flags(train, o);

  auto* predict = app.add_subcommand("predict", "classify samples with a persisted model");
  predict->add_option("--model", o.model, "model.dmts written by train");
  predict->add_option("--data", o.data, "manifest.csv");
  predict->add_option("--out", o.out, "output directory");

  auto* merge = app.add_subcommand("two-model", "cross-tabulate two votes.csv files");
  merge->add_option("--a", o.votes_a, "votes.csv of model A");
  merge->add_option("--b", o.votes_b, "votes.csv of model B");
  merge->add_option("--name-a", o.name_a)->capture_default_str();
  merge->add_option("--name-b", o.name_b)->capture_default_str();
  merge->add_option("--out", o.out, "output directory");

  auto* diagnose = app.add_subcommand("diagnose", "list abnormal subjects voted normal");
  diagnose->add_option("--votes", o.votes, "votes.csv");
  diagnose->add_option("--out", o.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const json config = load_config(o.config_path);
    CLI::App* cmd = app.get_subcommands().front();
    if (config.contains("threads") && app.get_option("--threads")->count() == 0)
      o.threads = config.at("threads").get<unsigned>();
    apply_config(*cmd, config, o);

    if (cmd == synth) {
      if (synth->get_option("--out")->count() == 0 && !config.contains("out")) o.out = "phantoms";
      return cmd_synth(o);
    }
    if (cmd == crossval) return cmd_crossval(o);
    if (cmd == train) return cmd_train(o);
    if (cmd == predict) return cmd_predict(o);
    if (cmd == merge) return cmd_two_model(o);
    if (cmd == diagnose) return cmd_diagnose(o);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const dmap::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
