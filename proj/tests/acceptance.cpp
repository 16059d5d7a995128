// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "dmap/dmap.hpp"
#include "lda_oracle.hpp"
#include "test_helpers.hpp"

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// 1 ------------------------------------------------------------------------------------------
Outcome nystrom_exactness() {
  const auto start = Clock::now();
  const dmap::Dataset ds = dmap::standardize_all(dmap::generate_phantoms(100, {1, 16, 16, 1}, 0.3, 101));
  const dmap::TrainedSpace space = dmap::train_space(ds, {8.0, 1}, 100);
  double worst = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto ext = dmap::extend(space, ds[i]);
    worst = std::max(worst, (ext.coords.transpose() - space.coords.row(static_cast<Eigen::Index>(i))).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(start);
  return {worst < 1e-10 && secs < 5.0, "n=200 max|err|=" + fmt(worst) + " in " + fmt(secs) + "s"};
}

// 2 ------------------------------------------------------------------------------------------
Outcome stochasticity_and_spectrum() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> size(2, 100), dim(1, 20);
  std::uniform_real_distribution<double> alpha(0.5, 20.0);
  double row_err = 0.0, lambda0_err = 0.0, psi0_spread = 0.0, residual = 0.0;
  for (int g = 0; g < 50; ++g) {
    const int n = size(rng);
    const Eigen::MatrixXd x = dmap::testing::random_rows(n, dim(rng), rng);
    const auto graph = dmap::build_markov(dmap::build_kernel(dmap::pairwise_sq_distances(x), {alpha(rng), 1}));
    for (Eigen::Index i = 0; i < n; ++i) row_err = std::max(row_err, std::abs(graph.transition.row(i).sum() - 1.0));
    const auto basis = dmap::decompose(graph, n - 1);
    lambda0_err = std::max(lambda0_err, std::abs(basis.eigenvalues[0] - 1.0));
    const Eigen::VectorXd psi0 = basis.eigenvectors.col(0);
    psi0_spread = std::max(psi0_spread, psi0.maxCoeff() - psi0.minCoeff());
    residual = std::max(residual, dmap::eigen_residual(graph, basis));
  }
  return {row_err < 1e-12 && lambda0_err < 1e-10 && psi0_spread < 1e-10 && residual < 1e-8,
          "50 graphs: row-sum " + fmt(row_err) + ", |lambda0-1| " + fmt(lambda0_err) + ", psi0 spread " +
              fmt(psi0_spread) + ", residual " + fmt(residual)};
}

// 3 ------------------------------------------------------------------------------------------
Outcome diffusion_distance_identity() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd x = dmap::testing::random_rows(30, 4, rng);
    const auto graph = dmap::build_markov(dmap::build_kernel(dmap::pairwise_sq_distances(x), {4.0, 1}));
    for (Eigen::Index i = 0; i < 30; ++i)
      for (Eigen::Index j = 0; j < 30; ++j) {
        double ss = 0.0;
        for (Eigen::Index c = 0; c < 30; ++c) {
          const double d = graph.transition(i, c) - graph.transition(j, c);
          ss += d * d;
        }
        worst = std::max(worst, std::abs(dmap::diffusion_distance(graph, i, j) - std::sqrt(ss)));
      }
  }
  return {worst < 1e-12, "max deviation " + fmt(worst)};
}

// 4 ------------------------------------------------------------------------------------------
Outcome two_point_oracle() {
  Eigen::MatrixXd kernel(2, 2);
  kernel << 1.0, 0.5, 0.5, 1.0;
  const auto graph = dmap::build_markov(dmap::KernelMatrix{kernel, {1.0, 1}});
  Eigen::MatrixXd expected(2, 2);
  expected << 2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0;
  const double p_err = (graph.transition - expected).cwiseAbs().maxCoeff();
  const auto basis = dmap::decompose(graph, 1);
  const double l_err = std::max(std::abs(basis.eigenvalues[0] - 1.0), std::abs(basis.eigenvalues[1] - 1.0 / 3.0));
  const double d_err = std::abs(dmap::diffusion_distance(graph, 0, 1) - std::sqrt(2.0) / 3.0);
  const double worst = std::max({p_err, l_err, d_err});
  return {worst < 1e-12, "P " + fmt(p_err) + ", eigenvalues " + fmt(l_err) + ", D(0,1) " + fmt(d_err)};
}

// 5 ------------------------------------------------------------------------------------------
Outcome lda_oracle() {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> sep(0.5, 4.0);
  std::uniform_int_distribution<int> size(5, 40);
  int mismatched = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto train = dmap::testing::gaussian_classes(rng, size(rng), 2, sep(rng));
    const auto test = dmap::testing::gaussian_classes(rng, 25, 2, 1.5);
    const auto got = dmap::lda_predict(dmap::lda_fit(train.x, train.y), test.x).labels;
    if (got != dmap::testing::brute_force_lda_2d(train, test.x)) ++mismatched;
  }
  return {mismatched == 0, std::to_string(100 - mismatched) + "/100 instances identical"};
}

// 6 ------------------------------------------------------------------------------------------
Outcome voting_semantics() {
  int wrong = 0;
  for (std::size_t count = 0; count <= 25; ++count) {
    std::vector<dmap::FoldResult> folds(25);
    for (int c = 0; c < 25; ++c) {
      folds[static_cast<std::size_t>(c)].combo = c;
      folds[static_cast<std::size_t>(c)].test_ids = {"s"};
      folds[static_cast<std::size_t>(c)].test_votes = {static_cast<std::size_t>(c) < count ? 1 : 0};
    }
    const auto rec = dmap::aggregate_votes(folds).front();
    if ((rec.final == 1) != (count >= 13) || dmap::vote_decision(count) != rec.final) ++wrong;
  }
  return {wrong == 0, std::to_string(26 - wrong) + "/26 vote counts decided as count >= 13"};
}

// 7 ------------------------------------------------------------------------------------------
Outcome fold_combinatorics() {
  int violations = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const dmap::Dataset ds = dmap::generate_phantoms(17 + seed, {1, 4, 4, 1}, 0.3, seed);
    dmap::TestSelection sel;
    sel.count = 4 + seed % 5;
    const auto plan = dmap::build_fold_plan(ds, sel, seed);
    const std::set<std::size_t> test(plan.test_set.begin(), plan.test_set.end());
    std::vector<int> validated(ds.size(), 0), trained(ds.size(), 0);
    for (int c = 0; c < dmap::kCombos; ++c) {
      std::set<std::size_t> seen;
      for (auto i : plan.training(c)) {
        ++trained[i];
        if (!seen.insert(i).second || test.count(i)) ++violations;
      }
      for (auto i : plan.validation(c)) {
        ++validated[i];
        if (!seen.insert(i).second || test.count(i)) ++violations;
      }
    }
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (test.count(i)) {
        if (validated[i] || trained[i]) ++violations;
      } else if (validated[i] != 5 || trained[i] != 20) {
        ++violations;
      }
    }
  }
  return {violations == 0, "20 seeded plans, " + std::to_string(violations) + " violations"};
}

// 8 and 9 ----------------------------------------------------------------------------------
struct Benchmark {
  dmap::CrossvalResult result;
  dmap::CrossvalConfig config;
  double seconds = 0.0;
};

Benchmark run_benchmark(const dmap::Dataset& ds, dmap::Method method, unsigned threads) {
  Benchmark b;
  b.config.embedder.method = method;
  b.config.embedder.k = 200;
  b.config.embedder.alpha = 8.0;
  b.config.embedder.t = 1;
  b.config.classifier = dmap::ClassifierKind::LDA;
  b.config.test.count = 100;
  b.config.seed = 2024;
  b.config.threads = threads;
  const auto start = Clock::now();
  b.result = dmap::run_crossval(ds, b.config);
  b.seconds = seconds_since(start);
  return b;
}

// 10 -----------------------------------------------------------------------------------------
Outcome alternative_embedders() {
  const dmap::Dataset ds = dmap::standardize_all(dmap::generate_phantoms(40, {1, 16, 16, 1}, 0.3, 1010));
  const Eigen::MatrixXd x = dmap::to_matrix(ds);

  // Well-separated phantom classes only form one k-NN component once neighbors exceed the
  // class size, so the phantom fit uses 45 neighbors; a Gaussian cloud uses the default 10.
  std::mt19937_64 rng(1011);
  const Eigen::MatrixXd cloud = dmap::testing::random_rows(120, 10, rng);
  double weight_err = 0.0;
  for (const auto& [data, neighbors] : {std::pair<const Eigen::MatrixXd&, int>{x, 45}, {cloud, 10}}) {
    const auto lle = dmap::fit_lle(data, 10, neighbors);
    for (Eigen::Index i = 0; i < data.rows(); ++i)
      weight_err = std::max(weight_err, std::abs(lle.weights.row(i).sum() - 1.0));
  }

  const auto kpca = dmap::fit_kpca(x, 20, 8.0);
  double kpca_err = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    kpca_err = std::max(kpca_err, (dmap::extend_kpca(kpca, x.row(i)) - kpca.coords.row(i).transpose()).cwiseAbs().maxCoeff());

  Eigen::MatrixXd line(50, 3);
  Eigen::VectorXd arc(50);
  for (int i = 0; i < 50; ++i) {
    line.row(i) << 0.3 * i, -0.2 * i, 0.1 * i;
    arc[i] = i;
  }
  const auto iso = dmap::fit_isomap(line, 1, 5);
  const Eigen::VectorXd c = iso.coords.col(0).array() - iso.coords.col(0).mean();
  const Eigen::VectorXd a = arc.array() - arc.mean();
  const double r = c.dot(a) / (c.norm() * a.norm());

  return {weight_err < 1e-10 && kpca_err < 1e-10 && std::abs(r) > 0.999,
          "LLE weight-sum err " + fmt(weight_err) + ", KPCA copy err " + fmt(kpca_err) + ", Isomap |r| " +
              fmt(std::abs(r))};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::string& name, const Outcome& o) {
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  };
  auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  };

  report(1, "Nystrom exactness", guarded(nystrom_exactness));
  report(2, "stochasticity and spectrum", guarded(stochasticity_and_spectrum));
  report(3, "diffusion-distance identity", guarded(diffusion_distance_identity));
  report(4, "two-point hand oracle", guarded(two_point_oracle));
  report(5, "LDA oracle", guarded(lda_oracle));
  report(6, "voting semantics", guarded(voting_semantics));
  report(7, "fold combinatorics", guarded(fold_combinatorics));

  Benchmark dm1, dm4, kpca;
  bool benchmarks_ran = false;
  std::string bench_error;
  try {
    const dmap::Dataset ds = dmap::generate_phantoms(300, {1, 16, 16, 1}, 0.3, 2024);
    dm1 = run_benchmark(ds, dmap::Method::DM, 1);
    kpca = run_benchmark(ds, dmap::Method::KPCA, 1);
    dm4 = run_benchmark(ds, dmap::Method::DM, 4);
    benchmarks_ran = true;
  } catch (const std::exception& e) {
    bench_error = e.what();
  }

  report(8, "end-to-end synthetic benchmark", guarded([&] {
           if (!benchmarks_ran) return Outcome{false, "exception: " + bench_error};
           const double acc = *dm1.result.test_metrics->accuracy;
           const double sd_dm = *dm1.result.validation.accuracy.sdev;
           const double sd_kpca = *kpca.result.validation.accuracy.sdev;
           return Outcome{acc >= 0.95 && sd_dm <= sd_kpca && dm1.seconds < 120.0,
                          "DM+LDA test acc " + fmt(acc) + ", validation sd DM " + fmt(sd_dm) + " vs KPCA " +
                              fmt(sd_kpca) + ", " + fmt(dm1.seconds) + "s"};
         }));

  report(9, "determinism across thread counts", guarded([&] {
           if (!benchmarks_ran) return Outcome{false, "exception: " + bench_error};
           const auto d1 = dmap::testing::scratch_dir("acceptance_t1");
           const auto d4 = dmap::testing::scratch_dir("acceptance_t4");
           dmap::write_crossval_reports(d1, dm1.result, dm1.config);
           dmap::write_crossval_reports(d4, dm4.result, dm4.config);
           const bool metrics = dmap::testing::slurp(d1 / "metrics.csv") == dmap::testing::slurp(d4 / "metrics.csv");
           const bool votes = dmap::testing::slurp(d1 / "votes.csv") == dmap::testing::slurp(d4 / "votes.csv");
           return Outcome{metrics && votes, std::string("metrics.csv ") + (metrics ? "identical" : "differs") +
                                                ", votes.csv " + (votes ? "identical" : "differs") +
                                                " (1 vs 4 threads)"};
         }));

  report(10, "alternative-embedder sanity", guarded(alternative_embedders));

  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
