// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
#include "imkc/evaluation.hpp"
#include "imkc/fcm.hpp"
#include "imkc/fippa.hpp"
#include "imkc/io.hpp"
#include "imkc/kernel.hpp"
#include "imkc/mkl_lpp.hpp"
#include "imkc/pipeline.hpp"
#include "synthetic.hpp"
#include "temp_dir.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace {

using namespace imkc;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buffer[256];
  std::snprintf(buffer, sizeof buffer, pattern, a, b, c, d);
  return buffer;
}

struct Instance {
  KernelSet kernels;
  Eigen::VectorXd beta;
  std::vector<int> labels;
  int clusters = 3;
};

// 50 random instances, N in 10..40 and M in 2..5, with every cluster non-empty.
std::vector<Instance> fippa_instances() {
  Rng rng(2024);
  std::vector<Instance> out;
  for (int t = 0; t < 50; ++t) {
    Instance inst;
    const auto n = static_cast<Eigen::Index>(10 + rng.index(31));
    const int m = 2 + static_cast<int>(rng.index(4));
    inst.kernels = testing::random_centered_kernels(n, m, rng);
    inst.beta = testing::random_simplex(m, rng);
    inst.labels.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      inst.labels[static_cast<std::size_t>(i)] = i < 3 ? static_cast<int>(i) : static_cast<int>(rng.index(3));
    }
    out.push_back(std::move(inst));
  }
  return out;
}

Outcome partition_identity() {
  const auto start = Clock::now();
  const auto instances = fippa_instances();
  double worst = 0.0;
  int checked = 0;
  for (const auto& inst : instances) {
    const ImpactScores s = fippa_hard(inst.kernels, inst.beta, inst.labels, inst.clusters);
    for (int c = 0; c < inst.clusters; ++c) {
      if (s.skipped[static_cast<std::size_t>(c)] != 0) continue;
      worst = std::max(worst, std::abs(s.scores.row(c).sum() - 1.0));
      ++checked;
    }
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-6 && elapsed < 5.0 && checked > 0,
          fmt("max |sum_m FIPPA - 1| = %.3g over %.0f clusters, %.2f s", worst, checked, elapsed)};
}

Outcome hard_fuzzy_consistency() {
  double worst = 0.0;
  for (const auto& inst : fippa_instances()) {
    const auto n = static_cast<double>(inst.labels.size());
    const ImpactScores hard = fippa_hard(inst.kernels, inst.beta, inst.labels, inst.clusters);
    const ImpactScores fuzzy = ffippa(inst.kernels, inst.beta, testing::one_hot(inst.labels, inst.clusters));
    for (int c = 0; c < inst.clusters; ++c) {
      const auto size = static_cast<double>(std::count(inst.labels.begin(), inst.labels.end(), c));
      for (Eigen::Index m = 0; m < hard.scores.cols(); ++m) {
        worst = std::max(worst, std::abs(fuzzy.scores(c, m) * n * n - hard.scores(c, m) * size * size));
      }
    }
  }
  return {worst <= 1e-9, fmt("max |fFIPPA N^2 - FIPPA |c|^2| = %.3g", worst)};
}

template <typename Weight, typename Part>
Eigen::MatrixXd direct_scores(const KernelSet& kernels, const Eigen::VectorXd& beta, const Eigen::MatrixXd& u,
                              Weight weight, Part part) {
  const Eigen::Index n = kernels.samples();
  const auto m = static_cast<Eigen::Index>(kernels.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(u.cols(), m);
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    double retained = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        double denom = 0.0;
        for (Eigen::Index k = 0; k < m; ++k) denom += beta(k) * part(kernels.kernels[static_cast<std::size_t>(k)].values(i, j));
        if (std::abs(denom) < kPairEpsilon) continue;
        retained += 1.0;
        for (Eigen::Index k = 0; k < m; ++k) {
          out(c, k) += weight(u(i, c), u(j, c)) * beta(k) * part(kernels.kernels[static_cast<std::size_t>(k)].values(i, j)) / denom;
        }
      }
    }
    out.row(c) /= retained;
  }
  return out;
}

Outcome formula_oracles() {
  Rng rng(77);
  double worst = 0.0;
  const auto identity = [](double x) { return x; };
  const auto positive = [](double x) { return std::max(x, 0.0); };
  const auto negative = [](double x) { return std::min(x, 0.0); };
  const auto joint = [](double p, double q) { return p * q; };
  const auto xor_weight = [](double p, double q) { return p + q - 2.0 * p * q; };
  for (int t = 0; t < 20; ++t) {
    const auto n = static_cast<Eigen::Index>(10 + rng.index(21));
    const int m = 2 + static_cast<int>(rng.index(4));
    const KernelSet kernels = testing::random_centered_kernels(n, m, rng);
    const Eigen::VectorXd beta = testing::random_simplex(m, rng);
    const Eigen::MatrixXd u = testing::random_memberships(n, 2 + static_cast<int>(rng.index(4)), rng);
    const ImpactScores fuzzy = ffippa(kernels, beta, u);
    const SignedImpact signed_scores = ffippa_signed(kernels, beta, u);
    worst = std::max(worst, (fuzzy.scores - direct_scores(kernels, beta, u, joint, identity)).cwiseAbs().maxCoeff());
    worst = std::max(worst, (signed_scores.plus.scores - direct_scores(kernels, beta, u, joint, positive)).cwiseAbs().maxCoeff());
    worst = std::max(worst, (signed_scores.minus.scores - direct_scores(kernels, beta, u, xor_weight, negative)).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-10, fmt("max deviation from double-loop oracles = %.3g", worst)};
}

Outcome optimizer_monotonicity() {
  Rng rng(31);
  double worst_rise = 0.0;
  int half_steps = 0;
  for (int t = 0; t < 20; ++t) {
    const auto n = static_cast<Eigen::Index>(15 + rng.index(26));
    const int m = 2 + static_cast<int>(rng.index(4));
    const KernelSet kernels = testing::random_centered_kernels(n, m, rng);
    const NeighborhoodGraph graph = build_graph(kernels, std::min<int>(9, static_cast<int>(n) - 1));
    const ProjectionModel model = optimize(kernels, graph, MklLppOptions{.dimensions = 3});
    for (std::size_t s = 1; s < model.trace.size(); ++s) {
      const double prev = model.trace[s - 1].objective;
      worst_rise = std::max(worst_rise, (model.trace[s].objective - prev) / std::max(std::abs(prev), 1e-300));
      ++half_steps;
    }
  }
  double worst_gap = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < 20; ++t) {
    const auto n = static_cast<Eigen::Index>(15 + rng.index(26));
    const KernelSet kernels = testing::random_centered_kernels(n, 2, rng);
    const NeighborhoodGraph graph = build_graph(kernels, 5);
    const Eigen::MatrixXd ens = kernels.ensemble(Eigen::Vector2d(0.5, 0.5));
    const double ridge = 1e-8 * (ens * graph.degree.asDiagonal() * ens).trace() / static_cast<double>(n);
    const WeightStep step(kernels, graph, solve_projection(ens, graph, 3, ridge).projection, ridge);
    double grid = std::numeric_limits<double>::infinity();
    for (int g = 0; g <= 100; ++g) grid = std::min(grid, step.objective(Eigen::Vector2d(g / 100.0, 1.0 - g / 100.0)));
    const double found = step.objective(step.minimize(Eigen::Vector2d(0.5, 0.5), 1e-8, 1000));
    worst_gap = std::max(worst_gap, (found - grid) / std::abs(grid));
  }
  // Non-increasing up to floating-point rounding of the objective itself.
  return {worst_rise <= 1e-10 && worst_gap <= 1e-6,
          fmt("largest relative rise %.3g over %.0f half-steps; beta-step minus grid %.3g (relative)", worst_rise,
              half_steps, worst_gap)};
}

Outcome fcm_properties() {
  Rng rng(5);
  double worst_rise = 0.0;
  for (int t = 0; t < 20; ++t) {
    Eigen::MatrixXd x(50, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    const FuzzyAssignment fit = fuzzy_cmeans(x, FcmOptions{.clusters = 2 + t % 4, .fuzzifier = 2.0, .seed = static_cast<std::uint64_t>(t)});
    for (std::size_t s = 1; s < fit.objective_trace.size(); ++s) {
      worst_rise = std::max(worst_rise, (fit.objective_trace[s] - fit.objective_trace[s - 1]) / fit.objective_trace[s - 1]);
    }
  }
  double worst_equal = 0.0;
  for (int c = 2; c <= 6; ++c) {
    Eigen::MatrixXd centres(c, 2);
    for (int k = 0; k < c; ++k) {
      const double angle = 2.0 * M_PI * k / c;
      centres.row(k) << 3.0 * std::cos(angle), 3.0 * std::sin(angle);
    }
    const Eigen::MatrixXd u = fcm_memberships(Eigen::MatrixXd::Zero(1, 2), centres, 2.0);
    worst_equal = std::max(worst_equal, (u.array() - 1.0 / c).abs().maxCoeff());
  }
  Eigen::MatrixXd centres(3, 2);
  centres << 0, 0, 10, 0, 0, 10;
  const Eigen::MatrixXd x = testing::gaussian_groups(centres, 15, 0.5, rng);
  const FuzzyAssignment hard = fuzzy_cmeans(x, FcmOptions{.clusters = 3, .fuzzifier = 1.05, .seed = 1});
  const double min_max = hard.memberships.rowwise().maxCoeff().minCoeff();
  return {worst_rise <= 1e-12 && worst_equal <= 1e-9 && min_max > 0.99,
          fmt("largest relative rise %.3g; equidistant error %.3g; f=1.05 smallest max membership %.6f", worst_rise,
              worst_equal, min_max)};
}

// Index of the fitted cluster overlapping planted cluster `target` the most.
int matched_cluster(const std::vector<int>& fitted, const std::vector<int>& planted, int target, int clusters) {
  std::vector<int> overlap(static_cast<std::size_t>(clusters), 0);
  for (std::size_t i = 0; i < fitted.size(); ++i) {
    if (planted[i] == target) ++overlap[static_cast<std::size_t>(fitted[i])];
  }
  return static_cast<int>(std::max_element(overlap.begin(), overlap.end()) - overlap.begin());
}

// Planted block that most of a kernel's features come from.
int majority_block(const ModelResult& model, const testing::PlantedData& planted, std::size_t kernel) {
  const auto& prov = model.kernels.kernels[kernel].provenance;
  std::size_t view = 0;
  while (planted.dataset.views[view].name != prov.view_name) ++view;
  std::map<int, int> counts;
  for (const auto col : model.feature_clusterings[view].members(prov.feature_cluster)) {
    ++counts[planted.feature_blocks[view][static_cast<std::size_t>(col)]];
  }
  return std::max_element(counts.begin(), counts.end(), [](auto a, auto b) { return a.second < b.second; })->first;
}

Outcome planted_recovery() {
  const auto start = Clock::now();
  int recovered = 0;
  int attributed = 0;
  double worst_rand = 1.0;
  for (int s = 0; s < 50; ++s) {
    const auto planted = testing::make_planted({.samples = 60, .clusters = 3, .views = 2, .features_per_block = 10,
                                                .shift = 10.0, .noise = 1.0,
                                                .seed = static_cast<std::uint64_t>(1000 + s)});
    PipelineConfig config;
    config.variance_fraction = 1.0;
    const ModelResult model = fit_model(planted.dataset, config, 3, run_seed(static_cast<std::uint64_t>(s + 1), 3));
    const double rand = rand_index(model.modal.labels, planted.sample_labels);
    worst_rand = std::min(worst_rand, rand);
    if (rand >= 0.95) ++recovered;
    const int cluster = matched_cluster(model.modal.labels, planted.sample_labels, 0, 3);
    Eigen::Index best = 0;
    model.report.ffippa_plus.scores.row(cluster).maxCoeff(&best);
    if (majority_block(model, planted, static_cast<std::size_t>(best)) == 0) ++attributed;
  }
  const double elapsed = seconds_since(start);
  return {recovered >= 45 && attributed >= 45 && elapsed < 120.0,
          fmt("Rand >= 0.95 in %.0f/50 seeds (worst %.4f); attribution correct in %.0f/50; %.1f s", recovered,
              worst_rand, attributed, elapsed)};
}

Outcome stability_direction() {
  const auto planted = testing::make_planted({.samples = 60, .clusters = 3, .views = 2, .features_per_block = 10,
                                              .shift = 0.8, .noise = 1.0, .seed = 4242});
  PipelineConfig config;
  config.variance_fraction = 1.0;
  std::vector<std::uint64_t> seeds;
  for (std::size_t r = 0; r < 50; ++r) seeds.push_back(stability_seed(config.seed, 3, r));
  const StabilityReport report = stability_protocol(
      seeds,
      [&](std::uint64_t seed) {
        const ModelResult model = fit_model(planted.dataset, config, 3, seed, false);
        return RunOutcome{model.modal.labels, model.low_confidence};
      },
      1);
  const double all = report.median_all();
  const double confident = report.median_confident();
  return {confident >= all, fmt("median Rand before exclusion %.4f, after %.4f", all, confident)};
}

Outcome logrank_and_bh() {
  const std::vector<double> times{1, 2, 4, 5};
  const std::vector<bool> events{true, true, true, true};
  const LogrankResult hand = logrank_test(times, events, std::vector<int>{0, 0, 1, 1});
  const double stat_error = std::abs(hand.chi_square - 49.0 / 17.0);
  const double p_error = std::abs(hand.p_value - std::erfc(std::sqrt(49.0 / 34.0)));

  const std::vector<double> same_times{3, 5, 8, 3, 5, 8};
  const std::vector<bool> same_events{true, false, true, true, false, true};
  const LogrankResult same = logrank_test(same_times, same_events, std::vector<int>{0, 0, 0, 1, 1, 1});

  const std::vector<double> p{0.01, 0.02, 0.03, 0.04, 0.05};
  const bool bh_exact = bh_adjust(p) == std::vector<double>(5, 0.05);
  return {stat_error <= 1e-9 && p_error <= 1e-9 && same.p_value == 1.0 && bh_exact,
          fmt("statistic error %.3g, p error %.3g, identical-group p %.17g, BH exact %.0f", stat_error, p_error,
              same.p_value, bh_exact ? 1.0 : 0.0)};
}

Outcome kernel_properties() {
  Rng rng(9);
  double idempotence = 0.0;
  double sums = 0.0;
  double reconstruction = 0.0;
  double psd = 0.0;  // worst min-eigenvalue relative to N
  for (int t = 0; t < 30; ++t) {
    const auto n = static_cast<Eigen::Index>(5 + rng.index(40));
    const auto d = static_cast<Eigen::Index>(1 + rng.index(6));
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 2.0 * rng.normal();
    const KernelMatrix raw = rbf_kernel(x, 0.05 + rng.uniform());
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(raw.values, Eigen::EigenvaluesOnly).eigenvalues()(0);
    psd = std::min(psd, min_eig / static_cast<double>(n));
    const KernelMatrix c = center_kernel(raw);
    idempotence = std::max(idempotence, (center_kernel(c).values - c.values).cwiseAbs().maxCoeff());
    sums = std::max({sums, c.values.rowwise().sum().cwiseAbs().maxCoeff(), c.values.colwise().sum().cwiseAbs().maxCoeff()});
    const auto [plus, minus] = split_pos_neg(c);
    reconstruction = std::max(reconstruction, (plus + minus - c.values).cwiseAbs().maxCoeff());
  }
  return {idempotence <= 1e-12 && sums <= 1e-7 && reconstruction == 0.0 && psd >= -1e-9,
          fmt("idempotence %.3g, row/col sums %.3g, K+ + K- error %.3g, min eigenvalue/N %.3g", idempotence, sums,
              reconstruction, psd)};
}

Outcome determinism() {
  testing::TempDir dir;
  const auto planted = testing::make_planted({.samples = 40, .seed = 99});
  PipelineConfig config;
  for (const auto& view : planted.dataset.views) {
    config.views.push_back(dir.write(view.name + ".tsv", testing::view_table(planted.dataset.sample_ids, view)));
  }
  config.variance_fraction = 0.5;
  config.c_min = 2;
  config.c_max = 4;
  config.dump_kernels = true;
  const auto snapshot = [](const std::filesystem::path& root) {
    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
      if (entry.is_regular_file()) {
        files.emplace_back(std::filesystem::relative(entry.path(), root).string(), io::read_file(entry.path()));
      }
    }
    std::sort(files.begin(), files.end());
    return files;
  };
  config.output = dir.path() / "a";
  (void)run_pipeline(config);
  config.output = dir.path() / "b";
  (void)run_pipeline(config);
  const auto a = snapshot(dir.path() / "a");
  const auto b = snapshot(dir.path() / "b");
  return {!a.empty() && a == b, fmt("%.0f files compared, identical: %.0f", static_cast<double>(a.size()), a == b ? 1.0 : 0.0)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"FIPPA partition identity", partition_identity},
      {"hard/fuzzy consistency", hard_fuzzy_consistency},
      {"fFIPPA formula oracles", formula_oracles},
      {"optimizer monotonicity and weight-step grid check", optimizer_monotonicity},
      {"fuzzy c-means properties", fcm_properties},
      {"planted-structure recovery and attribution", planted_recovery},
      {"stability improves after low-confidence exclusion", stability_direction},
      {"log-rank and BH oracles", logrank_and_bh},
      {"kernel properties", kernel_properties},
      {"byte-identical reruns", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    if (!outcome.pass) ++failures;
    std::printf("[%s] %2zu %s: %s\n", outcome.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
