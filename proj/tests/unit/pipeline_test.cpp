#include "imkc/error.hpp"
#include "imkc/io.hpp"
#include "imkc/pipeline.hpp"
#include "synthetic.hpp"
#include "temp_dir.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>

namespace imkc {
namespace {

using testing::TempDir;

struct Fixture {
  TempDir dir;
  testing::PlantedData planted;
  PipelineConfig config;
};

// Writes planted views (and random survival) to disk and returns a config
// pointing at them.
void prepare(Fixture& f, const testing::PlantedOptions& options, bool with_survival = true) {
  f.planted = testing::make_planted(options);
  for (const auto& view : f.planted.dataset.views) {
    f.config.views.push_back(f.dir.write(view.name + ".tsv", testing::view_table(f.planted.dataset.sample_ids, view)));
  }
  if (with_survival) {
    Rng rng(options.seed + 100);
    std::string text = "sample_id\ttime_days\tevent\n";
    for (std::size_t i = 0; i < f.planted.dataset.sample_ids.size(); ++i) {
      const double scale = 300.0 * (1 + f.planted.sample_labels[i]);
      text += f.planted.dataset.sample_ids[i] + "\t" + io::format_double(std::ceil(scale * rng.uniform())) + "\t" +
              (rng.uniform() < 0.7 ? "1" : "0") + "\n";
    }
    f.config.survival = f.dir.write("survival.tsv", text);
  }
  f.config.variance_fraction = 1.0;
  f.config.c_min = 2;
  f.config.c_max = 3;
  f.config.kmeans_restarts = 3;
  f.config.fcm_restarts = 2;
}

std::vector<std::pair<std::string, std::string>> tree(const std::filesystem::path& root) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    files.emplace_back(std::filesystem::relative(entry.path(), root).string(), io::read_file(entry.path()));
  }
  std::sort(files.begin(), files.end());
  return files;
}

TEST(ValidateConfig, DefaultsAreValidOnHundredSamples) {
  PipelineConfig config;
  config.views = {"a.tsv"};
  EXPECT_TRUE(validate_config(config, 100, 1000).empty());
}

TEST(ValidateConfig, NeighbourCountMustBeBelowSampleCount) {
  PipelineConfig config;
  config.views = {"a.tsv"};
  config.c_max = 3;
  const auto violations = validate_config(config, 5);
  EXPECT_NE(std::find_if(violations.begin(), violations.end(),
                         [](const std::string& v) { return v.rfind("k must be < N", 0) == 0; }),
            violations.end());
}

TEST(ValidateConfig, ReportsEveryViolation) {
  PipelineConfig config;
  config.views = {"a.tsv"};
  config.variance_fraction = 0.0;
  config.fuzzifier = 1.0;
  const auto violations = validate_config(config);
  EXPECT_EQ(violations.size(), 2u);
}

TEST(ValidateConfig, FeatureClustersBoundedBySmallestView) {
  PipelineConfig config;
  config.views = {"a.tsv"};
  EXPECT_EQ(validate_config(config, 100, 5).size(), 1u);  // C=6 feature clusters, 5 features
  config.feature_clusters = 4;
  EXPECT_TRUE(validate_config(config, 100, 5).empty());
}

TEST(FitModel, TwoViewsThreeClustersGiveSixKernels) {
  const auto planted = testing::make_planted({});
  PipelineConfig config;
  config.kmeans_restarts = 3;
  const ModelResult model = fit_model(planted.dataset, config, 3, 7);
  EXPECT_EQ(model.kernels.size(), 6u);
  EXPECT_EQ(model.projection.beta.size(), 6);
  EXPECT_EQ(model.fcm.memberships.cols(), 3);
  EXPECT_GE(rand_index(model.modal.labels, planted.sample_labels), 0.95);
  for (std::size_t m = 0; m < 6; ++m) {
    EXPECT_EQ(model.kernels.kernels[m].provenance.view_name, m < 3 ? "view1" : "view2");
    EXPECT_EQ(model.kernels.kernels[m].provenance.feature_cluster, static_cast<int>(m % 3));
  }
}

TEST(FitModel, SameSeedIsBitIdentical) {
  const auto planted = testing::make_planted({.samples = 30});
  PipelineConfig config;
  config.kmeans_restarts = 2;
  const ModelResult a = fit_model(planted.dataset, config, 3, 11);
  const ModelResult b = fit_model(planted.dataset, config, 3, 11);
  EXPECT_EQ(a.modal.labels, b.modal.labels);
  EXPECT_EQ(a.projection.beta, b.projection.beta);
  EXPECT_EQ(a.fcm.memberships, b.fcm.memberships);
}

TEST(FitModel, StageErrorsKeepTypeAndContext) {
  auto planted = testing::make_planted({.samples = 12, .features_per_block = 2});
  PipelineConfig config;
  std::string stage;
  try {
    (void)fit_model(planted.dataset, config, 7, 1, true, &stage);  // 7 feature clusters > 6 features
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(stage, "feature_cluster");
    EXPECT_NE(std::string(e.what()).find("C=7"), std::string::npos);
  }
}

TEST(RunPipeline, WritesExpectedLayoutAndIsByteDeterministic) {
  Fixture f;
  prepare(f, {.samples = 36});
  f.config.output = f.dir.path() / "first";
  const PipelineSummary summary = run_pipeline(f.config);
  EXPECT_EQ(summary.exit_code(), 0);
  for (const char* name : {"embedding.tsv", "memberships.tsv", "fippa.json", "fippa_bars.tsv", "feature_lists.tsv",
                           "feature_clusters.tsv", "model.json", "kaplan_meier.tsv"}) {
    EXPECT_TRUE(std::filesystem::exists(f.config.output / "C2" / name)) << name;
    EXPECT_TRUE(std::filesystem::exists(f.config.output / "C3" / name)) << name;
  }
  EXPECT_TRUE(std::filesystem::exists(f.config.output / "survival.tsv"));
  const std::string manifest = io::read_file(f.config.output / "manifest.json");
  EXPECT_NE(manifest.find("\"stages\""), std::string::npos);
  EXPECT_EQ(manifest.find(f.config.output.string()), std::string::npos);

  f.config.output = f.dir.path() / "second";
  f.config.threads = 2;
  (void)run_pipeline(f.config);
  EXPECT_EQ(tree(f.dir.path() / "first"), tree(f.dir.path() / "second"));
}

TEST(RunPipeline, ClusterCountsDoNotPerturbEachOther) {
  Fixture f;
  prepare(f, {.samples = 30}, false);
  f.config.c_min = 3;
  f.config.c_max = 3;
  f.config.output = f.dir.path() / "alone";
  (void)run_pipeline(f.config);
  f.config.c_min = 2;
  f.config.c_max = 4;
  f.config.output = f.dir.path() / "range";
  (void)run_pipeline(f.config);
  EXPECT_EQ(tree(f.dir.path() / "alone" / "C3"), tree(f.dir.path() / "range" / "C3"));
}

TEST(RunPipeline, FailedRunLeavesMarkerAndNumericalExitCode) {
  Fixture f;
  prepare(f, {.samples = 20}, false);
  View flat = f.planted.dataset.views[0];
  flat.name = "flat";
  flat.matrix.setConstant(1.0);
  f.config.views.push_back(f.dir.write("flat.tsv", testing::view_table(f.planted.dataset.sample_ids, flat)));
  f.config.output = f.dir.path() / "out";
  const PipelineSummary summary = run_pipeline(f.config);
  EXPECT_EQ(summary.exit_code(), 4);
  ASSERT_TRUE(std::filesystem::exists(f.config.output / "C2" / "FAILED"));
  EXPECT_NE(io::read_file(f.config.output / "C2" / "FAILED").find("kernel"), std::string::npos);
  EXPECT_NE(io::read_file(f.config.output / "manifest.json").find("\"failed\""), std::string::npos);
}

TEST(RunPipeline, SurvivalTableCoversWholeRangeAndRecomputes) {
  Fixture f;
  prepare(f, {.samples = 40});
  f.config.c_max = 6;
  f.config.output = f.dir.path() / "out";
  const PipelineSummary summary = run_pipeline(f.config);
  ASSERT_EQ(summary.survival.size(), 5u);
  std::vector<double> raw;
  for (const auto& row : summary.survival) raw.push_back(row.test.p_value);
  const auto adjusted = bh_adjust(raw);
  for (std::size_t r = 0; r < 5; ++r) EXPECT_EQ(summary.survival[r].adjusted_p, adjusted[r]);

  const std::string before = io::read_file(f.config.output / "survival.tsv");
  std::filesystem::remove(f.config.output / "survival.tsv");
  const auto rows = run_survival(f.config.output, *f.config.survival);
  EXPECT_EQ(rows.size(), 5u);
  EXPECT_EQ(io::read_file(f.config.output / "survival.tsv"), before);
}

TEST(RecomputeFippa, MatchesTheRunsScores) {
  Fixture f;
  prepare(f, {.samples = 30}, false);
  f.config.c_min = 3;
  f.config.dump_kernels = true;
  f.config.output = f.dir.path() / "out";
  (void)run_pipeline(f.config);
  const auto run_dir = f.config.output / "C3";
  const auto redo = f.dir.path() / "redo";
  (void)recompute_fippa(run_dir / "kernels", run_dir / "memberships.tsv", redo);
  EXPECT_EQ(io::read_file(redo / "fippa_bars.tsv"), io::read_file(run_dir / "fippa_bars.tsv"));
}

TEST(RunStability, WellSeparatedDataIsStable) {
  Fixture f;
  prepare(f, {.samples = 30, .features_per_block = 5}, false);
  f.config.c_min = 3;
  f.config.stability_runs = 10;
  f.config.output = f.dir.path() / "out";
  const auto reports = run_stability(f.config);
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_EQ(reports[0].second.rand_all.size(), 45u);
  EXPECT_GE(reports[0].second.median_all(), 0.95);
  EXPECT_TRUE(std::filesystem::exists(f.config.output / "C3" / "stability.json"));
}

TEST(RunPipeline, InvalidConfigListsViolations) {
  Fixture f;
  prepare(f, {.samples = 8, .features_per_block = 2}, false);
  f.config.c_max = 9;
  f.config.output = f.dir.path() / "out";
  try {
    (void)run_pipeline(f.config);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string message = e.what();
    EXPECT_NE(message.find("k must be < N"), std::string::npos);
    EXPECT_NE(message.find("C must be <= N"), std::string::npos);
  }
}

}  // namespace
}  // namespace imkc
