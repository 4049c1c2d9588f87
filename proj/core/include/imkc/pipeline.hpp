#pragma once

#include "imkc/dataset.hpp"
#include "imkc/evaluation.hpp"
#include "imkc/fcm.hpp"
#include "imkc/feature_cluster.hpp"
#include "imkc/fippa.hpp"
#include "imkc/kernel.hpp"
#include "imkc/mkl_lpp.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace imkc {

/// Every knob of a run. Defaults reproduce the published parameter choices.
struct PipelineConfig {
  std::vector<std::filesystem::path> views;
  std::optional<std::filesystem::path> survival;
  std::filesystem::path output = "imkc_out";
  char delimiter = '\t';

  double variance_fraction = 0.10;
  int c_min = 2;
  int c_max = 6;
  int feature_clusters = 0;  ///< 0: same as the patient cluster count
  int neighbors = 9;
  int dimensions = 5;
  double fuzzifier = 2.0;
  std::vector<double> gamma_factors{0.5, 1.0, 2.0};
  int variance_components = 0;  ///< kernel selection PCs; 0: same as dimensions

  std::uint64_t seed = 1;
  int threads = 1;

  int kmeans_restarts = 10;
  int kmeans_max_iter = 300;
  double kmeans_tol = 1e-6;
  bool standardize_features = false;

  int fcm_restarts = 5;
  int fcm_max_iter = 300;
  double fcm_tol = 1e-6;

  int max_sweeps = 50;
  double sweep_tol = 1e-6;
  double ridge_scale = 1e-8;

  double pair_epsilon = kPairEpsilon;
  int stability_runs = 50;
  bool dump_kernels = false;

  int feature_clusters_for(int clusters) const { return feature_clusters > 0 ? feature_clusters : clusters; }
  int selection_components() const { return variance_components > 0 ? variance_components : dimensions; }
};

/// Every range violation, not just the first. `samples` and
/// `min_features` enable the data-dependent checks.
std::vector<std::string> validate_config(const PipelineConfig& config,
                                         std::optional<std::size_t> samples = std::nullopt,
                                         std::optional<std::size_t> min_features = std::nullopt);

struct PreparedDataset {
  MultiViewDataset dataset;
  std::vector<DroppedSample> dropped;
  std::vector<std::size_t> raw_features;  ///< per view, before variance filtering
};

/// Loads, aligns and variance-filters the configured views.
PreparedDataset prepare_dataset(const PipelineConfig& config);

/// Everything one (C, seed) run produces.
struct ModelResult {
  int clusters = 0;
  std::uint64_t seed = 0;
  std::vector<FeatureClustering> feature_clusterings;
  std::vector<KernelSelection> selections;
  KernelSet kernels;
  NeighborhoodGraph graph;
  ProjectionModel projection;
  FuzzyAssignment fcm;
  ModalAssignment modal;
  std::vector<bool> low_confidence;
  FippaReport report;
  std::vector<FeatureListEntry> feature_lists;
};

/// Feature clustering, kernel construction, rMKL-LPP, fuzzy c-means and
/// (optionally) FIPPA scoring for one cluster count. Stage failures are
/// rethrown with the stage name and C in the message, keeping their type.
/// `stage`, when given, always names the last stage entered.
ModelResult fit_model(const MultiViewDataset& dataset, const PipelineConfig& config, int clusters,
                      std::uint64_t seed, bool with_report = true, std::string* stage = nullptr);

/// Seed for the main run at `clusters`.
std::uint64_t run_seed(std::uint64_t master, int clusters);
/// Seed for stability run `index` at `clusters`.
std::uint64_t stability_seed(std::uint64_t master, int clusters, std::size_t index);

struct RunStatus {
  int clusters = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string stage;
  std::string error;
  int exit_code = 0;
};

struct PipelineSummary {
  std::vector<RunStatus> runs;
  std::vector<SurvivalTableRow> survival;
  std::vector<DroppedSample> dropped;

  /// 0 when every run succeeded, else the code of the first failure.
  int exit_code() const;
};

/// Runs every cluster count in [c_min, c_max] and writes one directory per C
/// (C<k>/embedding.tsv, memberships.tsv, fippa.json, fippa_bars.tsv,
/// feature_lists.tsv, feature_clusters.tsv, model.json, and kernels/ when
/// requested), survival.tsv when survival data is configured, and
/// manifest.json. A failed C leaves C<k>/FAILED describing the stage.
PipelineSummary run_pipeline(const PipelineConfig& config);

/// Repeats the full model `stability_runs` times per cluster count and writes
/// C<k>/stability.json and C<k>/stability.tsv.
std::vector<std::pair<int, StabilityReport>> run_stability(const PipelineConfig& config);

/// Recomputes the survival table from the memberships of an existing run
/// directory and writes <run_dir>/survival.tsv.
std::vector<SurvivalTableRow> run_survival(const std::filesystem::path& run_dir,
                                           const std::filesystem::path& survival, char delimiter = '\t');

/// Recomputes FIPPA scores from a kernel dump and a membership table and
/// writes fippa.json and fippa_bars.tsv into `output`.
FippaReport recompute_fippa(const std::filesystem::path& kernel_dir, const std::filesystem::path& memberships,
                            const std::filesystem::path& output, double epsilon = kPairEpsilon);

/// Version string recorded in manifests.
const char* version();

}  // namespace imkc
