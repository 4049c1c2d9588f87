#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace imkc {

/// One data type measured on the cohort: samples in rows, features in columns.
struct View {
  std::string name;
  std::vector<std::string> feature_ids;
  Eigen::MatrixXd matrix;

  std::size_t samples() const { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t features() const { return static_cast<std::size_t>(matrix.cols()); }
};

/// Several views sharing one ordered sample axis.
///
/// Invariants checked by validate(): at least two samples, every view has the
/// same number of rows as there are sample IDs, at least one feature per view,
/// unique IDs, finite entries.
struct MultiViewDataset {
  std::vector<std::string> sample_ids;
  std::vector<View> views;

  std::size_t samples() const { return sample_ids.size(); }
  void validate() const;
};

struct SurvivalRecord {
  double time_days = 0.0;
  bool event = false;
};

/// Survival follow-up for a subset of the cohort, keyed by sample ID.
struct SurvivalData {
  std::vector<std::string> sample_ids;
  std::vector<SurvivalRecord> records;

  /// Record for `sample_id`, or nothing when the sample has no follow-up.
  std::optional<SurvivalRecord> find(const std::string& sample_id) const;
};

struct LoadOptions {
  char delimiter = '\t';
};

struct DroppedSample {
  std::string sample_id;
  std::string missing_from;  ///< name of the first view lacking the sample
};

struct LoadResult {
  MultiViewDataset dataset;
  std::vector<DroppedSample> dropped;
};

/// Reads one delimited matrix file. Row 0 holds feature IDs (its first cell is
/// ignored), column 0 holds sample IDs. The view is named after the file stem.
View read_view(const std::filesystem::path& path, const LoadOptions& options = {});

/// As read_view, also returning the row IDs in file order.
std::pair<std::vector<std::string>, View> read_labeled_view(const std::filesystem::path& path,
                                                            const LoadOptions& options = {});

/// Loads every file as a view and aligns all of them to the samples present
/// in every file, keeping the row order of the first file.
LoadResult load_views(const std::vector<std::filesystem::path>& paths,
                      const LoadOptions& options = {});

/// Aligns in-memory views (each given with its own sample ID list).
LoadResult align_views(std::vector<std::pair<std::vector<std::string>, View>> views);

/// Keeps the ceil(fraction * d) features with the largest population variance.
/// Ties go to the lower column index; surviving columns keep their order.
View variance_filter(const View& view, double fraction = 0.10);

/// Columns: sample_id, time_days, event (0/1). A header row is required.
SurvivalData load_survival(const std::filesystem::path& path, const LoadOptions& options = {});

}  // namespace imkc
