#pragma once

#include "imkc/dataset.hpp"
#include "imkc/evaluation.hpp"
#include "imkc/feature_cluster.hpp"
#include "imkc/fippa.hpp"
#include "imkc/kernel.hpp"
#include "imkc/mkl_lpp.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace imkc::io {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

/// 64-bit FNV-1a, rendered as "fnv1a64:<16 hex digits>".
std::string checksum(std::string_view bytes);
std::string checksum_file(const std::filesystem::path& path);

void write_file(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// Tables. Cluster labels are written 1-based.

/// sample_id, dim_1..dim_p
std::string embedding_tsv(const std::vector<std::string>& sample_ids, const Eigen::MatrixXd& embedding);
/// sample_id, modal_label, modal_prob, u_1..u_C
std::string memberships_tsv(const std::vector<std::string>& sample_ids, const Eigen::MatrixXd& memberships);
/// feature_id, view, cluster_label
std::string feature_clusters_tsv(const MultiViewDataset& dataset, const std::vector<FeatureClustering>& clusterings);
/// patient_cluster, kernel, view, feature_cluster, fippa, ffippa, ffippa_plus, ffippa_minus
std::string fippa_bars_tsv(const FippaReport& report, const KernelSet& kernels);
/// patient_cluster, list, feature_id, view, direction, score
std::string feature_lists_tsv(const std::vector<FeatureListEntry>& entries);
std::string stability_tsv(const StabilityReport& report);
/// group, time, at_risk, events, censored, survival
std::string kaplan_meier_tsv(const std::vector<std::pair<int, std::vector<KaplanMeierStep>>>& curves);

/// method, C, chi_square, df, p_value, bh_adjusted_p
std::string survival_tsv(const std::vector<SurvivalTableRow>& rows, std::string_view method);

// JSON documents.

std::string fippa_json(const FippaReport& report, const KernelSet& kernels, const Eigen::VectorXd& beta,
                       const std::vector<FeatureListEntry>& lists);
std::string model_json(const ProjectionModel& model, const KernelSet& kernels,
                       const std::vector<KernelSelection>& selections);
std::string stability_json(const StabilityReport& report, int clusters);

// Kernel dumps: kernels.json (provenance + weights) next to kernel_<m>.tsv.

void write_kernels(const std::filesystem::path& directory, const KernelSet& kernels, const Eigen::VectorXd& beta,
                   const std::vector<std::string>& sample_ids);

struct KernelDump {
  KernelSet kernels;
  Eigen::VectorXd beta;
  std::vector<std::string> sample_ids;
};
KernelDump read_kernels(const std::filesystem::path& directory);

struct MembershipTable {
  std::vector<std::string> sample_ids;
  Eigen::MatrixXd memberships;
};
/// Reads a table produced by memberships_tsv.
MembershipTable read_memberships(const std::filesystem::path& path);

}  // namespace imkc::io
