#include "imkc/fippa.hpp"

#include "imkc/error.hpp"
#include "imkc/fcm.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace imkc {
namespace {

void check_inputs(const KernelSet& kernels, const Eigen::VectorXd& beta) {
  kernels.validate();
  if (static_cast<std::size_t>(beta.size()) != kernels.size()) {
    throw DataError("kernel weight count does not match kernel count");
  }
  if (std::abs(beta.sum() - 1.0) > 1e-9 || beta.minCoeff() < -1e-12) {
    throw DataError("kernel weights must lie on the probability simplex");
  }
}

// Per-kernel ratio matrices beta_m K_m / denominator, zeroed where the pair is
// skipped, plus the skip mask.
struct Ratios {
  std::vector<Eigen::MatrixXd> per_kernel;
  Eigen::MatrixXd retained;  // 1 where kept, 0 where skipped
};

Ratios ratios(const std::vector<const Eigen::MatrixXd*>& parts, const Eigen::VectorXd& beta,
              double epsilon) {
  const auto n = parts.front()->rows();
  Eigen::MatrixXd denominator = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t m = 0; m < parts.size(); ++m) {
    denominator.noalias() += beta(static_cast<Eigen::Index>(m)) * *parts[m];
  }
  Ratios out;
  out.retained = (denominator.array().abs() >= epsilon).cast<double>().matrix();
  const Eigen::MatrixXd safe = (out.retained.array() > 0.0).select(denominator, 1.0);
  for (std::size_t m = 0; m < parts.size(); ++m) {
    out.per_kernel.push_back(
        (beta(static_cast<Eigen::Index>(m)) * parts[m]->array() / safe.array() * out.retained.array()).matrix());
  }
  return out;
}

std::vector<const Eigen::MatrixXd*> values_of(const KernelSet& kernels) {
  std::vector<const Eigen::MatrixXd*> out;
  for (const auto& k : kernels.kernels) out.push_back(&k.values);
  return out;
}

// Fuzzy scores for pair weights given as a callable over the membership column.
template <typename PairWeight>
ImpactScores fuzzy_scores(const Ratios& r, const Eigen::MatrixXd& memberships, PairWeight weight) {
  const auto n = memberships.rows();
  const auto clusters = memberships.cols();
  const auto m = static_cast<Eigen::Index>(r.per_kernel.size());
  const double retained = r.retained.sum();
  const auto skipped = static_cast<std::size_t>(static_cast<double>(n * n) - retained);
  if (!(retained > 0.0)) throw NumericalError("every sample pair has a vanishing ensemble kernel entry");

  ImpactScores out;
  out.scores.resize(clusters, m);
  out.skipped.assign(static_cast<std::size_t>(clusters), skipped);
  for (Eigen::Index c = 0; c < clusters; ++c) {
    const Eigen::MatrixXd w = weight(memberships.col(c));
    for (Eigen::Index k = 0; k < m; ++k) {
      out.scores(c, k) = w.cwiseProduct(r.per_kernel[static_cast<std::size_t>(k)]).sum() / retained;
    }
  }
  return out;
}

Eigen::MatrixXd joint(const Eigen::VectorXd& p) { return p * p.transpose(); }

Eigen::MatrixXd either(const Eigen::VectorXd& p) {
  const auto n = p.size();
  Eigen::MatrixXd w = p.replicate(1, n) + p.transpose().replicate(n, 1);
  w.noalias() -= 2.0 * p * p.transpose();
  return w;
}

void check_memberships(const Eigen::MatrixXd& memberships, Eigen::Index n) {
  if (memberships.rows() != n) throw DataError("membership rows do not match the kernel size");
  if (memberships.cols() < 1) throw DataError("membership matrix has no clusters");
  if (!memberships.allFinite() || memberships.minCoeff() < -1e-12 || memberships.maxCoeff() > 1.0 + 1e-12) {
    throw DataError("memberships must be probabilities");
  }
}

double median(std::vector<double> values) {
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

ImpactScores fippa_hard(const KernelSet& kernels, const Eigen::VectorXd& beta,
                        const std::vector<int>& labels, int clusters, double epsilon) {
  check_inputs(kernels, beta);
  const auto n = kernels.samples();
  if (labels.size() != static_cast<std::size_t>(n)) throw DataError("label count does not match kernel size");
  if (clusters < 1) throw ConfigError("at least one cluster is required");

  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(clusters));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0 || label >= clusters) throw DataError("cluster label out of range");
    members[static_cast<std::size_t>(label)].push_back(i);
  }

  const Ratios r = ratios(values_of(kernels), beta, epsilon);
  const auto m = static_cast<Eigen::Index>(kernels.size());
  ImpactScores out;
  out.scores = Eigen::MatrixXd::Zero(clusters, m);
  out.skipped.assign(static_cast<std::size_t>(clusters), 0);
  for (int c = 0; c < clusters; ++c) {
    const auto& idx = members[static_cast<std::size_t>(c)];
    if (idx.empty()) throw DataError("patient cluster " + std::to_string(c + 1) + " is empty");
    double retained = 0.0;
    for (const auto i : idx) {
      for (const auto j : idx) {
        if (r.retained(i, j) == 0.0) continue;
        retained += 1.0;
        for (Eigen::Index k = 0; k < m; ++k) out.scores(c, k) += r.per_kernel[static_cast<std::size_t>(k)](i, j);
      }
    }
    const auto total = idx.size() * idx.size();
    out.skipped[static_cast<std::size_t>(c)] = total - static_cast<std::size_t>(retained);
    if (retained > 0.0) out.scores.row(c) /= retained;
  }
  return out;
}

ImpactScores ffippa(const KernelSet& kernels, const Eigen::VectorXd& beta,
                    const Eigen::MatrixXd& memberships, double epsilon) {
  check_inputs(kernels, beta);
  check_memberships(memberships, kernels.samples());
  return fuzzy_scores(ratios(values_of(kernels), beta, epsilon), memberships, joint);
}

SignedImpact ffippa_signed(const KernelSet& kernels, const Eigen::VectorXd& beta,
                           const Eigen::MatrixXd& memberships, double epsilon) {
  check_inputs(kernels, beta);
  check_memberships(memberships, kernels.samples());
  std::vector<Eigen::MatrixXd> positive, negative;
  for (const auto& k : kernels.kernels) {
    auto [pos, neg] = split_pos_neg(k);
    positive.push_back(std::move(pos));
    negative.push_back(std::move(neg));
  }
  std::vector<const Eigen::MatrixXd*> pos_ptr, neg_ptr;
  for (std::size_t m = 0; m < positive.size(); ++m) {
    pos_ptr.push_back(&positive[m]);
    neg_ptr.push_back(&negative[m]);
  }
  return {fuzzy_scores(ratios(pos_ptr, beta, epsilon), memberships, joint),
          fuzzy_scores(ratios(neg_ptr, beta, epsilon), memberships, either)};
}

FippaReport compute_report(const KernelSet& kernels, const Eigen::VectorXd& beta,
                           const Eigen::MatrixXd& memberships, double epsilon) {
  check_inputs(kernels, beta);
  check_memberships(memberships, kernels.samples());
  const auto clusters = static_cast<int>(memberships.cols());
  const auto modal = modal_assignment(memberships);

  FippaReport report;
  // Hard scores per non-empty cluster; empty ones stay zero.
  report.fippa.scores = Eigen::MatrixXd::Zero(clusters, static_cast<Eigen::Index>(kernels.size()));
  report.fippa.skipped.assign(static_cast<std::size_t>(clusters), 0);
  std::vector<int> compact(static_cast<std::size_t>(clusters), -1);
  std::vector<int> present;
  for (const int label : modal.labels) {
    if (compact[static_cast<std::size_t>(label)] < 0) {
      compact[static_cast<std::size_t>(label)] = 0;
    }
  }
  for (int c = 0; c < clusters; ++c) {
    if (compact[static_cast<std::size_t>(c)] >= 0) {
      compact[static_cast<std::size_t>(c)] = static_cast<int>(present.size());
      present.push_back(c);
    }
  }
  std::vector<int> relabeled;
  relabeled.reserve(modal.labels.size());
  for (const int label : modal.labels) relabeled.push_back(compact[static_cast<std::size_t>(label)]);
  const ImpactScores hard = fippa_hard(kernels, beta, relabeled, static_cast<int>(present.size()), epsilon);
  for (std::size_t k = 0; k < present.size(); ++k) {
    report.fippa.scores.row(present[k]) = hard.scores.row(static_cast<Eigen::Index>(k));
    report.fippa.skipped[static_cast<std::size_t>(present[k])] = hard.skipped[k];
  }

  report.ffippa = ffippa(kernels, beta, memberships, epsilon);
  auto signed_scores = ffippa_signed(kernels, beta, memberships, epsilon);
  report.ffippa_plus = std::move(signed_scores.plus);
  report.ffippa_minus = std::move(signed_scores.minus);
  return report;
}

std::vector<std::size_t> above_average(const Eigen::RowVectorXd& scores) {
  std::vector<std::size_t> out;
  if (scores.size() == 0) return out;
  const double mean = scores.mean();
  const double slack = 1e-12 * std::max(1.0, std::abs(mean));
  for (Eigen::Index m = 0; m < scores.size(); ++m) {
    if (scores(m) > mean + slack) out.push_back(static_cast<std::size_t>(m));
  }
  return out;
}

HighImpact select_high_impact(const FippaReport& report, int cluster) {
  if (cluster < 0 || cluster >= report.clusters()) throw DataError("cluster index out of range");
  return {above_average(report.ffippa_plus.scores.row(cluster)),
          above_average(report.ffippa_minus.scores.row(cluster))};
}

HomogeneityResult homogeneity_filter(const View& view, const std::vector<Eigen::Index>& feature_columns,
                                     const std::vector<Eigen::Index>& cluster_samples) {
  HomogeneityResult result;
  if (feature_columns.empty()) return result;
  for (const auto col : feature_columns) {
    const auto column = view.matrix.col(col);
    const double baseline = median(std::vector<double>(column.data(), column.data() + column.size()));
    int over = 0;
    for (const auto i : cluster_samples) {
      if (column(i) > baseline) ++over;
    }
    const int under = static_cast<int>(cluster_samples.size()) - over;
    HomogeneousFeature f;
    f.column = col;
    f.direction = over >= under ? Direction::Over : Direction::Under;
    f.score = std::max(over, under);
    result.features.push_back(f);
  }
  double total = 0.0;
  for (const auto& f : result.features) total += f.score;
  result.mean_score = total / static_cast<double>(result.features.size());
  for (auto& f : result.features) f.kept = static_cast<double>(f.score) > result.mean_score;
  return result;
}

std::vector<FeatureListEntry> build_feature_lists(const MultiViewDataset& dataset,
                                                  const std::vector<FeatureClustering>& clusterings,
                                                  const KernelSet& kernels, const FippaReport& report,
                                                  const std::vector<int>& labels) {
  std::map<std::string, std::size_t> view_index, clustering_index;
  for (std::size_t v = 0; v < dataset.views.size(); ++v) view_index[dataset.views[v].name] = v;
  for (std::size_t v = 0; v < clusterings.size(); ++v) clustering_index[clusterings[v].view_name] = v;

  std::vector<FeatureListEntry> out;
  for (int c = 0; c < report.clusters(); ++c) {
    std::vector<Eigen::Index> samples;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) samples.push_back(static_cast<Eigen::Index>(i));
    }
    const HighImpact impact = select_high_impact(report, c);
    const auto route = [&](const std::vector<std::size_t>& chosen, char over_list, char under_list) {
      for (const auto m : chosen) {
        const auto& prov = kernels.kernels[m].provenance;
        const auto v = view_index.find(prov.view_name);
        const auto fc = clustering_index.find(prov.view_name);
        if (v == view_index.end() || fc == clustering_index.end()) {
          throw DataError("kernel provenance names unknown view '" + prov.view_name + "'");
        }
        const View& view = dataset.views[v->second];
        const auto columns = clusterings[fc->second].members(prov.feature_cluster);
        for (const auto& f : homogeneity_filter(view, columns, samples).features) {
          if (!f.kept) continue;
          out.push_back({c, f.direction == Direction::Over ? over_list : under_list,
                         view.feature_ids[static_cast<std::size_t>(f.column)], view.name, f.direction,
                         f.score, m});
        }
      }
    };
    route(impact.similarity, 'a', 'b');
    route(impact.dissimilarity, 'c', 'd');
  }
  return out;
}

}  // namespace imkc
