#include "imkc/io.hpp"

#include "imkc/error.hpp"
#include "imkc/fcm.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace imkc::io {
namespace {

using Json = nlohmann::ordered_json;

std::string join_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += '\t';
    out += cells[i];
  }
  out += '\n';
  return out;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json provenance_json(const KernelProvenance& p) {
  return Json{{"view", p.view_name},
              {"feature_cluster", p.feature_cluster + 1},
              {"gamma", p.gamma},
              {"gamma_factor", p.gamma_factor},
              {"centered", p.centered}};
}

const char* direction_name(Direction d) { return d == Direction::Over ? "over" : "under"; }

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

std::string checksum(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char ch : bytes) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + buffer;
}

std::string checksum_file(const std::filesystem::path& path) { return checksum(read_file(path)); }

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string embedding_tsv(const std::vector<std::string>& sample_ids, const Eigen::MatrixXd& embedding) {
  std::vector<std::string> header{"sample_id"};
  for (Eigen::Index c = 0; c < embedding.cols(); ++c) header.push_back("dim_" + std::to_string(c + 1));
  std::string out = join_row(header);
  for (Eigen::Index i = 0; i < embedding.rows(); ++i) {
    std::vector<std::string> row{sample_ids[static_cast<std::size_t>(i)]};
    for (Eigen::Index c = 0; c < embedding.cols(); ++c) row.push_back(format_double(embedding(i, c)));
    out += join_row(row);
  }
  return out;
}

std::string memberships_tsv(const std::vector<std::string>& sample_ids, const Eigen::MatrixXd& memberships) {
  const auto modal = modal_assignment(memberships);
  std::vector<std::string> header{"sample_id", "modal_label", "modal_prob"};
  for (Eigen::Index c = 0; c < memberships.cols(); ++c) header.push_back("u_" + std::to_string(c + 1));
  std::string out = join_row(header);
  for (Eigen::Index i = 0; i < memberships.rows(); ++i) {
    std::vector<std::string> row{sample_ids[static_cast<std::size_t>(i)],
                                 std::to_string(modal.labels[static_cast<std::size_t>(i)] + 1),
                                 format_double(modal.probabilities(i))};
    for (Eigen::Index c = 0; c < memberships.cols(); ++c) row.push_back(format_double(memberships(i, c)));
    out += join_row(row);
  }
  return out;
}

std::string feature_clusters_tsv(const MultiViewDataset& dataset, const std::vector<FeatureClustering>& clusterings) {
  std::string out = join_row({"feature_id", "view", "cluster_label"});
  for (const auto& fc : clusterings) {
    const auto view = std::find_if(dataset.views.begin(), dataset.views.end(),
                                   [&](const View& v) { return v.name == fc.view_name; });
    if (view == dataset.views.end()) throw DataError("feature clustering for unknown view '" + fc.view_name + "'");
    for (std::size_t j = 0; j < fc.labels.size(); ++j) {
      out += join_row({view->feature_ids[j], fc.view_name, std::to_string(fc.labels[j] + 1)});
    }
  }
  return out;
}

std::string fippa_bars_tsv(const FippaReport& report, const KernelSet& kernels) {
  std::string out = join_row({"patient_cluster", "kernel", "view", "feature_cluster", "fippa", "ffippa",
                              "ffippa_plus", "ffippa_minus"});
  for (int c = 0; c < report.clusters(); ++c) {
    for (int m = 0; m < report.kernels(); ++m) {
      const auto& p = kernels.kernels[static_cast<std::size_t>(m)].provenance;
      out += join_row({std::to_string(c + 1), std::to_string(m + 1), p.view_name,
                       std::to_string(p.feature_cluster + 1), format_double(report.fippa.scores(c, m)),
                       format_double(report.ffippa.scores(c, m)), format_double(report.ffippa_plus.scores(c, m)),
                       format_double(report.ffippa_minus.scores(c, m))});
    }
  }
  return out;
}

std::string feature_lists_tsv(const std::vector<FeatureListEntry>& entries) {
  std::string out = join_row({"patient_cluster", "list", "feature_id", "view", "direction", "score"});
  for (const auto& e : entries) {
    out += join_row({std::to_string(e.cluster + 1), std::string(1, e.list), e.feature_id, e.view,
                     direction_name(e.direction), std::to_string(e.score)});
  }
  return out;
}

std::string stability_tsv(const StabilityReport& report) {
  std::string out = join_row({"run_a", "run_b", "seed_a", "seed_b", "rand_all", "rand_confident", "excluded"});
  for (std::size_t k = 0; k < report.pairs.size(); ++k) {
    const auto [a, b] = report.pairs[k];
    out += join_row({std::to_string(a + 1), std::to_string(b + 1), std::to_string(report.seeds[a]),
                     std::to_string(report.seeds[b]), format_double(report.rand_all[k]),
                     format_double(report.rand_confident[k]), std::to_string(report.excluded[k])});
  }
  return out;
}

std::string kaplan_meier_tsv(const std::vector<std::pair<int, std::vector<KaplanMeierStep>>>& curves) {
  std::string out = join_row({"group", "time", "at_risk", "events", "censored", "survival"});
  for (const auto& [group, steps] : curves) {
    for (const auto& s : steps) {
      out += join_row({std::to_string(group + 1), format_double(s.time), std::to_string(s.at_risk),
                       std::to_string(s.events), std::to_string(s.censored), format_double(s.survival)});
    }
  }
  return out;
}

std::string survival_tsv(const std::vector<SurvivalTableRow>& rows, std::string_view method) {
  std::string out = join_row({"method", "C", "chi_square", "df", "p_value", "bh_adjusted_p"});
  for (const auto& r : rows) {
    out += join_row({std::string(method), std::to_string(r.clusters), format_double(r.test.chi_square),
                     std::to_string(r.test.degrees_of_freedom), format_double(r.test.p_value),
                     format_double(r.adjusted_p)});
  }
  return out;
}

std::string fippa_json(const FippaReport& report, const KernelSet& kernels, const Eigen::VectorXd& beta,
                       const std::vector<FeatureListEntry>& lists) {
  Json doc;
  doc["clusters"] = report.clusters();
  doc["beta"] = vector_json(beta);
  Json kernel_info = Json::array();
  for (const auto& k : kernels.kernels) kernel_info.push_back(provenance_json(k.provenance));
  doc["kernels"] = std::move(kernel_info);
  const auto scores = [](const ImpactScores& s) {
    return Json{{"scores", matrix_json(s.scores)}, {"skipped_pairs", s.skipped}};
  };
  doc["fippa"] = scores(report.fippa);
  doc["ffippa"] = scores(report.ffippa);
  doc["ffippa_plus"] = scores(report.ffippa_plus);
  doc["ffippa_minus"] = scores(report.ffippa_minus);

  Json clusters = Json::array();
  for (int c = 0; c < report.clusters(); ++c) {
    const auto impact = select_high_impact(report, c);
    Json entry;
    entry["cluster"] = c + 1;
    Json sim = Json::array(), dis = Json::array();
    for (const auto m : impact.similarity) sim.push_back(m + 1);
    for (const auto m : impact.dissimilarity) dis.push_back(m + 1);
    entry["similarity_kernels"] = std::move(sim);
    entry["dissimilarity_kernels"] = std::move(dis);
    Json named = Json::object();
    for (const char list : {'a', 'b', 'c', 'd'}) {
      Json features = Json::array();
      for (const auto& e : lists) {
        if (e.cluster == c && e.list == list) {
          features.push_back(Json{{"feature_id", e.feature_id}, {"view", e.view},
                                  {"direction", direction_name(e.direction)}, {"score", e.score}});
        }
      }
      named[std::string(1, list)] = std::move(features);
    }
    entry["feature_lists"] = std::move(named);
    clusters.push_back(std::move(entry));
  }
  doc["patient_clusters"] = std::move(clusters);
  return doc.dump(2) + "\n";
}

std::string model_json(const ProjectionModel& model, const KernelSet& kernels,
                       const std::vector<KernelSelection>& selections) {
  Json doc;
  doc["dimensions"] = model.dimensions;
  doc["beta"] = vector_json(model.beta);
  doc["eigenvalues"] = vector_json(model.eigenvalues);
  doc["objective"] = model.objective;
  doc["locality_cost"] = model.locality_cost;
  doc["ridge"] = model.ridge;
  doc["sweeps"] = model.sweeps;
  doc["converged"] = model.converged;
  Json trace = Json::array();
  for (const auto& t : model.trace) {
    trace.push_back(Json{{"sweep", t.sweep},
                         {"step", t.step == HalfStep::Projection ? "projection" : "weights"},
                         {"objective", t.objective}});
  }
  doc["trace"] = std::move(trace);
  Json info = Json::array();
  for (std::size_t m = 0; m < kernels.size(); ++m) {
    Json k = provenance_json(kernels.kernels[m].provenance);
    if (m < selections.size()) {
      k["candidate_factors"] = selections[m].factors;
      k["candidate_variance_fraction"] = selections[m].variance_fraction;
    }
    info.push_back(std::move(k));
  }
  doc["kernels"] = std::move(info);
  return doc.dump(2) + "\n";
}

std::string stability_json(const StabilityReport& report, int clusters) {
  Json doc;
  doc["clusters"] = clusters;
  doc["runs"] = report.seeds.size();
  doc["seeds"] = report.seeds;
  doc["median_rand_all"] = report.median_all();
  doc["median_rand_confident"] = report.median_confident();
  Json pairs = Json::array();
  for (std::size_t k = 0; k < report.pairs.size(); ++k) {
    pairs.push_back(Json{{"a", report.pairs[k].first + 1},
                         {"b", report.pairs[k].second + 1},
                         {"rand_all", report.rand_all[k]},
                         {"rand_confident", report.rand_confident[k]},
                         {"excluded", report.excluded[k]}});
  }
  doc["pairs"] = std::move(pairs);
  return doc.dump(2) + "\n";
}

void write_kernels(const std::filesystem::path& directory, const KernelSet& kernels, const Eigen::VectorXd& beta,
                   const std::vector<std::string>& sample_ids) {
  Json doc;
  doc["samples"] = sample_ids.size();
  doc["beta"] = vector_json(beta);
  Json entries = Json::array();
  for (std::size_t m = 0; m < kernels.size(); ++m) {
    const auto file = "kernel_" + std::to_string(m + 1) + ".tsv";
    const auto& values = kernels.kernels[m].values;
    std::vector<std::string> header{"sample_id"};
    header.insert(header.end(), sample_ids.begin(), sample_ids.end());
    std::string text = join_row(header);
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      std::vector<std::string> row{sample_ids[static_cast<std::size_t>(i)]};
      for (Eigen::Index j = 0; j < values.cols(); ++j) row.push_back(format_double(values(i, j)));
      text += join_row(row);
    }
    write_file(directory / file, text);
    Json k = provenance_json(kernels.kernels[m].provenance);
    k["file"] = file;
    entries.push_back(std::move(k));
  }
  doc["kernels"] = std::move(entries);
  write_file(directory / "kernels.json", doc.dump(2) + "\n");
}

KernelDump read_kernels(const std::filesystem::path& directory) {
  Json doc;
  try {
    doc = Json::parse(read_file(directory / "kernels.json"));
  } catch (const Json::exception& e) {
    throw DataError("malformed kernels.json in '" + directory.string() + "': " + e.what());
  }
  KernelDump dump;
  try {
    const auto& beta = doc.at("beta");
    dump.beta.resize(static_cast<Eigen::Index>(beta.size()));
    for (std::size_t m = 0; m < beta.size(); ++m) dump.beta(static_cast<Eigen::Index>(m)) = beta[m].get<double>();
    for (const auto& entry : doc.at("kernels")) {
      auto [ids, table] = read_labeled_view(directory / entry.at("file").get<std::string>());
      if (table.feature_ids != ids) throw DataError("kernel file rows and columns name different samples");
      if (dump.sample_ids.empty()) dump.sample_ids = ids;
      if (ids != dump.sample_ids) throw DataError("kernel files disagree on sample order");
      KernelMatrix k;
      k.values = std::move(table.matrix);
      k.provenance.view_name = entry.at("view").get<std::string>();
      k.provenance.feature_cluster = entry.at("feature_cluster").get<int>() - 1;
      k.provenance.gamma = entry.at("gamma").get<double>();
      k.provenance.gamma_factor = entry.at("gamma_factor").get<double>();
      k.provenance.centered = entry.at("centered").get<bool>();
      dump.kernels.kernels.push_back(std::move(k));
    }
  } catch (const Json::exception& e) {
    throw DataError("malformed kernels.json in '" + directory.string() + "': " + e.what());
  }
  if (static_cast<std::size_t>(dump.beta.size()) != dump.kernels.size()) {
    throw DataError("kernels.json lists a different number of weights and kernels");
  }
  return dump;
}

MembershipTable read_memberships(const std::filesystem::path& path) {
  auto [ids, table] = read_labeled_view(path);
  std::vector<Eigen::Index> columns;
  for (std::size_t c = 0; c < table.feature_ids.size(); ++c) {
    if (table.feature_ids[c].rfind("u_", 0) == 0) columns.push_back(static_cast<Eigen::Index>(c));
  }
  if (columns.empty()) throw DataError("'" + path.string() + "' has no membership columns (u_1, u_2, ...)");
  MembershipTable out;
  out.sample_ids = std::move(ids);
  out.memberships.resize(table.matrix.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out.memberships.col(static_cast<Eigen::Index>(c)) = table.matrix.col(columns[c]);
  }
  return out;
}

}  // namespace imkc::io
