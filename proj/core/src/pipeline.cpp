#include "imkc/pipeline.hpp"

#include "imkc/error.hpp"
#include "imkc/io.hpp"
#include "imkc/parallel.hpp"
#include "imkc/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <sstream>

#ifndef IMKC_VERSION_STRING
#define IMKC_VERSION_STRING "unknown"
#endif

namespace imkc {
namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kMethod = "FC+rMKL-LPP";

std::string cluster_dir(int clusters) { return "C" + std::to_string(clusters); }

int exit_code_of(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const ConfigError&) {
    return 2;
  } catch (const DataError&) {
    return 3;
  } catch (const NumericalError&) {
    return 4;
  } catch (...) {
    return 4;
  }
}

std::string message_of(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown error";
  }
}

// Rethrows the active exception with a stage/C prefix, keeping its category.
[[noreturn]] void rethrow_in_stage(const std::string& stage, int clusters) {
  const auto prefix = "stage '" + stage + "' (C=" + std::to_string(clusters) + "): ";
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const std::exception& e) {
    throw NumericalError(prefix + e.what());
  }
}

Json config_json(const PipelineConfig& c) {
  Json views = Json::array();
  for (const auto& v : c.views) views.push_back(v.string());
  return Json{{"views", views},
              {"survival", c.survival ? Json(c.survival->string()) : Json(nullptr)},
              {"delimiter", std::string(1, c.delimiter)},
              {"variance_fraction", c.variance_fraction},
              {"c_min", c.c_min},
              {"c_max", c.c_max},
              {"feature_clusters", c.feature_clusters},
              {"neighbors", c.neighbors},
              {"dimensions", c.dimensions},
              {"fuzzifier", c.fuzzifier},
              {"gamma_factors", c.gamma_factors},
              {"variance_components", c.selection_components()},
              {"seed", c.seed},
              {"kmeans_restarts", c.kmeans_restarts},
              {"kmeans_max_iter", c.kmeans_max_iter},
              {"kmeans_tol", c.kmeans_tol},
              {"standardize_features", c.standardize_features},
              {"fcm_restarts", c.fcm_restarts},
              {"fcm_max_iter", c.fcm_max_iter},
              {"fcm_tol", c.fcm_tol},
              {"max_sweeps", c.max_sweeps},
              {"sweep_tol", c.sweep_tol},
              {"ridge_scale", c.ridge_scale},
              {"pair_epsilon", c.pair_epsilon},
              {"stability_runs", c.stability_runs},
              {"dump_kernels", c.dump_kernels}};
}

std::string kernel_bytes(const KernelSet& kernels) {
  std::string bytes;
  for (const auto& k : kernels.kernels) {
    bytes.append(reinterpret_cast<const char*>(k.values.data()),
                 static_cast<std::size_t>(k.values.size()) * sizeof(double));
  }
  return bytes;
}

std::vector<std::pair<int, std::vector<KaplanMeierStep>>> group_curves(const SurvivalData& survival,
                                                                        const std::vector<std::string>& ids,
                                                                        const std::vector<int>& labels) {
  std::map<int, std::pair<std::vector<double>, std::vector<bool>>> groups;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto record = survival.find(ids[i]);
    if (!record) continue;
    auto& [times, events] = groups[labels[i]];
    times.push_back(record->time_days);
    events.push_back(record->event);
  }
  std::vector<std::pair<int, std::vector<KaplanMeierStep>>> curves;
  for (const auto& [group, data] : groups) curves.emplace_back(group, kaplan_meier(data.first, data.second));
  return curves;
}

void require_valid(const std::vector<std::string>& violations) {
  if (violations.empty()) return;
  std::string message = "invalid configuration:";
  for (const auto& v : violations) message += "\n  - " + v;
  throw ConfigError(message);
}

std::size_t min_features(const MultiViewDataset& dataset) {
  std::size_t out = SIZE_MAX;
  for (const auto& v : dataset.views) out = std::min(out, v.features());
  return out;
}

// One C's finished outputs, held in memory until the single writer flushes them.
struct RunArtifacts {
  RunStatus status;
  std::vector<std::pair<std::string, std::string>> files;
  Json stages = Json::object();
  std::vector<int> labels;
  std::optional<ModelResult> model;
};

}  // namespace

const char* version() { return IMKC_VERSION_STRING; }

std::vector<std::string> validate_config(const PipelineConfig& c, std::optional<std::size_t> samples,
                                         std::optional<std::size_t> min_feature_count) {
  std::vector<std::string> v;
  if (c.views.empty()) v.emplace_back("at least one view file is required");
  if (!(c.variance_fraction > 0.0 && c.variance_fraction <= 1.0)) v.emplace_back("variance fraction must lie in (0, 1]");
  if (c.c_min < 2) v.emplace_back("C must be at least 2");
  if (c.c_max < c.c_min) v.emplace_back("C range is empty (c_max < c_min)");
  if (c.feature_clusters < 0) v.emplace_back("feature cluster count must be >= 0 (0 means equal to C)");
  if (c.neighbors < 1) v.emplace_back("k must be at least 1");
  if (c.dimensions < 1) v.emplace_back("p must be at least 1");
  if (!(c.fuzzifier > 1.0)) v.emplace_back("fuzzifier must exceed 1");
  if (c.gamma_factors.empty()) v.emplace_back("at least one gamma factor is required");
  for (const double f : c.gamma_factors) {
    if (!(f > 0.0)) {
      v.emplace_back("gamma factors must be positive");
      break;
    }
  }
  if (c.variance_components < 0) v.emplace_back("variance components must be >= 0 (0 means equal to p)");
  if (c.threads < 1) v.emplace_back("threads must be at least 1");
  if (c.kmeans_restarts < 1 || c.fcm_restarts < 1) v.emplace_back("restarts must be at least 1");
  if (c.kmeans_max_iter < 1 || c.fcm_max_iter < 1 || c.max_sweeps < 1) v.emplace_back("iteration limits must be at least 1");
  if (!(c.kmeans_tol > 0.0 && c.fcm_tol > 0.0 && c.sweep_tol > 0.0)) v.emplace_back("tolerances must be positive");
  if (!(c.ridge_scale >= 0.0)) v.emplace_back("ridge scale must be non-negative");
  if (!(c.pair_epsilon >= 0.0)) v.emplace_back("pair epsilon must be non-negative");
  if (c.stability_runs < 2) v.emplace_back("stability runs must be at least 2");
  if (samples) {
    const auto n = static_cast<long long>(*samples);
    if (c.neighbors >= n) v.emplace_back("k must be < N (k=" + std::to_string(c.neighbors) + ", N=" + std::to_string(n) + ")");
    if (c.dimensions >= n) v.emplace_back("p must be < N (p=" + std::to_string(c.dimensions) + ", N=" + std::to_string(n) + ")");
    if (c.c_max > n) v.emplace_back("C must be <= N (C=" + std::to_string(c.c_max) + ", N=" + std::to_string(n) + ")");
  }
  if (min_feature_count && c.c_max >= c.c_min) {
    const auto needed = static_cast<std::size_t>(std::max(c.feature_clusters_for(c.c_max), 1));
    if (needed > *min_feature_count) {
      v.emplace_back("feature clusters per view (" + std::to_string(needed) + ") exceed the smallest view's " +
                     std::to_string(*min_feature_count) + " features");
    }
  }
  return v;
}

PreparedDataset prepare_dataset(const PipelineConfig& config) {
  LoadResult loaded = load_views(config.views, LoadOptions{config.delimiter});
  PreparedDataset out;
  out.dropped = std::move(loaded.dropped);
  out.dataset.sample_ids = std::move(loaded.dataset.sample_ids);
  for (auto& view : loaded.dataset.views) {
    out.raw_features.push_back(view.features());
    out.dataset.views.push_back(variance_filter(view, config.variance_fraction));
  }
  out.dataset.validate();
  return out;
}

std::uint64_t run_seed(std::uint64_t master, int clusters) {
  return derive_seed(master, "run", static_cast<std::uint64_t>(clusters));
}

std::uint64_t stability_seed(std::uint64_t master, int clusters, std::size_t index) {
  return derive_seed(master, "stability", static_cast<std::uint64_t>(clusters), index);
}

ModelResult fit_model(const MultiViewDataset& dataset, const PipelineConfig& config, int clusters,
                      std::uint64_t seed, bool with_report, std::string* stage) {
  std::string local_stage;
  std::string& current = stage ? *stage : local_stage;
  ModelResult result;
  result.clusters = clusters;
  result.seed = seed;
  try {
    current = "feature_cluster";
    const int feature_clusters = config.feature_clusters_for(clusters);
    for (std::size_t v = 0; v < dataset.views.size(); ++v) {
      KMeansOptions km;
      km.clusters = feature_clusters;
      km.seed = derive_seed(seed, "features", v);
      km.restarts = config.kmeans_restarts;
      km.max_iter = config.kmeans_max_iter;
      km.tol = config.kmeans_tol;
      result.feature_clusterings.push_back(kmeans_features(dataset.views[v], km, config.standardize_features));
    }

    current = "kernel";
    for (std::size_t v = 0; v < dataset.views.size(); ++v) {
      const View& view = dataset.views[v];
      const auto& fc = result.feature_clusterings[v];
      for (int f = 0; f < fc.clusters(); ++f) {
        const auto columns = fc.members(f);
        Eigen::MatrixXd sub(view.matrix.rows(), static_cast<Eigen::Index>(columns.size()));
        for (std::size_t j = 0; j < columns.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = view.matrix.col(columns[j]);
        KernelSelection sel = select_kernel(sub, config.gamma_factors, config.selection_components());
        sel.kernel.provenance.view_name = view.name;
        sel.kernel.provenance.feature_cluster = f;
        result.kernels.kernels.push_back(sel.kernel);
        result.selections.push_back(std::move(sel));
      }
    }

    current = "mkl_lpp";
    result.graph = build_graph(result.kernels, config.neighbors);
    MklLppOptions mo;
    mo.dimensions = config.dimensions;
    mo.max_sweeps = config.max_sweeps;
    mo.tol = config.sweep_tol;
    mo.ridge_scale = config.ridge_scale;
    result.projection = optimize(result.kernels, result.graph, mo);

    current = "fcm";
    FcmOptions fo;
    fo.clusters = clusters;
    fo.fuzzifier = config.fuzzifier;
    fo.seed = derive_seed(seed, "fcm");
    fo.restarts = config.fcm_restarts;
    fo.max_iter = config.fcm_max_iter;
    fo.tol = config.fcm_tol;
    result.fcm = fuzzy_cmeans(result.projection.embedding, fo);
    result.modal = modal_assignment(result.fcm.memberships);
    result.low_confidence = low_confidence_mask(result.modal.probabilities);

    if (with_report) {
      current = "fippa";
      result.report = compute_report(result.kernels, result.projection.beta, result.fcm.memberships,
                                     config.pair_epsilon);
      result.feature_lists = build_feature_lists(dataset, result.feature_clusterings, result.kernels,
                                                 result.report, result.modal.labels);
    }
  } catch (...) {
    rethrow_in_stage(current, clusters);
  }
  return result;
}

int PipelineSummary::exit_code() const {
  for (const auto& r : runs) {
    if (!r.ok) return r.exit_code;
  }
  return 0;
}

PipelineSummary run_pipeline(const PipelineConfig& config) {
  require_valid(validate_config(config));
  PreparedDataset prepared = prepare_dataset(config);
  const MultiViewDataset& dataset = prepared.dataset;
  require_valid(validate_config(config, dataset.samples(), min_features(dataset)));

  std::optional<SurvivalData> survival;
  if (config.survival) survival = load_survival(*config.survival, LoadOptions{config.delimiter});

  std::vector<int> cluster_counts;
  for (int c = config.c_min; c <= config.c_max; ++c) cluster_counts.push_back(c);
  std::vector<RunArtifacts> artifacts(cluster_counts.size());

  parallel_for(cluster_counts.size(), config.threads, [&](std::size_t idx) {
    RunArtifacts& out = artifacts[idx];
    const int clusters = cluster_counts[idx];
    out.status.clusters = clusters;
    out.status.seed = run_seed(config.seed, clusters);
    try {
      ModelResult model = fit_model(dataset, config, clusters, out.status.seed, true, &out.status.stage);
      const auto add = [&](const std::string& name, std::string content) {
        out.files.emplace_back(name, std::move(content));
        return out.files.back().second;
      };
      const auto clusters_tsv = add("feature_clusters.tsv", io::feature_clusters_tsv(dataset, model.feature_clusterings));
      const auto embedding = add("embedding.tsv", io::embedding_tsv(dataset.sample_ids, model.projection.embedding));
      const auto model_doc = add("model.json", io::model_json(model.projection, model.kernels, model.selections));
      const auto members = add("memberships.tsv", io::memberships_tsv(dataset.sample_ids, model.fcm.memberships));
      const auto fippa = add("fippa.json", io::fippa_json(model.report, model.kernels, model.projection.beta,
                                                          model.feature_lists));
      add("fippa_bars.tsv", io::fippa_bars_tsv(model.report, model.kernels));
      add("feature_lists.tsv", io::feature_lists_tsv(model.feature_lists));
      out.stages = Json{{"feature_clustering", io::checksum(clusters_tsv)},
                        {"kernels", io::checksum(kernel_bytes(model.kernels))},
                        {"projection", io::checksum(embedding + model_doc)},
                        {"fcm", io::checksum(members)},
                        {"fippa", io::checksum(fippa)}};
      out.labels = model.modal.labels;
      if (config.dump_kernels) out.model = std::move(model);
      out.status.ok = true;
    } catch (...) {
      const auto error = std::current_exception();
      out.status.ok = false;
      out.status.error = message_of(error);
      out.status.exit_code = exit_code_of(error);
    }
  });

  // Single writer from here on.
  PipelineSummary summary;
  summary.dropped = prepared.dropped;
  Json runs = Json::array();
  std::vector<std::pair<int, std::vector<int>>> labelings;
  for (auto& a : artifacts) {
    const auto dir = config.output / cluster_dir(a.status.clusters);
    std::filesystem::create_directories(dir);
    std::filesystem::remove(dir / "FAILED");
    Json run{{"C", a.status.clusters}, {"seed", a.status.seed}, {"status", a.status.ok ? "ok" : "failed"}};
    if (a.status.ok) {
      if (survival) {
        try {
          a.files.emplace_back("kaplan_meier.tsv",
                               io::kaplan_meier_tsv(group_curves(*survival, dataset.sample_ids, a.labels)));
        } catch (const Error&) {
          // A cluster count without survival overlap simply has no curve file.
        }
      }
      Json files = Json::object();
      for (const auto& [name, content] : a.files) {
        io::write_file(dir / name, content);
        files[name] = io::checksum(content);
      }
      if (a.model) io::write_kernels(dir / "kernels", a.model->kernels, a.model->projection.beta, dataset.sample_ids);
      run["stages"] = a.stages;
      run["files"] = std::move(files);
      labelings.emplace_back(a.status.clusters, a.labels);
    } else {
      run["stage"] = a.status.stage;
      run["error"] = a.status.error;
      io::write_file(dir / "FAILED", "stage: " + a.status.stage + "\nerror: " + a.status.error + "\n");
    }
    runs.push_back(std::move(run));
    summary.runs.push_back(a.status);
  }

  Json manifest;
  manifest["tool"] = "imkc";
  manifest["version"] = version();
  manifest["method"] = kMethod;
  manifest["config"] = config_json(config);
  Json inputs = Json::array();
  for (const auto& path : config.views) inputs.push_back(Json{{"path", path.string()}, {"checksum", io::checksum_file(path)}});
  if (config.survival) {
    inputs.push_back(Json{{"path", config.survival->string()}, {"checksum", io::checksum_file(*config.survival)}});
  }
  manifest["inputs"] = std::move(inputs);
  manifest["samples"] = dataset.samples();
  Json dropped = Json::array();
  for (const auto& d : prepared.dropped) dropped.push_back(Json{{"sample_id", d.sample_id}, {"missing_from", d.missing_from}});
  manifest["dropped_samples"] = std::move(dropped);
  Json views = Json::array();
  for (std::size_t v = 0; v < dataset.views.size(); ++v) {
    views.push_back(Json{{"name", dataset.views[v].name},
                         {"features_before_filter", prepared.raw_features[v]},
                         {"features_after_filter", dataset.views[v].features()}});
  }
  manifest["views"] = std::move(views);
  manifest["runs"] = std::move(runs);

  if (survival && !labelings.empty()) {
    try {
      summary.survival = survival_table(*survival, dataset.sample_ids, labelings);
      const auto table = io::survival_tsv(summary.survival, kMethod);
      io::write_file(config.output / "survival.tsv", table);
      manifest["survival"] = Json{{"file", "survival.tsv"}, {"checksum", io::checksum(table)}};
    } catch (const Error& e) {
      manifest["survival"] = Json{{"error", e.what()}};
      summary.runs.push_back(RunStatus{0, 0, false, "survival", e.what(), 3});
    }
  }
  io::write_file(config.output / "manifest.json", manifest.dump(2) + "\n");
  return summary;
}

std::vector<std::pair<int, StabilityReport>> run_stability(const PipelineConfig& config) {
  require_valid(validate_config(config));
  const PreparedDataset prepared = prepare_dataset(config);
  const MultiViewDataset& dataset = prepared.dataset;
  require_valid(validate_config(config, dataset.samples(), min_features(dataset)));

  std::vector<std::pair<int, StabilityReport>> out;
  for (int clusters = config.c_min; clusters <= config.c_max; ++clusters) {
    std::vector<std::uint64_t> seeds;
    for (int r = 0; r < config.stability_runs; ++r) {
      seeds.push_back(stability_seed(config.seed, clusters, static_cast<std::size_t>(r)));
    }
    StabilityReport report = stability_protocol(
        seeds,
        [&](std::uint64_t seed) {
          const ModelResult model = fit_model(dataset, config, clusters, seed, false);
          return RunOutcome{model.modal.labels, model.low_confidence};
        },
        config.threads);
    const auto dir = config.output / cluster_dir(clusters);
    io::write_file(dir / "stability.json", io::stability_json(report, clusters));
    io::write_file(dir / "stability.tsv", io::stability_tsv(report));
    out.emplace_back(clusters, std::move(report));
  }
  return out;
}

std::vector<SurvivalTableRow> run_survival(const std::filesystem::path& run_dir,
                                           const std::filesystem::path& survival_path, char delimiter) {
  const SurvivalData survival = load_survival(survival_path, LoadOptions{delimiter});
  std::map<int, std::filesystem::path> found;
  if (!std::filesystem::is_directory(run_dir)) throw DataError("'" + run_dir.string() + "' is not a directory");
  for (const auto& entry : std::filesystem::directory_iterator(run_dir)) {
    const auto name = entry.path().filename().string();
    if (!entry.is_directory() || name.size() < 2 || name[0] != 'C') continue;
    if (!std::all_of(name.begin() + 1, name.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) continue;
    const auto table = entry.path() / "memberships.tsv";
    if (std::filesystem::exists(table)) found[std::stoi(name.substr(1))] = table;
  }
  if (found.empty()) throw DataError("no C<k>/memberships.tsv tables under '" + run_dir.string() + "'");

  std::vector<std::string> sample_ids;
  std::vector<std::pair<int, std::vector<int>>> labelings;
  for (const auto& [clusters, path] : found) {
    const auto table = io::read_memberships(path);
    if (sample_ids.empty()) sample_ids = table.sample_ids;
    if (table.sample_ids != sample_ids) throw DataError("membership tables disagree on sample order");
    labelings.emplace_back(clusters, modal_assignment(table.memberships).labels);
  }
  auto rows = survival_table(survival, sample_ids, labelings);
  io::write_file(run_dir / "survival.tsv", io::survival_tsv(rows, kMethod));
  return rows;
}

FippaReport recompute_fippa(const std::filesystem::path& kernel_dir, const std::filesystem::path& memberships,
                            const std::filesystem::path& output, double epsilon) {
  const io::KernelDump dump = io::read_kernels(kernel_dir);
  const io::MembershipTable table = io::read_memberships(memberships);
  std::map<std::string, Eigen::Index> row_of;
  for (std::size_t i = 0; i < table.sample_ids.size(); ++i) row_of[table.sample_ids[i]] = static_cast<Eigen::Index>(i);
  Eigen::MatrixXd aligned(static_cast<Eigen::Index>(dump.sample_ids.size()), table.memberships.cols());
  for (std::size_t i = 0; i < dump.sample_ids.size(); ++i) {
    const auto it = row_of.find(dump.sample_ids[i]);
    if (it == row_of.end()) throw DataError("sample '" + dump.sample_ids[i] + "' has no membership row");
    aligned.row(static_cast<Eigen::Index>(i)) = table.memberships.row(it->second);
  }
  FippaReport report = compute_report(dump.kernels, dump.beta, aligned, epsilon);
  io::write_file(output / "fippa.json", io::fippa_json(report, dump.kernels, dump.beta, {}));
  io::write_file(output / "fippa_bars.tsv", io::fippa_bars_tsv(report, dump.kernels));
  return report;
}

}  // namespace imkc
