// imkc: integrative multi-view clustering with feature-cluster kernels.
#include "imkc/error.hpp"
#include "imkc/io.hpp"
#include "imkc/pipeline.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>
#include <stdexcept>

namespace {

constexpr int kConfigExit = 2;
constexpr int kDataExit = 3;
constexpr int kNumericalExit = 4;

char parse_delimiter(const std::string& text) {
  if (text == "tab" || text == "\\t") return '\t';
  if (text == "comma") return ',';
  if (text.size() == 1) return text[0];
  throw imkc::ConfigError("delimiter must be a single character, 'tab' or 'comma'");
}

void add_pipeline_options(CLI::App& app, imkc::PipelineConfig& c, std::string& delimiter) {
  app.add_option("--view", c.views, "Sample x feature table, one per view (repeatable)")->check(CLI::ExistingFile);
  app.add_option("--survival", c.survival, "Survival table: sample_id, time_days, event")->check(CLI::ExistingFile);
  app.add_option("--out", c.output, "Output directory")->capture_default_str();
  app.add_option("--delimiter", delimiter, "Column delimiter: tab, comma or a single character")->capture_default_str();

  app.add_option("--variance-fraction", c.variance_fraction, "Fraction of most variable features kept per view")
      ->capture_default_str();
  app.add_option("--c-min", c.c_min, "Smallest sample cluster count")->capture_default_str();
  app.add_option("--c-max", c.c_max, "Largest sample cluster count")->capture_default_str();
  app.add_option("--feature-clusters", c.feature_clusters, "Feature clusters per view (0: same as C)")
      ->capture_default_str();
  app.add_option("-k,--neighbors", c.neighbors, "Nearest neighbours in the locality graph")->capture_default_str();
  app.add_option("-p,--dimensions", c.dimensions, "Embedding dimensions")->capture_default_str();
  app.add_option("--fuzzifier", c.fuzzifier, "Fuzzy c-means fuzzifier")->capture_default_str();
  app.add_option("--gamma-factors", c.gamma_factors, "Multipliers of the rule-of-thumb kernel width")
      ->capture_default_str();
  app.add_option("--variance-components", c.variance_components, "Components for kernel width selection (0: p)")
      ->capture_default_str();

  app.add_option("--seed", c.seed, "Master seed")->capture_default_str();
  app.add_option("--threads", c.threads, "Worker threads")->capture_default_str();

  app.add_option("--kmeans-restarts", c.kmeans_restarts)->capture_default_str();
  app.add_option("--kmeans-max-iter", c.kmeans_max_iter)->capture_default_str();
  app.add_option("--kmeans-tol", c.kmeans_tol)->capture_default_str();
  app.add_flag("--standardize-features", c.standardize_features, "z-score features before feature clustering");
  app.add_option("--fcm-restarts", c.fcm_restarts)->capture_default_str();
  app.add_option("--fcm-max-iter", c.fcm_max_iter)->capture_default_str();
  app.add_option("--fcm-tol", c.fcm_tol)->capture_default_str();
  app.add_option("--max-sweeps", c.max_sweeps, "Alternating optimization sweeps")->capture_default_str();
  app.add_option("--sweep-tol", c.sweep_tol, "Relative objective change that stops the sweeps")
      ->capture_default_str();
  app.add_option("--ridge-scale", c.ridge_scale)->capture_default_str();
  app.add_option("--pair-epsilon", c.pair_epsilon, "Skip pairs whose ensemble entry is below this")
      ->capture_default_str();
  app.add_option("--stability-runs", c.stability_runs)->capture_default_str();
  app.add_flag("--dump-kernels", c.dump_kernels, "Write C<k>/kernels/ for later FIPPA recomputation");
}

void require_views(const imkc::PipelineConfig& config) {
  if (config.views.empty()) throw imkc::ConfigError("at least one --view is required");
}

int report_runs(const imkc::PipelineSummary& summary) {
  for (const auto& run : summary.runs) {
    if (run.clusters == 0) {
      std::cerr << "survival: " << run.error << '\n';
      continue;
    }
    std::cout << "C=" << run.clusters << ' ' << (run.ok ? "ok" : "FAILED");
    if (!run.ok) std::cout << " (" << run.error << ')';
    std::cout << '\n';
  }
  for (const auto& row : summary.survival) {
    std::cout << "survival C=" << row.clusters << " p=" << imkc::io::format_double(row.test.p_value)
              << " adjusted=" << imkc::io::format_double(row.adjusted_p) << '\n';
  }
  if (!summary.dropped.empty()) {
    std::cerr << summary.dropped.size() << " sample(s) dropped: not present in every view\n";
  }
  return summary.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  imkc::PipelineConfig config;
  std::string delimiter = "tab";
  std::filesystem::path kernel_dir;
  std::filesystem::path memberships;

  CLI::App app{"Multi-view sample clustering with feature-cluster kernels and FIPPA explanations"};
  app.set_version_flag("--version", std::string(imkc::version()));
  app.set_config("--config", "", "INI or TOML file with option values");
  app.require_subcommand(1);
  add_pipeline_options(app, config, delimiter);

  auto* run = app.add_subcommand("run", "Fit every cluster count and write per-C outputs plus manifest.json");
  auto* stability = app.add_subcommand("stability", "Repeat the model over many seeds and compare clusterings");
  auto* survival = app.add_subcommand("survival", "Log-rank table for an existing run directory (--out)");
  auto* fippa = app.add_subcommand("fippa", "Recompute FIPPA scores from dumped kernels and memberships");
  fippa->add_option("--kernels", kernel_dir, "Directory written by --dump-kernels")->required()->check(CLI::ExistingDirectory);
  fippa->add_option("--memberships", memberships, "memberships.tsv of the same run")->required()->check(CLI::ExistingFile);
  for (auto* sub : {run, stability, survival, fippa}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    config.delimiter = parse_delimiter(delimiter);
    if (*run) {
      require_views(config);
      return report_runs(imkc::run_pipeline(config));
    }
    if (*stability) {
      require_views(config);
      for (const auto& [clusters, report] : imkc::run_stability(config)) {
        std::cout << "C=" << clusters << " median Rand all=" << imkc::io::format_double(report.median_all())
                  << " confident=" << imkc::io::format_double(report.median_confident()) << '\n';
      }
      return 0;
    }
    if (*survival) {
      if (!config.survival) throw imkc::ConfigError("survival requires --survival");
      for (const auto& row : imkc::run_survival(config.output, *config.survival, config.delimiter)) {
        std::cout << "C=" << row.clusters << " p=" << imkc::io::format_double(row.test.p_value)
                  << " adjusted=" << imkc::io::format_double(row.adjusted_p) << '\n';
      }
      return 0;
    }
    if (*fippa) {
      const auto report = imkc::recompute_fippa(kernel_dir, memberships, config.output, config.pair_epsilon);
      std::cout << "wrote FIPPA scores for " << report.clusters() << " clusters x " << report.kernels()
                << " kernels to " << config.output.string() << '\n';
      return 0;
    }
  } catch (const imkc::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const imkc::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataExit;
  } catch (const imkc::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericalExit;
  }
  return 0;
}
