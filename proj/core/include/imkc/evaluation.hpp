#pragma once

#include "imkc/dataset.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace imkc {

/// Fraction of unordered sample pairs on which two labelings agree.
double rand_index(std::span<const int> a, std::span<const int> b);

struct LogrankResult {
  double chi_square = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
  std::size_t samples = 0;
  std::size_t events = 0;
};

/// Multi-group log-rank test with pooled risk sets and the hypergeometric
/// variance at tied event times. Degrees of freedom = groups - 1.
LogrankResult logrank_test(std::span<const double> times, const std::vector<bool>& events,
                           std::span<const int> groups);

/// Same test on the samples of `sample_ids` that have survival follow-up.
LogrankResult logrank_test(const SurvivalData& survival, const std::vector<std::string>& sample_ids,
                           std::span<const int> groups);

/// One row of the survival table: the log-rank test at one cluster count and
/// its Benjamini-Hochberg adjustment across all tested counts.
struct SurvivalTableRow {
  int clusters = 0;
  LogrankResult test;
  double adjusted_p = 1.0;
};

/// Log-rank test per labeling, then BH across exactly those labelings.
std::vector<SurvivalTableRow> survival_table(const SurvivalData& survival,
                                             const std::vector<std::string>& sample_ids,
                                             const std::vector<std::pair<int, std::vector<int>>>& labelings);

/// Upper tail of the chi-square distribution.
double chi_square_upper_tail(double statistic, int degrees_of_freedom);

/// Benjamini-Hochberg step-up adjustment, returned in input order.
std::vector<double> bh_adjust(std::span<const double> p_values);

struct KaplanMeierStep {
  double time = 0.0;
  std::size_t at_risk = 0;
  std::size_t events = 0;
  std::size_t censored = 0;
  double survival = 1.0;
};

/// Product-limit estimate, one step per distinct observed time.
std::vector<KaplanMeierStep> kaplan_meier(std::span<const double> times, const std::vector<bool>& events);

/// What one stability run contributes: modal labels and the low-confidence flags.
struct RunOutcome {
  std::vector<int> labels;
  std::vector<bool> low_confidence;
};

struct StabilityReport {
  std::vector<std::uint64_t> seeds;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  ///< run indices, a < b
  std::vector<double> rand_all;
  std::vector<double> rand_confident;  ///< after removing the union of flagged samples
  std::vector<std::size_t> excluded;   ///< samples removed per pair

  double median_all() const;
  double median_confident() const;
};

double median(std::vector<double> values);

/// Executes `run` once per seed and compares every pair of runs.
/// Errors raised by a run are rethrown with the failing seed in the message.
StabilityReport stability_protocol(std::span<const std::uint64_t> seeds,
                                   const std::function<RunOutcome(std::uint64_t)>& run, int threads = 1);

}  // namespace imkc
