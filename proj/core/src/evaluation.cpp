#include "imkc/evaluation.hpp"

#include "imkc/error.hpp"
#include "imkc/parallel.hpp"

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

namespace imkc {

double rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw DataError("labelings have different lengths");
  const auto n = a.size();
  if (n < 2) throw DataError("Rand index needs at least two samples");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if ((a[i] == a[j]) == (b[i] == b[j])) ++agree;
    }
  }
  return static_cast<double>(agree) / static_cast<double>(n * (n - 1) / 2);
}

double chi_square_upper_tail(double statistic, int degrees_of_freedom) {
  if (degrees_of_freedom < 1) throw DataError("chi-square needs positive degrees of freedom");
  if (!(statistic > 0.0)) return 1.0;
  return boost::math::gamma_q(0.5 * degrees_of_freedom, 0.5 * statistic);
}

LogrankResult logrank_test(std::span<const double> times, const std::vector<bool>& events,
                           std::span<const int> groups) {
  const auto n = times.size();
  if (events.size() != n || groups.size() != n) throw DataError("survival inputs have different lengths");

  std::map<int, Eigen::Index> group_index;
  for (const int g : groups) group_index.emplace(g, 0);
  Eigen::Index next = 0;
  for (auto& [label, idx] : group_index) idx = next++;
  const auto k = static_cast<Eigen::Index>(group_index.size());
  if (k < 2) throw DataError("log-rank test needs at least two groups");

  LogrankResult result;
  result.samples = n;
  result.events = static_cast<std::size_t>(std::count(events.begin(), events.end(), true));
  if (result.events == 0) throw DataError("log-rank test needs at least one event");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return times[x] < times[y]; });

  Eigen::VectorXd at_risk = Eigen::VectorXd::Zero(k);
  for (const int g : groups) at_risk(group_index[g]) += 1.0;

  Eigen::VectorXd observed = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd variance = Eigen::MatrixXd::Zero(k, k);

  std::size_t pos = 0;
  while (pos < n) {
    const double t = times[order[pos]];
    Eigen::VectorXd deaths = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd leaving = Eigen::VectorXd::Zero(k);
    std::size_t end = pos;
    while (end < n && times[order[end]] == t) {
      const auto g = group_index[groups[order[end]]];
      leaving(g) += 1.0;
      if (events[order[end]]) deaths(g) += 1.0;
      ++end;
    }
    const double d = deaths.sum();
    const double total = at_risk.sum();
    if (d > 0.0) {
      const Eigen::VectorXd share = at_risk / total;
      observed += deaths;
      expected += d * share;
      if (total > 1.0) {
        const double factor = d * (total - d) / (total - 1.0);
        variance.diagonal() += factor * share;
        variance.noalias() -= factor * share * share.transpose();
      }
    }
    at_risk -= leaving;
    pos = end;
  }

  const Eigen::VectorXd diff = (observed - expected).head(k - 1);
  const Eigen::MatrixXd v = variance.topLeftCorner(k - 1, k - 1);
  const Eigen::MatrixXd v_inv = v.completeOrthogonalDecomposition().pseudoInverse();
  result.chi_square = std::max(0.0, diff.dot(v_inv * diff));
  result.degrees_of_freedom = static_cast<int>(k - 1);
  result.p_value = chi_square_upper_tail(result.chi_square, result.degrees_of_freedom);
  return result;
}

LogrankResult logrank_test(const SurvivalData& survival, const std::vector<std::string>& sample_ids,
                           std::span<const int> groups) {
  if (sample_ids.size() != groups.size()) throw DataError("sample ID and label counts differ");
  std::unordered_map<std::string, std::size_t> lookup;
  for (std::size_t i = 0; i < survival.sample_ids.size(); ++i) lookup[survival.sample_ids[i]] = i;
  std::vector<double> times;
  std::vector<bool> events;
  std::vector<int> labels;
  for (std::size_t i = 0; i < sample_ids.size(); ++i) {
    const auto it = lookup.find(sample_ids[i]);
    if (it == lookup.end()) continue;
    times.push_back(survival.records[it->second].time_days);
    events.push_back(survival.records[it->second].event);
    labels.push_back(groups[i]);
  }
  return logrank_test(times, events, labels);
}

std::vector<SurvivalTableRow> survival_table(const SurvivalData& survival,
                                             const std::vector<std::string>& sample_ids,
                                             const std::vector<std::pair<int, std::vector<int>>>& labelings) {
  std::vector<SurvivalTableRow> rows;
  std::vector<double> raw;
  for (const auto& [clusters, labels] : labelings) {
    SurvivalTableRow row;
    row.clusters = clusters;
    row.test = logrank_test(survival, sample_ids, labels);
    raw.push_back(row.test.p_value);
    rows.push_back(row);
  }
  const auto adjusted = bh_adjust(raw);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].adjusted_p = adjusted[i];
  return rows;
}

std::vector<double> bh_adjust(std::span<const double> p_values) {
  const auto n = p_values.size();
  for (const double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("p-values must lie in [0, 1]");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::vector<double> adjusted(n);
  double running = 1.0;
  for (std::size_t r = n; r-- > 0;) {
    const auto i = order[r];
    running = std::min(running, p_values[i] * (static_cast<double>(n) / static_cast<double>(r + 1)));
    adjusted[i] = running;
  }
  return adjusted;
}

std::vector<KaplanMeierStep> kaplan_meier(std::span<const double> times, const std::vector<bool>& events) {
  const auto n = times.size();
  if (events.size() != n) throw DataError("survival inputs have different lengths");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

  std::vector<KaplanMeierStep> steps;
  std::size_t at_risk = n;
  double survival = 1.0;
  std::size_t pos = 0;
  while (pos < n) {
    KaplanMeierStep step;
    step.time = times[order[pos]];
    step.at_risk = at_risk;
    while (pos < n && times[order[pos]] == step.time) {
      if (events[order[pos]]) ++step.events;
      else ++step.censored;
      ++pos;
    }
    survival *= 1.0 - static_cast<double>(step.events) / static_cast<double>(at_risk);
    step.survival = survival;
    at_risk -= step.events + step.censored;
    steps.push_back(step);
  }
  return steps;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

double StabilityReport::median_all() const { return median(rand_all); }
double StabilityReport::median_confident() const { return median(rand_confident); }

StabilityReport stability_protocol(std::span<const std::uint64_t> seeds,
                                   const std::function<RunOutcome(std::uint64_t)>& run, int threads) {
  if (seeds.size() < 2) throw ConfigError("stability protocol needs at least two runs");
  std::vector<RunOutcome> outcomes(seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t r) {
    const auto tag = "run with seed " + std::to_string(seeds[r]) + ": ";
    try {
      outcomes[r] = run(seeds[r]);
    } catch (const ConfigError& e) {
      throw ConfigError(tag + e.what());
    } catch (const DataError& e) {
      throw DataError(tag + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError(tag + e.what());
    }
  });

  for (auto& outcome : outcomes) {
    if (outcome.labels.size() != outcomes.front().labels.size()) {
      throw DataError("stability runs returned labelings of different lengths");
    }
    if (outcome.low_confidence.empty()) outcome.low_confidence.assign(outcome.labels.size(), false);
    if (outcome.low_confidence.size() != outcome.labels.size()) {
      throw DataError("low-confidence mask length does not match the labeling");
    }
  }

  StabilityReport report;
  report.seeds.assign(seeds.begin(), seeds.end());
  for (std::size_t a = 0; a < outcomes.size(); ++a) {
    for (std::size_t b = a + 1; b < outcomes.size(); ++b) {
      const auto& x = outcomes[a];
      const auto& y = outcomes[b];
      report.pairs.emplace_back(a, b);
      report.rand_all.push_back(rand_index(x.labels, y.labels));
      std::vector<int> kx, ky;
      for (std::size_t i = 0; i < x.labels.size(); ++i) {
        if (x.low_confidence[i] || y.low_confidence[i]) continue;
        kx.push_back(x.labels[i]);
        ky.push_back(y.labels[i]);
      }
      report.excluded.push_back(x.labels.size() - kx.size());
      // Fewer than two confident samples leave no pair to disagree on.
      report.rand_confident.push_back(kx.size() < 2 ? 1.0 : rand_index(kx, ky));
    }
  }
  return report;
}

}  // namespace imkc
