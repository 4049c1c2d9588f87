#include "imkc/dataset.hpp"

#include "imkc/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace imkc {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    const auto cell = std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos
                                                                                      : pos - start);
    cells.emplace_back(trim(cell));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return cells;
}

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read file '" + path.string() + "'");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split(line, delimiter));
  }
  return rows;
}

double parse_cell(const std::string& cell, const std::filesystem::path& path, std::size_t row,
                  std::size_t col) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last) {
    throw DataError("non-numeric cell '" + cell + "' in '" + path.string() + "' at row " +
                    std::to_string(row + 1) + ", column " + std::to_string(col + 1));
  }
  if (!std::isfinite(value)) {
    throw DataError("non-finite cell '" + cell + "' in '" + path.string() + "' at row " +
                    std::to_string(row + 1) + ", column " + std::to_string(col + 1));
  }
  return value;
}

void require_unique(const std::vector<std::string>& ids, const std::string& what,
                    const std::string& where) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      throw DataError("duplicate " + what + " ID '" + id + "' in " + where);
    }
  }
}

}  // namespace

void MultiViewDataset::validate() const {
  if (sample_ids.size() < 2) throw DataError("dataset needs at least two samples");
  if (views.empty()) throw DataError("dataset has no views");
  require_unique(sample_ids, "sample", "dataset");
  for (const auto& view : views) {
    if (view.samples() != sample_ids.size()) {
      throw DataError("view '" + view.name + "' has " + std::to_string(view.samples()) +
                      " rows, expected " + std::to_string(sample_ids.size()));
    }
    if (view.features() == 0) throw DataError("view '" + view.name + "' has no features");
    if (view.feature_ids.size() != view.features()) {
      throw DataError("view '" + view.name + "' feature ID count does not match its columns");
    }
    require_unique(view.feature_ids, "feature", "view '" + view.name + "'");
    if (!view.matrix.allFinite()) throw DataError("view '" + view.name + "' has non-finite entries");
  }
}

std::optional<SurvivalRecord> SurvivalData::find(const std::string& sample_id) const {
  const auto it = std::find(sample_ids.begin(), sample_ids.end(), sample_id);
  if (it == sample_ids.end()) return std::nullopt;
  return records[static_cast<std::size_t>(it - sample_ids.begin())];
}

std::pair<std::vector<std::string>, View> read_labeled_view(const std::filesystem::path& path,
                                                            const LoadOptions& options) {
  const auto rows = read_rows(path, options.delimiter);
  if (rows.size() < 2) throw DataError("file '" + path.string() + "' has no data rows");
  const auto& header = rows.front();
  if (header.size() < 2) throw DataError("file '" + path.string() + "' has no feature columns");

  View view;
  view.name = path.stem().string();
  view.feature_ids.assign(header.begin() + 1, header.end());
  require_unique(view.feature_ids, "feature", "'" + path.string() + "'");

  const auto n = rows.size() - 1;
  const auto d = view.feature_ids.size();
  view.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<std::string> sample_ids;
  sample_ids.reserve(n);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != d + 1) {
      throw DataError("row " + std::to_string(r + 1) + " of '" + path.string() + "' has " +
                      std::to_string(row.size()) + " cells, expected " + std::to_string(d + 1));
    }
    sample_ids.push_back(row[0]);
    for (std::size_t c = 0; c < d; ++c) {
      view.matrix(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) =
          parse_cell(row[c + 1], path, r, c + 1);
    }
  }
  require_unique(sample_ids, "sample", "'" + path.string() + "'");
  return {std::move(sample_ids), std::move(view)};
}

View read_view(const std::filesystem::path& path, const LoadOptions& options) {
  return read_labeled_view(path, options).second;
}

LoadResult align_views(std::vector<std::pair<std::vector<std::string>, View>> views) {
  if (views.empty()) throw DataError("no views given");
  std::vector<std::unordered_map<std::string, Eigen::Index>> index(views.size());
  for (std::size_t v = 0; v < views.size(); ++v) {
    const auto& [ids, view] = views[v];
    if (ids.size() != view.samples()) {
      throw DataError("view '" + view.name + "' has mismatched sample ID count");
    }
    require_unique(ids, "sample", "view '" + view.name + "'");
    for (std::size_t i = 0; i < ids.size(); ++i) index[v][ids[i]] = static_cast<Eigen::Index>(i);
  }

  LoadResult result;
  std::vector<std::string> kept;
  for (const auto& id : views.front().first) {
    bool everywhere = true;
    for (std::size_t v = 1; v < views.size() && everywhere; ++v) {
      if (!index[v].contains(id)) {
        result.dropped.push_back({id, views[v].second.name});
        everywhere = false;
      }
    }
    if (everywhere) kept.push_back(id);
  }
  // Samples present in later views but absent from the first are dropped too.
  std::unordered_set<std::string> first(views.front().first.begin(), views.front().first.end());
  std::unordered_set<std::string> reported;
  for (std::size_t v = 1; v < views.size(); ++v) {
    for (const auto& id : views[v].first) {
      if (!first.contains(id) && reported.insert(id).second) {
        result.dropped.push_back({id, views.front().second.name});
      }
    }
  }
  if (kept.empty()) throw DataError("views share no sample IDs");

  result.dataset.sample_ids = kept;
  for (std::size_t v = 0; v < views.size(); ++v) {
    const auto& source = views[v].second;
    View aligned;
    aligned.name = source.name;
    aligned.feature_ids = source.feature_ids;
    aligned.matrix.resize(static_cast<Eigen::Index>(kept.size()), source.matrix.cols());
    for (std::size_t i = 0; i < kept.size(); ++i) {
      aligned.matrix.row(static_cast<Eigen::Index>(i)) = source.matrix.row(index[v].at(kept[i]));
    }
    result.dataset.views.push_back(std::move(aligned));
  }
  result.dataset.validate();
  return result;
}

LoadResult load_views(const std::vector<std::filesystem::path>& paths, const LoadOptions& options) {
  if (paths.empty()) throw DataError("no view files given");
  std::vector<std::pair<std::vector<std::string>, View>> views;
  views.reserve(paths.size());
  std::unordered_set<std::string> names;
  for (const auto& path : paths) {
    auto loaded = read_labeled_view(path, options);
    if (!names.insert(loaded.second.name).second) {
      throw DataError("two view files share the name '" + loaded.second.name + "'");
    }
    views.push_back(std::move(loaded));
  }
  return align_views(std::move(views));
}

View variance_filter(const View& view, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("variance filter fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  const auto d = view.features();
  const auto keep = std::min<std::size_t>(
      d, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(d) - 1e-9)));

  const Eigen::RowVectorXd mean = view.matrix.colwise().mean();
  const Eigen::RowVectorXd variance =
      (view.matrix.rowwise() - mean).array().square().colwise().mean();

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return variance(static_cast<Eigen::Index>(a)) > variance(static_cast<Eigen::Index>(b));
  });
  order.resize(std::max<std::size_t>(keep, 1));
  std::sort(order.begin(), order.end());

  View out;
  out.name = view.name;
  out.matrix.resize(view.matrix.rows(), static_cast<Eigen::Index>(order.size()));
  for (std::size_t c = 0; c < order.size(); ++c) {
    out.feature_ids.push_back(view.feature_ids[order[c]]);
    out.matrix.col(static_cast<Eigen::Index>(c)) = view.matrix.col(static_cast<Eigen::Index>(order[c]));
  }
  return out;
}

SurvivalData load_survival(const std::filesystem::path& path, const LoadOptions& options) {
  const auto rows = read_rows(path, options.delimiter);
  if (rows.empty()) throw DataError("survival file '" + path.string() + "' is empty");
  SurvivalData data;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() < 3) {
      throw DataError("survival file '" + path.string() + "' row " + std::to_string(r + 1) +
                      " needs sample_id, time_days, event");
    }
    const double time = parse_cell(row[1], path, r, 1);
    const double event = parse_cell(row[2], path, r, 2);
    if (time < 0.0) {
      throw DataError("negative survival time in '" + path.string() + "' row " + std::to_string(r + 1));
    }
    if (event != 0.0 && event != 1.0) {
      throw DataError("event must be 0 or 1 in '" + path.string() + "' row " + std::to_string(r + 1));
    }
    data.sample_ids.push_back(row[0]);
    data.records.push_back({time, event == 1.0});
  }
  require_unique(data.sample_ids, "sample", "'" + path.string() + "'");
  return data;
}

}  // namespace imkc
