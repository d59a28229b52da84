#include "irf/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "irf/error.hpp"
#include "irf/random.hpp"

namespace irf {

const char* to_string(Task task) noexcept {
  return task == Task::Classification ? "cls" : "reg";
}

Task parse_task(const std::string& text) {
  if (text == "cls" || text == "classification") return Task::Classification;
  if (text == "reg" || text == "regression") return Task::Regression;
  throw Error(ErrorCode::InvalidConfig, "unknown task '" + text + "' (expected cls or reg)");
}

Dataset::Dataset(std::size_t n_rows, std::size_t n_features, std::vector<double> column_major,
                 std::vector<double> labels, std::vector<int> env_ids, Task task,
                 std::vector<std::string> feature_names)
    : n_features_(n_features),
      values_(std::move(column_major)),
      labels_(std::move(labels)),
      env_ids_(std::move(env_ids)),
      task_(task),
      feature_names_(std::move(feature_names)) {
  if (n_rows == 0) throw Error(ErrorCode::InvalidDataset, "data set has no rows");
  if (n_features_ == 0) throw Error(ErrorCode::EmptyFeatureSet, "data set has no feature columns");
  if (values_.size() != n_rows * n_features_ || labels_.size() != n_rows ||
      env_ids_.size() != n_rows) {
    throw Error(ErrorCode::LengthMismatch, "features, labels and environment ids disagree on row count");
  }
  if (feature_names_.empty()) {
    feature_names_.reserve(n_features_);
    for (std::size_t j = 0; j < n_features_; ++j) feature_names_.push_back("f" + std::to_string(j));
  } else if (feature_names_.size() != n_features_) {
    throw Error(ErrorCode::LengthMismatch, "feature name count differs from feature count");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidDataset, "non-finite feature value");
  }
  for (std::size_t i = 0; i < n_rows; ++i) {
    const double y = labels_[i];
    if (!std::isfinite(y)) {
      throw Error(ErrorCode::InvalidDataset, "non-finite label at row " + std::to_string(i));
    }
    if (task_ == Task::Classification && y != 0.0 && y != 1.0) {
      throw Error(ErrorCode::InvalidLabel, "label at row " + std::to_string(i) + " is not 0 or 1");
    }
  }
  const auto [lo, hi] = std::minmax_element(env_ids_.begin(), env_ids_.end());
  if (*lo < 0) throw Error(ErrorCode::InvalidDataset, "negative environment id");
  n_envs_ = *hi + 1;
  std::vector<bool> seen(static_cast<std::size_t>(n_envs_), false);
  for (int e : env_ids_) seen[static_cast<std::size_t>(e)] = true;
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw Error(ErrorCode::InvalidDataset, "environment ids are not dense in [0, E)");
  }
}

std::vector<double> Dataset::row(std::size_t r) const {
  std::vector<double> out(n_features_);
  for (std::size_t j = 0; j < n_features_; ++j) out[j] = feature(r, j);
  return out;
}

std::vector<std::vector<double>> Dataset::rows() const {
  std::vector<std::vector<double>> out;
  out.reserve(n_rows());
  for (std::size_t i = 0; i < n_rows(); ++i) out.push_back(row(i));
  return out;
}

Dataset Dataset::select(std::span<const std::size_t> rows) const {
  const std::size_t m = rows.size();
  std::vector<double> values(m * n_features_);
  std::vector<double> labels(m);
  std::vector<int> envs(m);
  for (std::size_t j = 0; j < n_features_; ++j) {
    const auto col = column(j);
    for (std::size_t i = 0; i < m; ++i) values[j * m + i] = col[rows[i]];
  }
  for (std::size_t i = 0; i < m; ++i) {
    labels[i] = labels_[rows[i]];
    envs[i] = env_ids_[rows[i]];
  }
  return Dataset(m, n_features_, std::move(values), std::move(labels), std::move(envs), task_,
                 feature_names_);
}

std::vector<std::vector<std::size_t>> partition_by_env(const Dataset& data,
                                                       std::span<const std::size_t> rows) {
  std::vector<std::vector<std::size_t>> groups(static_cast<std::size_t>(data.n_envs()));
  for (std::size_t r : rows) groups[static_cast<std::size_t>(data.env(r))].push_back(r);
  for (auto& g : groups) std::sort(g.begin(), g.end());
  return groups;
}

std::vector<std::vector<std::size_t>> partition_by_env(const Dataset& data) {
  const auto rows = all_rows(data);
  return partition_by_env(data, rows);
}

std::vector<std::size_t> all_rows(const Dataset& data) {
  std::vector<std::size_t> rows(data.n_rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

// CSV ----------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

bool parse_double(std::string_view text, double& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, out);
  return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const std::string& label_col,
                 const std::string& env_col, Task task) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());

  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw Error(ErrorCode::EmptyFile, path.string() + " is empty");

  std::vector<std::string> header;
  for (auto f : split_fields(line)) header.emplace_back(f);
  const auto find_col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::MissingColumn, "no column named '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t label_idx = find_col(label_col);
  const std::size_t env_idx = find_col(env_col);
  if (label_idx == env_idx) {
    throw Error(ErrorCode::InvalidConfig, "label and environment column must differ");
  }

  std::vector<std::size_t> feature_cols;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_idx && c != env_idx) {
      feature_cols.push_back(c);
      names.push_back(header[c]);
    }
  }

  std::vector<std::vector<double>> columns(feature_cols.size());
  std::vector<double> labels;
  std::vector<int> envs;
  std::unordered_map<std::string, int> env_map;

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::NonNumericCell, "row " + std::to_string(row) + " has " +
                                                 std::to_string(fields.size()) + " fields, expected " +
                                                 std::to_string(header.size()));
    }
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      double v = 0.0;
      if (!parse_double(fields[feature_cols[k]], v)) {
        throw Error(ErrorCode::NonNumericCell,
                    "row " + std::to_string(row) + ", column '" + names[k] + "': '" +
                        std::string(fields[feature_cols[k]]) + "'");
      }
      columns[k].push_back(v);
    }
    double y = 0.0;
    if (!parse_double(fields[label_idx], y)) {
      throw Error(ErrorCode::NonNumericCell, "row " + std::to_string(row) + ", column '" +
                                                 label_col + "': '" +
                                                 std::string(fields[label_idx]) + "'");
    }
    if (task == Task::Classification && y != 0.0 && y != 1.0) {
      throw Error(ErrorCode::InvalidLabel,
                  "row " + std::to_string(row) + ": label " + std::string(fields[label_idx]) +
                      " is not 0 or 1");
    }
    labels.push_back(y);
    const std::string env_key(fields[env_idx]);
    const auto [it, inserted] = env_map.try_emplace(env_key, static_cast<int>(env_map.size()));
    envs.push_back(it->second);
  }
  if (labels.empty()) throw Error(ErrorCode::EmptyFile, path.string() + " has no data rows");
  if (feature_cols.empty()) {
    throw Error(ErrorCode::EmptyFeatureSet, path.string() + " has no feature columns");
  }

  const std::size_t n = labels.size();
  std::vector<double> values;
  values.reserve(n * feature_cols.size());
  for (auto& col : columns) values.insert(values.end(), col.begin(), col.end());
  return Dataset(n, feature_cols.size(), std::move(values), std::move(labels), std::move(envs), task,
                 std::move(names));
}

FeatureTable load_features_csv(const std::filesystem::path& path,
                               const std::vector<std::string>& exclude) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw Error(ErrorCode::EmptyFile, path.string() + " is empty");

  const auto header = split_fields(line);
  FeatureTable table;
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (std::find(exclude.begin(), exclude.end(), header[c]) == exclude.end()) {
      keep.push_back(c);
      table.names.emplace_back(header[c]);
    }
  }
  if (keep.empty()) throw Error(ErrorCode::EmptyFeatureSet, path.string() + " has no feature columns");

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::NonNumericCell, "row " + std::to_string(row) + " has " +
                                                 std::to_string(fields.size()) + " fields, expected " +
                                                 std::to_string(header.size()));
    }
    std::vector<double> x(keep.size());
    for (std::size_t k = 0; k < keep.size(); ++k) {
      if (!parse_double(fields[keep[k]], x[k])) {
        throw Error(ErrorCode::NonNumericCell, "row " + std::to_string(row) + ", column '" +
                                                   table.names[k] + "': '" +
                                                   std::string(fields[keep[k]]) + "'");
      }
    }
    table.rows.push_back(std::move(x));
  }
  if (table.rows.empty()) throw Error(ErrorCode::EmptyFile, path.string() + " has no data rows");
  return table;
}

void save_csv(const Dataset& data, const std::filesystem::path& path, const std::string& label_col,
              const std::string& env_col) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << std::setprecision(17);
  for (const auto& name : data.feature_names()) out << name << ',';
  out << label_col << ',' << env_col << '\n';
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    for (std::size_t j = 0; j < data.n_features(); ++j) out << data.feature(i, j) << ',';
    out << data.label(i) << ',' << data.env(i) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

// Generators ---------------------------------------------------------------

namespace {

bool open_unit(double p) { return p > 0.0 && p < 1.0; }

std::vector<std::string> generated_names(std::size_t d) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < d; ++k) names.push_back("x1_" + std::to_string(k));
  for (std::size_t k = 0; k < d; ++k) names.push_back("x2_" + std::to_string(k));
  return names;
}

std::vector<std::size_t> first_d(std::size_t d) {
  std::vector<std::size_t> idx(d);
  for (std::size_t k = 0; k < d; ++k) idx[k] = k;
  return idx;
}

}  // namespace

void ClassGenConfig::validate() const {
  if (d == 0) throw Error(ErrorCode::InvalidConfig, "d must be positive");
  if (n_per_env == 0) throw Error(ErrorCode::InvalidConfig, "n_per_env must be positive");
  if (!open_unit(label_prior) || !open_unit(stable_flip)) {
    throw Error(ErrorCode::InvalidConfig, "probabilities must lie in (0, 1)");
  }
  if (env_flips.empty()) throw Error(ErrorCode::InvalidConfig, "env_flips is empty");
  for (double u : env_flips) {
    if (!open_unit(u)) throw Error(ErrorCode::InvalidConfig, "env flip outside (0, 1)");
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw Error(ErrorCode::InvalidConfig, "noise_std must be finite and >= 0");
  }
}

void RegGenConfig::validate() const {
  if (d == 0) throw Error(ErrorCode::InvalidConfig, "d must be positive");
  if (n_per_env == 0) throw Error(ErrorCode::InvalidConfig, "n_per_env must be positive");
  if (env_noise_stds.empty()) throw Error(ErrorCode::InvalidConfig, "env_noise_stds is empty");
  for (double s : env_noise_stds) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw Error(ErrorCode::InvalidConfig, "env noise std must be finite and > 0");
    }
  }
}

GeneratedData generate_classification(const ClassGenConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.d;
  const std::size_t n = cfg.n_per_env * cfg.env_flips.size();
  const std::size_t p = 2 * d;
  std::vector<double> values(n * p);
  std::vector<double> labels(n);
  std::vector<int> envs(n);
  Rng rng(cfg.seed);

  std::size_t i = 0;
  for (std::size_t e = 0; e < cfg.env_flips.size(); ++e) {
    for (std::size_t k = 0; k < cfg.n_per_env; ++k, ++i) {
      const double y = rng.bernoulli(cfg.label_prior) ? 1.0 : 0.0;
      labels[i] = y;
      envs[i] = static_cast<int>(e);
      for (std::size_t j = 0; j < d; ++j) {
        const double c = rng.bernoulli(cfg.stable_flip) ? 1.0 : 0.0;
        const double noise = cfg.noise_std > 0.0 ? rng.normal(0.0, cfg.noise_std) : 0.0;
        values[j * n + i] = std::abs(y - c) + noise;
      }
      for (std::size_t j = 0; j < d; ++j) {
        const double c = rng.bernoulli(cfg.env_flips[e]) ? 1.0 : 0.0;
        const double noise = cfg.noise_std > 0.0 ? rng.normal(0.0, cfg.noise_std) : 0.0;
        values[(d + j) * n + i] = std::abs(y - c) + noise;
      }
    }
  }
  return {Dataset(n, p, std::move(values), std::move(labels), std::move(envs),
                  Task::Classification, generated_names(d)),
          first_d(d)};
}

GeneratedData generate_regression(const RegGenConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.d;
  const std::size_t n = cfg.n_per_env * cfg.env_noise_stds.size();
  const std::size_t p = 2 * d;
  const double dd = static_cast<double>(d);
  std::vector<double> values(n * p);
  std::vector<double> labels(n);
  std::vector<int> envs(n);
  Rng rng(cfg.seed);

  std::size_t i = 0;
  for (std::size_t e = 0; e < cfg.env_noise_stds.size(); ++e) {
    const double env_sd = cfg.env_noise_stds[e] * std::sqrt(dd);
    for (std::size_t k = 0; k < cfg.n_per_env; ++k, ++i) {
      double y = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double x = rng.normal();
        values[j * n + i] = x;
        y += x;
      }
      y += rng.normal(0.0, std::sqrt(dd));
      labels[i] = y;
      envs[i] = static_cast<int>(e);
      for (std::size_t j = 0; j < d; ++j) values[(d + j) * n + i] = y + rng.normal(0.0, env_sd);
    }
  }
  return {Dataset(n, p, std::move(values), std::move(labels), std::move(envs), Task::Regression,
                  generated_names(d)),
          first_d(d)};
}

}  // namespace irf
