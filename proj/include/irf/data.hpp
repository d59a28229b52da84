#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace irf {

enum class Task { Classification, Regression };

const char* to_string(Task task) noexcept;
Task parse_task(const std::string& text);

/// Immutable tabular data set: a column-major feature matrix, one label per
/// row and a dense environment id per row.
///
/// Invariants checked on construction: n >= 1, p >= 1, every environment id
/// in [0, E) occurs at least once, all values finite, and classification
/// labels are exactly 0 or 1.
class Dataset {
 public:
  Dataset(std::size_t n_rows, std::size_t n_features, std::vector<double> column_major,
          std::vector<double> labels, std::vector<int> env_ids, Task task,
          std::vector<std::string> feature_names = {});

  [[nodiscard]] std::size_t n_rows() const noexcept { return labels_.size(); }
  [[nodiscard]] std::size_t n_features() const noexcept { return n_features_; }
  [[nodiscard]] int n_envs() const noexcept { return n_envs_; }
  [[nodiscard]] Task task() const noexcept { return task_; }

  [[nodiscard]] double feature(std::size_t row, std::size_t col) const noexcept {
    return values_[col * n_rows() + row];
  }
  [[nodiscard]] std::span<const double> column(std::size_t col) const noexcept {
    return {values_.data() + col * n_rows(), n_rows()};
  }
  [[nodiscard]] std::vector<double> row(std::size_t r) const;

  [[nodiscard]] std::span<const double> labels() const noexcept { return labels_; }
  [[nodiscard]] double label(std::size_t row) const noexcept { return labels_[row]; }
  [[nodiscard]] std::span<const int> env_ids() const noexcept { return env_ids_; }
  [[nodiscard]] int env(std::size_t row) const noexcept { return env_ids_[row]; }
  [[nodiscard]] const std::vector<std::string>& feature_names() const noexcept {
    return feature_names_;
  }

  /// Row-major copy of the features, one vector per row.
  [[nodiscard]] std::vector<std::vector<double>> rows() const;

  /// New data set made of the given rows (duplicates allowed). Environment
  /// ids are kept verbatim, so every environment must still be represented.
  [[nodiscard]] Dataset select(std::span<const std::size_t> rows) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t n_features_;
  std::vector<double> values_;
  std::vector<double> labels_;
  std::vector<int> env_ids_;
  Task task_;
  int n_envs_ = 0;
  std::vector<std::string> feature_names_;
};

/// Row indices grouped by environment: result[e] lists, in ascending order,
/// the members of `rows` whose environment is e. Covers all E environments,
/// possibly with empty lists.
std::vector<std::vector<std::size_t>> partition_by_env(const Dataset& data,
                                                       std::span<const std::size_t> rows);
std::vector<std::vector<std::size_t>> partition_by_env(const Dataset& data);

std::vector<std::size_t> all_rows(const Dataset& data);

// CSV ingestion -------------------------------------------------------------

/// Reads a comma-separated file with a header row. `env_col` values are
/// mapped to dense ids 0..E-1 in order of first appearance; the label and
/// environment columns are excluded from the features.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_col,
                 const std::string& env_col, Task task);

/// Feature-only view of a CSV file, for prediction inputs.
struct FeatureTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
};

/// Reads every column except those named in `exclude` (absent names are
/// ignored) as numeric features.
FeatureTable load_features_csv(const std::filesystem::path& path,
                               const std::vector<std::string>& exclude = {});

/// Writes features, then `label_col`, then `env_col` (as integer ids), with
/// values printed to 17 significant digits.
void save_csv(const Dataset& data, const std::filesystem::path& path,
              const std::string& label_col = "label", const std::string& env_col = "env");

// Synthetic generators -----------------------------------------------------

struct ClassGenConfig {
  std::size_t d = 1;
  double label_prior = 0.5;
  double stable_flip = 0.3;
  std::vector<double> env_flips{0.1, 0.4};
  double noise_std = 1.0;
  std::size_t n_per_env = 2000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RegGenConfig {
  std::size_t d = 1;
  std::vector<double> env_noise_stds{0.1, 2.0};
  std::size_t n_per_env = 2000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GeneratedData {
  Dataset data;
  /// Columns whose conditional law given the label is the same everywhere.
  std::vector<std::size_t> stable_features;
};

/// Label-first binary process: Y ~ Bern(label_prior); the first d columns
/// are |Y - C1| + N1 with C1 ~ Bern(stable_flip), the last d columns are
/// |Y - C2| + N2 with C2 ~ Bern(env_flips[e]).
GeneratedData generate_classification(const ClassGenConfig& cfg);

/// X1 ~ N(0, I_d), Y = sum(X1) + N(0, d); each of the last d columns is
/// Y plus independent N(0, sigma_e^2 d) noise.
GeneratedData generate_regression(const RegGenConfig& cfg);

}  // namespace irf
