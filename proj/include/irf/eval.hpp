#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "irf/data.hpp"
#include "irf/forest.hpp"

namespace irf {

// Metrics ------------------------------------------------------------------

double accuracy(std::span<const double> pred, std::span<const double> truth);
double mse(std::span<const double> pred, std::span<const double> truth);

inline constexpr double kProbabilityClamp = 1e-12;

/// Mean binary log loss with probabilities clamped to [eps, 1 - eps].
double cross_entropy(std::span<const double> prob, std::span<const double> truth);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation (n - 1); 0 for a single value
};

MeanStd mean_std(std::span<const double> values);

// Hyperparameter selection --------------------------------------------------

enum class Scenario { S1, S2, S3 };

struct Protocol {
  Scenario scenario = Scenario::S1;
  std::vector<double> lambda_grid{0.0, 1.0, 5.0, 10.0};
  std::vector<std::size_t> depth_grid;
  std::size_t fixed_depth = 10;
  std::size_t n_trees = 50;

  /// Grid and tree-count defaults for a task and scenario.
  static Protocol defaults(Task task, Scenario scenario);
};

struct Selection {
  std::size_t depth = 0;
  double lambda = 0.0;
  std::vector<double> depth_losses;   ///< stage 1, aligned with depth_grid
  std::vector<double> lambda_losses;  ///< stage 2, aligned with lambda_grid
};

/// Validation loss of a forest grown with (depth, lambda); stage 1 calls it
/// with lambda = 0 and `baseline` = true.
using ValidationLoss = std::function<double(std::size_t depth, double lambda, bool baseline)>;

/// Two-stage search: the depth minimising the baseline forest's loss, then
/// at that depth the lambda minimising the invariant forest's loss. Ties go
/// to the earlier grid entry.
Selection select_hyperparams(const Protocol& proto, const ValidationLoss& loss);

/// Stage 1 fits the plain baseline (lambda 0, sqrt(p) feature subsets);
/// stage 2 fits invariant forests. Loss is cross-entropy for classification
/// and MSE for regression.
Selection select_hyperparams(const Dataset& train, const Dataset& valid, const Protocol& proto,
                             std::uint64_t seed);

// Synthetic benchmark ------------------------------------------------------

struct MethodSpec {
  std::string name;
  double lambda = 0.0;
  FeatureSubsampling subsampling = FeatureSubsampling::None;
  bool baseline = false;  ///< regression ratios are taken against this method
};

/// RF (lambda 0, sqrt(p) subsets; the baseline) and IRF at lambda 0, 1, 5, 10.
std::vector<MethodSpec> default_methods();

struct BenchSettings {
  Task task = Task::Classification;
  std::vector<std::size_t> dims{2, 5, 10, 20};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<MethodSpec> methods = default_methods();
  std::size_t n_per_env = 2000;
  std::size_t n_trees = 50;
  std::size_t depth = 0;  ///< 0: fixed S1 depth (10 classification, 20 regression)
  std::size_t n_threads = 0;

  void validate() const;
};

/// Training (environments 1, 2) and test (environment 3) data of one cell.
struct SynthSplit {
  GeneratedData train;
  Dataset test;
};

SynthSplit make_synth_split(Task task, std::size_t d, std::uint64_t seed, std::size_t n_per_env);

struct CellResult {
  Task task = Task::Classification;
  std::size_t d = 0;
  std::uint64_t seed = 0;
  std::string method;
  double lambda = 0.0;
  std::size_t depth = 0;
  double metric = 0.0;  ///< accuracy in percent, or test MSE
  double ratio = 1.0;   ///< regression: MSE / baseline MSE for the same seed
  double stable_importance = 0.0;
  double env_importance = 0.0;
};

/// Fits one method on `train` and scores it on `test`. The test set is only
/// read after the model is final.
CellResult run_cell(const GeneratedData& train, const Dataset& test, const MethodSpec& method,
                    std::size_t depth, std::size_t n_trees, std::uint64_t seed,
                    std::size_t n_threads, ForestModel* model_out = nullptr);

struct BenchRow {
  Task task = Task::Classification;
  std::size_t d = 0;
  std::string method;
  double lambda = 0.0;
  std::size_t depth = 0;
  MeanStd metric;  ///< accuracy percent (classification) or MSE ratio (regression)
  std::size_t n_seeds = 0;
};

struct ImportanceRow {
  Task task = Task::Classification;
  std::size_t d = 0;
  std::string method;
  double lambda = 0.0;
  MeanStd stable;
  MeanStd environmental;
  std::size_t n_seeds = 0;
};

struct BenchReport {
  std::size_t n_per_env = 0;
  std::size_t n_trees = 0;
  std::vector<CellResult> cells;
  std::vector<BenchRow> rows;
  std::vector<ImportanceRow> importance;

  [[nodiscard]] const BenchRow* find(Task task, std::size_t d, const std::string& method,
                                     double lambda) const;
  [[nodiscard]] const ImportanceRow* find_importance(Task task, std::size_t d,
                                                     const std::string& method,
                                                     double lambda) const;
};

/// Aggregates cells into mean/std rows (one per task, d, method).
void aggregate(BenchReport& report);

BenchReport run_synth_bench(const BenchSettings& settings);

/// Invariant forests at every lambda of `lambdas` (no feature subsets);
/// only the importance table is of interest.
BenchReport run_importance_bench(Task task, const std::vector<std::size_t>& dims,
                                 const std::vector<std::uint64_t>& seeds,
                                 const std::vector<double>& lambdas = {0.0, 1.0, 5.0, 10.0},
                                 std::size_t n_per_env = 2000, std::size_t n_trees = 50);

/// Comma-separated: task,d,method,lambda,depth,metric_mean,metric_std,n_seeds
void write_report_csv(const BenchReport& report, std::ostream& out);
/// Comma-separated: task,d,method,lambda,stable_mean,stable_std,env_mean,env_std,n_seeds
void write_importance_csv(const BenchReport& report, std::ostream& out);
/// Aligned human-readable rendering of both tables.
void write_report_text(const BenchReport& report, std::ostream& out);

}  // namespace irf
