#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "irf/data.hpp"
#include "irf/tree.hpp"

namespace irf {

struct ForestConfig {
  std::size_t n_trees = 50;
  TreeConfig tree;
  /// None for the invariant forest; SqrtP gives the plain random-forest baseline.
  FeatureSubsampling subsampling = FeatureSubsampling::None;
  std::uint64_t seed = 0;
  /// Worker threads for tree construction; 0 picks the hardware concurrency.
  /// Results do not depend on this value.
  std::size_t n_threads = 0;

  void validate() const;
};

struct ForestModel {
  std::vector<Tree> trees;
  Task task = Task::Classification;
  std::size_t n_features = 0;
  ForestConfig config;
};

/// Rows drawn with replacement, separately inside each environment, so that
/// each environment keeps its original size. Deterministic in `rng`.
std::vector<std::size_t> bootstrap_by_env(const Dataset& data, Rng& rng);

/// Trains one tree per bootstrap replicate. Tree t draws from a stream
/// seeded by (cfg.seed, t), so results are independent of scheduling.
ForestModel fit(const Dataset& data, const ForestConfig& cfg);

/// Per-row ensemble average: class-1 probability or regression mean.
std::vector<double> predict_average(const ForestModel& model, const Dataset& data);
std::vector<double> predict_average(const ForestModel& model,
                                    const std::vector<std::vector<double>>& rows);

/// Hard labels (average > 0.5 gives 1, ties give 0) for classification;
/// the ensemble mean for regression.
std::vector<double> predict(const ForestModel& model, const Dataset& data);
std::vector<double> predict(const ForestModel& model, const std::vector<std::vector<double>>& rows);

/// Mean of per-tree importances, each normalised by its own training size.
std::vector<double> forest_importance(const ForestModel& model);

// Persistence --------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

std::string model_to_string(const ForestModel& model);
ForestModel model_from_string(const std::string& text);

void save_model(const ForestModel& model, const std::filesystem::path& path);
ForestModel load_model(const std::filesystem::path& path);

}  // namespace irf
