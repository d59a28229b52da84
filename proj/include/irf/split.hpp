#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "irf/data.hpp"

namespace irf {

enum class Impurity { Gini, Mse };

constexpr Impurity impurity_for(Task task) noexcept {
  return task == Task::Classification ? Impurity::Gini : Impurity::Mse;
}

/// Axis-aligned split: rows with x[feature] <= threshold go left.
struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;

  friend bool operator==(const SplitCandidate&, const SplitCandidate&) = default;
};

/// The rows reaching one tree node, plus their per-environment restriction.
/// Holds a non-owning reference to the data set.
class NodeData {
 public:
  NodeData(const Dataset& data, std::vector<std::size_t> rows);
  explicit NodeData(const Dataset& data);

  [[nodiscard]] const Dataset& data() const noexcept { return *data_; }
  [[nodiscard]] std::span<const std::size_t> rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t size() const noexcept { return rows_.size(); }
  /// Rows from environment e (possibly empty); e in [0, data().n_envs()).
  [[nodiscard]] std::span<const std::size_t> env_rows(int e) const noexcept {
    return env_rows_[static_cast<std::size_t>(e)];
  }

 private:
  const Dataset* data_;
  std::vector<std::size_t> rows_;
  std::vector<std::vector<std::size_t>> env_rows_;
};

struct PenaltyReport {
  /// One entry per environment; empty for environments that do not contribute.
  std::vector<std::optional<double>> invariants;
  double penalty = 0.0;
};

struct ChangingRates {
  double positive = 0.0;
  double negative = 0.0;
};

struct ScoredSplit {
  SplitCandidate split;
  double objective = 0.0;  ///< impurity + lambda * penalty
  double impurity = 0.0;
  double penalty = 0.0;
};

// Impurities ---------------------------------------------------------------

double gini(std::span<const double> labels);
double mse_impurity(std::span<const double> labels);
double impurity(Impurity kind, std::span<const double> labels);

/// (n_l/n) H(left) + (n_r/n) H(right) over the pooled node.
double weighted_impurity(const NodeData& node, const SplitCandidate& split, Impurity kind);

// Classification invariance -------------------------------------------------

/// Unsmoothed changing rates of one environment's rows under `split`.
/// Throws UndefinedRate if the left side, the positives or the negatives are empty.
ChangingRates changing_rates_cls(const Dataset& data, std::span<const std::size_t> env_rows,
                                 const SplitCandidate& split);

/// Dummy-sample smoothed ratio of changing rates:
/// [(left_pos + 0.5) / (pos + 1)] / [(left_neg + 0.5) / (neg + 1)].
double smoothed_invariant(std::size_t left_pos, std::size_t left_neg, std::size_t pos,
                          std::size_t neg) noexcept;

double smoothed_invariant_cls(const Dataset& data, std::span<const std::size_t> env_rows,
                              const SplitCandidate& split);

/// max_e v_e / min_f v_f - 1 over strictly positive values; 0 for fewer than two.
double max_ratio_penalty(std::span<const double> invariants);

PenaltyReport penalty_cls(const NodeData& node, const SplitCandidate& split);

// Regression invariance -----------------------------------------------------

/// mean(left labels) - mean(all labels) within one environment.
/// Throws EmptyLeft if no row of the environment goes left.
double changing_rate_reg(const Dataset& data, std::span<const std::size_t> env_rows,
                         const SplitCandidate& split);

/// Population variance; 0 for fewer than two values.
double variance_penalty(std::span<const double> rates);

PenaltyReport penalty_reg(const NodeData& node, const SplitCandidate& split);

PenaltyReport penalty(const NodeData& node, const SplitCandidate& split, Task task);

// Search -------------------------------------------------------------------

/// Relative tolerance under which two objectives count as tied; ties resolve
/// to the smaller feature index, then the smaller threshold.
inline constexpr double kObjectiveTieTolerance = 1e-10;

/// True when `candidate` beats `incumbent` under the tie rule, assuming the
/// incumbent precedes it in (feature, threshold) order.
bool improves_on(double candidate, double incumbent) noexcept;

/// Exhaustive search over every feature and every midpoint between
/// consecutive distinct values, minimising impurity + lambda * penalty with
/// at least `min_leaf` pooled rows on each side. Empty when the node is pure
/// (classification), constant (regression), or has no feasible split.
std::optional<ScoredSplit> best_split(const NodeData& node, double lambda, Task task,
                                      std::size_t min_leaf = 1);

}  // namespace irf
