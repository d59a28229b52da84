#pragma once

// Incremental split search shared by best_split and tree growth.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "irf/data.hpp"
#include "irf/split.hpp"

namespace irf::detail {

/// Sorts `rows` by the value of column `feature`, ties by row index.
void sort_by_feature(const Dataset& data, std::size_t feature, std::vector<std::size_t>& rows);

class SplitScanner {
 public:
  SplitScanner(const Dataset& data, double lambda, std::size_t min_leaf);

  /// Loads node statistics. Returns false when the node cannot be split:
  /// pure labels (classification), constant labels (regression), or fewer
  /// than 2 * min_leaf rows.
  bool load_node(std::span<const std::size_t> rows);

  /// Scans every threshold of one feature. `sorted_rows` must be the node's
  /// rows in ascending order of that feature. Features must be offered in
  /// ascending index order for the tie rule to hold.
  void scan_feature(std::size_t feature, std::span<const std::size_t> sorted_rows,
                    std::optional<ScoredSplit>& best);

 private:
  void scan_cls(std::size_t feature, std::span<const std::size_t> sorted_rows,
                std::optional<ScoredSplit>& best);
  void scan_reg(std::size_t feature, std::span<const std::size_t> sorted_rows,
                std::optional<ScoredSplit>& best);
  double penalty_cls() const noexcept;
  double penalty_reg() const noexcept;
  void offer(std::size_t feature, double lo, double hi, double impurity, bool penalty_ready,
             double penalty, std::optional<ScoredSplit>& best, bool is_cls);

  const Dataset& data_;
  double lambda_;
  std::size_t min_leaf_;
  std::size_t n_envs_;

  // node totals
  std::size_t n_ = 0;
  std::size_t pos_ = 0;
  double mean_ = 0.0;
  double sum_ = 0.0;
  double sum_sq_ = 0.0;
  std::vector<std::size_t> env_n_;
  std::vector<std::size_t> env_pos_;
  std::vector<double> env_sum_;

  // left-side accumulators
  std::vector<std::size_t> left_n_;
  std::vector<std::size_t> left_pos_;
  std::vector<double> left_sum_;
  mutable std::vector<double> scratch_;
};

}  // namespace irf::detail
