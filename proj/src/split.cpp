#include "irf/split.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "irf/error.hpp"
#include "split_scan.hpp"

namespace irf {

NodeData::NodeData(const Dataset& data, std::vector<std::size_t> rows)
    : data_(&data), rows_(std::move(rows)) {
  if (rows_.empty()) throw Error(ErrorCode::EmptySet, "node has no rows");
  for (std::size_t r : rows_) {
    if (r >= data.n_rows()) throw Error(ErrorCode::DimensionMismatch, "row index out of range");
  }
  env_rows_ = partition_by_env(data, rows_);
}

NodeData::NodeData(const Dataset& data) : NodeData(data, all_rows(data)) {}

// Impurities ---------------------------------------------------------------

double gini(std::span<const double> labels) {
  if (labels.empty()) throw Error(ErrorCode::EmptySet, "gini of an empty set");
  const double n = static_cast<double>(labels.size());
  const double pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1.0));
  const double p1 = pos / n;
  const double p0 = 1.0 - p1;
  return 1.0 - p0 * p0 - p1 * p1;
}

double mse_impurity(std::span<const double> labels) {
  if (labels.empty()) throw Error(ErrorCode::EmptySet, "mse of an empty set");
  const double n = static_cast<double>(labels.size());
  const double mean = std::accumulate(labels.begin(), labels.end(), 0.0) / n;
  double ss = 0.0;
  for (double y : labels) ss += (y - mean) * (y - mean);
  return ss / n;
}

double impurity(Impurity kind, std::span<const double> labels) {
  return kind == Impurity::Gini ? gini(labels) : mse_impurity(labels);
}

namespace {

void split_labels(const Dataset& data, std::span<const std::size_t> rows,
                  const SplitCandidate& split, std::vector<double>& left,
                  std::vector<double>& right) {
  if (split.feature >= data.n_features()) {
    throw Error(ErrorCode::DimensionMismatch, "split feature out of range");
  }
  for (std::size_t r : rows) {
    (data.feature(r, split.feature) <= split.threshold ? left : right).push_back(data.label(r));
  }
}

struct ClassCounts {
  std::size_t left_pos = 0;
  std::size_t left_neg = 0;
  std::size_t pos = 0;
  std::size_t neg = 0;
};

ClassCounts count_classes(const Dataset& data, std::span<const std::size_t> rows,
                          const SplitCandidate& split) {
  if (split.feature >= data.n_features()) {
    throw Error(ErrorCode::DimensionMismatch, "split feature out of range");
  }
  ClassCounts c;
  for (std::size_t r : rows) {
    const bool positive = data.label(r) == 1.0;
    const bool left = data.feature(r, split.feature) <= split.threshold;
    (positive ? c.pos : c.neg) += 1;
    if (left) (positive ? c.left_pos : c.left_neg) += 1;
  }
  return c;
}

}  // namespace

double weighted_impurity(const NodeData& node, const SplitCandidate& split, Impurity kind) {
  std::vector<double> left;
  std::vector<double> right;
  split_labels(node.data(), node.rows(), split, left, right);
  if (left.empty() || right.empty()) {
    throw Error(ErrorCode::DegenerateSplit, "split leaves one side empty");
  }
  const double n = static_cast<double>(node.size());
  return static_cast<double>(left.size()) / n * impurity(kind, left) +
         static_cast<double>(right.size()) / n * impurity(kind, right);
}

// Classification invariance -------------------------------------------------

ChangingRates changing_rates_cls(const Dataset& data, std::span<const std::size_t> env_rows,
                                 const SplitCandidate& split) {
  if (env_rows.empty()) throw Error(ErrorCode::EmptySet, "environment has no rows at this node");
  const ClassCounts c = count_classes(data, env_rows, split);
  const std::size_t left = c.left_pos + c.left_neg;
  if (left == 0 || c.pos == 0 || c.neg == 0) {
    throw Error(ErrorCode::UndefinedRate, "changing rate has a zero denominator");
  }
  const double n = static_cast<double>(env_rows.size());
  const double nl = static_cast<double>(left);
  return {(static_cast<double>(c.left_pos) / nl) / (static_cast<double>(c.pos) / n),
          (static_cast<double>(c.left_neg) / nl) / (static_cast<double>(c.neg) / n)};
}

double smoothed_invariant(std::size_t left_pos, std::size_t left_neg, std::size_t pos,
                          std::size_t neg) noexcept {
  const double rate_pos = (static_cast<double>(left_pos) + 0.5) / (static_cast<double>(pos) + 1.0);
  const double rate_neg = (static_cast<double>(left_neg) + 0.5) / (static_cast<double>(neg) + 1.0);
  return rate_pos / rate_neg;
}

double smoothed_invariant_cls(const Dataset& data, std::span<const std::size_t> env_rows,
                              const SplitCandidate& split) {
  if (env_rows.empty()) throw Error(ErrorCode::EmptySet, "environment has no rows at this node");
  const ClassCounts c = count_classes(data, env_rows, split);
  return smoothed_invariant(c.left_pos, c.left_neg, c.pos, c.neg);
}

double max_ratio_penalty(std::span<const double> invariants) {
  if (invariants.size() < 2) return 0.0;
  const auto [lo, hi] = std::minmax_element(invariants.begin(), invariants.end());
  return std::max(0.0, *hi / *lo - 1.0);
}

PenaltyReport penalty_cls(const NodeData& node, const SplitCandidate& split) {
  PenaltyReport report;
  std::vector<double> values;
  for (int e = 0; e < node.data().n_envs(); ++e) {
    const auto rows = node.env_rows(e);
    if (rows.empty()) {
      report.invariants.emplace_back();
      continue;
    }
    const double v = smoothed_invariant_cls(node.data(), rows, split);
    report.invariants.emplace_back(v);
    values.push_back(v);
  }
  report.penalty = max_ratio_penalty(values);
  return report;
}

// Regression invariance -----------------------------------------------------

double changing_rate_reg(const Dataset& data, std::span<const std::size_t> env_rows,
                         const SplitCandidate& split) {
  if (env_rows.empty()) throw Error(ErrorCode::EmptySet, "environment has no rows at this node");
  std::vector<double> left;
  std::vector<double> right;
  split_labels(data, env_rows, split, left, right);
  if (left.empty()) throw Error(ErrorCode::EmptyLeft, "no row of this environment goes left");
  const double left_mean = std::accumulate(left.begin(), left.end(), 0.0) / static_cast<double>(left.size());
  double total = 0.0;
  for (std::size_t r : env_rows) total += data.label(r);
  return left_mean - total / static_cast<double>(env_rows.size());
}

double variance_penalty(std::span<const double> rates) {
  if (rates.size() < 2) return 0.0;
  const double k = static_cast<double>(rates.size());
  const double mean = std::accumulate(rates.begin(), rates.end(), 0.0) / k;
  double ss = 0.0;
  for (double r : rates) ss += (r - mean) * (r - mean);
  return ss / k;
}

PenaltyReport penalty_reg(const NodeData& node, const SplitCandidate& split) {
  PenaltyReport report;
  std::vector<double> values;
  for (int e = 0; e < node.data().n_envs(); ++e) {
    const auto rows = node.env_rows(e);
    const bool any_left = std::any_of(rows.begin(), rows.end(), [&](std::size_t r) {
      return node.data().feature(r, split.feature) <= split.threshold;
    });
    if (rows.empty() || !any_left) {
      report.invariants.emplace_back();
      continue;
    }
    const double v = changing_rate_reg(node.data(), rows, split);
    report.invariants.emplace_back(v);
    values.push_back(v);
  }
  report.penalty = variance_penalty(values);
  return report;
}

PenaltyReport penalty(const NodeData& node, const SplitCandidate& split, Task task) {
  return task == Task::Classification ? penalty_cls(node, split) : penalty_reg(node, split);
}

// Search -------------------------------------------------------------------

bool improves_on(double candidate, double incumbent) noexcept {
  const double tol = kObjectiveTieTolerance * std::max(1.0, std::abs(incumbent));
  return candidate < incumbent - tol;
}

std::optional<ScoredSplit> best_split(const NodeData& node, double lambda, Task task,
                                      std::size_t min_leaf) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidConfig, "lambda must be finite and >= 0");
  }
  if (task != node.data().task()) {
    throw Error(ErrorCode::InvalidConfig, "task does not match the data set");
  }
  detail::SplitScanner scanner(node.data(), lambda, std::max<std::size_t>(min_leaf, 1));
  std::optional<ScoredSplit> best;
  if (!scanner.load_node(node.rows())) return best;
  std::vector<std::size_t> sorted(node.rows().begin(), node.rows().end());
  for (std::size_t j = 0; j < node.data().n_features(); ++j) {
    detail::sort_by_feature(node.data(), j, sorted);
    scanner.scan_feature(j, sorted, best);
  }
  return best;
}

// Scanner ------------------------------------------------------------------

namespace detail {

void sort_by_feature(const Dataset& data, std::size_t feature, std::vector<std::size_t>& rows) {
  const auto col = data.column(feature);
  std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    return col[a] < col[b] || (col[a] == col[b] && a < b);
  });
}

SplitScanner::SplitScanner(const Dataset& data, double lambda, std::size_t min_leaf)
    : data_(data),
      lambda_(lambda),
      min_leaf_(min_leaf),
      n_envs_(static_cast<std::size_t>(data.n_envs())),
      env_n_(n_envs_),
      env_pos_(n_envs_),
      env_sum_(n_envs_),
      left_n_(n_envs_),
      left_pos_(n_envs_),
      left_sum_(n_envs_) {
  scratch_.reserve(n_envs_);
}

bool SplitScanner::load_node(std::span<const std::size_t> rows) {
  n_ = rows.size();
  std::fill(env_n_.begin(), env_n_.end(), 0);
  std::fill(env_pos_.begin(), env_pos_.end(), 0);
  std::fill(env_sum_.begin(), env_sum_.end(), 0.0);
  if (data_.task() == Task::Classification) {
    pos_ = 0;
    for (std::size_t r : rows) {
      const auto e = static_cast<std::size_t>(data_.env(r));
      const bool positive = data_.label(r) == 1.0;
      ++env_n_[e];
      env_pos_[e] += positive ? 1 : 0;
      pos_ += positive ? 1 : 0;
    }
    if (pos_ == 0 || pos_ == n_) return false;
  } else {
    const double first = data_.label(rows.front());
    bool constant = true;
    double total = 0.0;
    for (std::size_t r : rows) {
      total += data_.label(r);
      constant = constant && data_.label(r) == first;
    }
    if (constant) return false;
    mean_ = total / static_cast<double>(n_);
    sum_ = 0.0;
    sum_sq_ = 0.0;
    for (std::size_t r : rows) {
      const auto e = static_cast<std::size_t>(data_.env(r));
      const double z = data_.label(r) - mean_;
      ++env_n_[e];
      env_sum_[e] += z;
      sum_ += z;
      sum_sq_ += z * z;
    }
  }
  return n_ >= 2 * min_leaf_;
}

void SplitScanner::scan_feature(std::size_t feature, std::span<const std::size_t> sorted_rows,
                                std::optional<ScoredSplit>& best) {
  std::fill(left_n_.begin(), left_n_.end(), 0);
  std::fill(left_pos_.begin(), left_pos_.end(), 0);
  std::fill(left_sum_.begin(), left_sum_.end(), 0.0);
  if (data_.task() == Task::Classification) {
    scan_cls(feature, sorted_rows, best);
  } else {
    scan_reg(feature, sorted_rows, best);
  }
}

double SplitScanner::penalty_cls() const noexcept {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  std::size_t contributors = 0;
  for (std::size_t e = 0; e < n_envs_; ++e) {
    if (env_n_[e] == 0) continue;
    const double v = smoothed_invariant(left_pos_[e], left_n_[e] - left_pos_[e], env_pos_[e],
                                        env_n_[e] - env_pos_[e]);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    ++contributors;
  }
  return contributors < 2 ? 0.0 : std::max(0.0, hi / lo - 1.0);
}

double SplitScanner::penalty_reg() const noexcept {
  scratch_.clear();
  for (std::size_t e = 0; e < n_envs_; ++e) {
    if (env_n_[e] == 0) continue;
    if (left_n_[e] == 0) continue;
    scratch_.push_back(left_sum_[e] / static_cast<double>(left_n_[e]) -
                       env_sum_[e] / static_cast<double>(env_n_[e]));
  }
  return variance_penalty(scratch_);
}

void SplitScanner::offer(std::size_t feature, double lo, double hi, double impurity,
                         bool penalty_ready, double penalty, std::optional<ScoredSplit>& best,
                         bool is_cls) {
  // With lambda == 0 the penalty is only evaluated for accepted candidates.
  const double objective = impurity + lambda_ * penalty;
  if (best && !improves_on(objective, best->objective)) return;
  if (!penalty_ready) penalty = is_cls ? penalty_cls() : penalty_reg();
  double threshold = std::midpoint(lo, hi);
  if (!(threshold < hi)) threshold = lo;
  best = ScoredSplit{{feature, threshold}, objective, impurity, penalty};
}

void SplitScanner::scan_cls(std::size_t feature, std::span<const std::size_t> sorted_rows,
                            std::optional<ScoredSplit>& best) {
  const auto col = data_.column(feature);
  const double n = static_cast<double>(n_);
  const bool need_penalty = lambda_ > 0.0;
  std::size_t nl = 0;
  std::size_t nl_pos = 0;
  for (std::size_t i = 0; i + 1 < sorted_rows.size(); ++i) {
    const std::size_t r = sorted_rows[i];
    const auto e = static_cast<std::size_t>(data_.env(r));
    const bool positive = data_.label(r) == 1.0;
    ++nl;
    ++left_n_[e];
    if (positive) {
      ++nl_pos;
      ++left_pos_[e];
    }
    const double v = col[r];
    const double next = col[sorted_rows[i + 1]];
    if (!(v < next)) continue;
    const std::size_t nr = n_ - nl;
    if (nl < min_leaf_ || nr < min_leaf_) continue;

    const double l = static_cast<double>(nl);
    const double rr = static_cast<double>(nr);
    const double lp = static_cast<double>(nl_pos) / l;
    const double rp = static_cast<double>(pos_ - nl_pos) / rr;
    const double gini_l = 1.0 - lp * lp - (1.0 - lp) * (1.0 - lp);
    const double gini_r = 1.0 - rp * rp - (1.0 - rp) * (1.0 - rp);
    const double impurity = l / n * gini_l + rr / n * gini_r;
    const double pen = need_penalty ? penalty_cls() : 0.0;
    offer(feature, v, next, impurity, need_penalty, pen, best, true);
  }
}

void SplitScanner::scan_reg(std::size_t feature, std::span<const std::size_t> sorted_rows,
                            std::optional<ScoredSplit>& best) {
  const auto col = data_.column(feature);
  const double n = static_cast<double>(n_);
  const bool need_penalty = lambda_ > 0.0;
  std::size_t nl = 0;
  double sl = 0.0;
  double ssl = 0.0;
  for (std::size_t i = 0; i + 1 < sorted_rows.size(); ++i) {
    const std::size_t r = sorted_rows[i];
    const auto e = static_cast<std::size_t>(data_.env(r));
    const double z = data_.label(r) - mean_;
    ++nl;
    sl += z;
    ssl += z * z;
    ++left_n_[e];
    left_sum_[e] += z;
    const double v = col[r];
    const double next = col[sorted_rows[i + 1]];
    if (!(v < next)) continue;
    const std::size_t nr = n_ - nl;
    if (nl < min_leaf_ || nr < min_leaf_) continue;

    const double l = static_cast<double>(nl);
    const double rr = static_cast<double>(nr);
    const double sr = sum_ - sl;
    const double ssr = sum_sq_ - ssl;
    const double dev_l = std::max(0.0, ssl - sl * sl / l);
    const double dev_r = std::max(0.0, ssr - sr * sr / rr);
    const double impurity = (dev_l + dev_r) / n;
    const double pen = need_penalty ? penalty_reg() : 0.0;
    offer(feature, v, next, impurity, need_penalty, pen, best, false);
  }
}

}  // namespace detail
}  // namespace irf
