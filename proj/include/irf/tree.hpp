#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "irf/data.hpp"
#include "irf/random.hpp"
#include "irf/split.hpp"

namespace irf {

struct TreeConfig {
  std::size_t max_depth = 10;  ///< the root sits at depth 0
  double lambda = 0.0;
  std::size_t min_leaf = 1;
  Task task = Task::Classification;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class FeatureSubsampling { None, SqrtP };

struct TreeNode {
  static constexpr std::int32_t kNoChild = -1;

  SplitCandidate split;
  std::int32_t left = kNoChild;
  std::int32_t right = kNoChild;
  std::size_t n = 0;   ///< training rows reaching this node
  double value = 0.0;  ///< leaves: class-1 fraction or label mean; internal: 0

  [[nodiscard]] bool is_leaf() const noexcept { return left == kNoChild; }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Binary tree stored as a flat node array; node 0 is the root and children
/// always come after their parent.
class Tree {
 public:
  /// Throws MalformedModel if the node array is not a well-formed tree.
  Tree(Task task, std::size_t n_features, std::vector<TreeNode> nodes);

  [[nodiscard]] Task task() const noexcept { return task_; }
  [[nodiscard]] std::size_t n_features() const noexcept { return n_features_; }
  [[nodiscard]] const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  [[nodiscard]] const TreeNode& root() const noexcept { return nodes_.front(); }
  [[nodiscard]] const TreeNode& node(std::size_t i) const noexcept { return nodes_[i]; }
  [[nodiscard]] std::size_t depth() const;
  [[nodiscard]] std::size_t n_leaves() const;

  friend bool operator==(const Tree&, const Tree&) = default;

 private:
  Task task_;
  std::size_t n_features_;
  std::vector<TreeNode> nodes_;
};

/// Grows an invariant tree on `rows` of `data` by recursive penalized
/// splitting. Stops at max_depth, on pure/constant nodes, or when no
/// feasible split exists.
Tree grow(const Dataset& data, std::span<const std::size_t> rows, const TreeConfig& cfg);

/// As above; with SqrtP each node searches a fresh random subset of
/// ceil(sqrt(p)) features drawn from `rng`.
Tree grow(const Dataset& data, std::span<const std::size_t> rows, const TreeConfig& cfg,
          FeatureSubsampling subsampling, Rng& rng);

/// Leaf value reached by x; x[j] <= threshold descends left.
double predict_one(const Tree& tree, std::span<const double> x);

/// importance[j] = sum of n_m / n_total over internal nodes splitting on j.
std::vector<double> feature_importance(const Tree& tree, std::size_t n_total);

}  // namespace irf
