#include "irf/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "irf/error.hpp"
#include "split_scan.hpp"

namespace irf {

void TreeConfig::validate() const {
  if (max_depth < 1) throw Error(ErrorCode::InvalidConfig, "max_depth must be >= 1");
  if (min_leaf < 1) throw Error(ErrorCode::InvalidConfig, "min_leaf must be >= 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidConfig, "lambda must be finite and >= 0");
  }
}

Tree::Tree(Task task, std::size_t n_features, std::vector<TreeNode> nodes)
    : task_(task), n_features_(n_features), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw Error(ErrorCode::MalformedModel, "tree has no nodes");
  if (n_features_ == 0) throw Error(ErrorCode::MalformedModel, "tree has no features");
  const auto size = static_cast<std::int32_t>(nodes_.size());
  std::vector<int> parents(nodes_.size(), 0);
  for (std::int32_t i = 0; i < size; ++i) {
    const TreeNode& nd = nodes_[static_cast<std::size_t>(i)];
    if (nd.is_leaf()) {
      if (nd.right != TreeNode::kNoChild) throw Error(ErrorCode::MalformedModel, "leaf with a right child");
      if (!std::isfinite(nd.value)) throw Error(ErrorCode::MalformedModel, "non-finite leaf value");
      if (task_ == Task::Classification && (nd.value < 0.0 || nd.value > 1.0)) {
        throw Error(ErrorCode::MalformedModel, "classification leaf outside [0, 1]");
      }
      continue;
    }
    if (nd.left <= i || nd.right <= i || nd.left >= size || nd.right >= size || nd.left == nd.right) {
      throw Error(ErrorCode::MalformedModel, "bad child index at node " + std::to_string(i));
    }
    if (nd.split.feature >= n_features_ || !std::isfinite(nd.split.threshold)) {
      throw Error(ErrorCode::MalformedModel, "bad split at node " + std::to_string(i));
    }
    if (nodes_[static_cast<std::size_t>(nd.left)].n + nodes_[static_cast<std::size_t>(nd.right)].n != nd.n) {
      throw Error(ErrorCode::MalformedModel, "child counts do not add up at node " + std::to_string(i));
    }
    ++parents[static_cast<std::size_t>(nd.left)];
    ++parents[static_cast<std::size_t>(nd.right)];
  }
  if (parents[0] != 0 ||
      std::any_of(parents.begin() + 1, parents.end(), [](int c) { return c != 1; })) {
    throw Error(ErrorCode::MalformedModel, "node array is not a tree");
  }
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

std::size_t Tree::n_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& nd) { return nd.is_leaf(); }));
}

namespace {

/// Recursive grower over per-feature presorted row orders. A node owns the
/// same [begin, end) range in every order; splitting stably partitions each
/// range so children stay sorted.
class Grower {
 public:
  Grower(const Dataset& data, std::span<const std::size_t> rows, const TreeConfig& cfg,
         FeatureSubsampling subsampling, Rng* rng)
      : data_(data),
        cfg_(cfg),
        subsampling_(subsampling),
        rng_(rng),
        scanner_(data, cfg.lambda, cfg.min_leaf),
        orders_(data.n_features()),
        goes_left_(data.n_rows(), 0),
        scratch_(rows.size()) {
    for (std::size_t j = 0; j < data.n_features(); ++j) {
      orders_[j].assign(rows.begin(), rows.end());
      detail::sort_by_feature(data, j, orders_[j]);
    }
    all_features_.resize(data.n_features());
    std::iota(all_features_.begin(), all_features_.end(), std::size_t{0});
    if (subsampling_ == FeatureSubsampling::SqrtP) {
      const auto p = static_cast<double>(data.n_features());
      subset_size_ = static_cast<std::size_t>(std::ceil(std::sqrt(p)));
    }
  }

  std::vector<TreeNode> run() {
    build(0, orders_.front().size(), 0);
    return std::move(nodes_);
  }

 private:
  std::int32_t build(std::size_t begin, std::size_t end, std::size_t depth) {
    const auto index = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    const std::span<const std::size_t> rows(orders_.front().data() + begin, end - begin);

    double total = 0.0;
    for (std::size_t r : rows) total += data_.label(r);
    TreeNode leaf;
    leaf.n = rows.size();
    leaf.value = total / static_cast<double>(rows.size());
    nodes_[static_cast<std::size_t>(index)] = leaf;

    if (depth >= cfg_.max_depth || !scanner_.load_node(rows)) return index;

    std::optional<ScoredSplit> best;
    for (std::size_t j : candidate_features()) {
      scanner_.scan_feature(j, {orders_[j].data() + begin, end - begin}, best);
    }
    if (!best) return index;

    const SplitCandidate split = best->split;
    const auto col = data_.column(split.feature);
    std::size_t n_left = 0;
    for (std::size_t r : rows) {
      goes_left_[r] = col[r] <= split.threshold ? 1 : 0;
      n_left += goes_left_[r];
    }
    for (auto& order : orders_) partition(order, begin, end);

    const std::int32_t left = build(begin, begin + n_left, depth + 1);
    const std::int32_t right = build(begin + n_left, end, depth + 1);
    TreeNode& nd = nodes_[static_cast<std::size_t>(index)];
    nd.split = split;
    nd.value = 0.0;
    nd.left = left;
    nd.right = right;
    return index;
  }

  void partition(std::vector<std::size_t>& order, std::size_t begin, std::size_t end) {
    std::size_t out = begin;
    std::size_t spill = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t r = order[i];
      if (goes_left_[r]) {
        order[out++] = r;
      } else {
        scratch_[spill++] = r;
      }
    }
    std::copy_n(scratch_.begin(), spill, order.begin() + static_cast<std::ptrdiff_t>(out));
  }

  const std::vector<std::size_t>& candidate_features() {
    if (subsampling_ == FeatureSubsampling::None || subset_size_ >= all_features_.size()) {
      return all_features_;
    }
    // Partial Fisher-Yates, then ascending order for the tie rule.
    pool_ = all_features_;
    for (std::size_t k = 0; k < subset_size_; ++k) {
      const std::size_t pick = k + static_cast<std::size_t>(rng_->below(pool_.size() - k));
      std::swap(pool_[k], pool_[pick]);
    }
    pool_.resize(subset_size_);
    std::sort(pool_.begin(), pool_.end());
    return pool_;
  }

  const Dataset& data_;
  const TreeConfig& cfg_;
  FeatureSubsampling subsampling_;
  Rng* rng_;
  detail::SplitScanner scanner_;
  std::vector<std::vector<std::size_t>> orders_;
  std::vector<unsigned char> goes_left_;
  std::vector<std::size_t> scratch_;
  std::vector<std::size_t> all_features_;
  std::vector<std::size_t> pool_;
  std::size_t subset_size_ = 0;
  std::vector<TreeNode> nodes_;
};

Tree grow_impl(const Dataset& data, std::span<const std::size_t> rows, const TreeConfig& cfg,
               FeatureSubsampling subsampling, Rng* rng) {
  cfg.validate();
  if (rows.empty()) throw Error(ErrorCode::EmptySet, "cannot grow a tree on zero rows");
  if (cfg.task != data.task()) throw Error(ErrorCode::InvalidConfig, "task does not match the data set");
  for (std::size_t r : rows) {
    if (r >= data.n_rows()) throw Error(ErrorCode::DimensionMismatch, "row index out of range");
  }
  Grower grower(data, rows, cfg, subsampling, rng);
  return Tree(data.task(), data.n_features(), grower.run());
}

}  // namespace

Tree grow(const Dataset& data, std::span<const std::size_t> rows, const TreeConfig& cfg) {
  return grow_impl(data, rows, cfg, FeatureSubsampling::None, nullptr);
}

Tree grow(const Dataset& data, std::span<const std::size_t> rows, const TreeConfig& cfg,
          FeatureSubsampling subsampling, Rng& rng) {
  return grow_impl(data, rows, cfg, subsampling, &rng);
}

double predict_one(const Tree& tree, std::span<const double> x) {
  if (x.size() != tree.n_features()) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(tree.n_features()) +
                                                  " features, got " + std::to_string(x.size()));
  }
  const TreeNode* nd = &tree.root();
  while (!nd->is_leaf()) {
    const auto next = x[nd->split.feature] <= nd->split.threshold ? nd->left : nd->right;
    nd = &tree.node(static_cast<std::size_t>(next));
  }
  return nd->value;
}

std::vector<double> feature_importance(const Tree& tree, std::size_t n_total) {
  std::vector<double> importance(tree.n_features(), 0.0);
  if (n_total == 0) return importance;
  const double n = static_cast<double>(n_total);
  for (const TreeNode& nd : tree.nodes()) {
    if (!nd.is_leaf()) importance[nd.split.feature] += static_cast<double>(nd.n) / n;
  }
  return importance;
}

}  // namespace irf
