#include <functional>
#include <numeric>

#include "doctest.h"
#include "irf/tree.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

using namespace irf;
using irf::test::column_dataset;

namespace {

TreeNode leaf(std::size_t n, double value) {
  TreeNode t;
  t.n = n;
  t.value = value;
  return t;
}

TreeNode internal(std::size_t feature, double c, std::int32_t l, std::int32_t r, std::size_t n) {
  TreeNode t;
  t.split = {feature, c};
  t.left = l;
  t.right = r;
  t.n = n;
  return t;
}

bool same_shape(const Tree& tree, std::size_t i, const oracle::CartNode& ref) {
  const TreeNode& nd = tree.node(i);
  if (nd.n != ref.n) return false;
  if (nd.is_leaf() != ref.leaf) return false;
  if (nd.is_leaf()) return nd.value == doctest::Approx(ref.value).epsilon(1e-12);
  return nd.split.feature == ref.feature && nd.split.threshold == ref.threshold &&
         same_shape(tree, static_cast<std::size_t>(nd.left), *ref.left) &&
         same_shape(tree, static_cast<std::size_t>(nd.right), *ref.right);
}

}  // namespace

TEST_CASE("tree config validation") {
  CHECK_IRF_ERROR(TreeConfig{.max_depth = 0}.validate(), ErrorCode::InvalidConfig);
  CHECK_IRF_ERROR(TreeConfig{.lambda = -1}.validate(), ErrorCode::InvalidConfig);
  CHECK_IRF_ERROR(TreeConfig{.min_leaf = 0}.validate(), ErrorCode::InvalidConfig);
}

TEST_CASE("one split separates four rows") {
  auto data = column_dataset({1, 2, 3, 4}, {0, 0, 1, 1}, Task::Classification);
  auto tree = grow(data, all_rows(data), {.max_depth = 1});
  REQUIRE(tree.nodes().size() == 3);
  CHECK_FALSE(tree.root().is_leaf());
  CHECK(tree.root().split == SplitCandidate{0, 2.5});
  CHECK(tree.node(static_cast<std::size_t>(tree.root().left)).value == 0.0);
  CHECK(tree.node(static_cast<std::size_t>(tree.root().right)).value == 1.0);
  CHECK(tree.depth() == 1);
  CHECK(tree.n_leaves() == 2);
}

TEST_CASE("constant labels give a single leaf") {
  auto data = column_dataset({1, 2, 3}, {1, 1, 1}, Task::Classification);
  auto tree = grow(data, all_rows(data), {.max_depth = 5});
  CHECK(tree.nodes().size() == 1);
  CHECK(tree.root().value == 1.0);
  auto reg = column_dataset({1, 2, 3}, {2.5, 2.5, 2.5}, Task::Regression);
  auto rt = grow(reg, all_rows(reg), {.max_depth = 5, .task = Task::Regression});
  CHECK(rt.nodes().size() == 1);
  CHECK(rt.root().value == 2.5);
}

TEST_CASE("invariant stump on the motivating example uses the stable feature") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto g = generate_classification(
        {.d = 1, .env_flips = {0.1, 0.4}, .noise_std = 0.0, .n_per_env = 2000, .seed = seed});
    auto rows = all_rows(g.data);
    CHECK(grow(g.data, rows, {.max_depth = 1, .lambda = 10}).root().split.feature == 0);
    CHECK(grow(g.data, rows, {.max_depth = 1, .lambda = 0}).root().split.feature == 1);
  }
}

TEST_CASE("prediction descends with x <= c to the left") {
  Tree single(Task::Classification, 3, {leaf(4, 0.25)});
  CHECK(predict_one(single, std::vector<double>{9, 9, 9}) == 0.25);

  Tree stump(Task::Regression, 2,
             {internal(1, 0.5, 1, 2, 10), leaf(4, -1.0), leaf(6, 3.0)});
  CHECK(predict_one(stump, std::vector<double>{0, 0.5}) == -1.0);
  CHECK(predict_one(stump, std::vector<double>{0, 0.5000001}) == 3.0);
  CHECK_IRF_ERROR(predict_one(stump, std::vector<double>{0}), ErrorCode::DimensionMismatch);
}

TEST_CASE("feature importance") {
  Tree single(Task::Classification, 3, {leaf(8, 0.5)});
  CHECK(feature_importance(single, 8) == std::vector<double>{0, 0, 0});

  Tree stump(Task::Classification, 3, {internal(2, 0.0, 1, 2, 8), leaf(3, 0), leaf(5, 1)});
  CHECK(feature_importance(stump, 8) == std::vector<double>{0, 0, 1.0});

  Tree two(Task::Classification, 3,
           {internal(0, 0.0, 1, 2, 8), internal(1, 0.0, 3, 4, 4), leaf(4, 1), leaf(2, 0),
            leaf(2, 1)});
  auto imp = feature_importance(two, 8);
  CHECK(imp[0] == doctest::Approx(1.0));
  CHECK(imp[1] == doctest::Approx(0.5));
  CHECK(imp[2] == 0.0);
}

TEST_CASE("importance sums match the internal-node bookkeeping") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    auto data = irf::test::random_dataset(rng, 60, 3, 2, Task::Classification);
    auto tree = grow(data, all_rows(data), {.max_depth = 6, .lambda = 1.0});
    double expected = 0;
    for (const auto& nd : tree.nodes())
      if (!nd.is_leaf()) expected += static_cast<double>(nd.n) / 60.0;
    auto imp = feature_importance(tree, 60);
    CHECK(std::accumulate(imp.begin(), imp.end(), 0.0) == doctest::Approx(expected));
    for (double v : imp) CHECK(v >= 0.0);
  }
}

TEST_CASE("malformed node arrays are rejected") {
  CHECK_IRF_ERROR(Tree(Task::Classification, 1, {}), ErrorCode::MalformedModel);
  CHECK_IRF_ERROR(Tree(Task::Classification, 1, {internal(0, 0, 1, 2, 5), leaf(2, 0), leaf(2, 1)}),
                  ErrorCode::MalformedModel);
  CHECK_IRF_ERROR(Tree(Task::Classification, 1, {internal(3, 0, 1, 2, 4), leaf(2, 0), leaf(2, 1)}),
                  ErrorCode::MalformedModel);
  CHECK_IRF_ERROR(Tree(Task::Classification, 1, {internal(0, 0, 0, 1, 4), leaf(4, 0)}),
                  ErrorCode::MalformedModel);
  CHECK_IRF_ERROR(Tree(Task::Classification, 1, {internal(0, 0, 1, 2, 4), leaf(2, 0), leaf(2, 1.5)}),
                  ErrorCode::MalformedModel);
  CHECK_IRF_ERROR(Tree(Task::Classification, 1, {leaf(2, 0), leaf(2, 1)}),
                  ErrorCode::MalformedModel);
}

TEST_CASE("single-environment growth matches a reference CART") {
  Rng rng(2718);
  for (int trial = 0; trial < 200; ++trial) {
    const Task task = trial % 2 ? Task::Regression : Task::Classification;
    const std::size_t n = 1 + rng.below(40);
    const std::size_t p = 1 + rng.below(4);
    auto data = irf::test::random_dataset(rng, n, p, 1, task);
    const std::size_t depth = 1 + rng.below(6);
    auto rows = all_rows(data);
    auto tree = grow(data, rows, {.max_depth = depth, .lambda = 0, .task = task});
    auto ref = oracle::cart(data, rows, 0, depth);
    CHECK_MESSAGE(same_shape(tree, 0, *ref), "trial " << trial);
  }
}

TEST_CASE("multi-environment invariant growth matches the oracle recursion") {
  Rng rng(1414);
  for (int trial = 0; trial < 100; ++trial) {
    const Task task = trial % 2 ? Task::Regression : Task::Classification;
    auto data = irf::test::random_dataset(rng, 40, 3, 3, task);
    auto rows = all_rows(data);
    auto tree = grow(data, rows, {.max_depth = 4, .lambda = 5.0, .task = task});
    auto ref = oracle::cart(data, rows, 0, 4, 5.0);
    CHECK_MESSAGE(same_shape(tree, 0, *ref), "trial " << trial);
  }
}

TEST_CASE("deep trees fit conflict-free training data exactly") {
  auto g = generate_classification({.d = 3, .n_per_env = 300, .seed = 12});
  auto tree = grow(g.data, all_rows(g.data), {.max_depth = 1000, .lambda = 0});
  for (std::size_t i = 0; i < g.data.n_rows(); ++i)
    CHECK(predict_one(tree, g.data.row(i)) == g.data.label(i));
}

TEST_CASE("growth is deterministic") {
  auto g = generate_regression({.d = 4, .n_per_env = 300, .seed = 1});
  auto rows = all_rows(g.data);
  TreeConfig cfg{.max_depth = 8, .lambda = 5, .task = Task::Regression};
  CHECK(grow(g.data, rows, cfg) == grow(g.data, rows, cfg));
  Rng a(9), b(9);
  CHECK(grow(g.data, rows, cfg, FeatureSubsampling::SqrtP, a) ==
        grow(g.data, rows, cfg, FeatureSubsampling::SqrtP, b));
}

TEST_CASE("child counts add up and leaves respect min_leaf") {
  auto g = generate_classification({.d = 2, .n_per_env = 200, .seed = 4});
  auto tree = grow(g.data, all_rows(g.data), {.max_depth = 12, .lambda = 1, .min_leaf = 5});
  CHECK(tree.root().n == g.data.n_rows());
  for (const auto& nd : tree.nodes()) {
    if (nd.is_leaf()) {
      CHECK(nd.n >= 5);
      CHECK(nd.value >= 0.0);
      CHECK(nd.value <= 1.0);
    }
  }
  CHECK(tree.depth() <= 12);
}
