#include "irf/forest.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "irf/error.hpp"

namespace irf {

void ForestConfig::validate() const {
  if (n_trees < 1) throw Error(ErrorCode::InvalidConfig, "n_trees must be >= 1");
  tree.validate();
}

std::vector<std::size_t> bootstrap_by_env(const Dataset& data, Rng& rng) {
  const auto groups = partition_by_env(data);
  std::vector<std::size_t> sample;
  sample.reserve(data.n_rows());
  for (const auto& members : groups) {
    for (std::size_t k = 0; k < members.size(); ++k) {
      sample.push_back(members[static_cast<std::size_t>(rng.below(members.size()))]);
    }
  }
  return sample;
}

namespace {

Tree fit_one(const Dataset& data, const ForestConfig& cfg, std::size_t index) {
  Rng rng(derive_seed(cfg.seed, index));
  const Dataset sample = data.select(bootstrap_by_env(data, rng));
  const auto rows = all_rows(sample);
  return grow(sample, rows, cfg.tree, cfg.subsampling, rng);
}

}  // namespace

ForestModel fit(const Dataset& data, const ForestConfig& cfg) {
  cfg.validate();
  if (cfg.tree.task != data.task()) {
    throw Error(ErrorCode::InvalidConfig, "forest task does not match the data set");
  }
  std::vector<std::optional<Tree>> slots(cfg.n_trees);
  std::size_t workers = cfg.n_threads != 0 ? cfg.n_threads : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, cfg.n_trees);

  if (workers == 1) {
    for (std::size_t t = 0; t < cfg.n_trees; ++t) slots[t] = fit_one(data, cfg, t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t t = next++; t < cfg.n_trees; t = next++) slots[t] = fit_one(data, cfg, t);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }

  ForestModel model;
  model.task = data.task();
  model.n_features = data.n_features();
  model.config = cfg;
  model.trees.reserve(cfg.n_trees);
  for (auto& slot : slots) model.trees.push_back(std::move(*slot));
  return model;
}

namespace {

void check_model(const ForestModel& model) {
  if (model.trees.empty()) throw Error(ErrorCode::MalformedModel, "forest has no trees");
}

double average_one(const ForestModel& model, std::span<const double> x) {
  double total = 0.0;
  for (const Tree& tree : model.trees) total += predict_one(tree, x);
  return total / static_cast<double>(model.trees.size());
}

double finalize(const ForestModel& model, double average) {
  if (model.task == Task::Regression) return average;
  return average > 0.5 ? 1.0 : 0.0;
}

}  // namespace

std::vector<double> predict_average(const ForestModel& model,
                                    const std::vector<std::vector<double>>& rows) {
  check_model(model);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& x : rows) out.push_back(average_one(model, x));
  return out;
}

std::vector<double> predict_average(const ForestModel& model, const Dataset& data) {
  check_model(model);
  if (data.n_features() != model.n_features) {
    throw Error(ErrorCode::DimensionMismatch,
                "model expects " + std::to_string(model.n_features) + " features, data has " +
                    std::to_string(data.n_features()));
  }
  std::vector<double> out(data.n_rows());
  std::vector<double> x(data.n_features());
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = data.feature(i, j);
    out[i] = average_one(model, x);
  }
  return out;
}

std::vector<double> predict(const ForestModel& model, const Dataset& data) {
  auto out = predict_average(model, data);
  for (double& v : out) v = finalize(model, v);
  return out;
}

std::vector<double> predict(const ForestModel& model, const std::vector<std::vector<double>>& rows) {
  auto out = predict_average(model, rows);
  for (double& v : out) v = finalize(model, v);
  return out;
}

std::vector<double> forest_importance(const ForestModel& model) {
  check_model(model);
  std::vector<double> total(model.n_features, 0.0);
  for (const Tree& tree : model.trees) {
    const auto imp = feature_importance(tree, tree.root().n);
    for (std::size_t j = 0; j < total.size(); ++j) total[j] += imp[j];
  }
  for (double& v : total) v /= static_cast<double>(model.trees.size());
  return total;
}

// Persistence --------------------------------------------------------------

namespace {

using nlohmann::json;

constexpr const char* kFormatName = "irf-forest";

json node_to_json(const Tree& tree, std::size_t index) {
  const TreeNode& nd = tree.node(index);
  if (nd.is_leaf()) return json{{"pred", nd.value}, {"n", nd.n}};
  return json{{"j", nd.split.feature},
              {"c", nd.split.threshold},
              {"n", nd.n},
              {"left", node_to_json(tree, static_cast<std::size_t>(nd.left))},
              {"right", node_to_json(tree, static_cast<std::size_t>(nd.right))}};
}

std::int32_t node_from_json(const json& j, std::vector<TreeNode>& nodes) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedModel, "tree node is not an object");
  const auto index = static_cast<std::int32_t>(nodes.size());
  nodes.emplace_back();
  TreeNode nd;
  nd.n = j.at("n").get<std::size_t>();
  if (j.contains("pred")) {
    nd.value = j.at("pred").get<double>();
  } else {
    nd.split.feature = j.at("j").get<std::size_t>();
    nd.split.threshold = j.at("c").get<double>();
    nd.left = node_from_json(j.at("left"), nodes);
    nd.right = node_from_json(j.at("right"), nodes);
  }
  nodes[static_cast<std::size_t>(index)] = nd;
  return index;
}

const char* subsampling_name(FeatureSubsampling s) {
  return s == FeatureSubsampling::SqrtP ? "sqrt" : "none";
}

FeatureSubsampling parse_subsampling(const std::string& s) {
  if (s == "none") return FeatureSubsampling::None;
  if (s == "sqrt") return FeatureSubsampling::SqrtP;
  throw Error(ErrorCode::MalformedModel, "unknown feature subsampling '" + s + "'");
}

}  // namespace

std::string model_to_string(const ForestModel& model) {
  check_model(model);
  const ForestConfig& cfg = model.config;
  json trees = json::array();
  for (const Tree& tree : model.trees) trees.push_back(node_to_json(tree, 0));
  const json doc{{"format", kFormatName},
                 {"version", kModelFormatVersion},
                 {"task", to_string(model.task)},
                 {"n_features", model.n_features},
                 {"config",
                  {{"n_trees", cfg.n_trees},
                   {"max_depth", cfg.tree.max_depth},
                   {"lambda", cfg.tree.lambda},
                   {"min_leaf", cfg.tree.min_leaf},
                   {"subsampling", subsampling_name(cfg.subsampling)},
                   {"seed", cfg.seed}}},
                 {"trees", std::move(trees)}};
  return doc.dump(1) + "\n";
}

ForestModel model_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedModel, std::string("unparseable model: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != kFormatName) {
      throw Error(ErrorCode::MalformedModel, "not an irf-forest document");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(ErrorCode::VersionMismatch, "model version " + std::to_string(version) +
                                                  " (supported: " +
                                                  std::to_string(kModelFormatVersion) + ")");
    }
    ForestModel model;
    model.task = parse_task(doc.at("task").get<std::string>());
    model.n_features = doc.at("n_features").get<std::size_t>();
    const json& cfg = doc.at("config");
    model.config.n_trees = cfg.at("n_trees").get<std::size_t>();
    model.config.tree.max_depth = cfg.at("max_depth").get<std::size_t>();
    model.config.tree.lambda = cfg.at("lambda").get<double>();
    model.config.tree.min_leaf = cfg.at("min_leaf").get<std::size_t>();
    model.config.tree.task = model.task;
    model.config.subsampling = parse_subsampling(cfg.at("subsampling").get<std::string>());
    model.config.seed = cfg.at("seed").get<std::uint64_t>();
    for (const json& t : doc.at("trees")) {
      std::vector<TreeNode> nodes;
      node_from_json(t, nodes);
      model.trees.emplace_back(model.task, model.n_features, std::move(nodes));
    }
    if (model.trees.empty() || model.trees.size() != model.config.n_trees) {
      throw Error(ErrorCode::MalformedModel, "tree count disagrees with the config");
    }
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedModel, std::string("bad model field: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::VersionMismatch || e.code() == ErrorCode::MalformedModel) throw;
    throw Error(ErrorCode::MalformedModel, e.what());
  }
}

void save_model(const ForestModel& model, const std::filesystem::path& path) {
  const std::string text = model_to_string(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

ForestModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_string(buf.str());
}

}  // namespace irf
