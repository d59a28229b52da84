#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "irf/data.hpp"
#include "irf/error.hpp"
#include "irf/eval.hpp"
#include "irf/forest.hpp"

namespace irf::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    std::string_view item(text.data() + start, comma - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    T value{};
    const auto res = std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw UsageError(std::string(flag) + ": malformed list '" + text + "'");
    }
    out.push_back(value);
    start = comma + 1;
  }
  return out;
}

struct TrainArgs {
  std::string data, label, env, task, out, valid;
  std::optional<double> lambda;
  std::optional<std::size_t> depth;
  std::optional<std::size_t> trees;
  std::uint64_t seed = 0;
  std::size_t min_leaf = 1;
  std::string subsample = "none";
};

struct PredictArgs {
  std::string model, data, out;
  std::vector<std::string> exclude;
};

struct BenchArgs {
  std::string task = "both";
  std::string dims = "2,5,10,20";
  std::string seeds = "0,1,2,3,4";
  std::string out;
  std::string importance_out;
  std::size_t n_per_env = 2000;
  std::size_t trees = 50;
};

void print_metric(std::ostream& out, Task task, const ForestModel& model, const Dataset& data) {
  const auto pred = predict(model, data);
  out << std::fixed << std::setprecision(6);
  if (task == Task::Classification) {
    out << "train_accuracy=" << accuracy(pred, data.labels()) << '\n';
  } else {
    out << "train_mse=" << mse(pred, data.labels()) << '\n';
  }
  out << std::defaultfloat;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const Task task = parse_task(a.task);
  const Dataset train = load_csv(a.data, a.label, a.env, task);

  ForestConfig cfg;
  cfg.tree.task = task;
  cfg.tree.min_leaf = a.min_leaf;
  cfg.seed = a.seed;
  cfg.subsampling = a.subsample == "sqrt" ? FeatureSubsampling::SqrtP : FeatureSubsampling::None;

  if (!a.valid.empty()) {
    const Dataset valid = load_csv(a.valid, a.label, a.env, task);
    Protocol proto = Protocol::defaults(task, Scenario::S3);
    if (a.depth) proto.depth_grid = {*a.depth};
    if (a.lambda) proto.lambda_grid = {*a.lambda};
    if (a.trees) proto.n_trees = *a.trees;
    const Selection sel = select_hyperparams(train, valid, proto, a.seed);
    cfg.tree.max_depth = sel.depth;
    cfg.tree.lambda = sel.lambda;
    cfg.n_trees = proto.n_trees;
    out << "selection=validation\n";
  } else {
    const Protocol proto = Protocol::defaults(task, Scenario::S1);
    cfg.tree.max_depth = a.depth.value_or(proto.fixed_depth);
    cfg.tree.lambda = a.lambda.value_or(0.0);
    cfg.n_trees = a.trees.value_or(proto.n_trees);
  }

  const ForestModel model = fit(train, cfg);
  save_model(model, a.out);
  out << "task=" << to_string(task) << '\n'
      << "depth=" << cfg.tree.max_depth << '\n'
      << "lambda=" << cfg.tree.lambda << '\n'
      << "trees=" << cfg.n_trees << '\n';
  print_metric(out, task, model, train);
  return kOk;
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  const ForestModel model = load_model(a.model);
  const FeatureTable table = load_features_csv(a.data, a.exclude);
  if (table.names.size() != model.n_features) {
    throw Error(ErrorCode::DimensionMismatch,
                "model expects " + std::to_string(model.n_features) + " features, " + a.data +
                    " has " + std::to_string(table.names.size()));
  }
  const auto pred = predict(model, table.rows);
  std::ofstream file(a.out);
  if (!file) throw Error(ErrorCode::IoError, "cannot write " + a.out);
  file << "prediction\n" << std::setprecision(17);
  for (double v : pred) file << v << '\n';
  if (!file) throw Error(ErrorCode::IoError, "write failed for " + a.out);
  out << "rows=" << pred.size() << '\n';
  return kOk;
}

int cmd_importance(const std::string& model_path, std::ostream& out) {
  const ForestModel model = load_model(model_path);
  const auto imp = forest_importance(model);
  std::vector<std::size_t> order(imp.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return imp[a] > imp[b]; });
  out << std::setprecision(17);
  for (std::size_t j : order) out << j << ',' << imp[j] << '\n';
  return kOk;
}

int cmd_synth_bench(const BenchArgs& a, std::ostream& out) {
  const auto dims = parse_list<std::size_t>(a.dims, "--dims");
  const auto seeds = parse_list<std::uint64_t>(a.seeds, "--seeds");
  if (std::find(dims.begin(), dims.end(), 0) != dims.end()) {
    throw UsageError("--dims: dimensions must be positive");
  }
  std::vector<Task> tasks;
  if (a.task == "both") {
    tasks = {Task::Classification, Task::Regression};
  } else {
    tasks = {parse_task(a.task)};
  }

  BenchReport combined;
  for (Task task : tasks) {
    BenchSettings settings;
    settings.task = task;
    settings.dims = dims;
    settings.seeds = seeds;
    settings.n_per_env = a.n_per_env;
    settings.n_trees = a.trees;
    BenchReport report = run_synth_bench(settings);
    combined.n_per_env = report.n_per_env;
    combined.n_trees = report.n_trees;
    combined.cells.insert(combined.cells.end(), report.cells.begin(), report.cells.end());
  }
  aggregate(combined);

  std::ofstream file(a.out);
  if (!file) throw Error(ErrorCode::IoError, "cannot write " + a.out);
  write_report_csv(combined, file);
  if (!file) throw Error(ErrorCode::IoError, "write failed for " + a.out);
  if (!a.importance_out.empty()) {
    std::ofstream imp(a.importance_out);
    if (!imp) throw Error(ErrorCode::IoError, "cannot write " + a.importance_out);
    write_importance_csv(combined, imp);
  }
  write_report_text(combined, out);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Invariant decision trees and random forests"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Fit a forest on a CSV file and save the model");
  train_cmd->add_option("--data", train.data, "Training CSV")->required();
  train_cmd->add_option("--label", train.label, "Label column")->required();
  train_cmd->add_option("--env", train.env, "Environment column")->required();
  train_cmd->add_option("--task", train.task, "cls or reg")
      ->required()
      ->check(CLI::IsMember({"cls", "reg"}));
  train_cmd->add_option("--lambda", train.lambda, "Invariance penalty weight (>= 0)")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--depth", train.depth, "Maximum tree depth")->check(CLI::PositiveNumber);
  train_cmd->add_option("--trees", train.trees, "Number of trees")->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", train.seed, "Random seed");
  train_cmd->add_option("--min-leaf", train.min_leaf, "Minimum rows per leaf")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--subsample", train.subsample, "Feature subsets per node: none or sqrt")
      ->check(CLI::IsMember({"none", "sqrt"}));
  train_cmd->add_option("--valid", train.valid, "Validation CSV; selects omitted depth/lambda");
  train_cmd->add_option("--out", train.out, "Model output path")->required();

  PredictArgs pred;
  auto* predict_cmd = app.add_subcommand("predict", "Predict every row of a CSV file");
  predict_cmd->add_option("--model", pred.model, "Model file")->required();
  predict_cmd->add_option("--data", pred.data, "Input CSV")->required();
  predict_cmd->add_option("--out", pred.out, "Prediction CSV output")->required();
  predict_cmd->add_option("--exclude", pred.exclude, "Columns to ignore (e.g. label, env)")
      ->delimiter(',');

  std::string importance_model;
  auto* importance_cmd = app.add_subcommand("importance", "Print per-feature importance");
  importance_cmd->add_option("--model", importance_model, "Model file")->required();

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("synth-bench", "Run the synthetic benchmark");
  bench_cmd->add_option("--task", bench.task, "cls, reg or both")
      ->check(CLI::IsMember({"cls", "reg", "both"}));
  bench_cmd->add_option("--dims", bench.dims, "Comma-separated dimensions");
  bench_cmd->add_option("--seeds", bench.seeds, "Comma-separated seeds");
  bench_cmd->add_option("--n-per-env", bench.n_per_env, "Rows per environment")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--trees", bench.trees, "Trees per forest")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", bench.out, "Report CSV output")->required();
  bench_cmd->add_option("--importance-out", bench.importance_out, "Importance CSV output");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (*train_cmd) return cmd_train(train, out);
    if (*predict_cmd) return cmd_predict(pred, out);
    if (*importance_cmd) return cmd_importance(importance_model, out);
    if (*bench_cmd) return cmd_synth_bench(bench, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace irf::cli
