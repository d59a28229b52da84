#include "irf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "irf/error.hpp"

namespace irf {

// Metrics ------------------------------------------------------------------

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch, "prediction and truth lengths differ (" +
                                               std::to_string(a.size()) + " vs " +
                                               std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw Error(ErrorCode::EmptySet, "metric of an empty vector");
}

}  // namespace

double accuracy(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double mse(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth);
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return total / static_cast<double>(pred.size());
}

double cross_entropy(std::span<const double> prob, std::span<const double> truth) {
  check_lengths(prob, truth);
  double total = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const double p = std::clamp(prob[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    total -= truth[i] * std::log(p) + (1.0 - truth[i]) * std::log(1.0 - p);
  }
  return total / static_cast<double>(prob.size());
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  for (double v : values) out.mean += v;
  out.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / (n - 1.0));
  }
  return out;
}

// Hyperparameter selection --------------------------------------------------

Protocol Protocol::defaults(Task task, Scenario scenario) {
  Protocol p;
  p.scenario = scenario;
  if (task == Task::Classification) {
    p.depth_grid = {5, 10, 15};
    p.fixed_depth = 10;
  } else {
    p.depth_grid = {10, 15, 20};
    p.fixed_depth = 20;
  }
  p.n_trees = (task == Task::Regression && scenario != Scenario::S1) ? 10 : 50;
  return p;
}

namespace {

std::size_t argmin_first(const std::vector<double>& losses) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < losses.size(); ++i) {
    if (losses[i] < losses[best]) best = i;
  }
  return best;
}

}  // namespace

Selection select_hyperparams(const Protocol& proto, const ValidationLoss& loss) {
  if (proto.scenario == Scenario::S1) {
    throw Error(ErrorCode::EmptyValidation, "scenario S1 has no validation set to select with");
  }
  if (proto.depth_grid.empty() || proto.lambda_grid.empty()) {
    throw Error(ErrorCode::InvalidConfig, "selection grids must be non-empty");
  }
  Selection sel;
  for (std::size_t depth : proto.depth_grid) sel.depth_losses.push_back(loss(depth, 0.0, true));
  sel.depth = proto.depth_grid[argmin_first(sel.depth_losses)];
  for (double lambda : proto.lambda_grid) sel.lambda_losses.push_back(loss(sel.depth, lambda, false));
  sel.lambda = proto.lambda_grid[argmin_first(sel.lambda_losses)];
  return sel;
}

Selection select_hyperparams(const Dataset& train, const Dataset& valid, const Protocol& proto,
                             std::uint64_t seed) {
  if (train.task() != valid.task()) {
    throw Error(ErrorCode::InvalidConfig, "training and validation tasks differ");
  }
  if (train.n_features() != valid.n_features()) {
    throw Error(ErrorCode::DimensionMismatch, "training and validation feature counts differ");
  }
  const auto loss = [&](std::size_t depth, double lambda, bool baseline) {
    ForestConfig cfg;
    cfg.n_trees = proto.n_trees;
    cfg.tree.max_depth = depth;
    cfg.tree.lambda = lambda;
    cfg.tree.task = train.task();
    cfg.subsampling = baseline ? FeatureSubsampling::SqrtP : FeatureSubsampling::None;
    cfg.seed = seed;
    const ForestModel model = fit(train, cfg);
    const auto avg = predict_average(model, valid);
    return train.task() == Task::Classification ? cross_entropy(avg, valid.labels())
                                                : mse(avg, valid.labels());
  };
  return select_hyperparams(proto, loss);
}

// Synthetic benchmark ------------------------------------------------------

std::vector<MethodSpec> default_methods() {
  return {
      {"RF", 0.0, FeatureSubsampling::SqrtP, true},
      {"IRF", 0.0, FeatureSubsampling::None, false},
      {"IRF", 1.0, FeatureSubsampling::None, false},
      {"IRF", 5.0, FeatureSubsampling::None, false},
      {"IRF", 10.0, FeatureSubsampling::None, false},
  };
}

namespace {

std::string method_label(const std::string& name, double lambda) {
  std::ostringstream s;
  s << name << " lambda=" << lambda;
  return s.str();
}

std::size_t default_depth(Task task) { return task == Task::Classification ? 10 : 20; }

// Stream tags keep the generated sets of different cells and roles apart.
enum : std::uint64_t { kTrainTag = 1, kTestTag = 2, kForestTag = 3 };

std::uint64_t cell_seed(Task task, std::size_t d, std::uint64_t seed, std::uint64_t role) {
  const std::uint64_t task_bit = task == Task::Classification ? 0 : 1;
  return derive_seed(seed, (static_cast<std::uint64_t>(d) << 8) | (task_bit << 4) | role);
}

}  // namespace

void BenchSettings::validate() const {
  if (dims.empty()) throw Error(ErrorCode::InvalidConfig, "no dimensions given");
  if (seeds.empty()) throw Error(ErrorCode::InvalidConfig, "no seeds given");
  if (methods.empty()) throw Error(ErrorCode::InvalidConfig, "no methods given");
  if (std::any_of(dims.begin(), dims.end(), [](std::size_t d) { return d == 0; })) {
    throw Error(ErrorCode::InvalidConfig, "dimensions must be positive");
  }
  if (n_per_env == 0 || n_trees == 0) {
    throw Error(ErrorCode::InvalidConfig, "n_per_env and n_trees must be positive");
  }
  const auto baselines = std::count_if(methods.begin(), methods.end(),
                                       [](const MethodSpec& m) { return m.baseline; });
  if (task == Task::Regression && baselines != 1) {
    throw Error(ErrorCode::InvalidConfig, "regression benchmark needs exactly one baseline method");
  }
}

SynthSplit make_synth_split(Task task, std::size_t d, std::uint64_t seed, std::size_t n_per_env) {
  if (task == Task::Classification) {
    ClassGenConfig train_cfg;
    train_cfg.d = d;
    train_cfg.env_flips = {0.1, 0.4};
    train_cfg.n_per_env = n_per_env;
    train_cfg.seed = cell_seed(task, d, seed, kTrainTag);
    ClassGenConfig test_cfg = train_cfg;
    test_cfg.env_flips = {0.7};
    test_cfg.seed = cell_seed(task, d, seed, kTestTag);
    return {generate_classification(train_cfg), generate_classification(test_cfg).data};
  }
  RegGenConfig train_cfg;
  train_cfg.d = d;
  train_cfg.env_noise_stds = {0.1, 2.0};
  train_cfg.n_per_env = n_per_env;
  train_cfg.seed = cell_seed(task, d, seed, kTrainTag);
  RegGenConfig test_cfg = train_cfg;
  test_cfg.env_noise_stds = {5.0};
  test_cfg.seed = cell_seed(task, d, seed, kTestTag);
  return {generate_regression(train_cfg), generate_regression(test_cfg).data};
}

CellResult run_cell(const GeneratedData& train, const Dataset& test, const MethodSpec& method,
                    std::size_t depth, std::size_t n_trees, std::uint64_t seed,
                    std::size_t n_threads, ForestModel* model_out) {
  const Task task = train.data.task();
  ForestConfig cfg;
  cfg.n_trees = n_trees;
  cfg.tree.max_depth = depth;
  cfg.tree.lambda = method.lambda;
  cfg.tree.task = task;
  cfg.subsampling = method.subsampling;
  cfg.seed = seed;
  cfg.n_threads = n_threads;
  ForestModel model = fit(train.data, cfg);

  CellResult cell;
  cell.task = task;
  cell.method = method.name;
  cell.lambda = method.lambda;
  cell.depth = depth;
  const auto pred = predict(model, test);
  cell.metric = task == Task::Classification ? 100.0 * accuracy(pred, test.labels())
                                             : mse(pred, test.labels());
  const auto imp = forest_importance(model);
  std::vector<bool> stable(imp.size(), false);
  for (std::size_t j : train.stable_features) stable[j] = true;
  for (std::size_t j = 0; j < imp.size(); ++j) {
    (stable[j] ? cell.stable_importance : cell.env_importance) += imp[j];
  }
  if (model_out != nullptr) *model_out = std::move(model);
  return cell;
}

const BenchRow* BenchReport::find(Task task, std::size_t d, const std::string& method,
                                  double lambda) const {
  for (const auto& r : rows) {
    if (r.task == task && r.d == d && r.method == method && r.lambda == lambda) return &r;
  }
  return nullptr;
}

const ImportanceRow* BenchReport::find_importance(Task task, std::size_t d,
                                                  const std::string& method, double lambda) const {
  for (const auto& r : importance) {
    if (r.task == task && r.d == d && r.method == method && r.lambda == lambda) return &r;
  }
  return nullptr;
}

void aggregate(BenchReport& report) {
  report.rows.clear();
  report.importance.clear();
  struct Group {
    const CellResult* first;
    std::vector<double> metric, stable, env;
  };
  std::vector<std::string> order;
  std::map<std::string, Group> groups;
  for (const CellResult& c : report.cells) {
    std::ostringstream key;
    key << to_string(c.task) << '|' << c.d << '|' << c.method << '|' << c.lambda;
    auto [it, inserted] = groups.try_emplace(key.str(), Group{&c, {}, {}, {}});
    if (inserted) order.push_back(key.str());
    it->second.metric.push_back(c.task == Task::Classification ? c.metric : c.ratio);
    it->second.stable.push_back(c.stable_importance);
    it->second.env.push_back(c.env_importance);
  }
  for (const auto& key : order) {
    const Group& g = groups.at(key);
    const CellResult& c = *g.first;
    report.rows.push_back(
        {c.task, c.d, c.method, c.lambda, c.depth, mean_std(g.metric), g.metric.size()});
    report.importance.push_back(
        {c.task, c.d, c.method, c.lambda, mean_std(g.stable), mean_std(g.env), g.stable.size()});
  }
}

BenchReport run_synth_bench(const BenchSettings& settings) {
  settings.validate();
  const std::size_t depth = settings.depth != 0 ? settings.depth : default_depth(settings.task);
  BenchReport report;
  report.n_per_env = settings.n_per_env;
  report.n_trees = settings.n_trees;
  for (std::size_t d : settings.dims) {
    for (std::uint64_t seed : settings.seeds) {
      const SynthSplit split = make_synth_split(settings.task, d, seed, settings.n_per_env);
      const std::uint64_t forest_seed = cell_seed(settings.task, d, seed, kForestTag);
      const std::size_t first = report.cells.size();
      double baseline_metric = 0.0;
      for (const MethodSpec& m : settings.methods) {
        CellResult cell = run_cell(split.train, split.test, m, depth, settings.n_trees, forest_seed,
                                   settings.n_threads);
        cell.d = d;
        cell.seed = seed;
        if (m.baseline) baseline_metric = cell.metric;
        report.cells.push_back(std::move(cell));
      }
      for (std::size_t i = first; i < report.cells.size(); ++i) {
        CellResult& c = report.cells[i];
        c.ratio = settings.task == Task::Regression ? c.metric / baseline_metric : 1.0;
      }
    }
  }
  aggregate(report);
  return report;
}

BenchReport run_importance_bench(Task task, const std::vector<std::size_t>& dims,
                                 const std::vector<std::uint64_t>& seeds,
                                 const std::vector<double>& lambdas, std::size_t n_per_env,
                                 std::size_t n_trees) {
  BenchSettings settings;
  settings.task = task;
  settings.dims = dims;
  settings.seeds = seeds;
  settings.n_per_env = n_per_env;
  settings.n_trees = n_trees;
  settings.methods.clear();
  for (double lambda : lambdas) {
    settings.methods.push_back({"IRF", lambda, FeatureSubsampling::None, lambda == lambdas.front()});
  }
  return run_synth_bench(settings);
}

// Report output --------------------------------------------------------------

void write_report_csv(const BenchReport& report, std::ostream& out) {
  out << "task,d,method,lambda,depth,metric_mean,metric_std,n_seeds\n";
  for (const BenchRow& r : report.rows) {
    out << to_string(r.task) << ',' << r.d << ',' << r.method << ',' << r.lambda << ',' << r.depth
        << ',' << std::fixed << std::setprecision(6) << r.metric.mean << ',' << r.metric.std
        << std::defaultfloat << std::setprecision(6) << ',' << r.n_seeds << '\n';
  }
}

void write_importance_csv(const BenchReport& report, std::ostream& out) {
  out << "task,d,method,lambda,stable_mean,stable_std,env_mean,env_std,n_seeds\n";
  for (const ImportanceRow& r : report.importance) {
    out << to_string(r.task) << ',' << r.d << ',' << r.method << ',' << r.lambda << ','
        << std::fixed << std::setprecision(6) << r.stable.mean << ',' << r.stable.std << ','
        << r.environmental.mean << ',' << r.environmental.std << std::defaultfloat
        << std::setprecision(6) << ',' << r.n_seeds << '\n';
  }
}

void write_report_text(const BenchReport& report, std::ostream& out) {
  out << "# synthetic benchmark: n_per_env=" << report.n_per_env << " trees=" << report.n_trees
      << "\n";
  out << "# metric: test accuracy in percent (cls) or test MSE relative to RF (reg)\n";
  out << std::left << std::setw(5) << "task" << std::right << std::setw(5) << "d" << "  "
      << std::left << std::setw(18) << "method" << std::right << std::setw(7) << "depth"
      << std::setw(12) << "mean" << std::setw(10) << "std" << std::setw(7) << "seeds" << '\n';
  for (const BenchRow& r : report.rows) {
    out << std::left << std::setw(5) << to_string(r.task) << std::right << std::setw(5) << r.d
        << "  " << std::left << std::setw(18) << method_label(r.method, r.lambda) << std::right << std::setw(7) << r.depth
        << std::fixed << std::setprecision(3) << std::setw(12) << r.metric.mean << std::setw(10)
        << r.metric.std << std::defaultfloat << std::setw(7) << r.n_seeds << '\n';
  }
  out << "\n# feature importance sums\n";
  out << std::left << std::setw(5) << "task" << std::right << std::setw(5) << "d" << "  "
      << std::left << std::setw(18) << "method" << std::right << std::setw(10) << "stable"
      << std::setw(9) << "(std)" << std::setw(10) << "env" << std::setw(9) << "(std)" << '\n';
  for (const ImportanceRow& r : report.importance) {
    out << std::left << std::setw(5) << to_string(r.task) << std::right << std::setw(5) << r.d
        << "  " << std::left << std::setw(18) << method_label(r.method, r.lambda) << std::right << std::fixed
        << std::setprecision(2) << std::setw(10) << r.stable.mean << std::setw(9) << r.stable.std
        << std::setw(10) << r.environmental.mean << std::setw(9) << r.environmental.std
        << std::defaultfloat << '\n';
  }
}

}  // namespace irf
