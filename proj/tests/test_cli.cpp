#include <algorithm>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "irf/forest.hpp"
#include "test_util.hpp"

using namespace irf;
using irf::test::read_text;
using irf::test::TempDir;
using irf::test::write_text;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "irf");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

const char* kTenRows =
    "a,b,label,env\n"
    "0.1,5,0,x\n0.2,4,0,x\n0.3,3,0,y\n0.4,2,0,y\n0.5,1,0,x\n"
    "0.6,9,1,y\n0.7,8,1,x\n0.8,7,1,y\n0.9,6,1,x\n1.0,0,1,y\n";

}  // namespace

TEST_CASE("train writes a loadable model") {
  TempDir dir;
  write_text(dir.file("train.csv"), kTenRows);
  auto r = run_cli({"train", "--data", dir.file("train.csv").string(), "--label", "label", "--env",
                    "env", "--task", "cls", "--lambda", "1", "--depth", "3", "--trees", "5",
                    "--seed", "4", "--out", dir.file("m.json").string()});
  CHECK(r.code == 0);
  CHECK(r.err.empty());
  CHECK(r.out.find("task=cls\n") != std::string::npos);
  CHECK(r.out.find("depth=3\n") != std::string::npos);
  CHECK(r.out.find("lambda=1\n") != std::string::npos);
  CHECK(r.out.find("trees=5\n") != std::string::npos);
  CHECK(r.out.find("train_accuracy=") != std::string::npos);
  auto model = load_model(dir.file("m.json"));
  CHECK(model.trees.size() == 5);
  CHECK(model.n_features == 2);
  CHECK(model.config.tree.lambda == 1.0);
}

TEST_CASE("training is reproducible for a fixed seed") {
  TempDir dir;
  write_text(dir.file("train.csv"), kTenRows);
  for (const char* name : {"m1.json", "m2.json"}) {
    auto r = run_cli({"train", "--data", dir.file("train.csv").string(), "--label", "label",
                      "--env", "env", "--task", "reg", "--trees", "4", "--seed", "9", "--out",
                      dir.file(name).string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("train_mse=") != std::string::npos);
  }
  CHECK(read_text(dir.file("m1.json")) == read_text(dir.file("m2.json")));
}

TEST_CASE("train rejects a classification label of 3.5") {
  TempDir dir;
  write_text(dir.file("bad.csv"), "a,label,env\n1,0,x\n2,3.5,x\n");
  auto r = run_cli({"train", "--data", dir.file("bad.csv").string(), "--label", "label", "--env",
                    "env", "--task", "cls", "--out", dir.file("m.json").string()});
  CHECK(r.code == 1);
  CHECK(r.out.empty());
  CHECK(r.err.find("row 2") != std::string::npos);
  CHECK(r.err.find('\n') == r.err.size() - 1);
}

TEST_CASE("usage errors exit with 2") {
  TempDir dir;
  write_text(dir.file("train.csv"), kTenRows);
  const std::string data = dir.file("train.csv").string();
  const std::string out = dir.file("m.json").string();
  CHECK(run_cli({"train", "--data", data, "--label", "label", "--env", "env", "--task", "cls",
                 "--lambda", "-1", "--out", out})
            .code == 2);
  CHECK(run_cli({"train", "--data", data, "--label", "label", "--env", "env", "--task", "xyz",
                 "--out", out})
            .code == 2);
  CHECK(run_cli({"train", "--data", data, "--label", "label", "--env", "env", "--task", "cls",
                 "--bogus", "1", "--out", out})
            .code == 2);
  CHECK(run_cli({"train", "--data", data}).code == 2);
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"fly"}).code == 2);
  auto r = run_cli({"synth-bench", "--dims", "", "--out", dir.file("r.csv").string()});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("usage error:", 0) == 0);
  CHECK(run_cli({"synth-bench", "--dims", "2,x", "--out", dir.file("r.csv").string()}).code == 2);
  CHECK(run_cli({"synth-bench", "--seeds", "1,,2", "--out", dir.file("r.csv").string()}).code == 2);
}

TEST_CASE("predict") {
  TempDir dir;
  write_text(dir.file("train.csv"), kTenRows);
  write_text(dir.file("one_env.csv"),
             "a,b,label,env\n0.1,5,0,x\n0.2,4,1,x\n0.3,3,0,x\n0.4,2,1,x\n0.5,1,1,x\n0.6,0,0,x\n");
  auto r = run_cli({"train", "--data", dir.file("one_env.csv").string(), "--label", "label",
                    "--env", "env", "--task", "cls", "--lambda", "0", "--depth", "50", "--trees",
                    "1", "--out", dir.file("m.json").string()});
  REQUIRE(r.code == 0);
  auto p = run_cli({"predict", "--model", dir.file("m.json").string(), "--data",
                    dir.file("one_env.csv").string(), "--exclude", "label,env", "--out",
                    dir.file("pred.csv").string()});
  CHECK(p.code == 0);
  CHECK(p.out == "rows=6\n");
  const std::string pred = read_text(dir.file("pred.csv"));
  CHECK(pred.rfind("prediction\n", 0) == 0);
  CHECK(std::count(pred.begin(), pred.end(), '\n') == 7);

  SUBCASE("feature-count mismatch") {
    write_text(dir.file("p4.csv"), "a,b,c,d,label,env\n1,2,3,4,0,x\n5,6,7,8,1,x\n");
    REQUIRE(run_cli({"train", "--data", dir.file("p4.csv").string(), "--label", "label", "--env",
                     "env", "--task", "cls", "--trees", "2", "--out", dir.file("m4.json").string()})
                .code == 0);
    write_text(dir.file("p3.csv"), "a,b,c\n1,2,3\n");
    auto bad = run_cli({"predict", "--model", dir.file("m4.json").string(), "--data",
                        dir.file("p3.csv").string(), "--out", dir.file("o.csv").string()});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("DimensionMismatch") != std::string::npos);
  }
  SUBCASE("empty input") {
    write_text(dir.file("empty.csv"), "");
    auto bad = run_cli({"predict", "--model", dir.file("m.json").string(), "--data",
                        dir.file("empty.csv").string(), "--out", dir.file("o.csv").string()});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("EmptyFile") != std::string::npos);
  }
}

TEST_CASE("training accuracy is perfect for a deep tree on conflict-free data") {
  TempDir dir;
  write_text(dir.file("one_env.csv"),
             "a,b,label,env\n0.1,5,0,x\n0.2,4,1,x\n0.3,3,0,x\n0.4,2,1,x\n0.5,1,1,x\n0.6,0,0,x\n");
  // Each row is in roughly 63% of the bootstrap replicates.
  auto r = run_cli({"train", "--data", dir.file("one_env.csv").string(), "--label", "label",
                    "--env", "env", "--task", "cls", "--lambda", "0", "--depth", "50", "--trees",
                    "301", "--seed", "1", "--out", dir.file("m.json").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("train_accuracy=1.000000\n") != std::string::npos);
}

TEST_CASE("importance") {
  TempDir dir;
  write_text(dir.file("flat.csv"), "a,b,label,env\n1,2,1,x\n3,4,1,x\n5,6,1,x\n");
  REQUIRE(run_cli({"train", "--data", dir.file("flat.csv").string(), "--label", "label", "--env",
                   "env", "--task", "cls", "--trees", "3", "--out", dir.file("leaf.json").string()})
              .code == 0);
  auto leaf = run_cli({"importance", "--model", dir.file("leaf.json").string()});
  CHECK(leaf.code == 0);
  CHECK(leaf.out == "0,0\n1,0\n");

  write_text(dir.file("stump.csv"), "a,b,label,env\n1,0,0,x\n2,0,0,x\n3,0,1,x\n4,0,1,x\n");
  ForestModel m;
  m.task = Task::Classification;
  m.n_features = 2;
  m.config.n_trees = 1;
  TreeNode root, l, rr;
  root.split = {1, 0.5};
  root.left = 1;
  root.right = 2;
  root.n = 4;
  l.n = 2;
  rr.n = 2;
  rr.value = 1.0;
  m.trees.emplace_back(Task::Classification, 2, std::vector<TreeNode>{root, l, rr});
  save_model(m, dir.file("stump.json"));
  auto stump = run_cli({"importance", "--model", dir.file("stump.json").string()});
  CHECK(stump.code == 0);
  CHECK(stump.out == "1,1\n0,0\n");

  auto missing = run_cli({"importance", "--model", dir.file("nope.json").string()});
  CHECK(missing.code == 1);
  CHECK(missing.out.empty());
  CHECK(missing.err.rfind("error:", 0) == 0);
}

TEST_CASE("synth-bench writes both report tables") {
  TempDir dir;
  auto r = run_cli({"synth-bench", "--task", "both", "--dims", "2", "--seeds", "0,1",
                    "--n-per-env", "60", "--trees", "2", "--out", dir.file("r.csv").string(),
                    "--importance-out", dir.file("i.csv").string()});
  CHECK(r.code == 0);
  const std::string csv = read_text(dir.file("r.csv"));
  CHECK(csv.rfind("task,d,method,lambda,depth,metric_mean,metric_std,n_seeds\n", 0) == 0);
  CHECK(csv.find("\ncls,2,IRF,10,10,") != std::string::npos);
  CHECK(csv.find("\nreg,2,RF,0,20,1.000000,0.000000,2\n") != std::string::npos);
  CHECK(read_text(dir.file("i.csv")).find("reg,2,IRF,5,") != std::string::npos);
  CHECK(r.out.find("# feature importance sums") != std::string::npos);

  auto again = run_cli({"synth-bench", "--task", "both", "--dims", "2", "--seeds", "0,1",
                        "--n-per-env", "60", "--trees", "2", "--out", dir.file("r2.csv").string()});
  CHECK(again.code == 0);
  CHECK(read_text(dir.file("r2.csv")) == csv);
  CHECK(again.out == r.out);
}
