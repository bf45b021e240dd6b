#include <fstream>
#include <sstream>

#include "doctest.h"
#include "geocnn/experiment.hpp"
#include "temp_dir.hpp"

using namespace geocnn;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

ExperimentGrid tiny_grid(const fs::path& out) {
  ExperimentGrid g;
  g.architectures = {"cnn"};
  g.optimizers = {OptimizerKind::rmsprop};
  g.learning_rates = {1e-3};
  g.train.epochs = 2;
  g.train.batch_size = 8;
  g.train.seed = 11;
  g.data.synthetic = true;
  g.data.synth_n = 8;
  g.data.synth_side = 22;
  g.data.synth_seed = 4;
  g.augment_to = 10;
  g.out_dir = out;
  return g;
}

ResultRow row(const char* arch, const char* opt, double lr, double acc, double loss) {
  ResultRow r;
  r.architecture = arch;
  r.optimizer = opt;
  r.lr = lr;
  r.accuracy_pct = acc;
  r.loss = loss;
  r.epochs_run = 10;
  return r;
}

}  // namespace

TEST_CASE("grid config parsing and defaults") {
  const auto j = nlohmann::json::parse(R"({
    "architectures": ["cnn", "mini-resnet"],
    "optimizers": ["adam", "sgd", "rmsprop"],
    "learning_rates": [0.001, 0.0001],
    "epochs": 7, "batch_size": 16, "patience": 3, "seed": 99,
    "data": {"synth": {"n": 5, "side": 24, "seed": 2}}
  })");
  const ExperimentGrid g = grid_from_json(j);
  CHECK(g.cell_count() == 12);
  CHECK(g.train.epochs == 7);
  CHECK(g.train.batch_size == 16);
  CHECK(g.train.patience == 3);
  CHECK(g.train.seed == 99);
  CHECK(g.augment_to == 3500);
  CHECK(g.split.train == 0.6);
  CHECK(g.split.test == 0.3);
  CHECK(g.split.val == 0.1);
  CHECK(g.data.synthetic);
  CHECK(g.data.synth_side == 24);

  CHECK_THROWS_AS(grid_from_json(nlohmann::json::parse(R"({"data": {"root": "x"}, "epoch": 3})")), Error);
  CHECK_THROWS_AS(grid_from_json(nlohmann::json::parse(R"({"optimizers": ["adagrad"], "data": {"root": "x"}})")), Error);
  CHECK_THROWS_AS(grid_from_json(nlohmann::json::parse(R"({"split": [0.5, 0.5], "data": {"root": "x"}})")), Error);
  CHECK_THROWS_AS(grid_from_json(nlohmann::json::parse(R"({"epochs": 3})")), Error);
  ExperimentGrid empty_axis = g;
  empty_axis.optimizers.clear();
  CHECK_THROWS_AS(empty_axis.validate(), Error);
}

TEST_CASE("cell names") {
  CHECK(cell_name({"cnn", OptimizerKind::rmsprop, 1e-4}) == "cnn-rmsprop-lr0.0001");
  CHECK(cell_name({"mini-resnet", OptimizerKind::adam, 1e-3}) == "mini-resnet-adam-lr0.001");
}

TEST_CASE("optimizer x learning-rate grid gives six rows in table order") {
  TempDir tmp;
  ExperimentGrid g = tiny_grid(tmp.path());
  g.optimizers = {OptimizerKind::adam, OptimizerKind::sgd, OptimizerKind::rmsprop};
  g.learning_rates = {1e-3, 1e-4};
  g.train.epochs = 1;
  const auto rows = run_grid(g);
  REQUIRE(rows.size() == 6);
  const char* opts[] = {"adam", "adam", "sgd", "sgd", "rmsprop", "rmsprop"};
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(rows[i].optimizer == opts[i]);
    CHECK(rows[i].lr == (i % 2 == 0 ? 1e-3 : 1e-4));
    CHECK_FALSE(rows[i].failed);
    CHECK(rows[i].accuracy_pct >= 0.0);
    CHECK(rows[i].accuracy_pct <= 100.0);
    CHECK(rows[i].loss >= 0.0);
  }
  CHECK(count_lines(slurp(tmp.path() / "results.csv")) == 7);
}

TEST_CASE("single-cell grid writes every artifact") {
  TempDir tmp;
  const auto rows = run_grid(tiny_grid(tmp.path()));
  CHECK(rows.size() == 1);
  const fs::path cell = tmp.path() / "cnn-rmsprop-lr0.001";
  for (const char* f : {"history.csv", "confusion.csv", "report.csv", "report.txt", "checkpoint.lnck"}) {
    CAPTURE(f);
    CHECK(fs::is_regular_file(cell / f));
  }
  for (const char* f : {"results.csv", "results.md", "best.txt"}) CHECK(fs::is_regular_file(tmp.path() / f));
  CHECK(count_lines(slurp(cell / "history.csv")) == 1 + rows[0].epochs_run);
  CHECK(slurp(cell / "history.csv").rfind("epoch,train_loss,train_acc,val_loss,val_acc\n", 0) == 0);
  // 10 per class after augmentation, 3 of them in the test split
  CHECK(slurp(cell / "report.csv").find("accuracy,,,") != std::string::npos);
  CHECK(slurp(cell / "report.csv").find(",3\n") != std::string::npos);
}

TEST_CASE("same grid and seed twice gives byte-identical outputs") {
  TempDir a, b;
  ExperimentGrid g = tiny_grid(a.path());
  g.optimizers = {OptimizerKind::adam, OptimizerKind::sgd};
  run_grid(g);
  g.out_dir = b.path();
  run_grid(g);
  for (const char* f : {"results.csv", "results.md", "best.txt", "cnn-adam-lr0.001/history.csv",
                        "cnn-sgd-lr0.001/checkpoint.lnck", "cnn-adam-lr0.001/confusion.csv"}) {
    CAPTURE(f);
    CHECK(slurp(a.path() / f) == slurp(b.path() / f));
  }
}

TEST_CASE("a failing cell is recorded and the rest still run") {
  TempDir tmp;
  ExperimentGrid g = tiny_grid(tmp.path());
  g.architectures = {"cnn", "mini-resnet"};
  g.image_size = 16;  // too small for the baseline CNN
  const auto rows = run_grid(g);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].failed);
  CHECK(rows[0].error.find("too small") != std::string::npos);
  CHECK_FALSE(rows[1].failed);
  const std::string csv = slurp(tmp.path() / "results.csv");
  CHECK(csv.find("cnn,rmsprop,0.001,FAILED,,0,0\n") != std::string::npos);
  CHECK(slurp(tmp.path() / "best.txt").find("mini-resnet") != std::string::npos);
}

TEST_CASE("best row: highest accuracy, ties to lower loss") {
  TempDir tmp;
  emit_report({row("cnn", "rmsprop", 1e-4, 94.8, 0.1727)}, tmp.path());
  CHECK(slurp(tmp.path() / "best.txt") ==
        "best: cnn / rmsprop / lr 0.0001\ncell: cnn-rmsprop-lr0.0001\naccuracy_pct: 94.80\n"
        "loss: 0.1727\nepochs_run: 10\n");

  std::vector<ResultRow> rows = {row("cnn", "adam", 1e-3, 92.1, 0.2331),
                                 row("cnn", "rmsprop", 1e-3, 92.1, 0.2530),
                                 row("cnn", "sgd", 1e-3, 61.3, 1.0444)};
  CHECK(best_row(rows) == std::optional<std::size_t>(0));
  rows[0].loss = 0.3;
  CHECK(best_row(rows) == std::optional<std::size_t>(1));
  rows[1].failed = true;
  CHECK(best_row(rows) == std::optional<std::size_t>(0));
  for (auto& r : rows) r.failed = true;
  CHECK_FALSE(best_row(rows).has_value());
  CHECK_THROWS_AS(emit_report({}, tmp.path()), Error);
}

TEST_CASE("results csv round trip and markdown table") {
  std::vector<ResultRow> rows = {row("cnn", "adam", 1e-3, 92.1, 0.2331), row("cnn", "sgd", 1e-4, 0, 0)};
  rows[1].failed = true;
  const std::string csv = results_to_csv(rows);
  CHECK(csv ==
        "architecture,optimizer,lr,accuracy_pct,loss,epochs_run,seconds\n"
        "cnn,adam,0.001,92.10,0.2331,10,0.0\n"
        "cnn,sgd,0.0001,FAILED,,0,0\n");
  const auto back = results_from_csv(csv);
  REQUIRE(back.size() == 2);
  CHECK(back[0].accuracy_pct == 92.1);
  CHECK(back[1].failed);
  CHECK(results_to_csv(back) == csv);
  const std::string md = results_to_markdown(rows);
  CHECK(md.find("| Model | Optimizer | Learning rate | Accuracy (%) | Loss   | Epochs | Time (s) |") == 0);
  CHECK(md.find("| cnn   | sgd       | 0.0001        | failed       |") != std::string::npos);
  CHECK_THROWS_AS(results_from_csv("bogus\n"), DataError);
}

TEST_CASE("history csv has one line per epoch") {
  TrainHistory h;
  for (std::size_t e = 1; e <= 23; ++e) h.epochs.push_back({e, 1.0, 0.5, 1.0, 0.5});
  CHECK(count_lines(history_to_csv(h)) == 24);
}

TEST_CASE("data preparation: augment then split, or split first") {
  ExperimentGrid g = tiny_grid("");
  g.data.synth_n = 12;
  g.augment_to = 20;
  const Splits s = prepare_data(g);
  CHECK(s.train.class_counts() == std::vector<std::size_t>(4, 12));
  CHECK(s.test.class_counts() == std::vector<std::size_t>(4, 6));
  CHECK(s.val.class_counts() == std::vector<std::size_t>(4, 2));

  g.split_first = true;
  const Splits f = prepare_data(g);
  CHECK(f.train.class_counts() == std::vector<std::size_t>(4, 12));  // round(20 * 0.6)
  CHECK(f.test.class_counts() == std::vector<std::size_t>(4, 4));    // 12 originals: 7 / 4 / 1
  for (const auto& item : f.test.items) CHECK_FALSE(item.origin.augmented);
  for (const auto& item : f.val.items) CHECK_FALSE(item.origin.augmented);

  g.split_first = false;
  g.image_size = 30;
  CHECK(prepare_data(g).train.items[0].pixels.shape() == Shape{30, 30, 3});
}
