#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "geocnn/checkpoint.hpp"
#include "geocnn/dataset.hpp"
#include "geocnn/errors.hpp"
#include "geocnn/experiment.hpp"
#include "geocnn/kernels.hpp"
#include "geocnn/metrics.hpp"
#include "geocnn/training.hpp"

namespace fs = std::filesystem;
using namespace geocnn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitCellFailure = 3;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DataSource parse_synth(const std::string& spec) {
  DataSource d;
  d.synthetic = true;
  unsigned long long n = 0, side = 0, seed = 0;
  char tail = 0;
  if (std::sscanf(spec.c_str(), "%llu,%llu,%llu%c", &n, &side, &seed, &tail) != 3) {
    throw CLI::ValidationError("--synth", "expected n,side,seed");
  }
  d.synth_n = n;
  d.synth_side = side;
  d.synth_seed = seed;
  return d;
}

int finish_grid(const std::vector<ResultRow>& rows, const fs::path& out) {
  std::cout << results_to_markdown(rows);
  std::cout << read_file(out / "best.txt");
  for (const auto& r : rows) {
    if (r.failed) {
      std::cerr << "cell " << r.architecture << "/" << r.optimizer << "/" << r.lr
                << " failed: " << r.error << "\n";
    }
  }
  for (const auto& r : rows) {
    if (r.failed) return kExitCellFailure;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  kernels::tune_allocator();
  CLI::App app{"Convolutional land-structure classifier: train, grid, eval, report"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "train and evaluate a single configuration");
  std::string data_dir, synth_spec, arch = "cnn", opt = "rmsprop", out_dir;
  double lr = 1e-3;
  ExperimentGrid single;
  bool split_first = false;
  bool timing = false;
  auto* data_opt = train_cmd->add_option("--data", data_dir, "dataset root (<root>/<label>/<image>)");
  auto* synth_opt = train_cmd->add_option("--synth", synth_spec, "synthetic corpus n,side,seed");
  data_opt->excludes(synth_opt);
  train_cmd->add_option("--arch", arch, "cnn | mini-resnet | mini-inception")
      ->check(CLI::IsMember({"cnn", "mini-resnet", "mini-inception"}));
  train_cmd->add_option("--opt", opt, "adam | sgd | rmsprop")
      ->check(CLI::IsMember({"adam", "sgd", "rmsprop"}));
  train_cmd->add_option("--lr", lr, "learning rate")->check(CLI::PositiveNumber);
  train_cmd->add_option("--epochs", single.train.epochs)->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", single.train.batch_size)->check(CLI::PositiveNumber);
  train_cmd->add_option("--patience", single.train.patience)->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", single.train.seed);
  train_cmd->add_option("--augment-to", single.augment_to, "images per class after augmentation (0: none)");
  train_cmd->add_option("--size", single.image_size, "square input side (0: auto)");
  train_cmd->add_flag("--split-first", split_first, "split before augmenting; only train is augmented");
  train_cmd->add_flag("--timing", timing, "record wall time in results.csv");
  train_cmd->add_option("--out", out_dir, "output directory")->required();

  // grid
  auto* grid_cmd = app.add_subcommand("grid", "run an architecture x optimizer x lr grid");
  std::string config_path, grid_out;
  grid_cmd->add_option("--config", config_path, "grid JSON config")->required()->check(CLI::ExistingFile);
  grid_cmd->add_option("--out", grid_out, "output directory")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset directory");
  std::string ckpt_path, eval_data;
  eval_cmd->add_option("--checkpoint", ckpt_path)->required();
  eval_cmd->add_option("--data", eval_data)->required();

  // report
  auto* report_cmd = app.add_subcommand("report", "rebuild results.md and best.txt from results.csv");
  std::string report_in;
  report_cmd->add_option("--in", report_in, "grid output directory")->required();

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic texture corpus as PNGs");
  std::size_t synth_n = 100, synth_side = 32;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  synth_cmd->add_option("--n", synth_n, "images per class")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--side", synth_side, "image side in pixels");
  synth_cmd->add_option("--seed", synth_seed);
  synth_cmd->add_option("--out", synth_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) {
      if (data_opt->count() + synth_opt->count() != 1) {
        std::cerr << "train: exactly one of --data or --synth is required\n";
        return kExitUsage;
      }
      single.data = synth_opt->count() ? parse_synth(synth_spec) : DataSource{data_dir};
      single.architectures = {arch};
      single.optimizers = {optimizer_kind_from_string(opt)};
      single.learning_rates = {lr};
      single.split_first = split_first;
      single.record_timing = timing;
      single.out_dir = out_dir;
      return finish_grid(run_grid(single, true), single.out_dir);
    }
    if (*grid_cmd) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_file(config_path));
      } catch (const nlohmann::json::exception& e) {
        std::cerr << "config: " << e.what() << "\n";
        return kExitUsage;
      }
      ExperimentGrid grid = grid_from_json(j);
      grid.out_dir = grid_out;
      return finish_grid(run_grid(grid, true), grid.out_dir);
    }
    if (*eval_cmd) {
      const Network<float> net = load_checkpoint<float>(ckpt_path);
      Dataset ds = load_dataset(eval_data);
      if (ds.encoder.names() != net.class_names()) {
        throw DataError("dataset classes do not match the checkpoint's class names");
      }
      const Shape& in = net.input_shape();
      ds = resize_all(ds, in[0], in[1]);
      const Evaluation ev = evaluate(net, ds);
      const ConfusionMatrix cm = confusion_matrix(ds.labels(), ev.predictions, net.num_classes());
      std::printf("items: %zu\naccuracy_pct: %.2f\nloss: %.4f\n\n", ds.size(), accuracy_percent(cm),
                  ev.mean_loss);
      std::cout << report_to_text(classification_report(cm, ds.encoder.names()));
      return kExitOk;
    }
    if (*report_cmd) {
      const fs::path dir = report_in;
      const auto rows = results_from_csv(read_file(dir / "results.csv"));
      if (rows.empty()) throw DataError("results.csv has no rows");
      emit_report(rows, dir);
      std::cout << read_file(dir / "results.md") << read_file(dir / "best.txt");
      return kExitOk;
    }
    if (*synth_cmd) {
      save_dataset(synth_dataset(synth_n, synth_side, synth_seed), synth_out);
      std::printf("wrote %zu images to %s\n", 4 * synth_n, synth_out.c_str());
      return kExitOk;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
