#include "geocnn/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "geocnn/architectures.hpp"
#include "geocnn/checkpoint.hpp"
#include "geocnn/errors.hpp"
#include "geocnn/metrics.hpp"
#include "geocnn/rng.hpp"

namespace geocnn {

namespace fs = std::filesystem;

namespace {

// Sub-seeds for the independent pipeline stages.
constexpr std::uint64_t kAugmentStream = 0x6175676d;
constexpr std::uint64_t kSplitStream = 0x73706c74;
constexpr std::uint64_t kInitStream = 0x696e6974;

std::uint64_t stage_seed(std::uint64_t seed, std::uint64_t stream) { return mix64(seed ^ mix64(stream)); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  }
}

Dataset augment_split_train(const Dataset& train, const ExperimentGrid& grid, std::uint64_t seed) {
  const auto target = static_cast<std::size_t>(
      std::llround(static_cast<double>(grid.augment_to) * grid.split.train));
  return augment_to_count(train, target, seed);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::size_t ExperimentGrid::cell_count() const {
  return architectures.size() * optimizers.size() * learning_rates.size();
}

void ExperimentGrid::validate() const {
  if (architectures.empty() || optimizers.empty() || learning_rates.empty()) {
    throw Error("grid axes (architectures, optimizers, learning_rates) must be non-empty");
  }
  for (const auto& a : architectures) {
    if (!is_known_architecture(a)) {
      throw Error("unknown architecture '" + a + "' (expected cnn, mini-resnet or mini-inception)");
    }
  }
  for (double lr : learning_rates) {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw Error("learning rates must be positive");
  }
  train.validate();
  split.validate();
  if (data.synthetic) {
    if (data.synth_n == 0 || data.synth_side < 8) {
      throw DataError("synthetic data needs n >= 1 and side >= 8");
    }
  } else if (data.root.empty()) {
    throw DataError("no data source given");
  }
}

ExperimentGrid grid_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "architectures", "optimizers", "learning_rates", "epochs",      "batch_size",
      "patience",      "seed",       "data",           "augment_to",  "split",
      "image_size",    "split_first", "record_timing"};
  if (!j.is_object()) throw Error("grid config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw Error("unknown grid config key '" + key + "'");
  }
  ExperimentGrid g;
  try {
    if (j.contains("architectures")) g.architectures = j.at("architectures").get<std::vector<std::string>>();
    if (j.contains("optimizers")) {
      g.optimizers.clear();
      for (const auto& name : j.at("optimizers").get<std::vector<std::string>>()) {
        g.optimizers.push_back(optimizer_kind_from_string(name));
      }
    }
    if (j.contains("learning_rates")) g.learning_rates = j.at("learning_rates").get<std::vector<double>>();
    if (j.contains("epochs")) g.train.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("batch_size")) g.train.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("patience")) g.train.patience = j.at("patience").get<std::size_t>();
    if (j.contains("seed")) g.train.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("augment_to")) g.augment_to = j.at("augment_to").get<std::size_t>();
    if (j.contains("image_size")) g.image_size = j.at("image_size").get<std::size_t>();
    if (j.contains("split_first")) g.split_first = j.at("split_first").get<bool>();
    if (j.contains("record_timing")) g.record_timing = j.at("record_timing").get<bool>();
    if (j.contains("split")) {
      const auto s = j.at("split").get<std::vector<double>>();
      if (s.size() != 3) throw Error("split must list three fractions [train, test, val]");
      g.split = {s[0], s[1], s[2]};
    }
    if (!j.contains("data")) throw Error("grid config needs a 'data' entry");
    const auto& d = j.at("data");
    if (d.contains("root")) {
      g.data.root = d.at("root").get<std::string>();
    } else if (d.contains("synth")) {
      const auto& s = d.at("synth");
      g.data.synthetic = true;
      g.data.synth_n = s.at("n").get<std::size_t>();
      g.data.synth_side = s.at("side").get<std::size_t>();
      g.data.synth_seed = s.value("seed", std::uint64_t{0});
    } else {
      throw Error("'data' needs either 'root' or 'synth'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed grid config: ") + e.what());
  }
  return g;
}

std::string cell_name(const CellSpec& cell) {
  return cell.architecture + "-" + std::string(to_string(cell.optimizer)) + "-lr" + fmt("%g", cell.lr);
}

Splits prepare_data(const ExperimentGrid& grid) {
  Dataset ds = grid.data.synthetic
                   ? synth_dataset(grid.data.synth_n, grid.data.synth_side, grid.data.synth_seed)
                   : load_dataset(grid.data.root);
  const std::size_t size =
      grid.image_size ? grid.image_size : (grid.data.synthetic ? grid.data.synth_side : 224);
  bool uniform = true;
  for (const auto& item : ds.items) {
    uniform = uniform && item.pixels.dim(0) == size && item.pixels.dim(1) == size;
  }
  if (!uniform) ds = resize_all(ds, size, size);

  const std::uint64_t seed = grid.train.seed;
  if (grid.split_first) {
    Splits s = stratified_split(ds, grid.split, stage_seed(seed, kSplitStream));
    if (grid.augment_to) s.train = augment_split_train(s.train, grid, stage_seed(seed, kAugmentStream));
    return s;
  }
  if (grid.augment_to) ds = augment_to_count(ds, grid.augment_to, stage_seed(seed, kAugmentStream));
  return stratified_split(ds, grid.split, stage_seed(seed, kSplitStream));
}

std::string history_to_csv(const TrainHistory& history) {
  std::string out = "epoch,train_loss,train_acc,val_loss,val_acc\n";
  char buf[160];
  for (const auto& e : history.epochs) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f\n", e.epoch, e.train_loss, e.train_acc,
                  e.val_loss, e.val_acc);
    out += buf;
  }
  return out;
}

ResultRow run_cell(const CellSpec& cell, const ExperimentGrid& grid, const Splits& data,
                   const fs::path& cell_dir) {
  const auto start = std::chrono::steady_clock::now();
  make_dir(cell_dir);
  const std::size_t k = data.train.encoder.size();
  const Shape input = data.train.items.at(0).pixels.shape();

  Rng init = Rng(stage_seed(grid.train.seed, kInitStream));
  Network<float> net = build_architecture<float>(cell.architecture, input, k, init);
  net.set_class_names(data.train.encoder.names());

  TrainConfig cfg = grid.train;
  cfg.optimizer.kind = cell.optimizer;
  cfg.optimizer.lr = cell.lr;
  const TrainHistory history = train(net, data.train, data.val, cfg);

  const Evaluation test = evaluate(net, data.test);
  const ConfusionMatrix cm = confusion_matrix(data.test.labels(), test.predictions, k);
  const ClassificationReport report = classification_report(cm, data.test.encoder.names());

  write_text(cell_dir / "history.csv", history_to_csv(history));
  write_text(cell_dir / "confusion.csv", confusion_to_csv(cm, data.test.encoder.names()));
  write_text(cell_dir / "report.csv", report_to_csv(report));
  write_text(cell_dir / "report.txt", report_to_text(report));
  save_checkpoint(net, cell_dir / "checkpoint.lnck");

  ResultRow row;
  row.architecture = cell.architecture;
  row.optimizer = std::string(to_string(cell.optimizer));
  row.lr = cell.lr;
  row.accuracy_pct = accuracy_percent(cm);
  row.loss = test.mean_loss;
  row.epochs_run = history.epochs.size();
  if (grid.record_timing) {
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return row;
}

std::vector<ResultRow> run_grid(const ExperimentGrid& grid, bool verbose) {
  grid.validate();
  make_dir(grid.out_dir);
  const Splits data = prepare_data(grid);
  if (verbose) {
    std::cerr << "data: train " << data.train.size() << ", test " << data.test.size() << ", val "
              << data.val.size() << "\n";
  }
  std::vector<ResultRow> rows;
  for (const auto& arch : grid.architectures) {
    for (OptimizerKind opt : grid.optimizers) {
      for (double lr : grid.learning_rates) {
        const CellSpec cell{arch, opt, lr};
        const std::string name = cell_name(cell);
        if (verbose) std::cerr << "cell " << name << " ...\n";
        try {
          rows.push_back(run_cell(cell, grid, data, grid.out_dir / name));
          if (verbose) {
            std::cerr << "  accuracy " << fmt("%.2f", rows.back().accuracy_pct) << "%, loss "
                      << fmt("%.4f", rows.back().loss) << ", epochs " << rows.back().epochs_run
                      << "\n";
          }
        } catch (const std::exception& e) {
          ResultRow failed;
          failed.architecture = arch;
          failed.optimizer = std::string(to_string(opt));
          failed.lr = lr;
          failed.failed = true;
          failed.error = e.what();
          if (verbose) std::cerr << "  FAILED: " << e.what() << "\n";
          rows.push_back(failed);
        }
      }
    }
  }
  emit_report(rows, grid.out_dir);
  return rows;
}

std::optional<std::size_t> best_row(const std::vector<ResultRow>& rows) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].failed) continue;
    if (!best || rows[i].accuracy_pct > rows[*best].accuracy_pct ||
        (rows[i].accuracy_pct == rows[*best].accuracy_pct && rows[i].loss < rows[*best].loss)) {
      best = i;
    }
  }
  return best;
}

std::string results_to_csv(const std::vector<ResultRow>& rows) {
  std::string out = "architecture,optimizer,lr,accuracy_pct,loss,epochs_run,seconds\n";
  for (const auto& r : rows) {
    out += r.architecture + "," + r.optimizer + "," + fmt("%g", r.lr) + ",";
    if (r.failed) {
      out += "FAILED,,0,0\n";
    } else {
      out += fmt("%.2f", r.accuracy_pct) + "," + fmt("%.4f", r.loss) + "," +
             std::to_string(r.epochs_run) + "," + fmt("%.1f", r.seconds) + "\n";
    }
  }
  return out;
}

std::vector<ResultRow> results_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "architecture,optimizer,lr,accuracy_pct,loss,epochs_run,seconds") {
    throw DataError("results.csv: unexpected header");
  }
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) throw DataError("results.csv line " + std::to_string(lineno) + ": expected 7 fields");
    ResultRow r;
    try {
      r.architecture = f[0];
      r.optimizer = f[1];
      r.lr = std::stod(f[2]);
      if (f[3] == "FAILED") {
        r.failed = true;
      } else {
        r.accuracy_pct = std::stod(f[3]);
        r.loss = std::stod(f[4]);
        r.epochs_run = std::stoul(f[5]);
        r.seconds = std::stod(f[6]);
      }
    } catch (const std::logic_error&) {
      throw DataError("results.csv line " + std::to_string(lineno) + ": malformed number");
    }
    rows.push_back(r);
  }
  return rows;
}

std::string results_to_markdown(const std::vector<ResultRow>& rows) {
  const std::vector<std::string> header = {"Model", "Optimizer", "Learning rate", "Accuracy (%)",
                                           "Loss", "Epochs", "Time (s)"};
  std::vector<std::vector<std::string>> table;
  for (const auto& r : rows) {
    if (r.failed) {
      table.push_back({r.architecture, r.optimizer, fmt("%g", r.lr), "failed", "", "", ""});
    } else {
      table.push_back({r.architecture, r.optimizer, fmt("%g", r.lr), fmt("%.2f", r.accuracy_pct),
                       fmt("%.4f", r.loss), std::to_string(r.epochs_run), fmt("%.1f", r.seconds)});
    }
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& row : table) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s = "|";
    for (std::size_t c = 0; c < cells.size(); ++c) {
      s += " " + cells[c] + std::string(width[c] - cells[c].size(), ' ') + " |";
    }
    return s + "\n";
  };
  std::string out = line(header);
  out += "|";
  for (std::size_t w : width) out += std::string(w + 2, '-') + "|";
  out += "\n";
  for (const auto& row : table) out += line(row);
  return out;
}

void emit_report(const std::vector<ResultRow>& rows, const fs::path& out_dir) {
  if (rows.empty()) throw Error("no result rows to report");
  make_dir(out_dir);
  write_text(out_dir / "results.csv", results_to_csv(rows));
  write_text(out_dir / "results.md", results_to_markdown(rows));
  std::string best = "no successful cells\n";
  if (const auto b = best_row(rows)) {
    const ResultRow& r = rows[*b];
    best = "best: " + r.architecture + " / " + r.optimizer + " / lr " + fmt("%g", r.lr) + "\n" +
           "cell: " + cell_name({r.architecture, optimizer_kind_from_string(r.optimizer), r.lr}) +
           "\naccuracy_pct: " + fmt("%.2f", r.accuracy_pct) + "\nloss: " + fmt("%.4f", r.loss) +
           "\nepochs_run: " + std::to_string(r.epochs_run) + "\n";
  }
  write_text(out_dir / "best.txt", best);
}

}  // namespace geocnn
