#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "geocnn/dataset.hpp"
#include "geocnn/optimizers.hpp"
#include "geocnn/training.hpp"

namespace geocnn {

struct DataSource {
  std::filesystem::path root;  // used when !synthetic
  bool synthetic = false;
  std::size_t synth_n = 0;
  std::size_t synth_side = 0;
  std::uint64_t synth_seed = 0;
};

struct ExperimentGrid {
  std::vector<std::string> architectures{"cnn"};
  std::vector<OptimizerKind> optimizers{OptimizerKind::adam, OptimizerKind::sgd,
                                        OptimizerKind::rmsprop};
  std::vector<double> learning_rates{1e-3, 1e-4};
  TrainConfig train;  // optimizer kind and lr are set per cell
  DataSource data;
  std::size_t augment_to = 3500;  // per class; 0 skips augmentation
  SplitSpec split;
  std::size_t image_size = 0;  // 0: 224 for directories, the native side for synthetic data
  bool split_first = false;    // split originals, then augment the training part only
  bool record_timing = false;  // off keeps results.csv byte-reproducible
  std::filesystem::path out_dir;

  std::size_t cell_count() const;
  void validate() const;
};

// Keys: architectures, optimizers, learning_rates, epochs, batch_size,
// patience, seed, data ({"root": dir} or {"synth": {n, side, seed}}),
// augment_to, split, and optionally image_size, split_first, record_timing.
// Unknown keys are rejected.
ExperimentGrid grid_from_json(const nlohmann::json& j);

struct CellSpec {
  std::string architecture;
  OptimizerKind optimizer = OptimizerKind::rmsprop;
  double lr = 1e-3;
};

// Directory name of a cell, e.g. "cnn-rmsprop-lr0.0001".
std::string cell_name(const CellSpec& cell);

struct ResultRow {
  std::string architecture;
  std::string optimizer;
  double lr = 0.0;
  double accuracy_pct = 0.0;  // on the test split
  double loss = 0.0;          // mean test cross-entropy
  std::size_t epochs_run = 0;
  double seconds = 0.0;
  bool failed = false;
  std::string error;
};

// Load (or synthesize), resize, augment and split once for the whole grid.
Splits prepare_data(const ExperimentGrid& grid);

// Trains and evaluates one cell, writing history.csv, confusion.csv,
// report.csv, report.txt and checkpoint.lnck under cell_dir. Throws on failure.
ResultRow run_cell(const CellSpec& cell, const ExperimentGrid& grid, const Splits& data,
                   const std::filesystem::path& cell_dir);

// Runs every cell in architecture, optimizer, lr order; a failing cell is
// recorded as a failed row and the rest still run. Ends with emit_report.
std::vector<ResultRow> run_grid(const ExperimentGrid& grid, bool verbose = false);

// Highest accuracy among successful rows, ties to the lower loss, then to the
// earlier row.
std::optional<std::size_t> best_row(const std::vector<ResultRow>& rows);

std::string history_to_csv(const TrainHistory& history);
std::string results_to_csv(const std::vector<ResultRow>& rows);
std::string results_to_markdown(const std::vector<ResultRow>& rows);
std::vector<ResultRow> results_from_csv(const std::string& text);

// Writes results.csv, results.md and best.txt into out_dir.
void emit_report(const std::vector<ResultRow>& rows, const std::filesystem::path& out_dir);

}  // namespace geocnn
