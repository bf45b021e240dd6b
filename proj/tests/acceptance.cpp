// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "geocnn/architectures.hpp"
#include "geocnn/experiment.hpp"
#include "geocnn/kernels.hpp"
#include "geocnn/metrics.hpp"
#include "geocnn/optimizers.hpp"
#include "gradcheck.hpp"
#include "temp_dir.hpp"

using namespace geocnn;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  std::fflush(stdout);
  failures += !o.pass;
}

// ---- gradients -------------------------------------------------------------

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_kind;
  auto track = [&](const std::string& kind, double err) {
    if (err > worst) worst = err, worst_kind = kind;
  };
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    auto jitter = [&](Layer<double>& l) {
      l.initialize(rng);
      for (auto& np : l.named_params())
        for (auto& v : np.param->value.data()) v += rng.uniform(-0.1, 0.1);
    };
    Conv2D<double> conv(2 + seed % 2, 3, 3, 2, 1 + seed % 2);
    jitter(conv);
    track("conv2d", gradcheck::check_layer(conv, gradcheck::random_tensor({7, 6, conv.in_channels()}, rng), rng));
    MaxPool2D<double> pool;
    track("maxpool2d", gradcheck::check_layer(pool, gradcheck::random_tensor({6, 7, 2}, rng), rng));
    Dense<double> dense(8, 5);
    jitter(dense);
    track("dense", gradcheck::check_layer(dense, gradcheck::random_tensor({8}, rng), rng));
    ReLU<double> relu;
    auto x = gradcheck::random_tensor({5, 4}, rng);
    for (auto& v : x.data()) v = v < 0 ? v - 0.05 : v + 0.05;
    track("relu", gradcheck::check_layer(relu, x, rng));
    SoftmaxCrossEntropy<double> head(4);
    track("softmax_ce", gradcheck::check_layer(head, gradcheck::random_tensor({4}, rng, -2, 2), rng));
    auto logits = gradcheck::random_tensor({4}, rng, -2, 2);
    const std::size_t target = rng.below(4);
    head.forward(logits);
    const auto analytic = head.loss_and_gradient(target).second;
    track("softmax_ce loss",
          gradcheck::max_rel_error(analytic, gradcheck::numeric_grad(
                                                 [&] { return softmax_cross_entropy(logits, target).loss; }, logits)));
    ResidualBlock<double> res(3, 4, true);
    jitter(res);
    track("residual", gradcheck::check_layer(res, gradcheck::random_tensor({4, 4, 3}, rng), rng));
    ResidualBlock<double> ident(3, 3, false);
    jitter(ident);
    track("residual identity", gradcheck::check_layer(ident, gradcheck::random_tensor({4, 4, 3}, rng), rng));
    InceptionBlock<double> inc(3, {BranchSpec::conv(3, 2), BranchSpec::conv(3, 2, 2), BranchSpec::pool(3, 2)});
    jitter(inc);
    track("inception", gradcheck::check_layer(inc, gradcheck::random_tensor({5, 5, 3}, rng), rng));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 60.0, "max relative error " + fmt("%.2e", worst) + " (" + worst_kind +
                                          ") over 20 seeds in " + fmt("%.1f", secs) + " s"};
}

// ---- optimizers ------------------------------------------------------------

double one_param_step(OptimizerKind kind, double theta, double g, int steps, bool frozen = false) {
  Param<double> p{Shape{1}};
  p.value[0] = theta;
  p.grad[0] = g;
  p.trainable = !frozen;
  std::vector<NamedParam<double>> list{{"p", &p}};
  OptimizerConfig cfg;
  cfg.kind = kind;
  cfg.lr = 1e-3;
  Optimizer<double> opt(cfg);
  for (int i = 0; i < steps; ++i) opt.step(list);
  return p.value[0];
}

Outcome optimizer_oracles() {
  // Adam: m_hat = g and v_hat = g^2 on every step with constant g.
  const double adam_step = 1e-3 * 0.5 / (0.5 + 1e-8);
  const double adam1 = one_param_step(OptimizerKind::adam, 1.0, 0.5, 1);
  const double adam2 = one_param_step(OptimizerKind::adam, 1.0, 0.5, 2);
  // RMSProp: v1 = 0.1 g^2, v2 = 0.19 g^2.
  const double rms1 = one_param_step(OptimizerKind::rmsprop, 1.0, 0.5, 1);
  const double rms2 = one_param_step(OptimizerKind::rmsprop, 1.0, 0.5, 2);
  const double r1 = 1e-3 * 0.5 / (std::sqrt(0.1 * 0.25) + 1e-8);
  const double r2 = 1e-3 * 0.5 / (std::sqrt(0.19 * 0.25) + 1e-8);
  const double sgd = one_param_step(OptimizerKind::sgd, 1.0, 0.5, 2);
  bool ok = std::abs(adam1 - (1.0 - adam_step)) < 1e-10 && std::abs(adam1 - 0.999) < 1e-7 &&
            std::abs(adam2 - (1.0 - 2 * adam_step)) < 1e-10 && std::abs(rms1 - (1.0 - r1)) < 1e-10 &&
            std::abs(rms2 - (1.0 - r1 - r2)) < 1e-10 && sgd == (1.0 - 1e-3 * 0.5) - 1e-3 * 0.5;
  bool frozen_ok = true;
  for (auto kind : {OptimizerKind::sgd, OptimizerKind::adam, OptimizerKind::rmsprop}) {
    frozen_ok = frozen_ok && one_param_step(kind, 0.3, 0.7, 5, true) == 0.3;
  }
  return {ok && frozen_ok, "adam step1 theta=" + fmt("%.9f", adam1) + ", rmsprop step1 theta=" +
                               fmt("%.9f", rms1) + ", sgd exact, frozen params " +
                               (frozen_ok ? "unchanged" : "CHANGED")};
}

// ---- architecture ----------------------------------------------------------

Outcome architecture_fidelity() {
  Rng rng(0);
  const auto net = build_baseline_cnn<float>({224, 224, 3}, 4, rng);
  const auto& chain = net.shape_chain();
  const bool shapes = chain.size() == 14 && chain[6] == Shape{52, 52, 128} && chain[8] == Shape{26, 26, 128} &&
                      chain[9] == Shape{86528} && chain[10] == Shape{64} && chain[12] == Shape{4};
  const std::size_t params = net.parameter_count();
  return {shapes && params == 5631364,
          "shape chain ... " + shape_to_string(chain[8]) + ", " + shape_to_string(chain[9]) + ", " +
              shape_to_string(chain[10]) + ", " + shape_to_string(chain[12]) + "; " + std::to_string(params) +
              " trainable parameters"};
}

// ---- pipeline arithmetic ---------------------------------------------------

Outcome pipeline_arithmetic() {
  const auto t0 = Clock::now();
  Dataset ds = synth_dataset(2600, 32, 1);
  // Roughly 2600 per class, deliberately uneven.
  const std::size_t keep[] = {2600, 2571, 2588, 2540};
  Dataset uneven;
  uneven.encoder = ds.encoder;
  std::vector<std::size_t> seen(4, 0);
  for (auto& item : ds.items) {
    if (seen[item.label]++ < keep[item.label]) uneven.items.push_back(std::move(item));
  }
  const Dataset aug = augment_to_count(uneven, 3500, 2);
  const Splits s = stratified_split(aug, {}, 3);
  const auto test_counts = s.test.class_counts();
  bool ok = aug.size() == 14000 && s.train.size() == 8400 && s.test.size() == 4200 && s.val.size() == 1400;
  for (std::size_t c : test_counts) ok = ok && c == 1050;
  const double secs = seconds_since(t0);
  return {ok && secs < 120.0, std::to_string(uneven.size()) + " originals -> " + std::to_string(aug.size()) +
                                  " -> " + std::to_string(s.train.size()) + "/" + std::to_string(s.test.size()) +
                                  "/" + std::to_string(s.val.size()) + ", test per class " +
                                  std::to_string(test_counts[0]) + "/" + std::to_string(test_counts[1]) + "/" +
                                  std::to_string(test_counts[2]) + "/" + std::to_string(test_counts[3]) + " in " +
                                  fmt("%.1f", secs) + " s"};
}

// ---- metrics ---------------------------------------------------------------

Outcome metrics_oracle() {
  std::size_t mismatches = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(1000 + seed);
    const std::size_t k = 1 + rng.below(6), n = rng.below(1001);
    std::vector<std::size_t> yt(n), yp(n);
    for (std::size_t i = 0; i < n; ++i) {
      yt[i] = rng.below(k);
      yp[i] = rng.uniform() < 0.5 ? yt[i] : rng.below(k);
    }
    std::vector<std::string> names;
    for (std::size_t c = 0; c < k; ++c) names.push_back(std::to_string(c));
    const auto cm = confusion_matrix(yt, yp, k);
    const auto rep = classification_report(cm, names);
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        tp += yt[i] == c && yp[i] == c;
        fp += yt[i] != c && yp[i] == c;
        fn += yt[i] == c && yp[i] != c;
      }
      const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
      const double r = tp + fn ? double(tp) / double(tp + fn) : 0.0;
      const double f = p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
      const auto& s = rep.classes[c];
      mismatches += s.precision != p || s.recall != r || s.f1 != f || s.support != tp + fn;
      for (std::size_t q = 0; q < k; ++q) {
        std::size_t count = 0;
        for (std::size_t i = 0; i < n; ++i) count += yt[i] == c && yp[i] == q;
        mismatches += cm.counts[c][q] != count;
      }
    }
  }
  std::size_t binary_cases = 0;
  for (std::size_t tp = 0; tp <= 5; ++tp)
    for (std::size_t tn = 0; tn <= 5; ++tn)
      for (std::size_t fp = 0; fp <= 5; ++fp)
        for (std::size_t fn = 0; fn <= 5; ++fn) {
          if (tp + tn + fp + fn == 0) continue;
          ++binary_cases;
          const double expected = double(tp + tn) / double(tp + tn + fp + fn) * 100.0;
          mismatches += accuracy_binary(tp, tn, fp, fn) != expected;
          mismatches += accuracy_percent(ConfusionMatrix{{{tn, fp}, {fn, tp}}}) != expected;
        }
  return {mismatches == 0, "100 random instances and " + std::to_string(binary_cases) +
                               " binary cases, " + std::to_string(mismatches) + " mismatches"};
}

// ---- end-to-end learning ---------------------------------------------------

Outcome end_to_end_learning() {
  kernels::set_num_threads(1);
  TempDir tmp;
  ExperimentGrid g;
  g.architectures = {"cnn"};
  g.optimizers = {OptimizerKind::rmsprop, OptimizerKind::sgd};
  g.learning_rates = {1e-3};
  g.train.epochs = 100;
  g.train.batch_size = 64;
  g.train.patience = 10;
  g.train.seed = 7;
  g.data.synthetic = true;
  g.data.synth_n = 240;
  g.data.synth_side = 32;
  g.data.synth_seed = 7;
  g.augment_to = 300;
  g.record_timing = true;
  g.out_dir = tmp.path();
  const auto rows = run_grid(g);
  const ResultRow& rms = rows.at(0);
  const ResultRow& sgd = rows.at(1);
  const bool ok = !rms.failed && !sgd.failed && rms.accuracy_pct >= 90.0 && rms.seconds < 300.0 &&
                  rms.epochs_run <= 100 && sgd.accuracy_pct < rms.accuracy_pct;
  return {ok, "rmsprop " + fmt("%.2f", rms.accuracy_pct) + "% in " + std::to_string(rms.epochs_run) +
                  " epochs / " + fmt("%.1f", rms.seconds) + " s (1 thread); sgd " + fmt("%.2f", sgd.accuracy_pct) +
                  "% in " + std::to_string(sgd.epochs_run) + " epochs / " + fmt("%.1f", sgd.seconds) + " s"};
}

// ---- determinism -----------------------------------------------------------

Outcome determinism() {
  TempDir a, b;
  const auto config = nlohmann::json::parse(R"({
    "architectures": ["cnn", "mini-inception"], "optimizers": ["adam", "rmsprop"],
    "learning_rates": [0.001], "epochs": 3, "batch_size": 16, "patience": 10, "seed": 5,
    "data": {"synth": {"n": 20, "side": 24, "seed": 5}}, "augment_to": 30
  })");
  ExperimentGrid g = grid_from_json(config);
  g.out_dir = a.path();
  run_grid(g);
  g.out_dir = b.path();
  kernels::set_num_threads(std::max(2, kernels::max_threads()));
  run_grid(g);
  kernels::set_num_threads(1);
  std::size_t compared = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a.path())) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a.path());
    const auto ext = rel.extension();
    const auto name = rel.filename();
    if (name != "results.csv" && name != "history.csv" && ext != ".lnck") continue;
    ++compared;
    differing += slurp(entry.path()) != slurp(b.path() / rel);
  }
  return {compared == 9 && differing == 0, std::to_string(compared) +
                                               " files (results.csv, history.csv, checkpoints) compared, " +
                                               std::to_string(differing) + " differ"};
}

// ---- desk-scale statement --------------------------------------------------

Outcome desk_scale_statement() {
  const fs::path recipe = fs::path(GEOCNN_SOURCE_DIR) / "configs" / "full_scale.json";
  const ExperimentGrid g = grid_from_json(nlohmann::json::parse(slurp(recipe)));
  const bool rows_match = g.cell_count() == 18 && g.learning_rates == std::vector<double>{1e-3, 1e-4} &&
                          g.optimizers == std::vector<OptimizerKind>{OptimizerKind::adam, OptimizerKind::sgd,
                                                                     OptimizerKind::rmsprop} &&
                          g.train.epochs == 100 && g.train.batch_size == 64 && g.augment_to == 3500 &&
                          g.image_size == 224;
  return {rows_match,
          "published figures (CNN/RMSProp 94.8% / 0.1727, ResNet-50/Adam 77.3%, Inception-v3/RMSProp 93.8%) "
          "need the real 224x224 imagery, pretrained backbones and full 100-epoch runs; they are not "
          "reproduced here. configs/full_scale.json regenerates the 3 x 6 table layout for anyone with "
          "the corpus and compute"};
}

}  // namespace

int main() {
  kernels::tune_allocator();
  kernels::set_num_threads(1);
  report("gradient correctness", gradient_correctness);
  report("optimizer oracles", optimizer_oracles);
  report("architecture fidelity", architecture_fidelity);
  report("pipeline arithmetic", pipeline_arithmetic);
  report("metrics oracle equivalence", metrics_oracle);
  report("end-to-end learning", end_to_end_learning);
  report("determinism", determinism);
  report("not reproducible at desk scale (stated)", desk_scale_statement);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
