// Acceptance gate: one line per criterion, nonzero exit if any fail.
//
// Every tolerance is pinned here as a named constant. The expensive
// criteria (5-7) run full reference configurations; the whole suite is
// sized to finish well inside the per-criterion runtime budgets it checks.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cot/adversarial.hpp"
#include "cot/config.hpp"
#include "cot/dataset.hpp"
#include "cot/evaluation.hpp"
#include "cot/gradcheck.hpp"
#include "cot/model.hpp"
#include "cot/objectives.hpp"
#include "cot/rng.hpp"
#include "cot/training.hpp"

namespace fs = std::filesystem;
using cot::Dataset;
using cot::ModelState;
using cot::Tensor;
using cot::TrainMode;

namespace {

// ---- pinned tolerances and budgets ----------------------------------------
constexpr double kLossGradTol = 1e-6;        // criterion 1
constexpr double kModelGradTol = 1e-5;       // criterion 1
constexpr double kGradcheckBudgetSec = 30.0; // criterion 1
constexpr std::size_t kEntropyRows = 100000; // criterion 2
constexpr double kUniformBoundTol = 1e-10;   // criterion 2
constexpr double kOracleTol = 1e-12;         // criterion 3
constexpr std::size_t kDegeneracyEpochs = 20;    // criterion 4
constexpr double kErrorMarginPts = 0.005;    // criterion 5: 0.5 percentage points
constexpr double kTrainCeGapNats = 0.1;      // criterion 5 companion invariant
constexpr double kSpiralBudgetSec = 300.0;   // criterion 5
constexpr double kTimeRatioLo = 1.2;         // criterion 6
constexpr double kTimeRatioHi = 2.2;         // criterion 6
constexpr double kEpsilon = 0.1;             // criterion 7
constexpr double kBudgetSlack = 1e-12;       // criterion 7 l-inf verification
constexpr int kRobustSeedWins = 2;           // criterion 7: of 3 seeds
constexpr double kDigitsBudgetSec = 600.0;   // criterion 7

int failures = 0;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

void report(int index, const char* title, bool pass, const std::string& detail) {
  std::printf("[%s] %d. %s: %s\n", pass ? "PASS" : "FAIL", index, title,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

std::vector<double> flatten(const ModelState& model) {
  std::vector<double> out;
  for (const auto& layer : model.layers) {
    out.insert(out.end(), layer.weight.data().begin(), layer.weight.data().end());
    out.insert(out.end(), layer.bias.data().begin(), layer.bias.data().end());
  }
  return out;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

/// log.csv with the wall-time column removed: epoch_seconds is the one field
/// that legitimately varies between identical runs.
std::string strip_times(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t cut = line.rfind(',');
    if (!line.empty() && line[0] != '#' && cut != std::string::npos) {
      out << line.substr(0, cut) << "\n";
    } else {
      out << line << "\n";
    }
  }
  return out.str();
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// ---- criterion 1: finite-difference gradient sweep -------------------------
void criterion_1() {
  const auto start = std::chrono::steady_clock::now();
  const cot::GradCheckResult result = cot::run_gradient_checks(2024, 1000);
  const double elapsed = seconds_since(start);
  const bool pass = result.max_loss_error < kLossGradTol &&
                    result.max_model_error < kModelGradTol &&
                    elapsed < kGradcheckBudgetSec;
  report(1, "gradient correctness", pass,
         fmt("loss max %.3e (<1e-6), model max %.3e (<1e-5), %.1fs (<30s)",
             result.max_loss_error, result.max_model_error, elapsed));
}

// ---- criterion 2: normalized complement entropy bounds ---------------------
void criterion_2() {
  cot::Rng rng(7);
  bool bounds_hold = true;
  double worst_uniform_gap = 0.0;
  for (std::size_t i = 0; i < kEntropyRows; ++i) {
    const std::size_t k = 2 + rng.below(11);
    Tensor logits({1, k});
    const double scale = 0.25 + 15.0 * rng.uniform();
    for (double& v : logits.data()) v = scale * rng.normal();
    const cot::ProbBatch probs = cot::softmax(logits);
    const int g = static_cast<int>(rng.below(k));
    const std::vector<int> labels{g};
    const double value = cot::normalized_complement_entropy(probs, labels);
    const double bound = std::log(static_cast<double>(k - 1)) /
                         static_cast<double>(k - 1);
    if (!(value >= 0.0) || !(value <= bound)) bounds_hold = false;

    // A matching uniform-complement row must attain the bound.
    const double pg = rng.uniform() * 0.98;
    Tensor uniform({1, k});
    for (std::size_t j = 0; j < k; ++j) {
      uniform.at(0, j) = (1.0 - pg) / static_cast<double>(k - 1);
    }
    uniform.at(0, static_cast<std::size_t>(g)) = pg;
    const double attained = cot::normalized_complement_entropy(
        cot::ProbBatch{uniform}, labels);
    worst_uniform_gap = std::max(worst_uniform_gap, std::abs(attained - bound));
  }
  const bool pass = bounds_hold && worst_uniform_gap < kUniformBoundTol;
  report(2, "entropy bounds", pass,
         fmt("%zu rows, bounds %s, uniform rows within %.2e of ln(K-1)/(K-1) "
             "(<1e-10)",
             kEntropyRows, bounds_hold ? "exact" : "VIOLATED",
             worst_uniform_gap));
}

// ---- criterion 3: one alternating step vs a straight-line oracle -----------
//
// The oracle unrolls a fixed 2-3-4 network by hand: explicit affine loops,
// explicit softmax, the cross-entropy and complement gradients written from
// their calculus, and the momentum update per coordinate. No library calls.
struct TinyNet {
  // layer 1: 3x2 weights, 3 biases; layer 2: 4x3 weights, 4 biases
  double w1[3][2], b1[3], w2[4][3], b2[4];
};

TinyNet to_tiny(const ModelState& model) {
  TinyNet n{};
  for (int o = 0; o < 3; ++o) {
    for (int i = 0; i < 2; ++i) n.w1[o][i] = model.layers[0].weight.at(o, i);
    n.b1[o] = model.layers[0].bias.at(o);
  }
  for (int o = 0; o < 4; ++o) {
    for (int h = 0; h < 3; ++h) n.w2[o][h] = model.layers[1].weight.at(o, h);
    n.b2[o] = model.layers[1].bias.at(o);
  }
  return n;
}

void oracle_alternating_step(TinyNet& net, const double x[5][2],
                             const int labels[5], double lr, double mu,
                             double wd, double vel[29]) {
  constexpr int N = 5, D = 2, H = 3, K = 4;
  // Two passes: pass 0 cross entropy with weight decay, pass 1 the
  // complement objective without it, sharing the velocity buffer.
  for (int pass = 0; pass < 2; ++pass) {
    double z1[N][H], a1[N][H], z2[N][K], p[N][K];
    for (int i = 0; i < N; ++i) {
      for (int h = 0; h < H; ++h) {
        double acc = net.b1[h];
        for (int d = 0; d < D; ++d) acc += x[i][d] * net.w1[h][d];
        z1[i][h] = acc;
        a1[i][h] = acc > 0.0 ? acc : 0.0;
      }
      double mx = -1e300;
      for (int k = 0; k < K; ++k) {
        double acc = net.b2[k];
        for (int h = 0; h < H; ++h) acc += a1[i][h] * net.w2[k][h];
        z2[i][k] = acc;
        mx = std::max(mx, acc);
      }
      double sum = 0.0;
      for (int k = 0; k < K; ++k) sum += (p[i][k] = std::exp(z2[i][k] - mx));
      for (int k = 0; k < K; ++k) p[i][k] /= sum;
    }

    double dz2[N][K];
    if (pass == 0) {
      for (int i = 0; i < N; ++i) {
        for (int k = 0; k < K; ++k) {
          dz2[i][k] = (p[i][k] - (labels[i] == k ? 1.0 : 0.0)) / N;
        }
      }
    } else {
      // d/dz of -(1/(N(K-1))) sum_i H_i with H_i the complement entropy of
      // row i: dH/dp_j = -(ln q_j + 1)/s for j != g, dH/dp_g = (H_i - 1)/s,
      // then dH/dz_m = p_m (dH/dp_m - sum_k dH/dp_k p_k).
      for (int i = 0; i < N; ++i) {
        const int g = labels[i];
        const double s = 1.0 - p[i][g];
        double h_row = 0.0;
        for (int j = 0; j < K; ++j) {
          if (j == g) continue;
          const double q = p[i][j] / s;
          h_row -= q * std::log(q);
        }
        double dh_dp[K];
        for (int j = 0; j < K; ++j) {
          if (j == g) {
            dh_dp[j] = (h_row - 1.0) / s;
          } else {
            dh_dp[j] = -(std::log(p[i][j] / s) + 1.0) / s;
          }
        }
        double inner = 0.0;
        for (int k = 0; k < K; ++k) inner += dh_dp[k] * p[i][k];
        const double scale = -1.0 / (N * (K - 1.0));
        for (int m = 0; m < K; ++m) {
          dz2[i][m] = scale * p[i][m] * (dh_dp[m] - inner);
        }
      }
    }

    double dw2[4][3] = {}, db2[4] = {}, dw1[3][2] = {}, db1[3] = {};
    for (int i = 0; i < N; ++i) {
      double da1[H] = {};
      for (int k = 0; k < K; ++k) {
        for (int h = 0; h < H; ++h) {
          dw2[k][h] += dz2[i][k] * a1[i][h];
          da1[h] += dz2[i][k] * net.w2[k][h];
        }
        db2[k] += dz2[i][k];
      }
      for (int h = 0; h < H; ++h) {
        const double dz1 = z1[i][h] > 0.0 ? da1[h] : 0.0;
        for (int d = 0; d < D; ++d) dw1[h][d] += dz1 * x[i][d];
        db1[h] += dz1;
      }
    }

    // Momentum update over the flattened parameter vector, in the library's
    // parameter order: layer 1 weights, biases, layer 2 weights, biases.
    const double decay = pass == 0 ? wd : 0.0;
    int vi = 0;
    auto update = [&](double& theta, double grad) {
      const double total = grad + decay * theta;
      vel[vi] = mu * vel[vi] + total;
      theta -= lr * vel[vi];
      ++vi;
    };
    for (int h = 0; h < H; ++h)
      for (int d = 0; d < D; ++d) update(net.w1[h][d], dw1[h][d]);
    for (int h = 0; h < H; ++h) update(net.b1[h], db1[h]);
    for (int k = 0; k < K; ++k)
      for (int h = 0; h < H; ++h) update(net.w2[k][h], dw2[k][h]);
    for (int k = 0; k < K; ++k) update(net.b2[k], db2[k]);
  }
}

cot::LabeledBatch tiny_batch() {
  cot::Rng rng(171);
  Tensor inputs({5, 2});
  for (double& v : inputs.data()) v = rng.normal();
  return {std::move(inputs), {0, 1, 2, 3, 1}, 4};
}

ModelState run_library_step(double lr, double mu, double wd) {
  cot::Rng init = cot::Rng(11).split(cot::streams::kInit);
  ModelState model = cot::init_model({2, {3}, 4}, init);
  const cot::LabeledBatch batch = tiny_batch();
  cot::OptimizerState opt = cot::make_optimizer(model, lr, mu, wd);

  cot::ForwardTrace trace = cot::forward(model, batch.inputs);
  const cot::LossResult ce = cot::cross_entropy(trace.logits(), batch.labels);
  cot::ParamGrads grads = cot::backward(model, trace, ce.grad_logits);
  cot::sgd_step(model, grads, opt, true);

  trace = cot::forward(model, batch.inputs);
  const cot::LossResult comp = cot::complement_loss(trace.logits(), batch.labels);
  grads = cot::backward(model, trace, comp.grad_logits);
  cot::sgd_step(model, grads, opt, false, cot::VelocitySlot::kComplement);
  return model;
}

void criterion_3() {
  const double lr = 0.1, mu = 0.9, wd = 1e-4;
  const ModelState after = run_library_step(lr, mu, wd);

  cot::Rng init = cot::Rng(11).split(cot::streams::kInit);
  const ModelState start = cot::init_model({2, {3}, 4}, init);
  TinyNet net = to_tiny(start);
  const cot::LabeledBatch batch = tiny_batch();
  double x[5][2];
  int labels[5];
  for (int i = 0; i < 5; ++i) {
    x[i][0] = batch.inputs.at(static_cast<std::size_t>(i), 0);
    x[i][1] = batch.inputs.at(static_cast<std::size_t>(i), 1);
    labels[i] = batch.labels[static_cast<std::size_t>(i)];
  }
  double velocity[29] = {};
  oracle_alternating_step(net, x, labels, lr, mu, wd, velocity);

  const ModelState oracle_model = [&] {
    ModelState m = start;
    for (int o = 0; o < 3; ++o) {
      for (int i = 0; i < 2; ++i) m.layers[0].weight.at(o, i) = net.w1[o][i];
      m.layers[0].bias.at(o) = net.b1[o];
    }
    for (int o = 0; o < 4; ++o) {
      for (int h = 0; h < 3; ++h) m.layers[1].weight.at(o, h) = net.w2[o][h];
      m.layers[1].bias.at(o) = net.b2[o];
    }
    return m;
  }();

  const std::vector<double> a = flatten(after);
  const std::vector<double> b = flatten(oracle_model);
  double max_diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(a[i] - b[i]));
  }
  report(3, "oracle equivalence of one alternating step", max_diff <= kOracleTol,
         fmt("max per-parameter difference %.3e (<=1e-12) over %zu parameters",
             max_diff, a.size()));
}

// ---- criterion 4: two-class degeneracy --------------------------------------
struct MoonRuns {
  ModelState baseline;
  ModelState alternating;
};

MoonRuns run_moons() {
  cot::Rng gen = cot::Rng(5).split(cot::streams::kData);
  const Dataset full = cot::gen_two_moons(400, 0.2, gen);
  cot::Rng split_rng = cot::Rng(5).split(cot::streams::kSplit);
  const cot::SplitResult parts = cot::split(full, 0.75, split_rng);

  cot::TrainConfig config;
  config.epochs = kDegeneracyEpochs;
  config.batch_size = 32;
  config.schedule = {0.1, {}, 0.1};
  config.momentum = 0.9;
  config.weight_decay = 1e-4;
  config.seed = 5;

  config.mode = TrainMode::kBaselineCe;
  ModelState baseline =
      cot::run_training(config, {2, {16}, 2}, parts.train, parts.test).model;
  config.mode = TrainMode::kCot;
  ModelState alternating =
      cot::run_training(config, {2, {16}, 2}, parts.train, parts.test).model;
  return {std::move(baseline), std::move(alternating)};
}

void criterion_4(const fs::path& work) {
  const MoonRuns runs = run_moons();
  // Identical metadata so the files differ only if the parameters do.
  const cot::CheckpointMeta meta{0, 5, ""};
  cot::save_checkpoint(runs.baseline, meta, work / "c4_baseline.ckpt");
  cot::save_checkpoint(runs.alternating, meta, work / "c4_cot.ckpt");
  const bool identical =
      slurp(work / "c4_baseline.ckpt") == slurp(work / "c4_cot.ckpt");
  report(4, "K=2 degeneracy", identical,
         fmt("%zu-epoch two-moons checkpoints %s", kDegeneracyEpochs,
             identical ? "byte-identical" : "DIVERGED"));
}

// ---- criteria 5 and 6: the spiral reference configuration ------------------
const char* kSpiralConfig =
    "data.kind = spirals\n"
    "data.n = 2000\n"
    "data.classes = 3\n"
    "data.noise = 0.25\n"
    "data.train_fraction = 0.75\n"
    "model.hidden = 64,64\n"
    "train.epochs = 200\n"
    "train.batch_size = 128\n"
    "train.lr = 0.1\n"
    "train.milestones = 100,150\n"
    "train.lr_factor = 0.1\n"
    "train.momentum = 0.9\n"
    "train.weight_decay = 1e-4\n";

struct SpiralRun {
  cot::TrainLog log;
  double test_error = 0.0;
  double comp_entropy = 0.0;
  double final_train_ce = 0.0;
};

SpiralRun run_spiral(std::uint64_t seed, TrainMode mode,
                     const std::optional<fs::path>& artifact_dir) {
  cot::ExperimentConfig cfg = cot::parse_config_text(kSpiralConfig, "<c5>");
  cfg.train.mode = mode;
  cot::apply_overrides(cfg, seed, std::optional<std::string>{});
  const cot::DataBundle data = cot::build_data(cfg);
  const cot::MlpArchitecture arch = cot::architecture_for(cfg, data);
  cot::TrainResult result = cot::run_training(cfg.train, arch, data.train,
                                              data.test);
  const cot::EvalReport eval = cot::evaluate(result.model, data.test);
  if (artifact_dir) {
    fs::create_directories(*artifact_dir);
    cot::write_train_log_csv(result.log, *artifact_dir / "log.csv",
                             cfg.config_hash, seed);
    cot::save_checkpoint(result.model,
                         {cfg.config_hash, seed, cot::to_string(mode)},
                         *artifact_dir / "model.ckpt");
    cot::write_eval_report_json(eval, *artifact_dir / "eval.json",
                                cfg.config_hash, seed);
  }
  SpiralRun run;
  run.log = std::move(result.log);
  run.test_error = eval.error_rate;
  run.comp_entropy = eval.mean_complement_entropy;
  run.final_train_ce = run.log.epochs.back().ce_loss;
  return run;
}

struct SpiralSummary {
  std::vector<double> base_err, cot_err, base_ce, cot_ce;
  std::vector<double> base_entropy, cot_entropy;
  std::vector<double> base_epoch_sec, cot_epoch_sec;
};

SpiralSummary run_spiral_suite(const fs::path& work) {
  SpiralSummary s;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (const TrainMode mode : {TrainMode::kBaselineCe, TrainMode::kCot}) {
      std::optional<fs::path> dir;
      if (seed == 1) {
        dir = work / "c5" / cot::to_string(mode);
      }
      const SpiralRun run = run_spiral(seed, mode, dir);
      auto& err = mode == TrainMode::kCot ? s.cot_err : s.base_err;
      auto& ce = mode == TrainMode::kCot ? s.cot_ce : s.base_ce;
      auto& ent = mode == TrainMode::kCot ? s.cot_entropy : s.base_entropy;
      auto& sec = mode == TrainMode::kCot ? s.cot_epoch_sec : s.base_epoch_sec;
      err.push_back(run.test_error);
      ce.push_back(run.final_train_ce);
      ent.push_back(run.comp_entropy);
      for (const auto& e : run.log.epochs) sec.push_back(e.epoch_seconds);
    }
  }
  return s;
}

void criterion_5(const SpiralSummary& s, double elapsed) {
  const double base_err = mean_of(s.base_err);
  const double cot_err = mean_of(s.cot_err);
  const double base_entropy = mean_of(s.base_entropy);
  const double cot_entropy = mean_of(s.cot_entropy);
  const double ce_gap = std::abs(mean_of(s.cot_ce) - mean_of(s.base_ce));
  const bool pass = cot_err <= base_err + kErrorMarginPts &&
                    cot_entropy > base_entropy && ce_gap <= kTrainCeGapNats &&
                    elapsed < kSpiralBudgetSec;
  report(5, "desk-scale benefit on spirals", pass,
         fmt("test error %.4f vs %.4f (margin %.3f), complement entropy %.4f "
             "> %.4f, train-CE gap %.3f nats (<=0.1), %.0fs (<300s)",
             cot_err, base_err, kErrorMarginPts, cot_entropy, base_entropy,
             ce_gap, elapsed));
}

void criterion_6(const SpiralSummary& s) {
  const double ratio = mean_of(s.cot_epoch_sec) / mean_of(s.base_epoch_sec);
  const bool pass = ratio >= kTimeRatioLo && ratio <= kTimeRatioHi;
  report(6, "training-cost ratio", pass,
         fmt("per-epoch wall time ratio %.2f (within [1.2, 2.2])", ratio));
}

// ---- criterion 7: adversarial robustness on the digit corpus ---------------
struct DigitData {
  Dataset train;
  Dataset test;
};

/// Renders 12000 glyphs, writes them as two IDX pairs (10k train / 2k test),
/// and reads them back so the attack experiment runs on IDX-ingested data.
DigitData make_digit_corpus(std::uint64_t seed, const fs::path& dir) {
  cot::Rng gen = cot::Rng(9000 + seed).split(cot::streams::kData);
  const Dataset full = cot::gen_digits(12000, 0.05, gen);
  auto slice = [&](std::size_t begin, std::size_t count) {
    Dataset out;
    out.features = Tensor({count, full.dim()});
    out.labels.resize(count);
    out.num_classes = full.num_classes;
    out.name = full.name;
    out.value_range = full.value_range;
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t d = 0; d < full.dim(); ++d) {
        out.features.at(i, d) = full.features.at(begin + i, d);
      }
      out.labels[i] = full.labels[begin + i];
    }
    return out;
  };
  fs::create_directories(dir);
  cot::write_idx(slice(0, 10000), dir / "train_images.idx",
                 dir / "train_labels.idx");
  cot::write_idx(slice(10000, 2000), dir / "test_images.idx",
                 dir / "test_labels.idx");
  return {cot::load_idx(dir / "train_images.idx", dir / "train_labels.idx"),
          cot::load_idx(dir / "test_images.idx", dir / "test_labels.idx")};
}

ModelState train_digit_model(const DigitData& data, TrainMode mode,
                             std::uint64_t seed) {
  cot::TrainConfig config;
  config.mode = mode;
  config.epochs = 8;
  config.batch_size = 128;
  config.schedule = {0.1, {6}, 0.1};
  config.momentum = 0.9;
  config.weight_decay = 1e-4;
  config.seed = seed;
  return cot::run_training(config, {784, {256}, 10}, data.train, data.test)
      .model;
}

cot::AttackConfig digit_attack(cot::AttackKind kind,
                               cot::GradientMode gradient_mode) {
  cot::AttackConfig config;
  config.kind = kind;
  config.epsilon = kEpsilon;
  config.iterations = 10;
  config.clip_range = {{0.0, 1.0}};
  config.gradient_mode = gradient_mode;
  return config;
}

struct SeedAttacks {
  double wb_base, wb_cot;          // white-box FGSM
  double tr_base, tr_cot;          // transfer FGSM from independent copies
  double tr_cot_from_base;         // baseline-sourced examples on the cot model
  double ifgsm_tr_base, ifgsm_tr_cot;
  double worst_budget_violation;   // max over samples of norm - epsilon
};

/// Runs the full per-seed experiment. Models are trained from four
/// independent initializations (as separate trainings, matching the source
/// protocol of the attack tables): the two measured models plus one
/// independently trained copy of each kind to act as the transfer source.
SeedAttacks run_digit_seed(std::uint64_t seed, const fs::path& dir,
                           bool write_reports) {
  const DigitData data = make_digit_corpus(seed, dir / "idx");
  const ModelState base = train_digit_model(data, TrainMode::kBaselineCe, seed);
  const ModelState cot_model = train_digit_model(data, TrainMode::kCot, seed + 100);
  const ModelState base_src =
      train_digit_model(data, TrainMode::kBaselineCe, seed + 200);
  const ModelState cot_src = train_digit_model(data, TrainMode::kCot, seed + 300);

  const cot::LabeledBatch batch = cot::as_batch(data.test);
  const auto primary = cot::GradientMode::kPrimaryOnly;
  const auto summed = cot::GradientMode::kPrimaryPlusComplement;

  SeedAttacks out{};
  out.worst_budget_violation = -1.0;
  auto run = [&](const ModelState& target, const ModelState& source,
                 cot::AttackKind kind, cot::GradientMode mode,
                 const char* name) {
    const cot::AttackReport report =
        cot::evaluate_attack(target, source, batch, digit_attack(kind, mode));
    for (double norm : report.perturbation_norms) {
      out.worst_budget_violation =
          std::max(out.worst_budget_violation, norm - kEpsilon);
    }
    if (write_reports) {
      fs::create_directories(dir);
      cot::write_attack_report_json(report, dir / (std::string(name) + ".json"),
                                    0, seed);
    }
    return report.adversarial_error;
  };

  out.wb_base = run(base, base, cot::AttackKind::kFgsm, primary, "wb_base");
  out.wb_cot = run(cot_model, cot_model, cot::AttackKind::kFgsm, summed, "wb_cot");
  out.tr_base = run(base, base_src, cot::AttackKind::kFgsm, primary, "tr_base");
  out.tr_cot = run(cot_model, cot_src, cot::AttackKind::kFgsm, summed, "tr_cot");
  out.tr_cot_from_base = run(cot_model, base_src, cot::AttackKind::kFgsm,
                             primary, "tr_cot_from_base");
  out.ifgsm_tr_base =
      run(base, base_src, cot::AttackKind::kIfgsm, primary, "ifgsm_tr_base");
  out.ifgsm_tr_cot =
      run(cot_model, cot_src, cot::AttackKind::kIfgsm, summed, "ifgsm_tr_cot");
  return out;
}

void criterion_7(const std::vector<SeedAttacks>& seeds, double elapsed) {
  int wb_wins = 0, tr_wins = 0, ifgsm_wins = 0;
  double worst_violation = -1.0;
  for (const SeedAttacks& s : seeds) {
    wb_wins += s.wb_cot <= s.wb_base ? 1 : 0;
    tr_wins += s.tr_cot <= s.tr_base ? 1 : 0;
    ifgsm_wins += s.ifgsm_tr_cot <= s.ifgsm_tr_base ? 1 : 0;
    worst_violation = std::max(worst_violation, s.worst_budget_violation);
  }
  const bool budget_ok = worst_violation <= kBudgetSlack;
  const bool pass = wb_wins >= kRobustSeedWins && tr_wins >= kRobustSeedWins &&
                    budget_ok && elapsed < kDigitsBudgetSec;
  std::string detail =
      fmt("white-box wins %d/3, transfer wins %d/3 (need >=2), l-inf slack "
          "%.1e (<=1e-12), %.0fs (<600s); i-fgsm transfer wins %d/3 (reported)",
          wb_wins, tr_wins, worst_violation, elapsed, ifgsm_wins);
  report(7, "adversarial robustness on digits", pass, detail);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const SeedAttacks& s = seeds[i];
    std::printf("       seed %zu: white-box %.3f vs %.3f | transfer %.3f vs "
                "%.3f | baseline-sourced on cot %.3f | i-fgsm transfer %.3f "
                "vs %.3f\n",
                i + 1, s.wb_cot, s.wb_base, s.tr_cot, s.tr_base,
                s.tr_cot_from_base, s.ifgsm_tr_cot, s.ifgsm_tr_base);
  }
}

// ---- criterion 8: byte-identical reproduction ------------------------------
void criterion_8(const fs::path& work) {
  std::vector<std::string> diffs;

  // Criterion 3 again: the updated parameters must be bitwise stable.
  {
    const ModelState a = run_library_step(0.1, 0.9, 1e-4);
    const ModelState b = run_library_step(0.1, 0.9, 1e-4);
    if (!bit_equal(flatten(a), flatten(b))) diffs.push_back("step replay");
  }

  // Criterion 4 again: fresh checkpoints must match the first run's bytes.
  {
    const MoonRuns runs = run_moons();
    const cot::CheckpointMeta meta{0, 5, ""};
    cot::save_checkpoint(runs.baseline, meta, work / "c8_moons.ckpt");
    if (slurp(work / "c8_moons.ckpt") != slurp(work / "c4_baseline.ckpt")) {
      diffs.push_back("two-moons checkpoint");
    }
  }

  // Criterion 5, seed 1, both modes: reports byte-identical; the training
  // log identical once the wall-time column is stripped.
  for (const TrainMode mode : {TrainMode::kBaselineCe, TrainMode::kCot}) {
    const fs::path fresh = work / "c8_c5" / cot::to_string(mode);
    run_spiral(1, mode, fresh);
    const fs::path original = work / "c5" / cot::to_string(mode);
    if (slurp(fresh / "eval.json") != slurp(original / "eval.json")) {
      diffs.push_back(cot::to_string(mode) + " eval.json");
    }
    if (slurp(fresh / "model.ckpt") != slurp(original / "model.ckpt")) {
      diffs.push_back(cot::to_string(mode) + " model.ckpt");
    }
    if (strip_times(slurp(fresh / "log.csv")) !=
        strip_times(slurp(original / "log.csv"))) {
      diffs.push_back(cot::to_string(mode) + " log.csv");
    }
  }

  // Criterion 7, seed 1: regenerate the corpus, retrain, re-attack; the
  // attack reports must reproduce byte for byte.
  {
    const fs::path fresh = work / "c8_c7";
    run_digit_seed(1, fresh, true);
    for (const char* name :
         {"wb_base", "wb_cot", "tr_base", "tr_cot", "tr_cot_from_base"}) {
      const std::string file = std::string(name) + ".json";
      if (slurp(fresh / file) != slurp(work / "c7_seed1" / file)) {
        diffs.push_back(file);
      }
    }
  }

  std::string detail;
  if (diffs.empty()) {
    detail = "step replay, checkpoints, eval/attack reports, and logs "
             "(wall-time column excluded) all byte-identical";
  } else {
    detail = "differences in:";
    for (const auto& d : diffs) detail += " " + d;
  }
  report(8, "determinism", diffs.empty(), detail);
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "cot_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4(work);

  const auto c5_start = std::chrono::steady_clock::now();
  const SpiralSummary spiral = run_spiral_suite(work);
  const double c5_elapsed = seconds_since(c5_start);
  criterion_5(spiral, c5_elapsed);
  criterion_6(spiral);

  const auto c7_start = std::chrono::steady_clock::now();
  std::vector<SeedAttacks> digit_seeds;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const fs::path dir = work / ("c7_seed" + std::to_string(seed));
    digit_seeds.push_back(run_digit_seed(seed, dir, seed == 1));
  }
  criterion_7(digit_seeds, seconds_since(c7_start));

  criterion_8(work);

  std::printf("%d of 8 criteria passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}
