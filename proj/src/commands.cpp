#include "cot/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cot/adversarial.hpp"
#include "cot/config.hpp"
#include "cot/dataset.hpp"
#include "cot/errors.hpp"
#include "cot/evaluation.hpp"
#include "cot/gradcheck.hpp"
#include "cot/model.hpp"
#include "cot/training.hpp"

namespace cot {
namespace {

namespace fs = std::filesystem;

ExperimentConfig load_with_overrides(const CommonOptions& options) {
  ExperimentConfig config = load_config(options.config_path);
  apply_overrides(config, options.seed, options.out);
  return config;
}

void print_epoch(const EpochRecord& r, std::size_t total_epochs) {
  std::printf("epoch %zu/%zu  lr %.4g  ce %.6f", r.epoch + 1, total_epochs,
              r.lr, r.ce_loss);
  if (r.comp_loss) std::printf("  comp %.6f", *r.comp_loss);
  std::printf("  test_err %.4f  (%.2fs)\n", r.test_error, r.epoch_seconds);
  std::fflush(stdout);
}

struct RunArtifacts {
  TrainResult result;
  EvalReport report;
};

/// One full training run plus final evaluation, with artifacts written under
/// out_dir. The returned report is the one serialized to eval.json.
RunArtifacts run_and_write(const ExperimentConfig& config,
                           const DataBundle& data, const fs::path& out_dir,
                           bool quiet) {
  const MlpArchitecture arch = architecture_for(config, data);
  auto on_epoch = [&](const EpochRecord& r) {
    if (!quiet) print_epoch(r, config.train.epochs);
  };
  TrainResult result =
      run_training(config.train, arch, data.train, data.test, on_epoch);

  fs::create_directories(out_dir);
  write_train_log_csv(result.log, out_dir / "log.csv", config.config_hash,
                      config.seed);
  CheckpointMeta meta{config.config_hash, config.seed,
                      to_string(config.train.mode)};
  save_checkpoint(result.model, meta, out_dir / "model.ckpt");

  EvalReport report = evaluate(result.model, data.test);
  write_eval_report_json(report, out_dir / "eval.json", config.config_hash,
                         config.seed);
  write_eval_report_csv(report, out_dir / "eval.csv", config.config_hash,
                        config.seed);
  if (config.export_embeddings) {
    export_embeddings(result.model, data.test, out_dir / "embeddings.csv",
                      config.config_hash, config.seed);
  }
  return {std::move(result), std::move(report)};
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

int cmd_train(const CommonOptions& options) {
  const ExperimentConfig config = load_with_overrides(options);
  const DataBundle data = build_data(config);
  const RunArtifacts run = run_and_write(config, data, config.out, options.quiet);
  std::printf(
      "%s: %zu epochs on %s (%zu train / %zu test), final test_error %.4f -> "
      "%s\n",
      to_string(config.train.mode).c_str(), config.train.epochs,
      config.data.kind.c_str(), data.train.size(), data.test.size(),
      run.report.error_rate, config.out.c_str());
  return 0;
}

int cmd_attack(const AttackOptions& options) {
  const ExperimentConfig config = load_with_overrides(options.common);
  const LoadedCheckpoint target = load_checkpoint(options.target_checkpoint);
  const LoadedCheckpoint source =
      options.source_checkpoint.empty()
          ? load_checkpoint(options.target_checkpoint)
          : load_checkpoint(options.source_checkpoint);

  const DataBundle data = build_data(config);
  for (const LoadedCheckpoint* ckpt : {&target, &source}) {
    const MlpArchitecture& arch = ckpt->model.architecture;
    if (arch.input_dim != data.test.dim() ||
        arch.num_classes != data.test.num_classes) {
      throw InputError("checkpoint expects " +
                       std::to_string(arch.input_dim) + " inputs / " +
                       std::to_string(arch.num_classes) +
                       " classes but the config's test split has " +
                       std::to_string(data.test.dim()) + " / " +
                       std::to_string(data.test.num_classes));
    }
  }

  AttackConfig attack = config.attack.config;
  if (config.attack.gradient_mode == "auto") {
    attack.gradient_mode = source.meta.mode_tag == "cot"
                               ? GradientMode::kPrimaryPlusComplement
                               : GradientMode::kPrimaryOnly;
  }
  if (config.attack.clip == "auto") {
    attack.clip_range = data.test.value_range;
  } else if (config.attack.clip == "none") {
    attack.clip_range.reset();
  }

  const LabeledBatch batch = as_batch(data.test);
  const AttackReport report =
      evaluate_attack(target.model, source.model, batch, attack);

  const fs::path out_dir(config.out);
  fs::create_directories(out_dir);
  write_attack_report_json(report, out_dir / "attack_report.json",
                           config.config_hash, config.seed);
  write_attack_report_csv(report, out_dir / "attack_report.csv",
                          config.config_hash, config.seed);
  if (config.attack.export_idx) {
    Dataset adversarial = data.test;
    adversarial.features = adversarial_inputs(source.model, batch, attack);
    adversarial.name = data.test.name + "/adversarial";
    write_idx(adversarial, out_dir / "adversarial_images.idx",
              out_dir / "adversarial_labels.idx");
  }
  if (!options.common.quiet) {
    std::printf("%s %s (%s): clean_error %.4f -> adversarial_error %.4f "
                "(eps %.4g, %zu samples) -> %s\n",
                report.protocol.c_str(), report.kind.c_str(),
                report.gradient_mode.c_str(), report.clean_error,
                report.adversarial_error, report.epsilon, report.sample_count,
                config.out.c_str());
  }
  return 0;
}

int cmd_gradcheck(const GradcheckOptions& options) {
  const GradCheckResult result = run_gradient_checks(
      options.seed, options.batches, options.corrupt_gradients);
  if (!options.quiet) {
    std::printf("loss gradients:  %zu batches, max mixed error %.3e "
                "(tolerance %.0e)\n",
                result.loss_batches, result.max_loss_error,
                kLossGradTolerance);
    std::printf("model gradients: %zu cases, max mixed error %.3e "
                "(tolerance %.0e)\n",
                result.model_cases, result.max_model_error,
                kModelGradTolerance);
  }
  if (!result.passed) {
    std::fprintf(stderr, "gradient check failed: %s\n",
                 result.worst_offender.c_str());
    return 1;
  }
  if (!options.quiet) std::printf("all gradient checks passed\n");
  return 0;
}

int cmd_compare(const CommonOptions& options) {
  const ExperimentConfig base = load_with_overrides(options);
  const fs::path out_dir(base.out);

  struct ModeStats {
    std::vector<double> test_errors;
    std::vector<double> comp_entropies;
    std::vector<double> epoch_seconds;
  };
  ModeStats stats[2];
  const TrainMode modes[2] = {TrainMode::kBaselineCe, TrainMode::kCot};

  for (std::uint64_t seed : base.compare_seeds) {
    for (int m = 0; m < 2; ++m) {
      ExperimentConfig config = base;
      config.train.mode = modes[m];
      apply_overrides(config, seed, std::optional<std::string>{});
      const DataBundle data = build_data(config);
      const fs::path run_dir = out_dir / ("seed" + std::to_string(seed)) /
                               to_string(modes[m]);
      if (!options.quiet) {
        std::printf("-- seed %llu, %s --\n",
                    static_cast<unsigned long long>(seed),
                    to_string(modes[m]).c_str());
      }
      const RunArtifacts run = run_and_write(config, data, run_dir, true);
      stats[m].test_errors.push_back(run.report.error_rate);
      stats[m].comp_entropies.push_back(run.report.mean_complement_entropy);
      for (const EpochRecord& r : run.result.log.epochs) {
        stats[m].epoch_seconds.push_back(r.epoch_seconds);
      }
      if (!options.quiet) {
        std::printf("   test_error %.4f, complement entropy %.4f\n",
                    run.report.error_rate,
                    run.report.mean_complement_entropy);
      }
    }
  }

  const double baseline_epoch = mean_of(stats[0].epoch_seconds);
  const double cot_epoch = mean_of(stats[1].epoch_seconds);
  const double ratio = baseline_epoch > 0.0 ? cot_epoch / baseline_epoch : 0.0;

  fs::create_directories(out_dir);
  const fs::path table_path = out_dir / "compare.csv";
  std::FILE* f = std::fopen(table_path.string().c_str(), "wb");
  if (!f) throw IoError("cannot open " + table_path.string() + " for writing");
  std::fprintf(f, "# config_hash=%016llx seeds=",
               static_cast<unsigned long long>(base.config_hash));
  for (std::size_t i = 0; i < base.compare_seeds.size(); ++i) {
    std::fprintf(f, "%s%llu", i ? "," : "",
                 static_cast<unsigned long long>(base.compare_seeds[i]));
  }
  std::fprintf(f, "\nmode,test_error_mean,test_error_std,comp_entropy_mean,"
                  "time_ratio\n");
  const double ratios[2] = {1.0, ratio};
  for (int m = 0; m < 2; ++m) {
    std::fprintf(f, "%s,%.17g,%.17g,%.17g,%.6f\n", to_string(modes[m]).c_str(),
                 mean_of(stats[m].test_errors), sample_std(stats[m].test_errors),
                 mean_of(stats[m].comp_entropies), ratios[m]);
  }
  std::fclose(f);

  std::printf("mode         test_error (mean +- std)   comp_entropy   "
              "time_ratio\n");
  for (int m = 0; m < 2; ++m) {
    std::printf("%-12s %.4f +- %.4f            %.4f         %.2f\n",
                to_string(modes[m]).c_str(), mean_of(stats[m].test_errors),
                sample_std(stats[m].test_errors),
                mean_of(stats[m].comp_entropies), ratios[m]);
  }
  std::printf("table -> %s\n", table_path.string().c_str());
  return 0;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Alternating-objective training lab: softmax cross entropy "
               "interleaved with a normalized complement-entropy objective, "
               "plus FGSM/I-FGSM robustness evaluation"};
  app.require_subcommand(1);

  CommonOptions train_opts;
  CLI::App* train = app.add_subcommand("train", "Train one model per the config");
  train->add_option("--config", train_opts.config_path, "experiment config file")
      ->required();
  train->add_option("--seed", train_opts.seed, "override the config's seed");
  train->add_option("--out", train_opts.out, "override the output directory");
  train->add_flag("--quiet", train_opts.quiet, "suppress per-epoch progress");

  AttackOptions attack_opts;
  CLI::App* attack = app.add_subcommand(
      "attack", "Attack a trained checkpoint on the config's test split");
  attack->add_option("--config", attack_opts.common.config_path,
                     "experiment config file")
      ->required();
  attack
      ->add_option("--target", attack_opts.target_checkpoint,
                   "checkpoint whose error is measured")
      ->required();
  attack->add_option("--source", attack_opts.source_checkpoint,
                     "checkpoint the gradients come from (default: target)");
  attack->add_option("--seed", attack_opts.common.seed,
                     "override the config's seed");
  attack->add_option("--out", attack_opts.common.out,
                     "override the output directory");
  attack->add_flag("--quiet", attack_opts.common.quiet,
                   "suppress the summary line");

  GradcheckOptions grad_opts;
  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "Finite-difference verification of every gradient path");
  gradcheck->add_option("--seed", grad_opts.seed, "sweep seed");
  gradcheck->add_option("--batches", grad_opts.batches,
                        "number of random logit batches");
  gradcheck->add_flag("--quiet", grad_opts.quiet, "only report failures");
  gradcheck
      ->add_flag("--corrupt-gradients", grad_opts.corrupt_gradients,
                 "perturb one analytic gradient (negative control)")
      ->group("");

  CommonOptions compare_opts;
  CLI::App* compare = app.add_subcommand(
      "compare", "Train both modes over compare.seeds and tabulate");
  compare->add_option("--config", compare_opts.config_path,
                      "experiment config file")
      ->required();
  compare->add_option("--out", compare_opts.out,
                      "override the output directory");
  compare->add_flag("--quiet", compare_opts.quiet,
                    "suppress per-run progress");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(train)) return cmd_train(train_opts);
    if (app.got_subcommand(attack)) return cmd_attack(attack_opts);
    if (app.got_subcommand(gradcheck)) return cmd_gradcheck(grad_opts);
    if (app.got_subcommand(compare)) return cmd_compare(compare_opts);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace cot
