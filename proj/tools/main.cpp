#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "recdenoise/experiment.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_override;
  std::string denoiser;
  bool force = false;
  std::optional<std::uint64_t> seed_override;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_denoiser = false) {
  cmd->add_option("--config", opts.config_path, "experiment config (JSON)")->required();
  cmd->add_option("--out", opts.out_override, "override the configured output directory");
  cmd->add_flag("--force", opts.force, "overwrite artifacts from a different config");
  cmd->add_option("--seed-override", opts.seed_override,
                  "override the stage seed (sample / train / denoiser)");
  if (with_denoiser)
    cmd->add_option("--denoiser", opts.denoiser, "restrict to one denoiser id");
}

recdenoise::ExperimentConfig load_config(const CommonOpts& opts) {
  auto cfg = recdenoise::ExperimentConfig::from_file(opts.config_path);
  if (!opts.out_override.empty()) cfg.out_dir = opts.out_override;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Post-training user-profile denoising experiments"};
  app.require_subcommand(1);

  CommonOpts opts;
  CLI::App* synth = app.add_subcommand("synth", "generate a labeled synthetic dataset");
  CLI::App* prepare = app.add_subcommand("prepare", "load, filter, split, sample");
  CLI::App* train = app.add_subcommand("train", "train the scorer (or import a checkpoint)");
  CLI::App* denoise = app.add_subcommand("denoise", "run denoising campaigns");
  CLI::App* evaluate = app.add_subcommand("evaluate", "score outcome logs on the test set");
  CLI::App* report = app.add_subcommand("report", "render metric tables and breakdowns");
  add_common(synth, opts);
  add_common(prepare, opts);
  add_common(train, opts);
  add_common(denoise, opts, true);
  add_common(evaluate, opts, true);
  add_common(report, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = load_config(opts);
    if (synth->parsed()) {
      if (opts.seed_override) cfg.synth.seed = *opts.seed_override;
      recdenoise::cmd_synth(cfg, opts.force);
    } else if (prepare->parsed()) {
      if (opts.seed_override) cfg.sample_seed = *opts.seed_override;
      recdenoise::cmd_prepare(cfg, opts.force);
    } else if (train->parsed()) {
      if (opts.seed_override) cfg.train.seed = *opts.seed_override;
      recdenoise::cmd_train(cfg, opts.force);
    } else if (denoise->parsed()) {
      if (opts.seed_override)
        for (auto& d : cfg.denoisers) d.seed = *opts.seed_override;
      recdenoise::cmd_denoise(cfg, opts.denoiser, opts.force);
    } else if (evaluate->parsed()) {
      recdenoise::cmd_evaluate(cfg, opts.denoiser, opts.force);
    } else if (report->parsed()) {
      recdenoise::cmd_report(cfg);
    }
  } catch (const recdenoise::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const recdenoise::DependencyError& e) {
    std::cerr << "dependency error: " << e.what() << "\n";
    return 3;
  } catch (const recdenoise::TransportExhaustedError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
