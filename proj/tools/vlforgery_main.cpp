// vlforgery — stage runner CLI. Talks to the pipeline library exclusively
// through the C API in vlforgery.h.

#include <cstdint>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vlforgery/vlforgery.h"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string model;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  bool global_bias = false;
  std::string split;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "Run configuration file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "Override the root seed")
      ->each([&](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--model", opts.model,
                  "Override the model (http or mock:oracle|adversarial|echo|scripted)");
  cmd->add_option("--out", opts.out_dir, "Override the output directory");
}

int run_stage(const std::string& stage, const CommonOptions& opts) {
  vlf_runner* runner = nullptr;
  vlf_status status = vlf_runner_create(opts.config_path.c_str(), &runner);
  if (status != VLF_OK) {
    std::cerr << "error: " << vlf_last_create_error() << '\n';
    return status;
  }
  std::unique_ptr<vlf_runner, decltype(&vlf_runner_destroy)> guard(runner, vlf_runner_destroy);

  if (opts.seed_set && (status = vlf_runner_set_seed(runner, opts.seed)) != VLF_OK) {
    std::cerr << "error: " << vlf_runner_last_error(runner) << '\n';
    return status;
  }
  if (!opts.model.empty() && (status = vlf_runner_set_model(runner, opts.model.c_str())) != VLF_OK) {
    std::cerr << "error: " << vlf_runner_last_error(runner) << '\n';
    return status;
  }
  if (!opts.out_dir.empty() &&
      (status = vlf_runner_set_output_dir(runner, opts.out_dir.c_str())) != VLF_OK) {
    std::cerr << "error: " << vlf_runner_last_error(runner) << '\n';
    return status;
  }
  if (opts.global_bias &&
      (status = vlf_runner_set_option(runner, "bias.global_only", "true")) != VLF_OK) {
    std::cerr << "error: " << vlf_runner_last_error(runner) << '\n';
    return status;
  }
  if (!opts.split.empty() &&
      (status = vlf_runner_set_option(runner, "evaluation.split", opts.split.c_str())) != VLF_OK) {
    std::cerr << "error: " << vlf_runner_last_error(runner) << '\n';
    return status;
  }

  status = vlf_runner_run_stage(runner, stage.c_str());
  const std::string summary = vlf_runner_last_summary(runner);
  if (!summary.empty()) std::cout << "[" << stage << "] " << summary << '\n';
  if (status != VLF_OK) {
    std::cerr << "error: " << vlf_runner_last_error(runner) << '\n';
    return status;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VLForgery pipeline: dataset construction, bias mining, EkCot description "
               "generation, fine-tune emission and triad evaluation"};
  app.set_version_flag("--version", std::string(vlf_version()));
  app.require_subcommand(1);

  const std::vector<std::string> stages = {"acquire",  "generate", "mine-bias", "describe",
                                           "assemble", "evaluate", "report"};
  const std::vector<std::string> descriptions = {
      "Build pristine records and generation manifests",
      "Run generation jobs and split the dataset",
      "Mine low-level-vision judgment biases",
      "Generate EkCot forgery descriptions",
      "Assemble fine-tuning triplets and training config",
      "Run inference over the test split and score the triad tasks",
      "Re-score persisted answers without re-inference"};

  std::vector<std::unique_ptr<CommonOptions>> all_opts;
  for (size_t i = 0; i < stages.size(); ++i) {
    auto opts = std::make_unique<CommonOptions>();
    CLI::App* cmd = app.add_subcommand(stages[i], descriptions[i]);
    add_common(cmd, *opts);
    if (stages[i] == "mine-bias") {
      cmd->add_flag("--global", opts->global_bias, "Mine one global bias instead of per-subset");
    }
    if (stages[i] == "evaluate") {
      cmd->add_option("--split", opts->split, "Which split to evaluate (train|test)");
    }
    all_opts.push_back(std::move(opts));
  }

  CommonOptions check_opts;
  CLI::App* check = app.add_subcommand("check", "Validate a configuration file and exit");
  check->add_option("--config", check_opts.config_path, "Run configuration file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  if (check->parsed()) {
    vlf_runner* runner = nullptr;
    const vlf_status status = vlf_runner_create(check_opts.config_path.c_str(), &runner);
    if (status != VLF_OK) {
      std::cerr << "error: " << vlf_last_create_error() << '\n';
      return status;
    }
    vlf_runner_destroy(runner);
    std::cout << "config ok\n";
    return 0;
  }

  for (size_t i = 0; i < stages.size(); ++i) {
    if (app.get_subcommand(stages[i])->parsed()) {
      return run_stage(stages[i], *all_opts[i]);
    }
  }
  return 0;
}
