#pragma once

#include <memory>

#include "vlforgery/config.hpp"
#include "vlforgery/gateway.hpp"

namespace vlf {

struct StageResult {
  Stage stage = Stage::Acquire;
  Json summary;
  /// Set when quarantines/failures exceeded the configured threshold; the
  /// stage's artifacts are still written.
  bool threshold_exceeded = false;
};

/// Builds the configured chat client (mock or http) behind the retrying,
/// concurrency-capped gateway. Truth-aware mocks receive the index; requests
/// themselves never carry ground truth.
std::shared_ptr<ChatClient> make_chat_client(const ModelConfig& config, TruthIndex truth,
                                             uint64_t seed);

/// Orchestrates the pipeline stages over one output directory. Every stage is
/// a pure function of (inputs, config, root_seed): reruns produce
/// byte-identical artifacts.
class PipelineRunner {
 public:
  explicit PipelineRunner(RunConfig config);

  StageResult run_stage(Stage stage);

  RunConfig& config() { return config_; }
  const RunConfig& config() const { return config_; }

 private:
  StageResult run_acquire();
  StageResult run_generate();
  StageResult run_mine_bias();
  StageResult run_describe();
  StageResult run_assemble();
  StageResult run_evaluate();
  StageResult run_report();

  std::filesystem::path out_path(const char* name) const;
  std::filesystem::path data_path(const char* name) const;
  std::filesystem::path require_input(Stage stage, const std::filesystem::path& path) const;

  RunConfig config_;
};

}  // namespace vlf
