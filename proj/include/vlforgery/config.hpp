#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vlforgery/json.hpp"
#include "vlforgery/types.hpp"

namespace vlf {

enum class Stage { Acquire, Generate, MineBias, Describe, Assemble, Evaluate, Report };

std::string_view stage_name(Stage stage);
Stage stage_from_string(std::string_view name);  // throws InvalidArgument

struct ModelConfig {
  std::string name = "mock:echo";  // "mock:oracle|adversarial|echo|scripted" or "http"
  std::string endpoint_url;
  std::string api_key_env_var;
  std::string model_id = "default";
  std::string script_path;  // for mock:scripted
  int timeout_ms = 30000;
  int max_retries = 2;
  int parallelism = 4;
  int backoff_ms = 250;
  uint64_t image_byte_limit = 8 * 1024 * 1024;
  double temperature = 0.0;
  int max_tokens = 1024;
};

struct SyntheticPristine {
  Subset subset = Subset::PristineFFHQ;
  int count = 0;
};

struct SourceScan {
  std::string dir;
  std::string glob = "*";
  Subset subset = Subset::PristineCelebAHQ;
};

struct AcquisitionConfig {
  int max_regions = 3;
  int max_source_reuse = 100;
  int partial_per_generator = 12;
  int full_per_generator = 6;
  int id_insert_count = 6;
  int split_ratio_train = 4;
  int split_ratio_test = 1;
  std::vector<SyntheticPristine> synthetic_pristine = {
      {Subset::PristineFFHQ, 20}, {Subset::PristineFFPP, 8}, {Subset::PristineCelebAHQ, 12}};
  std::vector<SourceScan> source_scan;
};

struct BiasConfig {
  int pair_count = 20;
  int top_k = 10;
  bool global_only = false;
};

struct EkcotConfig {
  int retry_count = 2;
  double max_quarantine_fraction = 0.0;
};

struct EvaluationConfig {
  Split split = Split::Test;
};

struct RunConfig {
  uint64_t root_seed = 42;
  std::filesystem::path data_dir = "data";
  std::filesystem::path out_dir = "out";
  ModelConfig model;
  AcquisitionConfig acquisition;
  BiasConfig bias;
  EkcotConfig ekcot;
  EvaluationConfig evaluation;
};

/// Strict parse: unknown keys are errors naming the offending key path, and
/// every bound is checked. Missing keys take the defaults above.
RunConfig config_from_json(const Json& j);

/// Loads, parses, defaults and invariant-checks a config file.
RunConfig validate_config(const std::filesystem::path& path);

}  // namespace vlf
