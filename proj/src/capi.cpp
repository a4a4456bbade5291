#include "vlforgery/vlforgery.h"

#include <memory>
#include <string>

#include "vlforgery/errors.hpp"
#include "vlforgery/pipeline.hpp"

struct vlf_runner {
  std::unique_ptr<vlf::PipelineRunner> runner;
  std::string last_summary;
  std::string last_error;
};

namespace {

vlf_status status_for(const vlf::Error& e) {
  switch (e.code()) {
    case vlf::ErrorCode::ConfigError: return VLF_ERROR_CONFIG;
    case vlf::ErrorCode::MissingInput: return VLF_ERROR_MISSING_INPUT;
    case vlf::ErrorCode::InvalidArgument: return VLF_ERROR_INVALID_ARGUMENT;
    case vlf::ErrorCode::Transport:
    case vlf::ErrorCode::PayloadTooLarge: return VLF_ERROR_TRANSPORT;
    case vlf::ErrorCode::IoFailure: return VLF_ERROR_IO;
    default: return VLF_ERROR_INTERNAL;
  }
}

template <typename Fn>
vlf_status guarded(vlf_runner* runner, Fn&& fn) {
  if (runner == nullptr) return VLF_ERROR_INVALID_ARGUMENT;
  try {
    return fn();
  } catch (const vlf::Error& e) {
    runner->last_error = e.what();
    return status_for(e);
  } catch (const std::exception& e) {
    runner->last_error = e.what();
    return VLF_ERROR_INTERNAL;
  }
}

bool parse_bool(const std::string& value, bool& out) {
  if (value == "true" || value == "1") out = true;
  else if (value == "false" || value == "0") out = false;
  else return false;
  return true;
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const int parsed = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    vlf::raise(vlf::ErrorCode::InvalidArgument, key + " expects an integer, got \"" + value + "\"");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double parsed = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    vlf::raise(vlf::ErrorCode::InvalidArgument, key + " expects a number, got \"" + value + "\"");
  }
}

}  // namespace

namespace {
thread_local std::string g_create_error;
}  // namespace

extern "C" {

const char* vlf_version(void) { return "0.1.0"; }

vlf_status vlf_runner_create(const char* config_path, vlf_runner** out_runner) {
  if (config_path == nullptr || out_runner == nullptr) {
    g_create_error = "null argument to vlf_runner_create";
    return VLF_ERROR_INVALID_ARGUMENT;
  }
  *out_runner = nullptr;
  auto handle = std::make_unique<vlf_runner>();
  try {
    vlf::RunConfig config = vlf::validate_config(config_path);
    handle->runner = std::make_unique<vlf::PipelineRunner>(std::move(config));
  } catch (const vlf::Error& e) {
    g_create_error = e.what();
    return status_for(e);
  } catch (const std::exception& e) {
    g_create_error = e.what();
    return VLF_ERROR_INTERNAL;
  }
  g_create_error.clear();
  *out_runner = handle.release();
  return VLF_OK;
}

const char* vlf_last_create_error(void) { return g_create_error.c_str(); }

void vlf_runner_destroy(vlf_runner* runner) { delete runner; }

vlf_status vlf_runner_set_seed(vlf_runner* runner, uint64_t seed) {
  return guarded(runner, [&] {
    runner->runner->config().root_seed = seed;
    return VLF_OK;
  });
}

vlf_status vlf_runner_set_model(vlf_runner* runner, const char* model_name) {
  if (model_name == nullptr) return VLF_ERROR_INVALID_ARGUMENT;
  return guarded(runner, [&] {
    const std::string name(model_name);
    if (name != "http" && name.rfind("mock:", 0) != 0) {
      runner->last_error = "model name must be \"http\" or \"mock:<behavior>\"";
      return VLF_ERROR_INVALID_ARGUMENT;
    }
    runner->runner->config().model.name = name;
    return VLF_OK;
  });
}

vlf_status vlf_runner_set_output_dir(vlf_runner* runner, const char* dir) {
  if (dir == nullptr) return VLF_ERROR_INVALID_ARGUMENT;
  return guarded(runner, [&] {
    runner->runner->config().out_dir = dir;
    return VLF_OK;
  });
}

vlf_status vlf_runner_set_option(vlf_runner* runner, const char* key, const char* value) {
  if (key == nullptr || value == nullptr) return VLF_ERROR_INVALID_ARGUMENT;
  return guarded(runner, [&]() -> vlf_status {
    vlf::RunConfig& config = runner->runner->config();
    const std::string k(key);
    const std::string v(value);
    if (k == "bias.global_only") {
      bool flag = false;
      if (!parse_bool(v, flag)) {
        runner->last_error = "bias.global_only expects true or false";
        return VLF_ERROR_INVALID_ARGUMENT;
      }
      config.bias.global_only = flag;
    } else if (k == "bias.pair_count") {
      config.bias.pair_count = parse_int(k, v);
    } else if (k == "bias.top_k") {
      config.bias.top_k = parse_int(k, v);
    } else if (k == "evaluation.split") {
      config.evaluation.split = vlf::split_from_string(v);
    } else if (k == "model.script_path") {
      config.model.script_path = v;
    } else if (k == "model.parallelism") {
      config.model.parallelism = parse_int(k, v);
    } else if (k == "ekcot.max_quarantine_fraction") {
      config.ekcot.max_quarantine_fraction = parse_double(k, v);
    } else if (k == "paths.data_dir") {
      config.data_dir = v;
    } else {
      runner->last_error = "unknown option \"" + k + "\"";
      return VLF_ERROR_INVALID_ARGUMENT;
    }
    return VLF_OK;
  });
}

vlf_status vlf_runner_run_stage(vlf_runner* runner, const char* stage_name) {
  if (stage_name == nullptr) return VLF_ERROR_INVALID_ARGUMENT;
  return guarded(runner, [&]() -> vlf_status {
    const vlf::Stage stage = vlf::stage_from_string(stage_name);
    const vlf::StageResult result = runner->runner->run_stage(stage);
    runner->last_summary = result.summary.dump();
    if (result.threshold_exceeded) {
      runner->last_error = "quarantine/failure rate above the configured threshold";
      return VLF_ERROR_THRESHOLD;
    }
    runner->last_error.clear();
    return VLF_OK;
  });
}

const char* vlf_runner_last_summary(const vlf_runner* runner) {
  return runner == nullptr ? "" : runner->last_summary.c_str();
}

const char* vlf_runner_last_error(const vlf_runner* runner) {
  return runner == nullptr ? "" : runner->last_error.c_str();
}

}  // extern "C"
