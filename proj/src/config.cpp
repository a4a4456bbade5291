#include "vlforgery/config.hpp"

#include <set>

#include "vlforgery/errors.hpp"
#include "vlforgery/util.hpp"

namespace vlf {

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::Acquire: return "acquire";
    case Stage::Generate: return "generate";
    case Stage::MineBias: return "mine-bias";
    case Stage::Describe: return "describe";
    case Stage::Assemble: return "assemble";
    case Stage::Evaluate: return "evaluate";
    case Stage::Report: return "report";
  }
  return "?";
}

Stage stage_from_string(std::string_view name) {
  if (name == "acquire") return Stage::Acquire;
  if (name == "generate") return Stage::Generate;
  if (name == "mine-bias") return Stage::MineBias;
  if (name == "describe") return Stage::Describe;
  if (name == "assemble") return Stage::Assemble;
  if (name == "evaluate") return Stage::Evaluate;
  if (name == "report") return Stage::Report;
  raise(ErrorCode::InvalidArgument, "unknown stage '" + std::string(name) + "'");
}

namespace {

// Silent typos corrupt experiments; every object is checked against its key set.
void reject_unknown_keys(const Json& j, const std::set<std::string>& known,
                         const std::string& path) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      raise(ErrorCode::ConfigError, "unknown key \"" + path + key + "\"");
    }
  }
}

template <typename T>
void read_into(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    raise(ErrorCode::ConfigError, std::string("bad value for \"") + key + "\": " + e.what());
  }
}

void require_positive(long long value, const std::string& key) {
  if (value <= 0) raise(ErrorCode::ConfigError, key + " must be positive");
}

void require_non_negative(long long value, const std::string& key) {
  if (value < 0) raise(ErrorCode::ConfigError, key + " must be >= 0");
}

ModelConfig model_from_json(const Json& j) {
  ModelConfig m;
  reject_unknown_keys(j,
                      {"name", "endpoint_url", "api_key_env_var", "model_id", "script_path",
                       "timeout_ms", "max_retries", "parallelism", "backoff_ms",
                       "image_byte_limit", "temperature", "max_tokens"},
                      "model.");
  read_into(j, "name", m.name);
  read_into(j, "endpoint_url", m.endpoint_url);
  read_into(j, "api_key_env_var", m.api_key_env_var);
  read_into(j, "model_id", m.model_id);
  read_into(j, "script_path", m.script_path);
  read_into(j, "timeout_ms", m.timeout_ms);
  read_into(j, "max_retries", m.max_retries);
  read_into(j, "parallelism", m.parallelism);
  read_into(j, "backoff_ms", m.backoff_ms);
  read_into(j, "image_byte_limit", m.image_byte_limit);
  read_into(j, "temperature", m.temperature);
  read_into(j, "max_tokens", m.max_tokens);

  const bool is_mock = m.name.rfind("mock:", 0) == 0;
  if (!is_mock && m.name != "http") {
    raise(ErrorCode::ConfigError, "model.name must be \"http\" or \"mock:<behavior>\"");
  }
  if (is_mock) {
    const std::string behavior = m.name.substr(5);
    if (behavior != "oracle" && behavior != "adversarial" && behavior != "echo" &&
        behavior != "scripted") {
      raise(ErrorCode::ConfigError, "unknown mock behavior \"" + behavior + "\"");
    }
    if (behavior == "scripted" && m.script_path.empty()) {
      raise(ErrorCode::ConfigError, "mock:scripted requires model.script_path");
    }
  } else if (m.endpoint_url.empty()) {
    raise(ErrorCode::ConfigError, "model.name \"http\" requires model.endpoint_url");
  }
  require_positive(m.timeout_ms, "model.timeout_ms");
  require_non_negative(m.max_retries, "model.max_retries");
  require_positive(m.parallelism, "model.parallelism");
  require_non_negative(m.backoff_ms, "model.backoff_ms");
  require_positive(static_cast<long long>(m.image_byte_limit), "model.image_byte_limit");
  if (m.temperature < 0) raise(ErrorCode::ConfigError, "model.temperature must be >= 0");
  require_positive(m.max_tokens, "model.max_tokens");
  return m;
}

AcquisitionConfig acquisition_from_json(const Json& j) {
  AcquisitionConfig a;
  reject_unknown_keys(j,
                      {"max_regions", "max_source_reuse", "partial_per_generator",
                       "full_per_generator", "id_insert_count", "split_ratio_train",
                       "split_ratio_test", "synthetic_pristine", "source_scan"},
                      "acquisition.");
  read_into(j, "max_regions", a.max_regions);
  read_into(j, "max_source_reuse", a.max_source_reuse);
  read_into(j, "partial_per_generator", a.partial_per_generator);
  read_into(j, "full_per_generator", a.full_per_generator);
  read_into(j, "id_insert_count", a.id_insert_count);
  read_into(j, "split_ratio_train", a.split_ratio_train);
  read_into(j, "split_ratio_test", a.split_ratio_test);
  if (j.contains("synthetic_pristine")) {
    a.synthetic_pristine.clear();
    for (const Json& entry : j.at("synthetic_pristine")) {
      reject_unknown_keys(entry, {"subset", "count"}, "acquisition.synthetic_pristine.");
      SyntheticPristine sp;
      sp.subset = subset_from_string(entry.at("subset").get<std::string>());
      sp.count = entry.at("count").get<int>();
      require_non_negative(sp.count, "acquisition.synthetic_pristine.count");
      if (!subset_is_pristine(sp.subset)) {
        raise(ErrorCode::ConfigError, "synthetic_pristine subset must be a pristine subset");
      }
      a.synthetic_pristine.push_back(sp);
    }
  }
  if (j.contains("source_scan")) {
    for (const Json& entry : j.at("source_scan")) {
      reject_unknown_keys(entry, {"dir", "glob", "subset"}, "acquisition.source_scan.");
      SourceScan scan;
      scan.dir = entry.at("dir").get<std::string>();
      read_into(entry, "glob", scan.glob);
      scan.subset = subset_from_string(entry.at("subset").get<std::string>());
      if (!subset_is_pristine(scan.subset)) {
        raise(ErrorCode::ConfigError, "source_scan subset must be a pristine subset");
      }
      a.source_scan.push_back(std::move(scan));
    }
  }
  require_positive(a.max_regions, "acquisition.max_regions");
  require_positive(a.max_source_reuse, "acquisition.max_source_reuse");
  require_non_negative(a.partial_per_generator, "acquisition.partial_per_generator");
  require_non_negative(a.full_per_generator, "acquisition.full_per_generator");
  require_non_negative(a.id_insert_count, "acquisition.id_insert_count");
  require_positive(a.split_ratio_train, "acquisition.split_ratio_train");
  require_positive(a.split_ratio_test, "acquisition.split_ratio_test");
  return a;
}

}  // namespace

RunConfig config_from_json(const Json& j) {
  RunConfig config;
  reject_unknown_keys(
      j, {"root_seed", "paths", "model", "acquisition", "bias", "ekcot", "evaluation"}, "");

  read_into(j, "root_seed", config.root_seed);

  if (j.contains("paths")) {
    const Json& paths = j.at("paths");
    reject_unknown_keys(paths, {"data_dir", "out_dir"}, "paths.");
    if (paths.contains("data_dir")) config.data_dir = paths.at("data_dir").get<std::string>();
    if (paths.contains("out_dir")) config.out_dir = paths.at("out_dir").get<std::string>();
  }

  if (j.contains("model")) config.model = model_from_json(j.at("model"));
  if (j.contains("acquisition")) config.acquisition = acquisition_from_json(j.at("acquisition"));

  if (j.contains("bias")) {
    const Json& b = j.at("bias");
    reject_unknown_keys(b, {"pair_count", "top_k", "global_only"}, "bias.");
    read_into(b, "pair_count", config.bias.pair_count);
    read_into(b, "top_k", config.bias.top_k);
    read_into(b, "global_only", config.bias.global_only);
    require_positive(config.bias.pair_count, "bias.pair_count");
    require_positive(config.bias.top_k, "bias.top_k");
  }

  if (j.contains("ekcot")) {
    const Json& e = j.at("ekcot");
    reject_unknown_keys(e, {"retry_count", "max_quarantine_fraction"}, "ekcot.");
    read_into(e, "retry_count", config.ekcot.retry_count);
    read_into(e, "max_quarantine_fraction", config.ekcot.max_quarantine_fraction);
    require_non_negative(config.ekcot.retry_count, "ekcot.retry_count");
    if (config.ekcot.max_quarantine_fraction < 0 || config.ekcot.max_quarantine_fraction > 1) {
      raise(ErrorCode::ConfigError, "ekcot.max_quarantine_fraction must be in [0, 1]");
    }
  }

  if (j.contains("evaluation")) {
    const Json& e = j.at("evaluation");
    reject_unknown_keys(e, {"split"}, "evaluation.");
    if (e.contains("split")) {
      config.evaluation.split = split_from_string(e.at("split").get<std::string>());
    }
  }

  return config;
}

RunConfig validate_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    raise(ErrorCode::ConfigError, "config file " + path.string() + " does not exist");
  }
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const Json::exception& e) {
    raise(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  if (!j.is_object()) raise(ErrorCode::ConfigError, path.string() + ": top level must be an object");
  try {
    return config_from_json(j);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    raise(ErrorCode::ConfigError, e.what());
  }
}

}  // namespace vlf
