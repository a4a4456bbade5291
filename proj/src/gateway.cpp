#include "vlforgery/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include <httplib.h>

#include "vlforgery/answer.hpp"
#include "vlforgery/errors.hpp"
#include "vlforgery/rng.hpp"
#include "vlforgery/util.hpp"

namespace vlf {

void check_request(const ChatVisionRequest& request) {
  if (request.image_refs.size() > 2) {
    raise(ErrorCode::InvalidArgument,
          "request carries " + std::to_string(request.image_refs.size()) +
              " images; the limit is 2");
  }
  if (request.decode.temperature < 0.0) {
    raise(ErrorCode::InvalidArgument, "temperature must be >= 0");
  }
  if (request.decode.max_tokens <= 0) {
    raise(ErrorCode::InvalidArgument, "max_tokens must be positive");
  }
}

Json request_to_json(const ChatVisionRequest& request, std::string_view model_id) {
  Json content = Json::array();
  content.push_back(Json{{"type", "text"}, {"text", request.user_text}});
  for (const ImageRef& image : request.image_refs) {
    content.push_back(Json{{"type", "image_url"}, {"image_url", Json{{"url", image.uri}}}});
  }
  Json messages = Json::array();
  if (!request.system_text.empty()) {
    messages.push_back(Json{{"role", "system"}, {"content", request.system_text}});
  }
  messages.push_back(Json{{"role", "user"}, {"content", content}});
  Json j{{"model", std::string(model_id)},
         {"temperature", request.decode.temperature},
         {"max_tokens", request.decode.max_tokens},
         {"messages", messages}};
  if (request.decode.seed) j["seed"] = *request.decode.seed;
  return j;
}

// ---------------------------------------------------------------------------
// HTTP transport

namespace {

struct UrlParts {
  std::string base;  // scheme://host[:port]
  std::string path;
};

UrlParts split_url(const std::string& url) {
  const size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    raise(ErrorCode::ConfigError, "endpoint_url missing scheme: " + url);
  }
  const size_t path_start = url.find('/', scheme + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string mime_for(const std::filesystem::path& p) {
  const std::string ext = to_lower(p.extension().string());
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".webp") return "image/webp";
  return "image/png";
}

// Local files become base64 data urls; anything else passes through as-is.
// Oversized files are an error: forensic inputs are never downscaled in
// transit.
std::string image_payload_url(const ImageRef& image, size_t byte_limit) {
  std::filesystem::path p(image.uri);
  if (image.uri.rfind("file://", 0) == 0) p = image.uri.substr(7);
  std::error_code ec;
  if (!std::filesystem::is_regular_file(p, ec)) return image.uri;
  const std::string bytes = read_text_file(p);
  if (bytes.size() > byte_limit) {
    raise(ErrorCode::PayloadTooLarge,
          image.uri + " is " + std::to_string(bytes.size()) + " bytes; limit " +
              std::to_string(byte_limit));
  }
  return "data:" + mime_for(p) + ";base64," + base64_encode(bytes);
}

std::string extract_content_text(const Json& body) {
  const Json& choices = body.at("choices");
  if (!choices.is_array() || choices.empty()) {
    raise(ErrorCode::MalformedResponse, "response has no choices");
  }
  const Json& content = choices.at(0).at("message").at("content");
  if (content.is_string()) return content.get<std::string>();
  if (content.is_array()) {
    std::string text;
    for (const Json& part : content) {
      if (part.contains("text")) text += part.at("text").get<std::string>();
    }
    return text;
  }
  raise(ErrorCode::MalformedResponse, "unsupported content shape");
}

}  // namespace

HttpChatClient::HttpChatClient(EndpointConfig config) : config_(std::move(config)) {}

std::string HttpChatClient::chat_vision(const ChatVisionRequest& request) {
  check_request(request);

  Json payload = request_to_json(request, config_.model_id);
  // Replace uri references with embedded payloads where the uri is a file.
  Json& content = payload.at("messages").back().at("content");
  size_t image_index = 0;
  for (Json& part : content) {
    if (part.at("type") == "image_url") {
      part.at("image_url").at("url") =
          image_payload_url(request.image_refs.at(image_index++), config_.image_byte_limit);
    }
  }

  const UrlParts url = split_url(config_.endpoint_url);
  httplib::Client client(url.base);
  client.set_connection_timeout(0, config_.timeout_ms * 1000);
  client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
  httplib::Headers headers;
  if (!config_.api_key_env_var.empty()) {
    if (const char* key = std::getenv(config_.api_key_env_var.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  auto res = client.Post(url.path, headers, payload.dump(), "application/json");
  if (!res) {
    raise(ErrorCode::Transport, "connection to " + config_.endpoint_url + " failed");
  }
  if (res->status < 200 || res->status >= 300) {
    raise(ErrorCode::Transport,
          "status " + std::to_string(res->status) + " from " + config_.endpoint_url);
  }
  try {
    return extract_content_text(Json::parse(res->body));
  } catch (const Json::exception& e) {
    raise(ErrorCode::MalformedResponse, std::string("bad response body: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Gateway decorator: concurrency cap + retry

GatewayClient::GatewayClient(std::shared_ptr<ChatClient> inner, int max_retries, int parallelism,
                             int backoff_ms)
    : inner_(std::move(inner)),
      max_retries_(max_retries),
      parallelism_(parallelism > 0 ? parallelism : 1),
      backoff_ms_(backoff_ms) {}

std::string GatewayClient::chat_vision(const ChatVisionRequest& request) {
  check_request(request);
  {
    std::unique_lock<std::mutex> lock(mutex_);
    slot_available_.wait(lock, [&] { return in_flight_ < parallelism_; });
    ++in_flight_;
  }
  struct SlotRelease {
    GatewayClient* self;
    ~SlotRelease() {
      std::lock_guard<std::mutex> lock(self->mutex_);
      --self->in_flight_;
      self->slot_available_.notify_one();
    }
  } release{this};

  for (int attempt = 0;; ++attempt) {
    try {
      return inner_->chat_vision(request);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Transport || attempt >= max_retries_) throw;
      if (backoff_ms_ > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms_ << attempt));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Generation

std::string_view to_string(JobKind k) {
  switch (k) {
    case JobKind::Inpaint: return "inpaint";
    case JobKind::IdInsert: return "id_insert";
    case JobKind::TextToImage: return "txt2img";
  }
  return "?";
}

JobKind job_kind_from_string(std::string_view s) {
  if (s == "inpaint") return JobKind::Inpaint;
  if (s == "id_insert") return JobKind::IdInsert;
  if (s == "txt2img") return JobKind::TextToImage;
  raise(ErrorCode::ParseFailure, "unknown job kind '" + std::string(s) + "'");
}

void check_job(const GenerationJob& job) {
  switch (job.kind) {
    case JobKind::Inpaint:
      if (!job.mask) raise(ErrorCode::InvariantViolation, "inpaint job without a mask");
      if (!job.source_image) {
        raise(ErrorCode::InvariantViolation, "inpaint job without a source image");
      }
      break;
    case JobKind::IdInsert:
      if (!job.source_image) {
        raise(ErrorCode::InvariantViolation, "id_insert job without a source image");
      }
      break;
    case JobKind::TextToImage:
      if (job.mask) raise(ErrorCode::InvariantViolation, "txt2img job must not carry a mask");
      break;
  }
}

Json job_to_json(const GenerationJob& job) {
  Json j;
  j["kind"] = to_string(job.kind);
  Json keywords = Json::object();
  for (const auto& [region, keyword] : job.prompt.keywords_used) {
    keywords[std::string(region_name(region))] = keyword;
  }
  j["prompt"] = Json{{"text", job.prompt.text},
                     {"template_ids", job.prompt.template_ids},
                     {"keywords_used", keywords}};
  if (job.mask) {
    Json sources = Json::object();
    for (const auto& [region, uri] : job.mask->mask_sources) {
      sources[std::string(region_name(region))] = uri;
    }
    j["mask"] = Json{{"regions", encode_region_label(job.mask->regions)},
                     {"mask_sources", sources}};
  } else {
    j["mask"] = nullptr;
  }
  j["source_image"] = job.source_image ? Json(job.source_image->uri) : Json(nullptr);
  j["generator"] = to_string(job.generator);
  j["seed"] = job.seed;
  return j;
}

GenerationJob job_from_json(const Json& j) {
  GenerationJob job;
  job.kind = job_kind_from_string(j.at("kind").get<std::string>());
  job.prompt.text = j.at("prompt").at("text").get<std::string>();
  job.prompt.template_ids = j.at("prompt").at("template_ids").get<std::vector<std::string>>();
  for (const auto& [key, value] : j.at("prompt").at("keywords_used").items()) {
    job.prompt.keywords_used[region_from_name(key)] = value.get<std::string>();
  }
  if (!j.at("mask").is_null()) {
    RegionMaskSpec mask;
    mask.regions = decode_region_label(j.at("mask").at("regions").get<std::string>());
    for (const auto& [key, value] : j.at("mask").at("mask_sources").items()) {
      mask.mask_sources[region_from_name(key)] = value.get<std::string>();
    }
    job.mask = std::move(mask);
  }
  if (!j.at("source_image").is_null()) {
    ImageRef src;
    src.uri = j.at("source_image").get<std::string>();
    job.source_image = std::move(src);
  }
  job.generator = generator_from_string(j.at("generator").get<std::string>());
  job.seed = j.at("seed").get<uint64_t>();
  return job;
}

namespace {

Subset subset_for_job(const GenerationJob& job) {
  switch (job.kind) {
    case JobKind::Inpaint: return partial_subset_for(job.generator);
    case JobKind::IdInsert: return Subset::FullInstantID;
    case JobKind::TextToImage: return full_subset_for(job.generator);
  }
  raise(ErrorCode::UnsupportedKind, "unmapped job kind");
}

uint64_t job_fingerprint(const GenerationJob& job) {
  uint64_t h = mix64(job.seed);
  h = mix64(h ^ static_cast<uint64_t>(job.kind));
  h = mix64(h ^ static_cast<uint64_t>(job.generator));
  return h;
}

}  // namespace

ImageRef MockGenerationClient::submit_generation(const GenerationJob& job) {
  check_job(job);
  ImageRef out;
  out.uri = "mock://" + std::string(to_string(job.kind)) + "/" +
            hash_hex(std::to_string(job_fingerprint(job)));
  out.subset = subset_for_job(job);
  out.split = Split::Train;  // reassigned by the dataset split
  {
    std::lock_guard<std::mutex> lock(mutex_);
    ledger_.push_back(LedgerEntry{job, out.uri});
  }
  return out;
}

std::vector<LedgerEntry> MockGenerationClient::ledger_snapshot() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return ledger_;
}

std::string MockGenerationClient::placeholder_content(const GenerationJob& job) {
  // A small deterministic byte blob standing in for image content.
  std::string bytes = "VLFMOCKIMG";
  uint64_t state = job_fingerprint(job);
  for (int i = 0; i < 48; ++i) {
    state = mix64(state);
    bytes.push_back(static_cast<char>(state & 0xff));
  }
  return bytes;
}

HttpGenerationClient::HttpGenerationClient(EndpointConfig config) : config_(std::move(config)) {}

ImageRef HttpGenerationClient::submit_generation(const GenerationJob& job) {
  check_job(job);
  const UrlParts url = split_url(config_.endpoint_url);
  httplib::Client client(url.base);
  client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
  auto res = client.Post(url.path, job_to_json(job).dump(), "application/json");
  if (!res) raise(ErrorCode::Transport, "connection to " + config_.endpoint_url + " failed");
  if (res->status == 501) {
    raise(ErrorCode::UnsupportedKind,
          std::string(to_string(job.kind)) + " not implemented by " + config_.endpoint_url);
  }
  if (res->status < 200 || res->status >= 300) {
    raise(ErrorCode::Transport, "status " + std::to_string(res->status));
  }
  try {
    const Json body = Json::parse(res->body);
    ImageRef out;
    out.uri = body.at("uri").get<std::string>();
    out.subset = subset_for_job(job);
    out.split = Split::Train;
    return out;
  } catch (const Json::exception& e) {
    raise(ErrorCode::MalformedResponse, std::string("bad generation response: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Truth index

void TruthIndex::add(const ForgeryRecord& record) { by_uri_[record.image.uri] = record; }

const ForgeryRecord* TruthIndex::find(const std::string& uri) const {
  auto it = by_uri_.find(uri);
  return it == by_uri_.end() ? nullptr : &it->second;
}

TruthIndex TruthIndex::from_records(const std::vector<ForgeryRecord>& records) {
  TruthIndex index;
  for (const auto& record : records) index.add(record);
  return index;
}

// ---------------------------------------------------------------------------
// Mock chat models

std::vector<ScriptRule> script_from_json(const Json& j) {
  std::vector<ScriptRule> rules;
  for (const Json& entry : j.at("rules")) {
    ScriptRule rule;
    if (entry.contains("match_image_uri")) {
      rule.match_image_uri = entry.at("match_image_uri").get<std::string>();
    }
    if (entry.contains("match_user_text")) {
      rule.match_user_text = entry.at("match_user_text").get<std::string>();
    }
    if (entry.contains("match_any")) rule.match_any = entry.at("match_any").get<bool>();
    if (entry.contains("response")) {
      rule.responses.push_back(entry.at("response").get<std::string>());
    }
    if (entry.contains("responses")) {
      for (const Json& r : entry.at("responses")) rule.responses.push_back(r.get<std::string>());
    }
    if (entry.contains("fail_times")) rule.fail_times = entry.at("fail_times").get<int>();
    const int matchers = (rule.match_image_uri ? 1 : 0) + (rule.match_user_text ? 1 : 0) +
                         (rule.match_any ? 1 : 0);
    if (matchers != 1) {
      raise(ErrorCode::ConfigError, "script rule needs exactly one matcher");
    }
    if (rule.responses.empty() ) {
      raise(ErrorCode::ConfigError, "script rule has no responses");
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

MockChatClient::MockChatClient(MockBehavior behavior, TruthIndex truth,
                               std::vector<ScriptRule> script, uint64_t seed)
    : behavior_(behavior), truth_(std::move(truth)), script_(std::move(script)), seed_(seed) {
  fail_counters_.reserve(script_.size());
  for (const ScriptRule& rule : script_) {
    fail_counters_.push_back(std::make_unique<std::atomic<int>>(rule.fail_times));
  }
}

std::vector<Json> MockChatClient::request_log() const {
  std::lock_guard<std::mutex> lock(log_mutex_);
  return request_log_;
}

std::string MockChatClient::chat_vision(const ChatVisionRequest& request) {
  check_request(request);
  calls_.fetch_add(1);
  const int now = in_flight_.fetch_add(1) + 1;
  struct Exit {
    std::atomic<int>* counter;
    ~Exit() { counter->fetch_sub(1); }
  } exit{&in_flight_};
  int seen = high_water_.load();
  while (now > seen && !high_water_.compare_exchange_weak(seen, now)) {
  }
  {
    std::lock_guard<std::mutex> lock(log_mutex_);
    request_log_.push_back(request_to_json(request));
  }
  if (latency_ms_ > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(latency_ms_));
  }
  return respond(request);
}

std::string MockChatClient::respond(const ChatVisionRequest& request) {
  switch (behavior_) {
    case MockBehavior::Echo: return request.user_text;
    case MockBehavior::Oracle: return oracle_answer(request);
    case MockBehavior::Adversarial: return adversarial_answer(request);
    case MockBehavior::Scripted: return scripted_answer(request);
  }
  raise(ErrorCode::InvalidArgument, "unknown mock behavior");
}

namespace {

// Compound-noun-phrase pools the comparison texts draw from. Both pools parse
// as (ADJ|NOUN)+NOUN under the shipped tagger, so mined biases are nonempty.
const std::vector<std::string>& fake_cue_pool() {
  static const std::vector<std::string> pool = {
      "smooth skin texture",      "uneven noise pattern",      "waxy specular highlights",
      "blurred hairline boundary", "inconsistent lighting direction",
      "harsh edge transitions",   "flat color distribution",   "repetitive frequency artifacts"};
  return pool;
}

const std::vector<std::string>& real_cue_pool() {
  static const std::vector<std::string> pool = {
      "natural skin texture",      "fine pore detail",          "consistent noise grain",
      "sharp hairline boundary",   "balanced color distribution",
      "coherent lighting direction", "crisp edge transitions",  "stable frequency content"};
  return pool;
}

}  // namespace

std::string MockChatClient::oracle_answer(const ChatVisionRequest& request) const {
  if (request.image_refs.size() == 2) return comparison_text(request, false);
  if (request.image_refs.empty()) return request.user_text;
  const ForgeryRecord* record = truth_.find(request.image_refs.front().uri);
  if (!record) {
    raise(ErrorCode::InvalidArgument,
          "oracle mock has no ground truth for " + request.image_refs.front().uri);
  }
  const GroundTruth& t = record->truth;
  std::string analysis;
  if (t.authenticity == Authenticity::Real) {
    analysis =
        "The image keeps consistent low-level statistics across all regions, so it is judged "
        "pristine. No falsified region or generator applies.";
  } else {
    analysis = "Low-level cues diverge from the pristine distribution; the image is judged "
               "synthetic (" +
               std::string(forgery_type_display(t.forgery_type)) + ").";
  }
  return compose_answer(t, analysis);
}

std::string MockChatClient::adversarial_answer(const ChatVisionRequest& request) const {
  if (request.image_refs.size() == 2) return comparison_text(request, true);
  if (request.image_refs.empty()) return request.user_text;
  const ForgeryRecord* record = truth_.find(request.image_refs.front().uri);
  if (!record) {
    raise(ErrorCode::InvalidArgument,
          "adversarial mock has no ground truth for " + request.image_refs.front().uri);
  }
  const GroundTruth& t = record->truth;
  const Authenticity flipped =
      t.authenticity == Authenticity::Real ? Authenticity::Fake : Authenticity::Real;

  // Wrong forgery type: next one in the cycle that differs from the truth.
  ForgeryType wrong_type = ForgeryType::PartialSynthesis;
  if (t.forgery_type == ForgeryType::PartialSynthesis) wrong_type = ForgeryType::IdentityInsertion;
  else if (t.forgery_type == ForgeryType::IdentityInsertion) wrong_type = ForgeryType::NonExistent;

  // Regions disjoint from the truth: take up to two from the complement.
  RegionSet wrong_regions;
  for (Region r : kAllRegions) {
    if (!t.regions.contains(r)) {
      wrong_regions.insert(r);
      if (wrong_regions.size() == 2) break;
    }
  }

  // Wrong generator: cycle through the seven-value vocabulary.
  Generator wrong_generator =
      static_cast<Generator>((static_cast<uint8_t>(t.generator) + 1) % 7);

  return compose_answer_fields(flipped, "Contrarian diagnosis by construction.", wrong_type,
                               wrong_regions, wrong_generator);
}

std::string MockChatClient::comparison_text(const ChatVisionRequest& request, bool invert) const {
  std::string parts[2];
  for (int i = 0; i < 2; ++i) {
    const ImageRef& image = request.image_refs[static_cast<size_t>(i)];
    const ForgeryRecord* record = truth_.find(image.uri);
    if (!record) {
      raise(ErrorCode::InvalidArgument, "mock has no ground truth for " + image.uri);
    }
    bool fake_side = record->truth.authenticity == Authenticity::Fake;
    if (invert) fake_side = !fake_side;
    const auto& pool = fake_side ? fake_cue_pool() : real_cue_pool();
    const uint64_t h = mix64(seed_ ^ fnv1a64(image.uri) ^ fnv1a64(request.user_text));
    const std::string& first = pool[h % pool.size()];
    const std::string& second = pool[(h >> 16) % pool.size()];
    parts[i] = "This side shows " + first;
    if (second != first) parts[i] += " and " + second;
    parts[i] += " throughout.";
  }
  return "Image 1: " + parts[0] + "\nImage 2: " + parts[1];
}

std::string MockChatClient::scripted_answer(const ChatVisionRequest& request) {
  for (size_t i = 0; i < script_.size(); ++i) {
    const ScriptRule& rule = script_[i];
    bool matched = false;
    if (rule.match_image_uri) {
      matched = !request.image_refs.empty() &&
                request.image_refs.front().uri == *rule.match_image_uri;
    } else if (rule.match_user_text) {
      matched = request.user_text.find(*rule.match_user_text) != std::string::npos;
    } else {
      matched = rule.match_any;
    }
    if (!matched) continue;

    // Scripted transient failures: decrement and fail until exhausted.
    int remaining = fail_counters_[i]->load();
    while (remaining > 0) {
      if (fail_counters_[i]->compare_exchange_weak(remaining, remaining - 1)) {
        raise(ErrorCode::Transport, "scripted transient failure");
      }
    }
    if (rule.responses.size() == 1) return rule.responses.front();
    uint64_t h = mix64(seed_ ^ fnv1a64(request.user_text));
    for (const ImageRef& image : request.image_refs) h = mix64(h ^ fnv1a64(image.uri));
    return rule.responses[h % rule.responses.size()];
  }
  const std::string key = request.image_refs.empty()
                              ? request.user_text.substr(0, 48)
                              : request.image_refs.front().uri;
  raise(ErrorCode::MissingScript, "no script entry for '" + key + "'");
}

std::shared_ptr<MockChatClient> make_mock_model(MockBehavior behavior, TruthIndex truth,
                                                std::vector<ScriptRule> script, uint64_t seed) {
  if (behavior == MockBehavior::Scripted && script.empty()) {
    raise(ErrorCode::InvalidArgument, "scripted behavior requires a response table");
  }
  return std::make_shared<MockChatClient>(behavior, std::move(truth), std::move(script), seed);
}

}  // namespace vlf
