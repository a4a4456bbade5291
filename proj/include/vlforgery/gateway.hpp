#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "vlforgery/json.hpp"
#include "vlforgery/types.hpp"

namespace vlf {

struct DecodeParams {
  double temperature = 0.0;  // reproducible by default
  int max_tokens = 1024;
  std::optional<uint64_t> seed;
};

struct ChatVisionRequest {
  std::string system_text;
  std::string user_text;
  std::vector<ImageRef> image_refs;  // 0..2 entries
  DecodeParams decode;
};

/// Throws InvalidArgument when the request violates its invariants
/// (more than two images, negative temperature, non-positive max_tokens).
void check_request(const ChatVisionRequest& request);

/// Canonical wire-shape serialization (chat-completion style, images by uri).
/// This is the byte image the blindness property inspects.
Json request_to_json(const ChatVisionRequest& request, std::string_view model_id = "default");

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  /// Returns the model's text for the request. Transport failures surface as
  /// Error{Transport}; oversized image payloads as Error{PayloadTooLarge}.
  virtual std::string chat_vision(const ChatVisionRequest& request) = 0;
};

struct EndpointConfig {
  std::string endpoint_url;
  std::string api_key_env_var;
  std::string model_id = "default";
  int timeout_ms = 30000;
  int max_retries = 2;
  int parallelism = 4;
  int backoff_ms = 250;
  size_t image_byte_limit = 8 * 1024 * 1024;
};

/// Single-attempt HTTP chat-completion client. Images whose uri resolves to a
/// local file are embedded as base64 data urls (subject to the byte limit);
/// anything else is passed through as a url.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(EndpointConfig config);
  std::string chat_vision(const ChatVisionRequest& request) override;

 private:
  EndpointConfig config_;
};

/// Decorator adding bounded in-flight concurrency plus retry with exponential
/// backoff for transient Transport failures. Wraps mocks and HTTP clients
/// alike so retry semantics are identical for both.
class GatewayClient : public ChatClient {
 public:
  GatewayClient(std::shared_ptr<ChatClient> inner, int max_retries, int parallelism,
                int backoff_ms = 250);
  std::string chat_vision(const ChatVisionRequest& request) override;

 private:
  std::shared_ptr<ChatClient> inner_;
  int max_retries_;
  int parallelism_;
  int backoff_ms_;
  std::mutex mutex_;
  std::condition_variable slot_available_;
  int in_flight_ = 0;
};

// ---------------------------------------------------------------------------
// Generation jobs

enum class JobKind : uint8_t { Inpaint, IdInsert, TextToImage };

std::string_view to_string(JobKind k);
JobKind job_kind_from_string(std::string_view s);

struct GenerationJob {
  JobKind kind = JobKind::TextToImage;
  SynthesisPrompt prompt;
  std::optional<RegionMaskSpec> mask;     // required for inpaint
  std::optional<ImageRef> source_image;   // required for inpaint and id_insert
  Generator generator = Generator::None;
  uint64_t seed = 0;
};

/// Throws InvariantViolation when the job's kind-specific invariants fail.
void check_job(const GenerationJob& job);

Json job_to_json(const GenerationJob& job);
GenerationJob job_from_json(const Json& j);

class GenerationClient {
 public:
  virtual ~GenerationClient() = default;
  virtual ImageRef submit_generation(const GenerationJob& job) = 0;
};

struct LedgerEntry {
  GenerationJob job;
  std::string result_uri;
};

/// Deterministic placeholder generator: the returned locator and content are
/// pure functions of (seed, kind, generator). Every job lands in a ledger.
class MockGenerationClient : public GenerationClient {
 public:
  ImageRef submit_generation(const GenerationJob& job) override;
  std::vector<LedgerEntry> ledger_snapshot() const;
  static std::string placeholder_content(const GenerationJob& job);

 private:
  mutable std::mutex mutex_;
  std::vector<LedgerEntry> ledger_;
};

/// Minimal HTTP generation client: POSTs the job JSON, expects {"uri": ...}.
class HttpGenerationClient : public GenerationClient {
 public:
  explicit HttpGenerationClient(EndpointConfig config);
  ImageRef submit_generation(const GenerationJob& job) override;

 private:
  EndpointConfig config_;
};

// ---------------------------------------------------------------------------
// Mock chat models

enum class MockBehavior { Oracle, Adversarial, Echo, Scripted };

/// uri -> record lookup handed to truth-aware mocks. The lookup lives on the
/// mock side only; requests never carry ground truth.
class TruthIndex {
 public:
  TruthIndex() = default;
  void add(const ForgeryRecord& record);
  const ForgeryRecord* find(const std::string& uri) const;
  size_t size() const { return by_uri_.size(); }
  static TruthIndex from_records(const std::vector<ForgeryRecord>& records);

 private:
  std::unordered_map<std::string, ForgeryRecord> by_uri_;
};

/// One entry of a scripted response table. Exactly one matcher is set.
struct ScriptRule {
  std::optional<std::string> match_image_uri;   // exact match on first image
  std::optional<std::string> match_user_text;   // substring match
  bool match_any = false;
  std::vector<std::string> responses;           // chosen by request hash
  int fail_times = 0;  // transient Transport failures before responding
};

std::vector<ScriptRule> script_from_json(const Json& j);

class MockChatClient : public ChatClient {
 public:
  explicit MockChatClient(MockBehavior behavior, TruthIndex truth = {},
                          std::vector<ScriptRule> script = {}, uint64_t seed = 0);

  std::string chat_vision(const ChatVisionRequest& request) override;

  /// Highest number of concurrently executing calls observed.
  int high_water_mark() const { return high_water_.load(); }
  size_t call_count() const { return calls_.load(); }
  /// Serialized form of every request seen, for blindness assertions.
  std::vector<Json> request_log() const;
  void set_latency_ms(int ms) { latency_ms_ = ms; }

 private:
  std::string respond(const ChatVisionRequest& request);
  std::string oracle_answer(const ChatVisionRequest& request) const;
  std::string adversarial_answer(const ChatVisionRequest& request) const;
  std::string comparison_text(const ChatVisionRequest& request, bool invert) const;
  std::string scripted_answer(const ChatVisionRequest& request);

  MockBehavior behavior_;
  TruthIndex truth_;
  std::vector<ScriptRule> script_;
  std::vector<std::unique_ptr<std::atomic<int>>> fail_counters_;
  uint64_t seed_;
  int latency_ms_ = 0;

  std::atomic<int> in_flight_{0};
  std::atomic<int> high_water_{0};
  std::atomic<size_t> calls_{0};
  mutable std::mutex log_mutex_;
  std::vector<Json> request_log_;
};

/// Factory for the four desk-scale behaviors.
std::shared_ptr<MockChatClient> make_mock_model(MockBehavior behavior, TruthIndex truth = {},
                                                std::vector<ScriptRule> script = {},
                                                uint64_t seed = 0);

}  // namespace vlf
