#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vlforgery/answer.hpp"
#include "vlforgery/assembly.hpp"
#include "vlforgery/gateway.hpp"
#include "vlforgery/types.hpp"

namespace vlf {

struct InferenceResult {
  std::string record_id;
  std::string question;
  std::string answer_text;
  bool transport_failed = false;
  std::string error;
};

Json inference_result_to_json(const InferenceResult& r);
InferenceResult inference_result_from_json(const Json& j);
void write_answers_jsonl(const std::filesystem::path& path,
                         const std::vector<InferenceResult>& results);
std::vector<InferenceResult> read_answers_jsonl(const std::filesystem::path& path);

/// One <image, question> call per record with a freshly drawn question;
/// record->question pairing is deterministic under the seed. Per-record
/// transport failures are recorded, never fatal.
std::vector<InferenceResult> run_inference(const std::vector<ForgeryRecord>& records,
                                           ChatClient& model, const QuestionBank& bank,
                                           uint64_t rng_seed, int parallelism = 1);

struct CellScore {
  int64_t correct = 0;
  int64_t total = 0;

  bool defined() const { return total > 0; }
  double accuracy() const { return total > 0 ? static_cast<double>(correct) / total : 0.0; }
};

using TruthMap = std::map<std::string, ForgeryRecord>;
TruthMap truth_map_from_records(const std::vector<ForgeryRecord>& records);

struct DetectionScores {
  std::map<Subset, CellScore> by_subset;
  int64_t unparseable = 0;
};

struct LocalizationScores {
  // region accuracy per (subset, region); denominators are records whose
  // truth contains the region
  std::map<Subset, std::map<Region, CellScore>> by_subset_region;
  // predicted regions absent from the truth, tallied separately
  std::map<Subset, int64_t> false_positive_regions;
};

struct AttributionScores {
  std::map<Subset, CellScore> by_subset;
  // rows: truth generator; columns: predicted generator (None bucket holds
  // unparseable / unattributed answers)
  std::map<Generator, std::map<Generator, int64_t>> confusion;
};

/// Authenticity accuracy per subset cell; unparseable answers count as
/// incorrect. Throws KeyMismatch when an answer has no matching truth.
DetectionScores score_detection(const std::vector<InferenceResult>& results,
                                const TruthMap& truths);

/// The partial-credit rule: each ground-truth region is credited iff it is in
/// the predicted set; answers judged "real" credit nothing.
LocalizationScores score_localization(const std::vector<InferenceResult>& results,
                                      const TruthMap& truths);

/// Exact generator match over fake records, plus the confusion matrix.
AttributionScores score_attribution(const std::vector<InferenceResult>& results,
                                    const TruthMap& truths);

struct MetricsReport {
  DetectionScores detection;
  LocalizationScores localization;
  AttributionScores attribution;
  int64_t total_answers = 0;
  int64_t unparseable_count = 0;

  Json to_json() const;
  std::string render_markdown() const;

  /// Named cell lookup ("detection/PS_SDXL", "localization/PS_SD2/hair",
  /// "attribution/FS_Flux"); throws MissingCell for unknown names.
  CellScore cell(const std::string& name) const;
};

MetricsReport build_report(DetectionScores detection, LocalizationScores localization,
                           AttributionScores attribution, int64_t total_answers);

}  // namespace vlf
