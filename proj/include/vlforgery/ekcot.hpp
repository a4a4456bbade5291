#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "vlforgery/bias_miner.hpp"
#include "vlforgery/gateway.hpp"
#include "vlforgery/types.hpp"

namespace vlf {

/// The General Rule template: free text with the four named slots
/// {rule}, {ground_truth}, {synthesis_prompt}, {judgment_bias}.
struct RuleTemplate {
  std::string body;
};

/// Fully rendered description-generation prompt for one record.
struct GeneralRulePrompt {
  std::string rule_text;  // rendered template, all slots substituted
  ImageRef image;
  GroundTruth truth;
  std::optional<std::string> synthesis_prompt_text;
  std::optional<std::string> bias_descriptor;
};

/// The ground-truth block embedded into the prompt; for pristine images the
/// forgery type, region and method lines all read "none".
std::string render_ground_truth_block(const GroundTruth& truth);

/// Renders the template for one validated record. Throws TemplateSlotMissing
/// when the template lacks any of the four slots.
GeneralRulePrompt build_general_rule_prompt(const ForgeryRecord& record, const JudgmentBias* bias,
                                            const RuleTemplate& tmpl);

struct EkCotDescription {
  std::string record_id;
  std::string answer_text;
  std::array<std::string, 3> steps;  // judgment, localization, attribution
};

Json description_to_json(const EkCotDescription& d);
EkCotDescription description_from_json(const Json& j);

struct ValidationMismatch {
  std::string field;
  std::string expected;
  std::string actual;
};

/// Parses the description under the answer grammar and compares every field
/// against the truth. Empty result means consistent. Grammar violations throw
/// ParseFailure.
std::vector<ValidationMismatch> validate_description(std::string_view desc_text,
                                                     const GroundTruth& truth);

struct DescribeOptions {
  int retry_count = 2;  // re-prompts with feedback before quarantine
};

/// One chat call with the image attached; rejected answers are retried with
/// the validation errors appended to the prompt. Throws DescriptionRejected
/// once retries are exhausted (callers quarantine, never drop silently).
EkCotDescription generate_description(const GeneralRulePrompt& prompt, ChatClient& describer,
                                      const DescribeOptions& options = {});

}  // namespace vlf
