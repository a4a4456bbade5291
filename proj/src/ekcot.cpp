#include "vlforgery/ekcot.hpp"

#include "vlforgery/answer.hpp"
#include "vlforgery/errors.hpp"
#include "vlforgery/util.hpp"

namespace vlf {

namespace {

// Filled into the template's {rule} slot: the three-step analysis chain and
// the required answer format.
constexpr const char* kAnalysisRule =
    "Analyze the image in three ordered steps.\n"
    "1. Real or fake judgment: decide whether the image is real or fake and explain the "
    "detection result. If fake, classify the forgery as partial synthesis, identity insertion, "
    "or non-existent.\n"
    "2. Localization: if the forgery is a partial synthesis, name every falsified region "
    "(hair, brows, ears, nose, eyes, teeth); join multiple regions with 'And'.\n"
    "3. Attribution: name the generator that produced the synthesis.\n"
    "Respond in exactly this format:\n"
    "Detection Result: <real or fake>\n"
    "<analysis of the detection result>\n"
    "Forgery Type: <none, partial synthesis, identity insertion, or non-existent>\n"
    "Falsified Region: <none, or regions joined with 'And'>\n"
    "Forgery Method: <none, SDXL, SD2, SD3, Kandinsky2.2, Flux, or InstantID>";

void substitute_slot(std::string& body, const std::string& slot, const std::string& value) {
  const std::string token = "{" + slot + "}";
  const size_t pos = body.find(token);
  if (pos == std::string::npos) raise(ErrorCode::TemplateSlotMissing, slot);
  // A slot may appear once; replace every occurrence for safety.
  size_t at = pos;
  std::string out;
  size_t start = 0;
  while (at != std::string::npos) {
    out.append(body, start, at - start);
    out += value;
    start = at + token.size();
    at = body.find(token, start);
  }
  out.append(body, start, std::string::npos);
  body = std::move(out);
}

}  // namespace

std::string render_ground_truth_block(const GroundTruth& truth) {
  std::string block;
  block += "Authenticity: ";
  block += to_string(truth.authenticity);
  block += "\nForgery Type: ";
  block += forgery_type_display(truth.forgery_type);
  block += "\nFalsified Region: ";
  block += encode_region_label(truth.regions);
  block += "\nForgery Method: ";
  block += to_string(truth.generator);
  return block;
}

GeneralRulePrompt build_general_rule_prompt(const ForgeryRecord& record, const JudgmentBias* bias,
                                            const RuleTemplate& tmpl) {
  validate_record(record);

  GeneralRulePrompt prompt;
  prompt.image = record.image;
  prompt.truth = record.truth;
  if (record.provenance) prompt.synthesis_prompt_text = record.provenance->prompt.text;
  if (bias && !bias->descriptor_text.empty()) prompt.bias_descriptor = bias->descriptor_text;

  std::string body = tmpl.body;
  substitute_slot(body, "rule", kAnalysisRule);
  substitute_slot(body, "ground_truth", render_ground_truth_block(record.truth));
  substitute_slot(body, "synthesis_prompt",
                  prompt.synthesis_prompt_text ? *prompt.synthesis_prompt_text : "none");
  substitute_slot(body, "judgment_bias",
                  prompt.bias_descriptor ? *prompt.bias_descriptor : "none");
  prompt.rule_text = std::move(body);
  return prompt;
}

Json description_to_json(const EkCotDescription& d) {
  return Json{{"record_id", d.record_id},
              {"answer", d.answer_text},
              {"steps", Json::array({d.steps[0], d.steps[1], d.steps[2]})}};
}

EkCotDescription description_from_json(const Json& j) {
  EkCotDescription d;
  d.record_id = j.at("record_id").get<std::string>();
  d.answer_text = j.at("answer").get<std::string>();
  const Json& steps = j.at("steps");
  for (size_t i = 0; i < 3 && i < steps.size(); ++i) {
    d.steps[i] = steps.at(i).get<std::string>();
  }
  return d;
}

std::vector<ValidationMismatch> validate_description(std::string_view desc_text,
                                                     const GroundTruth& truth) {
  const AnswerParse parsed = parse_answer(desc_text);
  if (!parsed.ok()) raise(ErrorCode::ParseFailure, parsed.unparseable_reason);
  const StructuredAnswer& a = *parsed.answer;

  std::vector<ValidationMismatch> mismatches;
  if (a.detection != truth.authenticity) {
    mismatches.push_back({"authenticity", std::string(to_string(truth.authenticity)),
                          std::string(to_string(a.detection))});
  }
  if (a.forgery_type != truth.forgery_type) {
    mismatches.push_back({"forgery_type", std::string(forgery_type_display(truth.forgery_type)),
                          std::string(forgery_type_display(a.forgery_type))});
  }
  if (!(a.regions == truth.regions)) {
    mismatches.push_back(
        {"regions", encode_region_label(truth.regions), encode_region_label(a.regions)});
  }
  if (a.method != truth.generator) {
    mismatches.push_back({"method", std::string(to_string(truth.generator)),
                          std::string(to_string(a.method))});
  }
  return mismatches;
}

EkCotDescription generate_description(const GeneralRulePrompt& prompt, ChatClient& describer,
                                      const DescribeOptions& options) {
  std::string feedback;
  std::vector<std::string> failures;
  const int attempts = 1 + std::max(0, options.retry_count);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    ChatVisionRequest request;
    request.user_text = prompt.rule_text + feedback;
    request.image_refs = {prompt.image};
    const std::string response = describer.chat_vision(request);

    std::string rejection;
    try {
      const std::vector<ValidationMismatch> mismatches =
          validate_description(response, prompt.truth);
      if (mismatches.empty()) {
        EkCotDescription description;
        description.record_id = prompt.image.uri;
        description.answer_text = response;
        description.steps = answer_sections(response);
        return description;
      }
      for (const ValidationMismatch& m : mismatches) {
        if (!rejection.empty()) rejection += "; ";
        rejection += m.field + " should be '" + m.expected + "', answer said '" + m.actual + "'";
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ParseFailure) throw;
      rejection = e.what();
    }

    failures.push_back(rejection);
    feedback = "\n\nThe previous answer was rejected: " + rejection +
               "\nAnswer again, following the required format and the ground truth exactly.";
  }
  std::string summary;
  for (const std::string& f : failures) {
    if (!summary.empty()) summary += " | ";
    summary += f;
  }
  raise(ErrorCode::DescriptionRejected, prompt.image.uri + ": " + summary);
}

}  // namespace vlf
