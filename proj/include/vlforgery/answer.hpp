#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vlforgery/types.hpp"

namespace vlf {

/// Display spellings used inside answer text (distinct from the snake_case
/// serialization tokens in types.hpp).
std::string_view forgery_type_display(ForgeryType t);

/// Parsed form of a model answer that follows the structured grammar
///   "Detection Result: real/fake" + analysis + "Forgery Type" +
///   "Falsified Region" + "Forgery Method".
struct StructuredAnswer {
  Authenticity detection = Authenticity::Real;
  ForgeryType forgery_type = ForgeryType::None;
  RegionSet regions;
  Generator method = Generator::None;
  std::string analysis_text;
  std::vector<std::string> parse_warnings;
};

struct AnswerParse {
  std::optional<StructuredAnswer> answer;
  std::string unparseable_reason;  // set iff !ok()

  bool ok() const { return answer.has_value(); }
};

/// Total function: any input maps to a StructuredAnswer or an unparseable
/// reason, never an exception. Label matching is case-insensitive and
/// tolerant of surrounding whitespace/punctuation; lenient synonym matches
/// land in parse_warnings. A real detection normalizes the remaining fields
/// to their none values.
AnswerParse parse_answer(std::string_view text);

/// Canonical grammar emission for the four fields plus analysis.
std::string compose_answer_fields(Authenticity detection, std::string_view analysis,
                                  ForgeryType forgery_type, const RegionSet& regions,
                                  Generator method);

/// compose_answer_fields with the fields taken from ground truth.
std::string compose_answer(const GroundTruth& truth, std::string_view analysis);

/// The three ordered analysis sections of a grammar-conformant answer:
/// judgment (detection + analysis), localization (type + region),
/// attribution (method). Throws ParseFailure on non-conformant text.
std::array<std::string, 3> answer_sections(std::string_view text);

}  // namespace vlf
