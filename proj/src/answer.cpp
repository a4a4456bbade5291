#include "vlforgery/answer.hpp"

#include <algorithm>
#include <cctype>

#include "vlforgery/errors.hpp"
#include "vlforgery/util.hpp"

namespace vlf {

std::string_view forgery_type_display(ForgeryType t) {
  switch (t) {
    case ForgeryType::None: return "none";
    case ForgeryType::PartialSynthesis: return "partial synthesis";
    case ForgeryType::IdentityInsertion: return "identity insertion";
    case ForgeryType::NonExistent: return "non-existent";
  }
  return "?";
}

namespace {

constexpr std::string_view kDetectionLabel = "detection result";
constexpr std::string_view kTypeLabel = "forgery type";
constexpr std::string_view kRegionLabel = "falsified region";
constexpr std::string_view kMethodLabel = "forgery method";

size_t find_ci(std::string_view haystack, std::string_view needle, size_t from) {
  if (needle.empty() || haystack.size() < needle.size()) return std::string_view::npos;
  for (size_t i = from; i + needle.size() <= haystack.size(); ++i) {
    bool match = true;
    for (size_t k = 0; k < needle.size(); ++k) {
      if (std::tolower(static_cast<unsigned char>(haystack[i + k])) !=
          std::tolower(static_cast<unsigned char>(needle[k]))) {
        match = false;
        break;
      }
    }
    if (match) return i;
  }
  return std::string_view::npos;
}

struct FieldSpan {
  size_t label_pos = std::string_view::npos;
  size_t value_begin = 0;
  size_t value_end = 0;

  bool found() const { return label_pos != std::string_view::npos; }
};

// Position of the next occurrence of any grammar label at or after `from`.
size_t next_label_pos(std::string_view text, size_t from) {
  size_t best = std::string_view::npos;
  for (std::string_view label : {kDetectionLabel, kTypeLabel, kRegionLabel, kMethodLabel}) {
    const size_t p = find_ci(text, label, from);
    if (p < best) best = p;
  }
  return best;
}

// Locates `label` at or after `from` and captures its value: everything after
// the label (skipping colon/markdown dressing) up to the end of line or the
// next label, whichever comes first.
FieldSpan find_field(std::string_view text, std::string_view label, size_t from) {
  FieldSpan span;
  span.label_pos = find_ci(text, label, from);
  if (!span.found()) return span;
  size_t p = span.label_pos + label.size();
  while (p < text.size()) {
    const char c = text[p];
    if (c == ':' || c == '*' || c == '_' || c == ')' || c == ']' || c == ' ' || c == '\t') {
      ++p;
    } else {
      break;
    }
  }
  span.value_begin = p;
  size_t end = text.find('\n', p);
  if (end == std::string_view::npos) end = text.size();
  const size_t next = next_label_pos(text, p);
  span.value_end = std::min(end, next);
  return span;
}

size_t find_word_ci(std::string_view text, std::string_view word) {
  size_t from = 0;
  for (;;) {
    const size_t p = find_ci(text, word, from);
    if (p == std::string_view::npos) return std::string_view::npos;
    const bool left_ok = p == 0 || !std::isalpha(static_cast<unsigned char>(text[p - 1]));
    const size_t after = p + word.size();
    const bool right_ok =
        after >= text.size() || !std::isalpha(static_cast<unsigned char>(text[after]));
    if (left_ok && right_ok) return p;
    from = p + 1;
  }
}

// Lowercase and collapse separators so "partial-synthesis", "Partial_Synthesis"
// and "partial  synthesis" all compare equal.
std::string normalize_value(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char ch : trim_punct(raw)) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c == '.') {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      pending_space = true;
    }
  }
  return out;
}

std::optional<ForgeryType> match_forgery_type(const std::string& norm,
                                              std::vector<std::string>& warnings) {
  if (norm == "none" || norm == "n a") return ForgeryType::None;
  if (norm == "partial synthesis") return ForgeryType::PartialSynthesis;
  if (norm == "identity insertion") return ForgeryType::IdentityInsertion;
  if (norm == "non existent" || norm == "nonexistent") return ForgeryType::NonExistent;
  // lenient contains-matches
  if (norm.find("partial") != std::string::npos) {
    warnings.push_back("lenient forgery_type match for '" + norm + "'");
    return ForgeryType::PartialSynthesis;
  }
  if (norm.find("identity") != std::string::npos || norm.find("id insertion") != std::string::npos) {
    warnings.push_back("lenient forgery_type match for '" + norm + "'");
    return ForgeryType::IdentityInsertion;
  }
  if (norm.find("existent") != std::string::npos || norm.find("full") != std::string::npos) {
    warnings.push_back("lenient forgery_type match for '" + norm + "'");
    return ForgeryType::NonExistent;
  }
  return std::nullopt;
}

std::optional<Generator> match_method(const std::string& norm,
                                      std::vector<std::string>& warnings) {
  if (norm == "none" || norm == "n a") return Generator::None;
  // compare without internal spaces: "kandinsky 2.2" == "kandinsky2.2"
  std::string squeezed;
  for (char c : norm) {
    if (c != ' ') squeezed.push_back(c);
  }
  for (Generator g : kFakeGenerators) {
    if (squeezed == to_lower(to_string(g))) {
      if (norm != to_lower(to_string(g))) {
        warnings.push_back("normalized method spelling '" + norm + "'");
      }
      return g;
    }
  }
  return std::nullopt;
}

RegionSet decode_regions_lenient(std::string_view raw, std::vector<std::string>& warnings) {
  const std::string cleaned = trim_punct(raw);
  if (cleaned.empty()) {
    warnings.push_back("empty falsified-region value");
    return RegionSet{};
  }
  try {
    return decode_region_label(cleaned);
  } catch (const Error&) {
  }
  // Fall back: treat ", " / " and " / "&" as separators and re-join with "And".
  std::string rejoined;
  std::string token;
  const std::string lowered = to_lower(cleaned);
  size_t i = 0;
  auto flush = [&] {
    const std::string t = trim(token);
    token.clear();
    if (t.empty() || t == "and") return;
    if (!rejoined.empty()) rejoined += "And";
    rejoined += t;
  };
  while (i < lowered.size()) {
    if (lowered.compare(i, 5, " and ") == 0) {
      flush();
      i += 5;
    } else if (lowered[i] == ',' || lowered[i] == '&' || lowered[i] == '+') {
      flush();
      ++i;
    } else {
      token.push_back(lowered[i]);
      ++i;
    }
  }
  flush();
  try {
    RegionSet set = decode_region_label(rejoined);
    warnings.push_back("lenient region separator in '" + cleaned + "'");
    return set;
  } catch (const Error&) {
    warnings.push_back("undecodable falsified-region value '" + cleaned + "'");
    return RegionSet{};
  }
}

}  // namespace

AnswerParse parse_answer(std::string_view text) {
  AnswerParse result;
  const FieldSpan detection = find_field(text, kDetectionLabel, 0);
  if (!detection.found()) {
    result.unparseable_reason = "no 'Detection Result' field";
    return result;
  }
  const std::string_view detection_value =
      text.substr(detection.value_begin, detection.value_end - detection.value_begin);
  // First real/fake word wins; a value naming neither is unparseable.
  const size_t real_pos = find_word_ci(detection_value, "real");
  const size_t fake_pos = find_word_ci(detection_value, "fake");
  if (real_pos == std::string_view::npos && fake_pos == std::string_view::npos) {
    result.unparseable_reason = "detection value names neither real nor fake";
    return result;
  }

  StructuredAnswer answer;
  answer.detection = fake_pos < real_pos ? Authenticity::Fake : Authenticity::Real;
  if (real_pos != std::string_view::npos && fake_pos != std::string_view::npos) {
    answer.parse_warnings.push_back("detection value names both real and fake; took the first");
  }

  // Fields are searched in grammar order so prose that mentions a label
  // before its field cannot hijack the capture.
  const FieldSpan type_field = find_field(text, kTypeLabel, detection.value_end);
  const FieldSpan region_field =
      find_field(text, kRegionLabel, type_field.found() ? type_field.value_end : detection.value_end);
  const FieldSpan method_field = find_field(
      text, kMethodLabel, region_field.found() ? region_field.value_end : detection.value_end);

  // Analysis text sits between the detection value and the next field label.
  {
    size_t analysis_begin = detection.value_end;
    size_t analysis_end = next_label_pos(text, analysis_begin);
    if (analysis_end == std::string_view::npos) analysis_end = text.size();
    answer.analysis_text = trim(text.substr(analysis_begin, analysis_end - analysis_begin));
  }

  if (type_field.found()) {
    const std::string norm = normalize_value(
        text.substr(type_field.value_begin, type_field.value_end - type_field.value_begin));
    if (auto t = match_forgery_type(norm, answer.parse_warnings)) {
      answer.forgery_type = *t;
    } else {
      answer.parse_warnings.push_back("unknown forgery_type value '" + norm + "'");
    }
  } else {
    answer.parse_warnings.push_back("missing 'Forgery Type' field");
  }

  if (region_field.found()) {
    answer.regions = decode_regions_lenient(
        text.substr(region_field.value_begin, region_field.value_end - region_field.value_begin),
        answer.parse_warnings);
  } else {
    answer.parse_warnings.push_back("missing 'Falsified Region' field");
  }

  if (method_field.found()) {
    const std::string norm = normalize_value(
        text.substr(method_field.value_begin, method_field.value_end - method_field.value_begin));
    if (auto g = match_method(norm, answer.parse_warnings)) {
      answer.method = *g;
    } else {
      answer.parse_warnings.push_back("unknown forgery_method value '" + norm + "'");
    }
  } else {
    answer.parse_warnings.push_back("missing 'Forgery Method' field");
  }

  if (answer.detection == Authenticity::Real) {
    if (answer.forgery_type != ForgeryType::None || !answer.regions.empty() ||
        answer.method != Generator::None) {
      answer.parse_warnings.push_back("real detection: normalized forgery fields to none");
    }
    answer.forgery_type = ForgeryType::None;
    answer.regions = RegionSet{};
    answer.method = Generator::None;
  }

  result.answer = std::move(answer);
  return result;
}

std::string compose_answer_fields(Authenticity detection, std::string_view analysis,
                                  ForgeryType forgery_type, const RegionSet& regions,
                                  Generator method) {
  std::string out;
  out += "Detection Result: ";
  out += to_string(detection);
  out += '\n';
  if (!analysis.empty()) {
    out += analysis;
    out += '\n';
  }
  out += "Forgery Type: ";
  out += forgery_type_display(forgery_type);
  out += '\n';
  out += "Falsified Region: ";
  out += encode_region_label(regions);
  out += '\n';
  out += "Forgery Method: ";
  out += to_string(method);
  return out;
}

std::string compose_answer(const GroundTruth& truth, std::string_view analysis) {
  return compose_answer_fields(truth.authenticity, analysis, truth.forgery_type, truth.regions,
                               truth.generator);
}

std::array<std::string, 3> answer_sections(std::string_view text) {
  const size_t detection = find_ci(text, kDetectionLabel, 0);
  const size_t type = find_ci(text, kTypeLabel, detection == std::string_view::npos ? 0 : detection);
  const size_t method = find_ci(text, kMethodLabel, type == std::string_view::npos ? 0 : type);
  if (detection == std::string_view::npos || type == std::string_view::npos ||
      method == std::string_view::npos || !(detection < type && type < method)) {
    raise(ErrorCode::ParseFailure, "answer text does not follow the three-step grammar");
  }
  return {
      trim(text.substr(detection, type - detection)),
      trim(text.substr(type, method - type)),
      trim(text.substr(method)),
  };
}

}  // namespace vlf
