#include "vlforgery/assembly.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "vlforgery/answer.hpp"
#include "vlforgery/errors.hpp"
#include "vlforgery/rng.hpp"
#include "vlforgery/util.hpp"

namespace vlf {

QuestionBank load_question_bank(const Json& j) {
  QuestionBank bank;
  bank.formats = j.at("formats").get<std::vector<std::string>>();
  if (bank.formats.empty()) raise(ErrorCode::ConfigError, "question bank is empty");
  std::set<std::string> seen;
  for (const std::string& q : bank.formats) {
    if (trim(q).empty()) raise(ErrorCode::ConfigError, "blank question format");
    if (q.find('?') == std::string::npos) {
      raise(ErrorCode::ConfigError, "question format is not a question: " + q);
    }
    if (!seen.insert(q).second) {
      raise(ErrorCode::ConfigError, "duplicate question format: " + q);
    }
  }
  return bank;
}

std::string generate_question(const QuestionBank& bank, uint64_t rng_seed) {
  if (bank.formats.empty()) raise(ErrorCode::EmptyBank, "question bank has no formats");
  Rng rng(rng_seed);
  return bank.formats[rng.below(bank.formats.size())];
}

Triplet build_triplet(const ForgeryRecord& record, const EkCotDescription& description,
                      std::string question) {
  if (description.record_id != record.image.uri) {
    raise(ErrorCode::RecordMismatch,
          "description for '" + description.record_id + "' paired with record '" +
              record.image.uri + "'");
  }
  // The gate that keeps label-contradicting answers out of training data,
  // even if the descriptions file was edited by hand.
  const AnswerParse parsed = parse_answer(description.answer_text);
  if (!parsed.ok()) {
    raise(ErrorCode::InvariantViolation,
          "triplet answer is not grammar-conformant: " + parsed.unparseable_reason);
  }
  const StructuredAnswer& a = *parsed.answer;
  if (a.detection != record.truth.authenticity || a.forgery_type != record.truth.forgery_type ||
      !(a.regions == record.truth.regions) || a.method != record.truth.generator) {
    raise(ErrorCode::InvariantViolation,
          "triplet answer contradicts ground truth for " + record.image.uri);
  }
  return Triplet{record.image, std::move(question), description.answer_text};
}

EmissionSummary emit_finetune_file(const std::vector<Triplet>& triplets,
                                   const std::filesystem::path& path) {
  std::vector<const Triplet*> ordered;
  ordered.reserve(triplets.size());
  for (const Triplet& t : triplets) ordered.push_back(&t);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Triplet* a, const Triplet* b) { return a->visual.uri < b->visual.uri; });

  std::ostringstream out;
  for (const Triplet* t : ordered) {
    Json line;
    line["id"] = t->visual.uri;
    line["image"] = t->visual.uri;
    Json human{{"from", "human"}, {"value", "<image>\n" + t->question}};
    Json model{{"from", "model"}, {"value", t->answer}};
    line["conversations"] = Json::array({human, model});
    out << line.dump() << '\n';
  }
  const std::string content = out.str();
  write_text_file(path, content);
  return EmissionSummary{ordered.size(), hash_hex(content)};
}

std::vector<ParsedTriplet> parse_finetune_file(const std::filesystem::path& path) {
  std::vector<ParsedTriplet> out;
  for (const std::string& line : read_lines(path)) {
    const Json j = Json::parse(line);
    ParsedTriplet t;
    t.id = j.at("id").get<std::string>();
    t.image_uri = j.at("image").get<std::string>();
    const Json& conv = j.at("conversations");
    if (!conv.is_array() || conv.size() != 2 || conv.at(0).at("from") != "human" ||
        conv.at(1).at("from") != "model") {
      raise(ErrorCode::ParseFailure, "malformed conversations entry for id " + t.id);
    }
    std::string human = conv.at(0).at("value").get<std::string>();
    constexpr std::string_view kImageToken = "<image>\n";
    if (human.rfind(kImageToken, 0) != 0) {
      raise(ErrorCode::ParseFailure, "human turn missing image token for id " + t.id);
    }
    t.question = human.substr(kImageToken.size());
    t.answer = conv.at(1).at("value").get<std::string>();
    out.push_back(std::move(t));
  }
  return out;
}

void emit_training_config(const std::filesystem::path& path) {
  Json config;
  config["stage1"] = "projector_alignment";
  config["stage2"] = "lora";
  config["lora_rank"] = 128;
  config["lora_alpha"] = 256;
  config["learning_rate"] = 2e-5;
  config["batch_size"] = 128;
  config["epochs"] = 3;
  write_text_file(path, config.dump(2) + "\n");
}

}  // namespace vlf
