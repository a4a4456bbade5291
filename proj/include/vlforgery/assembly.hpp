#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vlforgery/ekcot.hpp"
#include "vlforgery/types.hpp"

namespace vlf {

struct QuestionBank {
  std::vector<std::string> formats;
};

/// Throws ConfigError on an empty bank, duplicates or entries that are not
/// questions.
QuestionBank load_question_bank(const Json& j);

/// Uniform draw, deterministic under the seed. Throws EmptyBank.
std::string generate_question(const QuestionBank& bank, uint64_t rng_seed);

struct Triplet {
  ImageRef visual;
  std::string question;
  std::string answer;
};

/// Pairs a record with its accepted description. Throws RecordMismatch when
/// the description belongs to a different record, InvariantViolation when the
/// answer contradicts the record's ground truth.
Triplet build_triplet(const ForgeryRecord& record, const EkCotDescription& description,
                      std::string question);

struct EmissionSummary {
  size_t count = 0;
  std::string content_hash;
};

/// Emits one JSON object per line in the two-turn conversation layout:
///   {"id", "image", "conversations": [{"from":"human","value":"<image>\n"+q},
///                                     {"from":"model","value":answer}]}
/// Lines are ordered by record id; emission is byte-stable.
EmissionSummary emit_finetune_file(const std::vector<Triplet>& triplets,
                                   const std::filesystem::path& path);

struct ParsedTriplet {
  std::string id;
  std::string image_uri;
  std::string question;
  std::string answer;
};

std::vector<ParsedTriplet> parse_finetune_file(const std::filesystem::path& path);

/// Writes the external trainer's recipe: projector alignment then LoRA
/// (rank 128, alpha 256), lr 2e-5, batch 128, 3 epochs.
void emit_training_config(const std::filesystem::path& path);

}  // namespace vlf
