#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vlforgery/gateway.hpp"
#include "vlforgery/types.hpp"

namespace vlf {

// ---------------------------------------------------------------------------
// Part-of-speech tagging (deterministic lexicon + suffix rules, pluggable)

enum class PosTag { Noun, Adjective, Verb, Adverb, Function, Other };

class PosTagger {
 public:
  virtual ~PosTagger() = default;
  virtual PosTag tag(std::string_view token) const = 0;
};

/// The shipped tagger: an embedded lexicon of function words and the
/// low-level-vision vocabulary, plus suffix rules for everything else.
/// Unknown words default to Noun.
class LexiconTagger final : public PosTagger {
 public:
  PosTag tag(std::string_view token) const override;
  static const LexiconTagger& builtin();
};

/// Lowercased word tokens; hyphens join, all other non-alphanumerics split.
std::vector<std::string> tokenize_words(std::string_view text);

// ---------------------------------------------------------------------------
// Comparison pipeline

struct AspectTemplate {
  std::string aspect_id;
  std::string prompt_body;
};

/// Loads aspects and enforces the contract: exactly ten, each body
/// referencing both images.
std::vector<AspectTemplate> load_aspects(const Json& j);

struct PairAssignment {
  std::string pair_id;
  ImageRef image1;
  ImageRef image2;
  Authenticity truth1 = Authenticity::Real;  // hidden from the describer
  Authenticity truth2 = Authenticity::Fake;
};

/// One uniform draw from each set; which side becomes image1 is a fair coin
/// flip, so the describer cannot learn the ordering.
PairAssignment sample_pair(const std::vector<ForgeryRecord>& real_set,
                           const std::vector<ForgeryRecord>& fake_set, uint64_t rng_seed);

struct DiscrepancyText {
  std::string pair_id;
  std::string aspect_id;
  int target = 1;  // 1 or 2
  std::string text;
  Authenticity hidden_truth = Authenticity::Real;
  Subset subset = Subset::PristineFFHQ;  // subset of the described image
};

Json discrepancy_to_json(const DiscrepancyText& d);
DiscrepancyText discrepancy_from_json(const Json& j);

/// One describer call per aspect with both images attached; each response is
/// split into the per-image statements. Returns 10 aspects x 2 targets = 20
/// texts with hidden truths attached from the assignment.
std::vector<DiscrepancyText> compare_low_level(const PairAssignment& pair,
                                               const std::vector<AspectTemplate>& aspects,
                                               ChatClient& describer);

/// Maximal token runs matching (ADJ|NOUN)* NOUN of length >= 2, lowercased.
/// Returned as a multiset (phrase -> occurrence count).
std::map<std::string, int> extract_compound_noun_phrases(std::string_view text,
                                                         const PosTagger& tagger);

/// Document frequency: fraction of texts containing each phrase at least
/// once. Throws EmptyCorpus on empty input.
std::map<std::string, double> compute_phrase_proportions(
    const std::vector<const DiscrepancyText*>& texts, const PosTagger& tagger);

struct RankedPhrase {
  std::string phrase;
  double p_real = 0.0;
  double p_fake = 0.0;
  double diff = 0.0;
};

/// Union of both maps (absent = 0), ranked by |p_fake - p_real| descending
/// with lexicographic tie-breaks; at most k entries.
std::vector<RankedPhrase> select_top_differential(const std::map<std::string, double>& real_props,
                                                  const std::map<std::string, double>& fake_props,
                                                  int k = 10);

struct DescriptorTemplates {
  std::string fake_template = "Fake images more often exhibit {phrase}.";
  std::string real_template = "Real images more often exhibit {phrase}.";
};

struct JudgmentBias {
  std::vector<RankedPhrase> phrases;
  std::string descriptor_text;
};

/// Substitutes each ranked phrase into the template of its dominant side and
/// concatenates in rank order. Throws EmptyRanking on an empty list.
JudgmentBias render_bias_descriptors(const std::vector<RankedPhrase>& ranked,
                                     const DescriptorTemplates& templates = {});

Json judgment_bias_to_json(const JudgmentBias& bias);
JudgmentBias judgment_bias_from_json(const Json& j);

}  // namespace vlf
