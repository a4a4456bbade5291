#include "vlforgery/bias_miner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

#include "vlforgery/errors.hpp"
#include "vlforgery/rng.hpp"
#include "vlforgery/util.hpp"

namespace vlf {

// ---------------------------------------------------------------------------
// Tagger

namespace {

const std::unordered_map<std::string, PosTag>& builtin_lexicon() {
  static const std::unordered_map<std::string, PosTag> lexicon = {
      // function words
      {"the", PosTag::Function},   {"a", PosTag::Function},      {"an", PosTag::Function},
      {"of", PosTag::Function},    {"in", PosTag::Function},     {"on", PosTag::Function},
      {"at", PosTag::Function},    {"to", PosTag::Function},     {"with", PosTag::Function},
      {"near", PosTag::Function},  {"around", PosTag::Function}, {"across", PosTag::Function},
      {"between", PosTag::Function}, {"and", PosTag::Function},  {"or", PosTag::Function},
      {"but", PosTag::Function},   {"than", PosTag::Function},   {"this", PosTag::Function},
      {"that", PosTag::Function},  {"these", PosTag::Function},  {"those", PosTag::Function},
      {"it", PosTag::Function},    {"its", PosTag::Function},    {"both", PosTag::Function},
      {"while", PosTag::Function}, {"whereas", PosTag::Function}, {"there", PosTag::Function},
      {"each", PosTag::Function},  {"more", PosTag::Function},   {"most", PosTag::Function},
      {"less", PosTag::Function},  {"very", PosTag::Function},   {"no", PosTag::Function},
      {"not", PosTag::Function},   {"some", PosTag::Function},   {"any", PosTag::Function},
      {"as", PosTag::Function},    {"by", PosTag::Function},     {"from", PosTag::Function},
      {"into", PosTag::Function},  {"over", PosTag::Function},   {"under", PosTag::Function},
      {"throughout", PosTag::Function}, {"within", PosTag::Function},
      // common verbs
      {"is", PosTag::Verb},        {"are", PosTag::Verb},        {"was", PosTag::Verb},
      {"were", PosTag::Verb},      {"be", PosTag::Verb},         {"has", PosTag::Verb},
      {"have", PosTag::Verb},      {"shows", PosTag::Verb},      {"show", PosTag::Verb},
      {"looks", PosTag::Verb},     {"look", PosTag::Verb},       {"appears", PosTag::Verb},
      {"appear", PosTag::Verb},    {"seems", PosTag::Verb},      {"seem", PosTag::Verb},
      {"exhibits", PosTag::Verb},  {"exhibit", PosTag::Verb},    {"contains", PosTag::Verb},
      {"contain", PosTag::Verb},   {"presents", PosTag::Verb},   {"present", PosTag::Verb},
      {"displays", PosTag::Verb},  {"display", PosTag::Verb},    {"lacks", PosTag::Verb},
      {"lack", PosTag::Verb},      {"differs", PosTag::Verb},    {"differ", PosTag::Verb},
      {"keeps", PosTag::Verb},     {"keep", PosTag::Verb},       {"remains", PosTag::Verb},
      {"remain", PosTag::Verb},
      // low-level-vision nouns
      {"texture", PosTag::Noun},   {"pattern", PosTag::Noun},    {"noise", PosTag::Noun},
      {"skin", PosTag::Noun},      {"hair", PosTag::Noun},       {"hairline", PosTag::Noun},
      {"boundary", PosTag::Noun},  {"edge", PosTag::Noun},       {"edges", PosTag::Noun},
      {"color", PosTag::Noun},     {"tone", PosTag::Noun},       {"light", PosTag::Noun},
      {"lighting", PosTag::Noun},  {"shadow", PosTag::Noun},     {"shadows", PosTag::Noun},
      {"highlight", PosTag::Noun}, {"highlights", PosTag::Noun}, {"grain", PosTag::Noun},
      {"detail", PosTag::Noun},    {"details", PosTag::Noun},    {"pore", PosTag::Noun},
      {"pores", PosTag::Noun},     {"artifact", PosTag::Noun},   {"artifacts", PosTag::Noun},
      {"frequency", PosTag::Noun}, {"contrast", PosTag::Noun},   {"image", PosTag::Noun},
      {"face", PosTag::Noun},      {"region", PosTag::Noun},     {"regions", PosTag::Noun},
      {"area", PosTag::Noun},      {"areas", PosTag::Noun},      {"surface", PosTag::Noun},
      {"blending", PosTag::Noun},  {"transition", PosTag::Noun}, {"transitions", PosTag::Noun},
      {"direction", PosTag::Noun}, {"side", PosTag::Noun},       {"jawline", PosTag::Noun},
      {"cheeks", PosTag::Noun},    {"content", PosTag::Noun},
      // adjectives
      {"smooth", PosTag::Adjective},    {"sharp", PosTag::Adjective},
      {"soft", PosTag::Adjective},      {"uneven", PosTag::Adjective},
      {"even", PosTag::Adjective},      {"waxy", PosTag::Adjective},
      {"harsh", PosTag::Adjective},     {"flat", PosTag::Adjective},
      {"fine", PosTag::Adjective},      {"coarse", PosTag::Adjective},
      {"crisp", PosTag::Adjective},     {"dull", PosTag::Adjective},
      {"bright", PosTag::Adjective},    {"dark", PosTag::Adjective},
      {"warm", PosTag::Adjective},      {"cool", PosTag::Adjective},
      {"stable", PosTag::Adjective},    {"subtle", PosTag::Adjective},
      {"strong", PosTag::Adjective},    {"weak", PosTag::Adjective},
      {"high", PosTag::Adjective},      {"low", PosTag::Adjective},
      {"specular", PosTag::Adjective},  {"glossy", PosTag::Adjective},
      {"plastic", PosTag::Adjective},   {"synthetic", PosTag::Adjective},
      {"first", PosTag::Adjective},     {"second", PosTag::Adjective},
      // adverbs
      {"slightly", PosTag::Adverb},     {"noticeably", PosTag::Adverb},
      {"clearly", PosTag::Adverb},      {"overall", PosTag::Adverb},
  };
  return lexicon;
}

bool ends_with(std::string_view word, std::string_view suffix) {
  return word.size() > suffix.size() &&
         word.compare(word.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

PosTag LexiconTagger::tag(std::string_view token) const {
  const auto& lexicon = builtin_lexicon();
  const std::string word(token);
  if (auto it = lexicon.find(word); it != lexicon.end()) return it->second;

  // plural fallback: "patterns" -> "pattern"
  if (word.size() > 1 && word.back() == 's') {
    if (auto it = lexicon.find(word.substr(0, word.size() - 1)); it != lexicon.end()) {
      return it->second;
    }
  }

  if (ends_with(word, "ly")) return PosTag::Adverb;
  for (const char* s : {"ness", "tion", "sion", "ment", "ance", "ence", "ity", "ism", "ing"}) {
    if (ends_with(word, s)) return PosTag::Noun;
  }
  for (const char* s : {"ous", "ful", "ive", "ish", "less", "able", "ible", "al", "ic", "ed",
                        "ent", "ant"}) {
    if (ends_with(word, s)) return PosTag::Adjective;
  }
  return PosTag::Noun;
}

const LexiconTagger& LexiconTagger::builtin() {
  static const LexiconTagger tagger;
  return tagger;
}

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto is_word_char = [](unsigned char c) { return std::isalnum(c); };
  for (size_t i = 0; i < text.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (is_word_char(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '-' && !current.empty() && i + 1 < text.size() &&
               is_word_char(static_cast<unsigned char>(text[i + 1]))) {
      current.push_back('-');  // hyphenated words stay joined
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

// ---------------------------------------------------------------------------
// Aspects and pair sampling

std::vector<AspectTemplate> load_aspects(const Json& j) {
  std::vector<AspectTemplate> aspects;
  for (const Json& entry : j) {
    AspectTemplate a;
    a.aspect_id = entry.at("aspect_id").get<std::string>();
    a.prompt_body = entry.at("prompt_body").get<std::string>();
    if (a.prompt_body.find("Image 1") == std::string::npos ||
        a.prompt_body.find("Image 2") == std::string::npos) {
      raise(ErrorCode::ConfigError,
            "aspect '" + a.aspect_id + "' body must reference both Image 1 and Image 2");
    }
    aspects.push_back(std::move(a));
  }
  if (aspects.size() != 10) {
    raise(ErrorCode::ConfigError,
          "expected exactly ten aspects, got " + std::to_string(aspects.size()));
  }
  return aspects;
}

PairAssignment sample_pair(const std::vector<ForgeryRecord>& real_set,
                           const std::vector<ForgeryRecord>& fake_set, uint64_t rng_seed) {
  if (real_set.empty()) raise(ErrorCode::EmptySet, "real");
  if (fake_set.empty()) raise(ErrorCode::EmptySet, "fake");
  Rng rng(rng_seed);
  const ForgeryRecord& real_pick = real_set[rng.below(real_set.size())];
  const ForgeryRecord& fake_pick = fake_set[rng.below(fake_set.size())];

  PairAssignment pair;
  pair.pair_id = "pair-" + hash_hex(real_pick.image.uri + "|" + fake_pick.image.uri +
                                    "|" + std::to_string(rng_seed));
  // Fair coin for presentation order: the describer never learns which slot
  // holds the real sample.
  if (rng.flip()) {
    pair.image1 = real_pick.image;
    pair.truth1 = Authenticity::Real;
    pair.image2 = fake_pick.image;
    pair.truth2 = Authenticity::Fake;
  } else {
    pair.image1 = fake_pick.image;
    pair.truth1 = Authenticity::Fake;
    pair.image2 = real_pick.image;
    pair.truth2 = Authenticity::Real;
  }
  return pair;
}

// ---------------------------------------------------------------------------
// Comparison calls

Json discrepancy_to_json(const DiscrepancyText& d) {
  return Json{{"pair_id", d.pair_id},
              {"aspect_id", d.aspect_id},
              {"target", d.target},
              {"text", d.text},
              {"hidden_truth", to_string(d.hidden_truth)},
              {"subset", to_string(d.subset)}};
}

DiscrepancyText discrepancy_from_json(const Json& j) {
  DiscrepancyText d;
  d.pair_id = j.at("pair_id").get<std::string>();
  d.aspect_id = j.at("aspect_id").get<std::string>();
  d.target = j.at("target").get<int>();
  d.text = j.at("text").get<std::string>();
  d.hidden_truth = authenticity_from_string(j.at("hidden_truth").get<std::string>());
  d.subset = subset_from_string(j.at("subset").get<std::string>());
  return d;
}

namespace {

// A per-image statement marker is a line beginning "Image N:" (case-insensitive,
// colon required). Mid-sentence mentions of "Image 1"/"Image 2" do not count,
// so an echoed prompt has no two-part structure.
size_t find_marker(const std::string& text, int index, size_t from) {
  const std::string want = "mage " + std::to_string(index);
  for (size_t pos = from; pos < text.size(); ++pos) {
    if (pos != 0 && text[pos - 1] != '\n') continue;
    if (text[pos] != 'I' && text[pos] != 'i') continue;
    if (text.compare(pos + 1, want.size(), want) != 0) continue;
    size_t p = pos + 1 + want.size();
    while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) ++p;
    if (p < text.size() && text[p] == ':') return pos;
  }
  return std::string::npos;
}

std::string strip_marker_prefix(std::string_view part) {
  size_t p = 0;
  while (p < part.size() && part[p] != ':') ++p;
  if (p < part.size()) ++p;
  return trim(part.substr(p));
}

}  // namespace

std::vector<DiscrepancyText> compare_low_level(const PairAssignment& pair,
                                               const std::vector<AspectTemplate>& aspects,
                                               ChatClient& describer) {
  if (aspects.size() != 10) {
    raise(ErrorCode::InvalidArgument,
          "comparison requires exactly ten aspects, got " + std::to_string(aspects.size()));
  }
  std::vector<DiscrepancyText> out;
  out.reserve(20);
  for (const AspectTemplate& aspect : aspects) {
    ChatVisionRequest request;
    request.user_text = aspect.prompt_body;
    request.image_refs = {pair.image1, pair.image2};
    const std::string response = describer.chat_vision(request);

    const size_t m1 = find_marker(response, 1, 0);
    if (m1 == std::string::npos) {
      raise(ErrorCode::MalformedResponse,
            "aspect '" + aspect.aspect_id + "': no 'Image 1' statement");
    }
    const size_t m2 = find_marker(response, 2, m1 + 1);
    if (m2 == std::string::npos) {
      raise(ErrorCode::MalformedResponse,
            "aspect '" + aspect.aspect_id + "': no 'Image 2' statement");
    }
    const std::string part1 = strip_marker_prefix(
        std::string_view(response).substr(m1, m2 - m1));
    const std::string part2 = strip_marker_prefix(std::string_view(response).substr(m2));
    if (part1.empty() || part2.empty()) {
      raise(ErrorCode::MalformedResponse,
            "aspect '" + aspect.aspect_id + "': empty per-image statement");
    }

    DiscrepancyText d1{pair.pair_id, aspect.aspect_id, 1, part1, pair.truth1, pair.image1.subset};
    DiscrepancyText d2{pair.pair_id, aspect.aspect_id, 2, part2, pair.truth2, pair.image2.subset};
    out.push_back(std::move(d1));
    out.push_back(std::move(d2));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Phrase mining

std::map<std::string, int> extract_compound_noun_phrases(std::string_view text,
                                                         const PosTagger& tagger) {
  const std::vector<std::string> tokens = tokenize_words(text);
  std::vector<PosTag> tags;
  tags.reserve(tokens.size());
  for (const std::string& t : tokens) tags.push_back(tagger.tag(t));

  std::map<std::string, int> phrases;
  size_t i = 0;
  while (i < tokens.size()) {
    if (tags[i] != PosTag::Noun && tags[i] != PosTag::Adjective) {
      ++i;
      continue;
    }
    size_t j = i;
    size_t last_noun = std::string::npos;
    while (j < tokens.size() && (tags[j] == PosTag::Noun || tags[j] == PosTag::Adjective)) {
      if (tags[j] == PosTag::Noun) last_noun = j;
      ++j;
    }
    // Maximal (ADJ|NOUN)* run, trimmed to end at its last noun.
    if (last_noun != std::string::npos && last_noun > i) {
      std::string phrase;
      for (size_t k = i; k <= last_noun; ++k) {
        if (!phrase.empty()) phrase += ' ';
        phrase += tokens[k];
      }
      ++phrases[phrase];
    }
    i = j;
  }
  return phrases;
}

std::map<std::string, double> compute_phrase_proportions(
    const std::vector<const DiscrepancyText*>& texts, const PosTagger& tagger) {
  if (texts.empty()) raise(ErrorCode::EmptyCorpus, "no discrepancy texts");
  std::map<std::string, int> doc_counts;
  for (const DiscrepancyText* text : texts) {
    for (const auto& [phrase, count] : extract_compound_noun_phrases(text->text, tagger)) {
      ++doc_counts[phrase];  // presence, not occurrences
    }
  }
  std::map<std::string, double> proportions;
  const double total = static_cast<double>(texts.size());
  for (const auto& [phrase, count] : doc_counts) {
    proportions[phrase] = static_cast<double>(count) / total;
  }
  return proportions;
}

std::vector<RankedPhrase> select_top_differential(const std::map<std::string, double>& real_props,
                                                  const std::map<std::string, double>& fake_props,
                                                  int k) {
  if (k < 1) raise(ErrorCode::InvalidArgument, "k must be >= 1");
  std::vector<RankedPhrase> all;
  auto get = [](const std::map<std::string, double>& m, const std::string& key) {
    auto it = m.find(key);
    return it == m.end() ? 0.0 : it->second;
  };
  for (const auto& [phrase, p] : real_props) {
    all.push_back({phrase, p, get(fake_props, phrase), 0.0});
  }
  for (const auto& [phrase, p] : fake_props) {
    if (!real_props.count(phrase)) all.push_back({phrase, 0.0, p, 0.0});
  }
  for (RankedPhrase& r : all) r.diff = std::abs(r.p_fake - r.p_real);

  std::sort(all.begin(), all.end(), [](const RankedPhrase& a, const RankedPhrase& b) {
    if (a.diff != b.diff) return a.diff > b.diff;
    return a.phrase < b.phrase;
  });
  if (all.size() > static_cast<size_t>(k)) all.resize(static_cast<size_t>(k));
  return all;
}

JudgmentBias render_bias_descriptors(const std::vector<RankedPhrase>& ranked,
                                     const DescriptorTemplates& templates) {
  if (ranked.empty()) raise(ErrorCode::EmptyRanking, "no ranked phrases to render");
  JudgmentBias bias;
  bias.phrases = ranked;
  for (const RankedPhrase& r : ranked) {
    // Ties count as fake-indicative; the rendering must stay deterministic.
    const std::string& tmpl = r.p_fake >= r.p_real ? templates.fake_template
                                                   : templates.real_template;
    std::string sentence = tmpl;
    const size_t slot = sentence.find("{phrase}");
    if (slot == std::string::npos) {
      raise(ErrorCode::TemplateSlotMissing, "descriptor template lacks {phrase}");
    }
    sentence.replace(slot, 8, r.phrase);
    if (!bias.descriptor_text.empty()) bias.descriptor_text += ' ';
    bias.descriptor_text += sentence;
  }
  return bias;
}

Json judgment_bias_to_json(const JudgmentBias& bias) {
  Json phrases = Json::array();
  for (const RankedPhrase& r : bias.phrases) {
    phrases.push_back(Json{{"phrase", r.phrase},
                           {"p_real", r.p_real},
                           {"p_fake", r.p_fake},
                           {"diff", r.diff}});
  }
  return Json{{"phrases", phrases}, {"descriptor_text", bias.descriptor_text}};
}

JudgmentBias judgment_bias_from_json(const Json& j) {
  JudgmentBias bias;
  for (const Json& entry : j.at("phrases")) {
    bias.phrases.push_back(RankedPhrase{entry.at("phrase").get<std::string>(),
                                        entry.at("p_real").get<double>(),
                                        entry.at("p_fake").get<double>(),
                                        entry.at("diff").get<double>()});
  }
  bias.descriptor_text = j.at("descriptor_text").get<std::string>();
  return bias;
}

}  // namespace vlf
