#include "vlforgery/acquisition.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "vlforgery/errors.hpp"
#include "vlforgery/rng.hpp"
#include "vlforgery/util.hpp"

namespace vlf {

AttributeDictionary AttributeDictionary::from_json(const Json& j) {
  AttributeDictionary dict;
  for (const auto& [key, value] : j.items()) {
    const Region region = region_from_name(key);
    std::vector<std::string> words = value.get<std::vector<std::string>>();
    if (words.empty()) {
      raise(ErrorCode::ConfigError, "attribute dictionary entry '" + key + "' is empty");
    }
    for (const std::string& w : words) {
      if (trim(w).empty()) {
        raise(ErrorCode::ConfigError, "attribute dictionary entry '" + key + "' has a blank keyword");
      }
    }
    dict.keywords[region] = std::move(words);
  }
  return dict;
}

Json AttributeDictionary::to_json() const {
  Json j = Json::object();
  for (const auto& [region, words] : keywords) {
    j[std::string(region_name(region))] = words;
  }
  return j;
}

void check_template(const PromptTemplate& t) {
  // Collect {placeholder} names from the body.
  std::vector<std::string> names;
  size_t pos = 0;
  while ((pos = t.body.find('{', pos)) != std::string::npos) {
    const size_t end = t.body.find('}', pos);
    if (end == std::string::npos) {
      raise(ErrorCode::ConfigError, "template '" + t.template_id + "' has an unclosed placeholder");
    }
    names.push_back(t.body.substr(pos + 1, end - pos - 1));
    pos = end + 1;
  }
  if (names.size() != static_cast<size_t>(t.regions.size())) {
    raise(ErrorCode::ConfigError,
          "template '" + t.template_id + "' has " + std::to_string(names.size()) +
              " placeholders for " + std::to_string(t.regions.size()) + " regions");
  }
  RegionSet seen;
  for (const std::string& name : names) {
    const Region r = region_from_name(name);
    if (!t.regions.contains(r) || seen.contains(r)) {
      raise(ErrorCode::ConfigError,
            "template '" + t.template_id + "' placeholder '" + name + "' does not match its regions");
    }
    seen.insert(r);
  }
}

TemplateSet TemplateSet::from_json(const Json& j) {
  TemplateSet set;
  auto load = [](const Json& arr) {
    std::vector<PromptTemplate> out;
    for (const Json& entry : arr) {
      PromptTemplate t;
      t.template_id = entry.at("template_id").get<std::string>();
      for (const std::string& name : entry.at("regions").get<std::vector<std::string>>()) {
        t.regions.insert(region_from_name(name));
      }
      t.body = entry.at("body").get<std::string>();
      check_template(t);
      out.push_back(std::move(t));
    }
    return out;
  };
  set.partial = load(j.at("partial"));
  set.scene = load(j.at("scene"));
  for (const PromptTemplate& t : set.scene) {
    if (!t.regions.empty()) {
      raise(ErrorCode::ConfigError, "scene template '" + t.template_id + "' addresses regions");
    }
  }
  return set;
}

std::map<Region, std::string> default_mask_assets() {
  std::map<Region, std::string> assets;
  for (Region r : kAllRegions) {
    assets[r] = "mask://" + std::string(region_name(r));
  }
  return assets;
}

RegionMaskSpec combine_masks(const std::map<Region, std::string>& available, uint64_t rng_seed,
                             int max_regions) {
  if (available.empty()) raise(ErrorCode::NoMasks, "no mask assets available");
  if (max_regions < 1) raise(ErrorCode::InvalidArgument, "max_regions must be >= 1");

  Rng rng(rng_seed);
  const int cap = std::min<int>(max_regions, static_cast<int>(available.size()));
  const int k = rng.range(1, cap);

  std::vector<Region> pool;
  pool.reserve(available.size());
  for (const auto& [region, uri] : available) pool.push_back(region);
  rng.shuffle(pool);

  RegionMaskSpec spec;
  for (int i = 0; i < k; ++i) {
    const Region r = pool[static_cast<size_t>(i)];
    spec.regions.insert(r);
    spec.mask_sources[r] = available.at(r);
  }
  return spec;
}

SynthesisPrompt fill_prompt_template(const RegionMaskSpec& spec, const AttributeDictionary& dict,
                                     const std::vector<PromptTemplate>& templates,
                                     uint64_t rng_seed) {
  for (Region r : spec.regions.to_vector()) {
    if (!dict.keywords.count(r)) {
      raise(ErrorCode::MissingDictionaryEntry, std::string(region_name(r)));
    }
  }

  Rng rng(rng_seed);

  // Prefer a template addressing exactly the requested set; otherwise cover
  // it with one single-region template per region.
  std::vector<const PromptTemplate*> chosen;
  std::vector<const PromptTemplate*> exact;
  for (const PromptTemplate& t : templates) {
    if (t.regions == spec.regions) exact.push_back(&t);
  }
  if (!exact.empty()) {
    chosen.push_back(exact[rng.below(exact.size())]);
  } else {
    for (Region r : spec.regions.to_vector()) {
      std::vector<const PromptTemplate*> singles;
      for (const PromptTemplate& t : templates) {
        if (t.regions == RegionSet{r}) singles.push_back(&t);
      }
      if (singles.empty()) {
        raise(ErrorCode::NoTemplateFor, encode_region_label(spec.regions));
      }
      chosen.push_back(singles[rng.below(singles.size())]);
    }
  }

  SynthesisPrompt prompt;
  std::string text;
  for (const PromptTemplate* t : chosen) {
    std::string body = t->body;
    for (Region r : t->regions.to_vector()) {
      const auto& words = dict.keywords.at(r);
      const std::string& keyword = words[rng.below(words.size())];
      prompt.keywords_used[r] = keyword;
      const std::string slot = "{" + std::string(region_name(r)) + "}";
      const size_t pos = body.find(slot);
      body.replace(pos, slot.size(), keyword);
    }
    prompt.template_ids.push_back(t->template_id);
    if (!text.empty()) text += ", ";
    text += body;
  }
  if (text.find('{') != std::string::npos) {
    raise(ErrorCode::ConfigError, "unresolved placeholder in prompt: " + text);
  }
  prompt.text = std::move(text);
  return prompt;
}

Json manifest_entry_to_json(const ManifestEntry& entry) {
  Json j;
  j["job"] = job_to_json(entry.job);
  j["truth"] = Json{{"authenticity", to_string(entry.truth.authenticity)},
                    {"forgery_type", to_string(entry.truth.forgery_type)},
                    {"regions", encode_region_label(entry.truth.regions)},
                    {"generator", to_string(entry.truth.generator)}};
  return j;
}

ManifestEntry manifest_entry_from_json(const Json& j) {
  ManifestEntry entry;
  entry.job = job_from_json(j.at("job"));
  const Json& t = j.at("truth");
  entry.truth.authenticity = authenticity_from_string(t.at("authenticity").get<std::string>());
  entry.truth.forgery_type = forgery_type_from_string(t.at("forgery_type").get<std::string>());
  entry.truth.regions = decode_region_label(t.at("regions").get<std::string>());
  entry.truth.generator = generator_from_string(t.at("generator").get<std::string>());
  return entry;
}

void write_manifest_jsonl(const std::filesystem::path& path,
                          const std::vector<ManifestEntry>& entries) {
  std::ostringstream out;
  for (const ManifestEntry& entry : entries) out << manifest_entry_to_json(entry).dump() << '\n';
  write_text_file(path, out.str());
}

std::vector<ManifestEntry> read_manifest_jsonl(const std::filesystem::path& path) {
  std::vector<ManifestEntry> entries;
  for (const std::string& line : read_lines(path)) {
    entries.push_back(manifest_entry_from_json(Json::parse(line)));
  }
  return entries;
}

namespace {

// Structural check applied to every manifest entry before it is emitted.
void check_entry(const ManifestEntry& entry) {
  check_job(entry.job);
  ForgeryRecord probe;
  probe.image.uri = "pending://generation";
  probe.truth = entry.truth;
  validate_record(probe);
}

}  // namespace

std::vector<ManifestEntry> build_partial_manifest(
    const std::vector<ForgeryRecord>& sources, const std::vector<Generator>& generators,
    int per_generator_count, const AttributeDictionary& dict,
    const std::vector<PromptTemplate>& templates,
    const std::map<Region, std::string>& mask_assets, uint64_t rng_seed, int max_regions,
    int max_source_reuse) {
  if (per_generator_count < 0) raise(ErrorCode::InvalidArgument, "negative count");
  if (per_generator_count > 0 && sources.empty()) {
    raise(ErrorCode::InsufficientSources, "no pristine sources");
  }
  if (per_generator_count >
      static_cast<long long>(sources.size()) * std::max(1, max_source_reuse)) {
    raise(ErrorCode::InsufficientSources,
          std::to_string(per_generator_count) + " requested from " +
              std::to_string(sources.size()) + " sources (reuse factor " +
              std::to_string(max_source_reuse) + ")");
  }

  std::vector<ManifestEntry> manifest;
  manifest.reserve(generators.size() * static_cast<size_t>(per_generator_count));
  for (size_t gi = 0; gi < generators.size(); ++gi) {
    const Generator g = generators[gi];
    const uint64_t generator_seed = derive_seed(rng_seed, gi);
    for (int i = 0; i < per_generator_count; ++i) {
      const uint64_t child = derive_seed(generator_seed, static_cast<uint64_t>(i));
      Rng rng(child);
      const ForgeryRecord& source = sources[rng.below(sources.size())];

      ManifestEntry entry;
      entry.job.kind = JobKind::Inpaint;
      entry.job.mask = combine_masks(mask_assets, derive_seed(child, 1), max_regions);
      entry.job.prompt =
          fill_prompt_template(*entry.job.mask, dict, templates, derive_seed(child, 2));
      entry.job.source_image = source.image;
      entry.job.generator = g;
      entry.job.seed = child;

      entry.truth.authenticity = Authenticity::Fake;
      entry.truth.forgery_type = ForgeryType::PartialSynthesis;
      entry.truth.regions = entry.job.mask->regions;
      entry.truth.generator = g;

      check_entry(entry);
      manifest.push_back(std::move(entry));
    }
  }
  return manifest;
}

std::vector<ManifestEntry> build_full_manifest(JobKind kind,
                                               const std::vector<Generator>& generators,
                                               int per_generator_count,
                                               const std::vector<ForgeryRecord>* sources,
                                               const std::vector<PromptTemplate>& scene_templates,
                                               uint64_t rng_seed) {
  if (kind == JobKind::Inpaint) {
    raise(ErrorCode::UnsupportedKind, "full manifests are id_insert or txt2img");
  }
  if (kind == JobKind::IdInsert && (sources == nullptr || sources->empty())) {
    raise(ErrorCode::MissingSources, "id_insert requires pristine source records");
  }
  if (scene_templates.empty()) {
    raise(ErrorCode::NoTemplateFor, "scene (no scene templates loaded)");
  }

  // Identity insertion always maps to InstantID (dataset composition rule).
  std::vector<Generator> effective = generators;
  if (kind == JobKind::IdInsert) effective = {Generator::InstantID};

  std::vector<ManifestEntry> manifest;
  for (size_t gi = 0; gi < effective.size(); ++gi) {
    const Generator g = effective[gi];
    const uint64_t generator_seed = derive_seed(rng_seed, 1000 + gi);
    for (int i = 0; i < per_generator_count; ++i) {
      const uint64_t child = derive_seed(generator_seed, static_cast<uint64_t>(i));
      Rng rng(child);
      const PromptTemplate& scene = scene_templates[rng.below(scene_templates.size())];

      ManifestEntry entry;
      entry.job.kind = kind;
      entry.job.prompt.text = scene.body;
      entry.job.prompt.template_ids = {scene.template_id};
      entry.job.generator = g;
      entry.job.seed = child;
      if (kind == JobKind::IdInsert) {
        entry.job.source_image = (*sources)[rng.below(sources->size())].image;
        entry.truth.forgery_type = ForgeryType::IdentityInsertion;
      } else {
        entry.truth.forgery_type = ForgeryType::NonExistent;
      }
      entry.truth.authenticity = Authenticity::Fake;
      entry.truth.generator = g;

      check_entry(entry);
      manifest.push_back(std::move(entry));
    }
  }
  return manifest;
}

std::pair<std::vector<ForgeryRecord>, std::vector<ForgeryRecord>> split_dataset(
    std::vector<ForgeryRecord> records, int ratio_train, int ratio_test, uint64_t rng_seed) {
  if (ratio_train <= 0 || ratio_test <= 0) {
    raise(ErrorCode::InvalidArgument, "split ratio components must be positive");
  }

  std::map<Subset, std::vector<size_t>> by_subset;
  for (size_t i = 0; i < records.size(); ++i) {
    by_subset[records[i].image.subset].push_back(i);
  }

  std::vector<ForgeryRecord> train;
  std::vector<ForgeryRecord> test;
  for (auto& [subset, indices] : by_subset) {
    Rng rng(derive_seed(rng_seed, static_cast<uint64_t>(subset)));
    rng.shuffle(indices);
    const long long n = static_cast<long long>(indices.size());
    const long long denom = ratio_train + ratio_test;
    // round-half-up of n*ratio_train/denom
    const long long n_train = (2 * n * ratio_train + denom) / (2 * denom);
    for (long long k = 0; k < n; ++k) {
      ForgeryRecord record = records[indices[static_cast<size_t>(k)]];
      record.image.split = k < n_train ? Split::Train : Split::Test;
      (k < n_train ? train : test).push_back(std::move(record));
    }
  }
  return {std::move(train), std::move(test)};
}

std::vector<ForgeryRecord> scan_sources(const std::filesystem::path& dir, std::string_view glob,
                                        Subset subset) {
  if (!std::filesystem::is_directory(dir)) {
    raise(ErrorCode::MissingInput, "source directory " + dir.string() + " does not exist");
  }
  std::vector<ForgeryRecord> records;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (!wildcard_match(glob, entry.path().filename().string())) continue;
    ForgeryRecord record;
    record.image.uri = entry.path().string();
    record.image.subset = subset;
    record.image.split = Split::Train;
    records.push_back(std::move(record));
  }
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.image.uri < b.image.uri; });
  return records;
}

std::vector<ForgeryRecord> synthesize_pristine(Subset subset, int count) {
  if (!subset_is_pristine(subset)) {
    raise(ErrorCode::InvalidArgument,
          std::string(to_string(subset)) + " is not a pristine subset");
  }
  std::vector<ForgeryRecord> records;
  records.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    ForgeryRecord record;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05d", i);
    record.image.uri = "synthetic://" + std::string(to_string(subset)) + "/" + buf;
    record.image.subset = subset;
    record.image.split = Split::Train;
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace vlf
