#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vlforgery/gateway.hpp"
#include "vlforgery/types.hpp"

namespace vlf {

/// region -> descriptive keywords used to populate prompt templates.
struct AttributeDictionary {
  std::map<Region, std::vector<std::string>> keywords;

  static AttributeDictionary from_json(const Json& j);
  Json to_json() const;
};

/// A prompt body with one {region} placeholder per addressed region.
/// Scene templates (for full synthesis) address no regions at all.
struct PromptTemplate {
  std::string template_id;
  RegionSet regions;
  std::string body;
};

/// Throws ConfigError unless the body holds exactly one placeholder per
/// addressed region, named after it.
void check_template(const PromptTemplate& t);

struct TemplateSet {
  std::vector<PromptTemplate> partial;
  std::vector<PromptTemplate> scene;

  static TemplateSet from_json(const Json& j);
};

/// Samples a region-count k uniformly in [1, min(max_regions, |available|)],
/// then k distinct regions without replacement. Deterministic under the seed.
RegionMaskSpec combine_masks(const std::map<Region, std::string>& available, uint64_t rng_seed,
                             int max_regions);

/// Built-in synthetic mask-asset locators for all six regions.
std::map<Region, std::string> default_mask_assets();

/// Covers spec.regions with templates (exact-set match preferred, otherwise
/// one single-region template per region) and fills each placeholder with a
/// uniformly drawn keyword.
SynthesisPrompt fill_prompt_template(const RegionMaskSpec& spec, const AttributeDictionary& dict,
                                     const std::vector<PromptTemplate>& templates,
                                     uint64_t rng_seed);

struct ManifestEntry {
  GenerationJob job;
  GroundTruth truth;
};

Json manifest_entry_to_json(const ManifestEntry& entry);
ManifestEntry manifest_entry_from_json(const Json& j);
void write_manifest_jsonl(const std::filesystem::path& path,
                          const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest_jsonl(const std::filesystem::path& path);

std::vector<ManifestEntry> build_partial_manifest(
    const std::vector<ForgeryRecord>& sources, const std::vector<Generator>& generators,
    int per_generator_count, const AttributeDictionary& dict,
    const std::vector<PromptTemplate>& templates,
    const std::map<Region, std::string>& mask_assets, uint64_t rng_seed, int max_regions,
    int max_source_reuse);

std::vector<ManifestEntry> build_full_manifest(JobKind kind,
                                               const std::vector<Generator>& generators,
                                               int per_generator_count,
                                               const std::vector<ForgeryRecord>* sources,
                                               const std::vector<PromptTemplate>& scene_templates,
                                               uint64_t rng_seed);

/// Stratified-by-subset split: within each subset, round-half-up of
/// n*train/(train+test) records go to train, the remainder to test; shuffle
/// is deterministic under the seed. Records are returned with the split field
/// stamped.
std::pair<std::vector<ForgeryRecord>, std::vector<ForgeryRecord>> split_dataset(
    std::vector<ForgeryRecord> records, int ratio_train, int ratio_test, uint64_t rng_seed);

/// Scans a directory (recursively) for files matching the glob pattern and
/// wraps them as pristine records of the named subset.
std::vector<ForgeryRecord> scan_sources(const std::filesystem::path& dir, std::string_view glob,
                                        Subset subset);

/// Fabricated pristine records (synthetic:// uris) for desk-scale runs.
std::vector<ForgeryRecord> synthesize_pristine(Subset subset, int count);

}  // namespace vlf
