#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vlforgery/json.hpp"
#include "vlforgery/region.hpp"

namespace vlf {

enum class Split : uint8_t { Train, Test };
enum class Authenticity : uint8_t { Real, Fake };
enum class ForgeryType : uint8_t { None, PartialSynthesis, IdentityInsertion, NonExistent };

/// Closed-world generator vocabulary; unknown names are a parse error, never
/// a silent "other".
enum class Generator : uint8_t { None, SDXL, SD2, SD3, Kandinsky22, Flux, InstantID };

inline constexpr std::array<Generator, 6> kFakeGenerators = {
    Generator::SDXL, Generator::SD2,  Generator::SD3,
    Generator::Kandinsky22, Generator::Flux, Generator::InstantID};

/// The twelve dataset subsets: three pristine sources, three partial-synthesis
/// generators, six full-synthesis generators.
enum class Subset : uint8_t {
  PristineFFHQ,
  PristineFFPP,
  PristineCelebAHQ,
  PartialSDXL,
  PartialSD2,
  PartialKandinsky22,
  FullSDXL,
  FullSD2,
  FullSD3,
  FullKandinsky22,
  FullFlux,
  FullInstantID,
};

inline constexpr std::array<Subset, 12> kAllSubsets = {
    Subset::PristineFFHQ,   Subset::PristineFFPP,      Subset::PristineCelebAHQ,
    Subset::PartialSDXL,    Subset::PartialSD2,        Subset::PartialKandinsky22,
    Subset::FullSDXL,       Subset::FullSD2,           Subset::FullSD3,
    Subset::FullKandinsky22, Subset::FullFlux,         Subset::FullInstantID};

std::string_view to_string(Split v);
std::string_view to_string(Authenticity v);
std::string_view to_string(ForgeryType v);
std::string_view to_string(Generator v);
std::string_view to_string(Subset v);

Split split_from_string(std::string_view s);
Authenticity authenticity_from_string(std::string_view s);
ForgeryType forgery_type_from_string(std::string_view s);
Generator generator_from_string(std::string_view s);
Subset subset_from_string(std::string_view s);

bool subset_is_pristine(Subset s);
bool subset_is_partial(Subset s);
bool subset_is_full(Subset s);
Generator subset_generator(Subset s);  // Generator::None for pristine subsets
Subset partial_subset_for(Generator g);
Subset full_subset_for(Generator g);

struct ImageRef {
  std::string uri;
  Subset subset = Subset::PristineFFHQ;
  Split split = Split::Train;

  friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

struct GroundTruth {
  Authenticity authenticity = Authenticity::Real;
  ForgeryType forgery_type = ForgeryType::None;
  RegionSet regions;
  Generator generator = Generator::None;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct SynthesisPrompt {
  std::string text;
  std::vector<std::string> template_ids;
  std::map<Region, std::string> keywords_used;

  friend bool operator==(const SynthesisPrompt&, const SynthesisPrompt&) = default;
};

struct RegionMaskSpec {
  RegionSet regions;
  std::map<Region, std::string> mask_sources;  // region -> mask asset locator

  friend bool operator==(const RegionMaskSpec&, const RegionMaskSpec&) = default;
};

struct Provenance {
  SynthesisPrompt prompt;
  std::optional<RegionMaskSpec> mask;
  uint64_t seed = 0;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct ForgeryRecord {
  ImageRef image;
  GroundTruth truth;
  std::optional<Provenance> provenance;

  friend bool operator==(const ForgeryRecord&, const ForgeryRecord&) = default;
};

/// First violated GroundTruth/record invariant, or nullopt when valid.
std::optional<std::string> check_record(const ForgeryRecord& record);

/// Returns the record unchanged iff every invariant holds; otherwise throws
/// InvariantViolation naming the first failed clause.
const ForgeryRecord& validate_record(const ForgeryRecord& record);

Json record_to_json(const ForgeryRecord& record);
ForgeryRecord record_from_json(const Json& j);

void write_records_jsonl(const std::filesystem::path& path,
                         const std::vector<ForgeryRecord>& records);
std::vector<ForgeryRecord> read_records_jsonl(const std::filesystem::path& path);

}  // namespace vlf
