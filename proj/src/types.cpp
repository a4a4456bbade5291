#include "vlforgery/types.hpp"

#include <sstream>

#include "vlforgery/errors.hpp"
#include "vlforgery/util.hpp"

namespace vlf {

std::string_view to_string(Split v) { return v == Split::Train ? "train" : "test"; }

std::string_view to_string(Authenticity v) {
  return v == Authenticity::Real ? "real" : "fake";
}

std::string_view to_string(ForgeryType v) {
  switch (v) {
    case ForgeryType::None: return "none";
    case ForgeryType::PartialSynthesis: return "partial_synthesis";
    case ForgeryType::IdentityInsertion: return "identity_insertion";
    case ForgeryType::NonExistent: return "non_existent";
  }
  return "?";
}

std::string_view to_string(Generator v) {
  switch (v) {
    case Generator::None: return "none";
    case Generator::SDXL: return "SDXL";
    case Generator::SD2: return "SD2";
    case Generator::SD3: return "SD3";
    case Generator::Kandinsky22: return "Kandinsky2.2";
    case Generator::Flux: return "Flux";
    case Generator::InstantID: return "InstantID";
  }
  return "?";
}

std::string_view to_string(Subset v) {
  switch (v) {
    case Subset::PristineFFHQ: return "FFHQ";
    case Subset::PristineFFPP: return "FF++";
    case Subset::PristineCelebAHQ: return "CelebA-HQ";
    case Subset::PartialSDXL: return "PS_SDXL";
    case Subset::PartialSD2: return "PS_SD2";
    case Subset::PartialKandinsky22: return "PS_Kandinsky2.2";
    case Subset::FullSDXL: return "FS_SDXL";
    case Subset::FullSD2: return "FS_SD2";
    case Subset::FullSD3: return "FS_SD3";
    case Subset::FullKandinsky22: return "FS_Kandinsky2.2";
    case Subset::FullFlux: return "FS_Flux";
    case Subset::FullInstantID: return "FS_InstantID";
  }
  return "?";
}

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  raise(ErrorCode::ParseFailure, "unknown split '" + std::string(s) + "'");
}

Authenticity authenticity_from_string(std::string_view s) {
  if (s == "real") return Authenticity::Real;
  if (s == "fake") return Authenticity::Fake;
  raise(ErrorCode::ParseFailure, "unknown authenticity '" + std::string(s) + "'");
}

ForgeryType forgery_type_from_string(std::string_view s) {
  if (s == "none") return ForgeryType::None;
  if (s == "partial_synthesis") return ForgeryType::PartialSynthesis;
  if (s == "identity_insertion") return ForgeryType::IdentityInsertion;
  if (s == "non_existent") return ForgeryType::NonExistent;
  raise(ErrorCode::ParseFailure, "unknown forgery_type '" + std::string(s) + "'");
}

Generator generator_from_string(std::string_view s) {
  for (Generator g : kFakeGenerators) {
    if (s == to_string(g)) return g;
  }
  if (s == "none") return Generator::None;
  raise(ErrorCode::ParseFailure, "unknown generator '" + std::string(s) + "'");
}

Subset subset_from_string(std::string_view s) {
  for (Subset sub : kAllSubsets) {
    if (s == to_string(sub)) return sub;
  }
  raise(ErrorCode::ParseFailure, "unknown subset '" + std::string(s) + "'");
}

bool subset_is_pristine(Subset s) {
  return s == Subset::PristineFFHQ || s == Subset::PristineFFPP ||
         s == Subset::PristineCelebAHQ;
}

bool subset_is_partial(Subset s) {
  return s == Subset::PartialSDXL || s == Subset::PartialSD2 ||
         s == Subset::PartialKandinsky22;
}

bool subset_is_full(Subset s) { return !subset_is_pristine(s) && !subset_is_partial(s); }

Generator subset_generator(Subset s) {
  switch (s) {
    case Subset::PartialSDXL:
    case Subset::FullSDXL: return Generator::SDXL;
    case Subset::PartialSD2:
    case Subset::FullSD2: return Generator::SD2;
    case Subset::PartialKandinsky22:
    case Subset::FullKandinsky22: return Generator::Kandinsky22;
    case Subset::FullSD3: return Generator::SD3;
    case Subset::FullFlux: return Generator::Flux;
    case Subset::FullInstantID: return Generator::InstantID;
    default: return Generator::None;
  }
}

Subset partial_subset_for(Generator g) {
  switch (g) {
    case Generator::SDXL: return Subset::PartialSDXL;
    case Generator::SD2: return Subset::PartialSD2;
    case Generator::Kandinsky22: return Subset::PartialKandinsky22;
    default:
      raise(ErrorCode::InvalidArgument,
            "no partial-synthesis subset for generator " + std::string(to_string(g)));
  }
}

Subset full_subset_for(Generator g) {
  switch (g) {
    case Generator::SDXL: return Subset::FullSDXL;
    case Generator::SD2: return Subset::FullSD2;
    case Generator::SD3: return Subset::FullSD3;
    case Generator::Kandinsky22: return Subset::FullKandinsky22;
    case Generator::Flux: return Subset::FullFlux;
    case Generator::InstantID: return Subset::FullInstantID;
    default:
      raise(ErrorCode::InvalidArgument,
            "no full-synthesis subset for generator " + std::string(to_string(g)));
  }
}

std::optional<std::string> check_record(const ForgeryRecord& record) {
  const GroundTruth& t = record.truth;
  if (record.image.uri.empty()) return "image uri is empty";

  const bool is_real = t.authenticity == Authenticity::Real;
  if (is_real != (t.forgery_type == ForgeryType::None)) {
    return "authenticity=real must pair with forgery_type=none and vice versa";
  }
  if (is_real != (t.generator == Generator::None)) {
    return "authenticity=real must pair with generator=none and vice versa";
  }
  if (!t.regions.empty() && t.forgery_type != ForgeryType::PartialSynthesis) {
    return "nonempty regions require forgery_type=partial_synthesis";
  }
  if (t.forgery_type == ForgeryType::PartialSynthesis && t.regions.empty()) {
    return "partial_synthesis requires a nonempty region set";
  }
  if (t.forgery_type == ForgeryType::PartialSynthesis &&
      !(t.generator == Generator::SDXL || t.generator == Generator::SD2 ||
        t.generator == Generator::Kandinsky22)) {
    return "partial_synthesis generator must be SDXL, SD2 or Kandinsky2.2";
  }
  if (t.forgery_type == ForgeryType::IdentityInsertion && t.generator != Generator::InstantID) {
    return "identity_insertion generator must be InstantID";
  }
  if (record.provenance.has_value() && is_real) {
    return "provenance present on a real record";
  }
  return std::nullopt;
}

const ForgeryRecord& validate_record(const ForgeryRecord& record) {
  if (auto why = check_record(record)) {
    raise(ErrorCode::InvariantViolation, *why + " (uri=" + record.image.uri + ")");
  }
  return record;
}

namespace {

Json prompt_to_json(const SynthesisPrompt& p) {
  Json keywords = Json::object();
  for (const auto& [region, keyword] : p.keywords_used) {
    keywords[std::string(region_name(region))] = keyword;
  }
  return Json{{"text", p.text}, {"template_ids", p.template_ids}, {"keywords_used", keywords}};
}

SynthesisPrompt prompt_from_json(const Json& j) {
  SynthesisPrompt p;
  p.text = j.at("text").get<std::string>();
  p.template_ids = j.at("template_ids").get<std::vector<std::string>>();
  for (const auto& [key, value] : j.at("keywords_used").items()) {
    p.keywords_used[region_from_name(key)] = value.get<std::string>();
  }
  return p;
}

Json mask_to_json(const RegionMaskSpec& m) {
  Json sources = Json::object();
  for (const auto& [region, uri] : m.mask_sources) {
    sources[std::string(region_name(region))] = uri;
  }
  return Json{{"regions", encode_region_label(m.regions)}, {"mask_sources", sources}};
}

RegionMaskSpec mask_from_json(const Json& j) {
  RegionMaskSpec m;
  m.regions = decode_region_label(j.at("regions").get<std::string>());
  for (const auto& [key, value] : j.at("mask_sources").items()) {
    m.mask_sources[region_from_name(key)] = value.get<std::string>();
  }
  return m;
}

}  // namespace

Json record_to_json(const ForgeryRecord& record) {
  Json j;
  j["uri"] = record.image.uri;
  j["subset"] = to_string(record.image.subset);
  j["split"] = to_string(record.image.split);
  j["authenticity"] = to_string(record.truth.authenticity);
  j["forgery_type"] = to_string(record.truth.forgery_type);
  j["regions"] = encode_region_label(record.truth.regions);
  j["generator"] = to_string(record.truth.generator);
  if (record.provenance) {
    Json prov;
    prov["prompt"] = prompt_to_json(record.provenance->prompt);
    prov["mask"] = record.provenance->mask ? mask_to_json(*record.provenance->mask)
                                           : Json(nullptr);
    j["provenance"] = prov;
    j["seed"] = record.provenance->seed;
  } else {
    j["provenance"] = nullptr;
    j["seed"] = nullptr;
  }
  return j;
}

ForgeryRecord record_from_json(const Json& j) {
  ForgeryRecord r;
  r.image.uri = j.at("uri").get<std::string>();
  r.image.subset = subset_from_string(j.at("subset").get<std::string>());
  r.image.split = split_from_string(j.at("split").get<std::string>());
  r.truth.authenticity = authenticity_from_string(j.at("authenticity").get<std::string>());
  r.truth.forgery_type = forgery_type_from_string(j.at("forgery_type").get<std::string>());
  r.truth.regions = decode_region_label(j.at("regions").get<std::string>());
  r.truth.generator = generator_from_string(j.at("generator").get<std::string>());
  if (j.contains("provenance") && !j.at("provenance").is_null()) {
    Provenance prov;
    prov.prompt = prompt_from_json(j.at("provenance").at("prompt"));
    if (!j.at("provenance").at("mask").is_null()) {
      prov.mask = mask_from_json(j.at("provenance").at("mask"));
    }
    if (j.contains("seed") && !j.at("seed").is_null()) prov.seed = j.at("seed").get<uint64_t>();
    r.provenance = std::move(prov);
  }
  return r;
}

void write_records_jsonl(const std::filesystem::path& path,
                         const std::vector<ForgeryRecord>& records) {
  std::ostringstream out;
  for (const auto& record : records) {
    out << record_to_json(record).dump() << '\n';
  }
  write_text_file(path, out.str());
}

std::vector<ForgeryRecord> read_records_jsonl(const std::filesystem::path& path) {
  std::vector<ForgeryRecord> records;
  for (const std::string& line : read_lines(path)) {
    records.push_back(record_from_json(Json::parse(line)));
  }
  return records;
}

}  // namespace vlf
