#include "vlforgery/region.hpp"

#include <bit>

#include "vlforgery/errors.hpp"
#include "vlforgery/util.hpp"

namespace vlf {

std::string_view region_name(Region r) {
  switch (r) {
    case Region::Hair: return "hair";
    case Region::Brows: return "brows";
    case Region::Ears: return "ears";
    case Region::Nose: return "nose";
    case Region::Eyes: return "eyes";
    case Region::Teeth: return "teeth";
  }
  return "?";
}

int RegionSet::size() const { return std::popcount(mask_); }

std::vector<Region> RegionSet::to_vector() const {
  std::vector<Region> out;
  for (Region r : kAllRegions) {
    if (contains(r)) out.push_back(r);
  }
  return out;
}

std::string encode_region_label(const RegionSet& regions) {
  if (regions.empty()) return "none";
  std::string out;
  bool first = true;
  for (Region r : regions.to_vector()) {
    if (!first) out += "And";
    out += region_name(r);
    first = false;
  }
  return out;
}

namespace {

// Canonical names plus the singular aliases the paper uses (§3.3 writes
// "nose, brow, hair, ear").
bool region_from_token(std::string_view token, Region& out) {
  if (token == "hair") out = Region::Hair;
  else if (token == "brows" || token == "brow") out = Region::Brows;
  else if (token == "ears" || token == "ear") out = Region::Ears;
  else if (token == "nose") out = Region::Nose;
  else if (token == "eyes" || token == "eye") out = Region::Eyes;
  else if (token == "teeth") out = Region::Teeth;
  else return false;
  return true;
}

}  // namespace

Region region_from_name(std::string_view name) {
  Region r;
  if (!region_from_token(to_lower(trim(name)), r)) {
    raise(ErrorCode::UnknownRegion, "'" + std::string(name) + "'");
  }
  return r;
}

RegionSet decode_region_label(std::string_view label) {
  const std::string cleaned = trim(label);
  if (cleaned.empty()) raise(ErrorCode::UnknownRegion, "empty region label");
  if (to_lower(cleaned) == "none") return RegionSet{};

  RegionSet set;
  size_t start = 0;
  while (start <= cleaned.size()) {
    size_t split = cleaned.find("And", start);
    const std::string raw =
        cleaned.substr(start, split == std::string::npos ? std::string::npos : split - start);
    const std::string token = to_lower(trim(raw));
    Region r;
    if (!region_from_token(token, r)) {
      raise(ErrorCode::UnknownRegion, "'" + raw + "' in label '" + cleaned + "'");
    }
    set.insert(r);
    if (split == std::string::npos) break;
    start = split + 3;
  }
  return set;
}

}  // namespace vlf
