#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace vlf {

/// The six editable facial regions. Enum order is the canonical label order;
/// encoding and iteration follow it.
enum class Region : uint8_t { Hair = 0, Brows, Ears, Nose, Eyes, Teeth };

inline constexpr std::array<Region, 6> kAllRegions = {
    Region::Hair, Region::Brows, Region::Ears, Region::Nose, Region::Eyes, Region::Teeth};

std::string_view region_name(Region r);

/// Single canonical or singular-alias name -> region. Throws UnknownRegion.
Region region_from_name(std::string_view name);

/// Value-type set over the six-region vocabulary, backed by a bitmask.
class RegionSet {
 public:
  RegionSet() = default;
  RegionSet(std::initializer_list<Region> regions) {
    for (Region r : regions) insert(r);
  }

  static RegionSet from_mask(uint8_t mask) {
    RegionSet s;
    s.mask_ = static_cast<uint8_t>(mask & 0x3f);
    return s;
  }

  bool contains(Region r) const { return (mask_ >> static_cast<uint8_t>(r)) & 1; }
  void insert(Region r) { mask_ |= static_cast<uint8_t>(1u << static_cast<uint8_t>(r)); }
  void erase(Region r) { mask_ &= static_cast<uint8_t>(~(1u << static_cast<uint8_t>(r))); }

  bool empty() const { return mask_ == 0; }
  int size() const;
  uint8_t mask() const { return mask_; }

  bool disjoint_with(const RegionSet& other) const { return (mask_ & other.mask_) == 0; }
  bool subset_of(const RegionSet& other) const { return (mask_ & ~other.mask_) == 0; }

  /// Members in canonical order.
  std::vector<Region> to_vector() const;

  friend bool operator==(const RegionSet&, const RegionSet&) = default;

 private:
  uint8_t mask_ = 0;
};

/// Empty set encodes as "none"; otherwise canonical-order names joined with
/// the literal "And" (e.g. {hair, nose} -> "hairAndnose").
std::string encode_region_label(const RegionSet& regions);

/// Inverse of encode, tolerant of case and the singular aliases ear/brow/eye.
/// Order-insensitive. Throws UnknownRegion for any unrecognized token.
RegionSet decode_region_label(std::string_view label);

}  // namespace vlf
