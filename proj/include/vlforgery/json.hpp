#pragma once

#include <json.hpp>

namespace vlf {

// ordered_json everywhere: emitted artifacts must be byte-stable, so field
// order is part of the contract.
using Json = nlohmann::ordered_json;

}  // namespace vlf
