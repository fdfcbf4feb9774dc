#pragma once

// JSON form of bubbled surfaces. Doubles are written in their shortest
// round-trip form, so files reproduce the surface bit for bit.

#include <string>

#include "anosovlab/surface.hpp"
#include "json.hpp"

namespace anosovlab::serialize {

using nlohmann::ordered_json;

ordered_json surface_to_json(const surface::BubbledSurface& s);
/// Throws ConfigError on malformed input and LayoutError on invalid layouts.
surface::BubbledSurface surface_from_json(const ordered_json& j);

std::string dump(const ordered_json& j);  // 2-space indent, trailing newline

}  // namespace anosovlab::serialize
