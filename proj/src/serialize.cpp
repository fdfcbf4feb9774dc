#include "anosovlab/serialize.hpp"

#include "anosovlab/errors.hpp"

namespace anosovlab::serialize {

ordered_json surface_to_json(const surface::BubbledSurface& s) {
  ordered_json bumps = ordered_json::array();
  for (const auto& b : s.bumps())
    bumps.push_back({{"center", {b.center.real(), b.center.imag()}}, {"delta", b.delta}, {"amplitude", b.amplitude}});
  return {{"format", "anosovlab-surface"}, {"version", 1}, {"bumps", bumps}};
}

surface::BubbledSurface surface_from_json(const ordered_json& j) {
  try {
    if (j.at("format").get<std::string>() != "anosovlab-surface") throw ConfigError("not a surface file");
    if (j.at("version").get<int>() != 1) throw ConfigError("unsupported surface file version");
    std::vector<surface::Bump> bumps;
    for (const auto& b : j.at("bumps")) {
      const auto& c = b.at("center");
      if (!c.is_array() || c.size() != 2) throw ConfigError("bump centre must be [x, y]");
      bumps.push_back({{c[0].get<double>(), c[1].get<double>()}, b.at("delta").get<double>(),
                       b.at("amplitude").get<double>()});
    }
    return surface::BubbledSurface(std::move(bumps));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed surface file: ") + e.what());
  }
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace anosovlab::serialize
