#include <algorithm>
#include <array>
#include <utility>

#include "wimaxsim/scenario.hpp"

namespace wimaxsim {

namespace {

struct PresetEntry
{
    std::string_view name;
    std::string_view text;
};

constexpr PresetEntry kPresets[] = {
#include "presets_embedded.inc"
};

} // namespace

std::vector<std::string> preset_names()
{
    std::vector<std::string> names;
    for (const auto& p : kPresets)
        names.emplace_back(p.name);
    return names;
}

std::optional<std::string_view> preset_text(std::string_view name)
{
    for (const auto& p : kPresets)
        if (p.name == name)
            return p.text;
    return std::nullopt;
}

ConfigResult load_preset(std::string_view name)
{
    const auto text = preset_text(name);
    if (!text) {
        ConfigResult r;
        r.errors.push_back("unknown preset '" + std::string(name) + "'");
        return r;
    }
    return parse_config(std::string(*text), "preset:" + std::string(name));
}

} // namespace wimaxsim
