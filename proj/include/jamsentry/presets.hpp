#pragma once

// Built-in experiment presets (the presets/*.cfg files, embedded at build time).

#include <jamsentry/error.hpp>
#include <jamsentry/experiment.hpp>
#include <jamsentry/kvconfig.hpp>
#include <jamsentry/presets_data.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace jamsentry::presets {

inline std::vector<std::string_view> names() {
    std::vector<std::string_view> out;
    for (const auto& [name, text] : presets_data::kPresets) out.push_back(name);
    return out;
}

inline std::string_view text(std::string_view name) {
    for (const auto& [n, t] : presets_data::kPresets)
        if (n == name) return t;
    std::string known;
    for (auto n : names()) known += (known.empty() ? "" : ", ") + std::string(n);
    throw ParameterError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

inline KeyValues load(std::string_view name) { return KeyValues::parse(text(name)); }

inline eval::ExperimentSpec spec(std::string_view name) { return eval::ExperimentSpec::from_kv(load(name)); }

}  // namespace jamsentry::presets
