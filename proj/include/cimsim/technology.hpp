#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cimsim/error.hpp"

namespace cimsim {

/// LRS/HRS resistance pair of a memristive device technology.
struct TechnologyPreset {
    std::string label;
    double r_lrs = 0.0;  // Ω
    double r_hrs = 0.0;  // Ω

    /// Conductances in µS.
    [[nodiscard]] double g_lrs() const { return 1e6 / r_lrs; }
    [[nodiscard]] double g_hrs() const { return 1e6 / r_hrs; }

    /// Unitary current step Δ_I = V/R_lrs − V/R_hrs in µA.
    [[nodiscard]] double unit_step(double v_read) const {
        return v_read * g_lrs() - v_read * g_hrs();
    }

    void validate() const {
        if (!(std::isfinite(r_lrs) && std::isfinite(r_hrs)) || r_lrs <= 0.0 || r_hrs <= 0.0)
            fail(ErrorCategory::validation,
                 "technology '" + label + "': resistances must be positive and finite");
        if (!(r_lrs < r_hrs))
            fail(ErrorCategory::validation,
                 "technology '" + label + "': r_lrs must be smaller than r_hrs");
    }

    bool operator==(const TechnologyPreset&) const = default;
};

/// The five reference technologies shipped as defaults.
inline const std::vector<TechnologyPreset>& builtin_presets() {
    static const std::vector<TechnologyPreset> presets = {
        {"ReRAM-1", 1.00e4, 1.00e5},
        {"PCM", 4.00e4, 1.76e6},
        {"ReRAM-2", 5.00e4, 4.00e5},
        {"Perovskite", 2.00e5, 2.50e6},
        {"IFG", 1.00e7, 2.00e7},
    };
    return presets;
}

inline const TechnologyPreset& find_preset(std::string_view label,
                                           const std::vector<TechnologyPreset>& presets) {
    for (const auto& p : presets)
        if (p.label == label) return p;
    fail(ErrorCategory::config, "unknown technology '" + std::string(label) + "'");
}

inline const TechnologyPreset& find_preset(std::string_view label) {
    return find_preset(label, builtin_presets());
}

/// Parses a preset table of the form
///   {"schema": "cimsim.presets/1",
///    "presets": {"ReRAM-1": {"r_lrs": 1e4, "r_hrs": 1e5}, ...}}
/// Entries are returned in the document's key order (sorted by label).
inline std::vector<TechnologyPreset> parse_presets(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("presets") || !doc["presets"].is_object())
        fail(ErrorCategory::config, "preset file: expected an object with a 'presets' object");
    if (doc.contains("schema") && doc["schema"] != "cimsim.presets/1")
        fail(ErrorCategory::config, "preset file: unsupported schema " + doc["schema"].dump());
    std::vector<TechnologyPreset> out;
    for (const auto& [label, entry] : doc["presets"].items()) {
        if (!entry.is_object() || !entry.contains("r_lrs") || !entry.contains("r_hrs") ||
            !entry["r_lrs"].is_number() || !entry["r_hrs"].is_number())
            fail(ErrorCategory::config,
                 "preset '" + label + "': numeric 'r_lrs' and 'r_hrs' are required");
        TechnologyPreset p{label, entry["r_lrs"].get<double>(), entry["r_hrs"].get<double>()};
        p.validate();
        out.push_back(std::move(p));
    }
    if (out.empty()) fail(ErrorCategory::config, "preset file: no presets defined");
    return out;
}

inline std::vector<TechnologyPreset> load_presets(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCategory::io, "cannot open preset file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCategory::config, "preset file " + path.string() + ": " + e.what());
    }
    return parse_presets(doc);
}

inline nlohmann::json presets_to_json(const std::vector<TechnologyPreset>& presets) {
    nlohmann::json doc;
    doc["schema"] = "cimsim.presets/1";
    doc["presets"] = nlohmann::json::object();
    for (const auto& p : presets) doc["presets"][p.label] = {{"r_lrs", p.r_lrs}, {"r_hrs", p.r_hrs}};
    return doc;
}

}  // namespace cimsim
