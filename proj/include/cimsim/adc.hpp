#pragma once

// ADC transfer function with a per-layer scaled step, and the histogram-based
// calibration of those scales.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cimsim/error.hpp"

namespace cimsim {

using AdcCode = std::int64_t;

/// Magnitude bits needed to represent every column sum of an n-row array:
/// ceil(log2(n + 1)). A signed converter needs one more bit on top.
inline int full_resolution_bits(std::size_t n_rows) {
    if (n_rows == 0) fail(ErrorCategory::validation, "full resolution needs at least one row");
    int bits = 0;
    while ((std::uint64_t{1} << bits) < n_rows + 1) ++bits;
    return bits;
}

/// Positive rail of a symmetric signed b-bit code range: 2^(b-1) - 1.
inline AdcCode code_limit(int bits) { return (AdcCode{1} << (bits - 1)) - 1; }

struct AdcConfig {
    int bits = 8;          // total resolution including sign
    double delta_q = 1.0;  // quantisation step, current units (µA)
    std::map<std::string, double, std::less<>> layer_scales;

    /// Signed converter that never clips a column of an n-row array, with
    /// step equal to the unitary current step.
    static AdcConfig full_resolution(std::size_t n_rows, double unit_step) {
        return {full_resolution_bits(n_rows) + 1, unit_step, {}};
    }

    [[nodiscard]] AdcCode clip_max() const { return code_limit(bits); }
    [[nodiscard]] AdcCode clip_min() const { return -code_limit(bits); }

    [[nodiscard]] double scale(std::string_view layer) const {
        auto it = layer_scales.find(layer);
        return it == layer_scales.end() ? 1.0 : it->second;
    }

    void validate() const {
        if (bits < 2 || bits > 48) fail(ErrorCategory::config, "ADC bits must be within [2, 48]");
        if (!(delta_q > 0.0) || !std::isfinite(delta_q))
            fail(ErrorCategory::config, "ADC quantisation step must be > 0");
        for (const auto& [layer, s] : layer_scales)
            if (!(s >= 1.0) || !std::isfinite(s))
                fail(ErrorCategory::config, "layer scale for '" + layer + "' must be >= 1");
    }
};

/// d = floor(a / step + 0.5), saturated to [-limit, limit].
inline AdcCode quantise_code(double a, double step, AdcCode limit) {
    const double q = std::floor(a / step + 0.5);
    const auto lim = static_cast<double>(limit);
    if (q >= lim) return limit;
    if (q <= -lim) return -limit;
    return static_cast<AdcCode>(q);
}

inline AdcCode adc_quantise(double a, const AdcConfig& cfg, std::string_view layer) {
    return quantise_code(a, cfg.scale(layer) * cfg.delta_q, cfg.clip_max());
}

/// Dot-product estimate s_l * d.
inline double reconstruct_value(AdcCode d, const AdcConfig& cfg, std::string_view layer) {
    return cfg.scale(layer) * static_cast<double>(d);
}

/// y*_max = max(|µ − 3σ|, |µ + 3σ|).
inline double compute_target_max(double mu, double sigma) {
    if (!(sigma >= 0.0)) fail(ErrorCategory::validation, "standard deviation must be >= 0");
    return std::max(std::abs(mu - 3.0 * sigma), std::abs(mu + 3.0 * sigma));
}

/// s_l = 1 when the target fits the positive rail, else y*_max / (2^(b-1) − 1).
inline double compute_layer_scale(double y_max, int bits) {
    if (bits < 2) fail(ErrorCategory::validation, "layer scale needs at least 2 ADC bits");
    const auto rail = static_cast<double>(code_limit(bits));
    return y_max <= rail ? 1.0 : y_max / rail;
}

/// Frequency histogram of integer codes.
class OutputHistogram {
public:
    void add(AdcCode code, std::uint64_t count = 1) { bins_[code] += count; }

    void merge(const OutputHistogram& other) {
        for (const auto& [code, n] : other.bins_) bins_[code] += n;
    }

    [[nodiscard]] bool empty() const { return bins_.empty(); }
    [[nodiscard]] const std::map<AdcCode, std::uint64_t>& bins() const { return bins_; }

    [[nodiscard]] std::uint64_t total() const {
        std::uint64_t n = 0;
        for (const auto& [code, c] : bins_) n += c;
        return n;
    }

    [[nodiscard]] double mean() const {
        const std::uint64_t n = total();
        if (n == 0) return 0.0;
        long double s = 0.0L;
        for (const auto& [code, c] : bins_) s += static_cast<long double>(code) * c;
        return static_cast<double>(s / n);
    }

    /// Population standard deviation.
    [[nodiscard]] double stddev() const {
        const std::uint64_t n = total();
        if (n == 0) return 0.0;
        const long double mu = mean();
        long double s = 0.0L;
        for (const auto& [code, c] : bins_) {
            const long double d = static_cast<long double>(code) - mu;
            s += d * d * c;
        }
        return static_cast<double>(std::sqrt(s / n));
    }

    [[nodiscard]] AdcCode max_abs() const {
        if (bins_.empty()) return 0;
        return std::max(std::abs(bins_.begin()->first), std::abs(bins_.rbegin()->first));
    }

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json j;
        std::vector<std::uint64_t> counts;
        AdcCode offset = 0;
        if (!bins_.empty()) {
            offset = bins_.begin()->first;
            counts.assign(static_cast<std::size_t>(bins_.rbegin()->first - offset + 1), 0);
            for (const auto& [code, c] : bins_) counts[static_cast<std::size_t>(code - offset)] = c;
        }
        j["bin_offset"] = offset;
        j["counts"] = counts;
        j["mu"] = mean();
        j["sigma"] = stddev();
        return j;
    }

    static OutputHistogram from_json(const nlohmann::json& j) {
        if (!j.contains("bin_offset") || !j.contains("counts") || !j["counts"].is_array())
            fail(ErrorCategory::config, "histogram entry needs 'bin_offset' and 'counts'");
        OutputHistogram h;
        const auto offset = j["bin_offset"].get<AdcCode>();
        const auto& counts = j["counts"];
        for (std::size_t i = 0; i < counts.size(); ++i) {
            const auto c = counts[i].get<std::uint64_t>();
            if (c > 0) h.add(offset + static_cast<AdcCode>(i), c);
        }
        return h;
    }

    bool operator==(const OutputHistogram&) const = default;

private:
    std::map<AdcCode, std::uint64_t> bins_;
};

/// Per-layer profile: the codes seen by the ADC (one per tile, phase and
/// column pair) and the integer outputs after digital accumulation.
struct LayerProfile {
    std::string layer_id;
    OutputHistogram codes;
    OutputHistogram accumulated;
};

struct ProfileResult {
    std::string run_id;
    std::string mode;
    std::vector<LayerProfile> layers;

    [[nodiscard]] const LayerProfile* find(std::string_view id) const {
        for (const auto& l : layers)
            if (l.layer_id == id) return &l;
        return nullptr;
    }
};

inline constexpr std::string_view histogram_schema = "cimsim.histograms/1";
inline constexpr std::string_view scales_schema = "cimsim.scales/1";

inline nlohmann::json profile_to_json(const ProfileResult& p) {
    nlohmann::json j;
    j["schema"] = histogram_schema;
    j["run_id"] = p.run_id;
    j["mode"] = p.mode;
    j["layers"] = nlohmann::json::array();
    for (const auto& l : p.layers) {
        nlohmann::json e = l.codes.to_json();
        e["layer_id"] = l.layer_id;
        e["accumulated"] = l.accumulated.to_json();
        j["layers"].push_back(std::move(e));
    }
    return j;
}

inline ProfileResult profile_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("schema", "") != histogram_schema)
        fail(ErrorCategory::config, "histogram file: missing or unsupported schema");
    ProfileResult p;
    p.run_id = j.value("run_id", "");
    p.mode = j.value("mode", "");
    for (const auto& e : j.at("layers")) {
        LayerProfile l;
        l.layer_id = e.at("layer_id").get<std::string>();
        l.codes = OutputHistogram::from_json(e);
        if (e.contains("accumulated")) l.accumulated = OutputHistogram::from_json(e["accumulated"]);
        p.layers.push_back(std::move(l));
    }
    return p;
}

/// Layer scales from the ADC-code statistics of each profiled layer.
inline std::map<std::string, double, std::less<>> calibrate_scales(const ProfileResult& profile,
                                                                    int bits) {
    if (profile.layers.empty()) fail(ErrorCategory::calibration, "profile has no layers");
    std::map<std::string, double, std::less<>> scales;
    for (const auto& l : profile.layers) {
        if (l.codes.empty())
            fail(ErrorCategory::calibration, "layer '" + l.layer_id + "' has an empty histogram");
        scales[l.layer_id] =
            compute_layer_scale(compute_target_max(l.codes.mean(), l.codes.stddev()), bits);
    }
    return scales;
}

inline nlohmann::json scales_to_json(const std::map<std::string, double, std::less<>>& scales,
                                     int bits) {
    nlohmann::json j;
    j["schema"] = scales_schema;
    j["bits"] = bits;
    j["scales"] = nlohmann::json::object();
    for (const auto& [layer, s] : scales) j["scales"][layer] = s;
    return j;
}

inline std::map<std::string, double, std::less<>> scales_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("schema", "") != scales_schema)
        fail(ErrorCategory::config, "scale file: missing or unsupported schema");
    std::map<std::string, double, std::less<>> scales;
    for (const auto& [layer, s] : j.at("scales").items()) {
        const double v = s.get<double>();
        if (!(v >= 1.0)) fail(ErrorCategory::config, "scale for '" + layer + "' must be >= 1");
        scales[layer] = v;
    }
    return scales;
}

}  // namespace cimsim
