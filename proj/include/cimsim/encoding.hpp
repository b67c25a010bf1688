#pragma once

// Binary/ternary quantisation and the four input encodings that turn signed
// operands into trains of binary pulses for a differential crossbar.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cimsim/error.hpp"

namespace cimsim {

enum class QuantKind { binary, ternary };

inline std::string_view to_string(QuantKind k) { return k == QuantKind::binary ? "binary" : "ternary"; }

inline QuantKind parse_quant_kind(std::string_view s) {
    if (s == "binary") return QuantKind::binary;
    if (s == "ternary") return QuantKind::ternary;
    fail(ErrorCategory::config, "unknown quantiser kind '" + std::string(s) + "'");
}

struct QuantisationSpec {
    QuantKind kind = QuantKind::binary;
    std::optional<double> threshold;  // ternary only, >= 0

    static QuantisationSpec binary() { return {QuantKind::binary, std::nullopt}; }
    static QuantisationSpec ternary(double t) { return {QuantKind::ternary, t}; }

    void validate() const {
        if (kind == QuantKind::binary && threshold)
            fail(ErrorCategory::validation, "binary quantiser takes no threshold");
        if (kind == QuantKind::ternary) {
            if (!threshold) fail(ErrorCategory::validation, "ternary quantiser needs a threshold");
            if (!(*threshold >= 0.0) || !std::isfinite(*threshold))
                fail(ErrorCategory::validation, "ternary threshold must be finite and >= 0");
        }
    }
};

/// Binary: +1 for x >= 0, else -1.
/// Ternary: +1 for x > T, 0 for |x| < T, -1 for x < -T; |x| == T keeps its sign
/// (x == T == 0 gives +1).
inline std::int8_t quantise_value(double x, const QuantisationSpec& spec) {
    if (spec.kind == QuantKind::binary) return x >= 0.0 ? 1 : -1;
    const double t = *spec.threshold;
    if (std::abs(x) < t) return 0;
    return x >= 0.0 ? 1 : -1;
}

inline std::vector<std::int8_t> quantise(std::span<const double> values, const QuantisationSpec& spec) {
    spec.validate();
    std::vector<std::int8_t> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = quantise_value(values[i], spec);
    return out;
}

/// Per-layer ternary threshold T = factor * mean(|w|); factor 0.7 by default.
inline double calibrate_ternary_threshold(std::span<const double> weights, double factor = 0.7) {
    if (weights.empty()) fail(ErrorCategory::calibration, "cannot calibrate a threshold on no weights");
    double sum = 0.0;
    for (double w : weights) sum += std::abs(w);
    return factor * sum / static_cast<double>(weights.size());
}

enum class EncodingMode { b1, b2, t1, t2 };

inline constexpr std::array<EncodingMode, 4> all_modes{EncodingMode::b1, EncodingMode::b2,
                                                      EncodingMode::t1, EncodingMode::t2};

inline std::string_view to_string(EncodingMode m) {
    switch (m) {
        case EncodingMode::b1: return "B-I";
        case EncodingMode::b2: return "B-II";
        case EncodingMode::t1: return "T-I";
        case EncodingMode::t2: return "T-II";
    }
    return "?";
}

inline EncodingMode parse_mode(std::string_view s) {
    for (auto m : all_modes)
        if (to_string(m) == s) return m;
    fail(ErrorCategory::config, "unknown encoding mode '" + std::string(s) +
                                    "' (expected B-I, B-II, T-I or T-II)");
}

/// Dot-product cycles per MVM.
constexpr int cycles(EncodingMode m) {
    return (m == EncodingMode::b1 || m == EncodingMode::b2) ? 1 : 2;
}

/// Whether the mode can carry zero-valued inputs.
constexpr bool supports_zero(EncodingMode m) { return cycles(m) == 2; }

/// Whether reconstruction needs the weight column sums.
constexpr bool needs_weight_sums(EncodingMode m) { return cycles(m) == 1; }

/// y = coeff[0] * p0 + coeff[1] * p1 + offset * Σw, with p_i the dot product of
/// phase i with the weight column.
struct ReconstructionRule {
    std::array<double, 2> coeff{0.0, 0.0};
    double offset = 0.0;
};

constexpr ReconstructionRule reconstruction_rule(EncodingMode m) {
    switch (m) {
        case EncodingMode::b1: return {{2.0, 0.0}, -1.0};   // x = 2x⁺ − 1
        case EncodingMode::b2: return {{-2.0, 0.0}, 1.0};   // x = −2x⁻ + 1
        case EncodingMode::t1: return {{1.0, -1.0}, 0.0};   // x = x⁺ − x⁻
        case EncodingMode::t2: return {{-2.0, 1.0}, 0.0};   // x = −2x¹ + x⁰
    }
    return {};
}

/// Pulse (0/1) carried by input value x in the given phase. Assumes x is
/// admissible for the mode.
constexpr std::uint8_t phase_bit(EncodingMode m, int phase, std::int8_t x) {
    switch (m) {
        case EncodingMode::b1: return x > 0;
        case EncodingMode::b2: return x < 0;
        case EncodingMode::t1: return phase == 0 ? x > 0 : x < 0;
        // Two-bit two's complement: -1 = 11, 0 = 00, +1 = 01. Phase 0 is the
        // sign bit x¹, phase 1 the low bit x⁰.
        case EncodingMode::t2: return phase == 0 ? x < 0 : x != 0;
    }
    return 0;
}

struct EncodedInput {
    EncodingMode mode = EncodingMode::t1;
    std::vector<std::vector<std::uint8_t>> phases;
    ReconstructionRule rule;
};

inline void check_encodable(std::span<const std::int8_t> x, EncodingMode mode) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < -1 || x[i] > 1)
            fail(ErrorCategory::encoding, "input " + std::to_string(i) + " is not in {-1, 0, 1}");
        if (x[i] == 0 && !supports_zero(mode))
            fail(ErrorCategory::encoding, "input " + std::to_string(i) + " is zero, which " +
                                              std::string(to_string(mode)) + " cannot encode");
    }
}

inline EncodedInput encode_input(std::span<const std::int8_t> x, EncodingMode mode) {
    check_encodable(x, mode);
    EncodedInput enc;
    enc.mode = mode;
    enc.rule = reconstruction_rule(mode);
    enc.phases.resize(static_cast<std::size_t>(cycles(mode)));
    for (int p = 0; p < cycles(mode); ++p) {
        auto& bits = enc.phases[static_cast<std::size_t>(p)];
        bits.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) bits[i] = phase_bit(mode, p, x[i]);
    }
    return enc;
}

/// Applies the mode's affine identity column-wise. phase_results[p][k] is the
/// (possibly approximate) dot product of phase p with weight column k.
inline std::vector<double> reconstruct_dot(std::span<const std::vector<double>> phase_results,
                                           EncodingMode mode,
                                           std::optional<std::span<const double>> weight_sums = {}) {
    if (phase_results.size() != static_cast<std::size_t>(cycles(mode)))
        fail(ErrorCategory::validation, std::string(to_string(mode)) + " expects " +
                                            std::to_string(cycles(mode)) + " phase results, got " +
                                            std::to_string(phase_results.size()));
    const std::size_t n = phase_results[0].size();
    for (const auto& p : phase_results)
        if (p.size() != n) fail(ErrorCategory::validation, "phase results differ in length");
    const auto rule = reconstruction_rule(mode);
    if (needs_weight_sums(mode)) {
        if (!weight_sums)
            fail(ErrorCategory::validation,
                 std::string(to_string(mode)) + " reconstruction needs the weight column sums");
        if (weight_sums->size() != n)
            fail(ErrorCategory::validation, "weight sums do not match the number of columns");
    }
    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k) {
        double v = 0.0;
        for (std::size_t p = 0; p < phase_results.size(); ++p) v += rule.coeff[p] * phase_results[p][k];
        if (needs_weight_sums(mode)) v += rule.offset * (*weight_sums)[k];
        y[k] = v;
    }
    return y;
}

}  // namespace cimsim
