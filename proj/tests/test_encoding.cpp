#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace cimsim;

namespace {

using Bits = std::vector<std::uint8_t>;

bool admissible(const std::vector<std::int8_t>& x, EncodingMode m) {
    for (auto v : x)
        if (v == 0 && !supports_zero(m)) return false;
    return true;
}

// Weight column dot products through programming, the ideal solver, the
// differential readout and the mode's reconstruction rule, in units of Δ_I.
std::vector<double> analog_dot(const std::vector<std::int8_t>& x, const Matrix<std::int8_t>& w,
                               EncodingMode mode, const TechnologyPreset& tech) {
    const auto xbar = program_differential(w, tech, {w.rows(), 2 * w.cols()}, {0.0, 0.2, 1e-8});
    const double step = tech.unit_step(0.2);
    const auto enc = encode_input(x, mode);
    std::vector<std::vector<double>> phases;
    for (const auto& bits : enc.phases) {
        auto delta = differential_readout(solve_ideal(xbar, bits));
        for (double& d : delta) d = std::round(d / step);
        phases.push_back(delta);
    }
    std::vector<double> sums(w.cols(), 0.0);
    for (std::size_t r = 0; r < w.rows(); ++r)
        for (std::size_t c = 0; c < w.cols(); ++c) sums[c] += w(r, c);
    return reconstruct_dot(phases, mode, std::span<const double>(sums));
}

}  // namespace

TEST(Quantise, BinarySignWithZeroToPlusOne) {
    const std::vector<double> x{-0.3, 0.0, 2.1};
    EXPECT_EQ(quantise(x, QuantisationSpec::binary()), (std::vector<std::int8_t>{-1, 1, 1}));
}

TEST(Quantise, TernaryThresholdBand) {
    const std::vector<double> x{0.3, -0.7, 0.7};
    EXPECT_EQ(quantise(x, QuantisationSpec::ternary(0.5)), (std::vector<std::int8_t>{0, -1, 1}));
    // |x| == T keeps its sign.
    const std::vector<double> edge{0.5, -0.5};
    EXPECT_EQ(quantise(edge, QuantisationSpec::ternary(0.5)), (std::vector<std::int8_t>{1, -1}));
}

TEST(Quantise, TernaryZeroThresholdIsSign) {
    const std::vector<double> x{-2.0, 0.0, 1e-9};
    EXPECT_EQ(quantise(x, QuantisationSpec::ternary(0.0)), (std::vector<std::int8_t>{-1, 1, 1}));
}

TEST(Quantise, SpecValidation) {
    EXPECT_THROW(QuantisationSpec({QuantKind::ternary, std::nullopt}).validate(), Error);
    EXPECT_THROW(QuantisationSpec({QuantKind::ternary, -1.0}).validate(), Error);
    EXPECT_THROW(QuantisationSpec({QuantKind::binary, 0.5}).validate(), Error);
}

TEST(Quantise, Idempotent) {
    testsupport::Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x(16);
        for (double& v : x) v = rng.normal(0.0, 2.0);
        const auto spec = rng.bernoulli(0.5) ? QuantisationSpec::binary() : QuantisationSpec::ternary(rng.uniform(0.0, 1.0));
        const auto once = quantise(x, spec);
        const std::vector<double> as_double(once.begin(), once.end());
        EXPECT_EQ(quantise(as_double, spec), once);
    }
}

TEST(TernaryThreshold, MeanAbsoluteRule) {
    const std::vector<double> zeros(4, 0.0);
    EXPECT_EQ(calibrate_ternary_threshold(zeros), 0.0);
    const std::vector<double> w{1.0, -1.0, 1.0, -1.0};
    EXPECT_DOUBLE_EQ(calibrate_ternary_threshold(w), 0.7);
    EXPECT_DOUBLE_EQ(calibrate_ternary_threshold(w, 0.5), 0.5);
    EXPECT_THROW((void)calibrate_ternary_threshold(std::vector<double>{}), Error);
}

TEST(EncodeInput, BinaryOne) {
    const std::vector<std::int8_t> x{-1, 1};
    const auto e = encode_input(x, EncodingMode::b1);
    ASSERT_EQ(e.phases.size(), 1u);
    EXPECT_EQ(e.phases[0], (Bits{0, 1}));
}

TEST(EncodeInput, BinaryTwo) {
    const std::vector<std::int8_t> x{-1, 1};
    const auto e = encode_input(x, EncodingMode::b2);
    EXPECT_EQ(e.phases[0], (Bits{1, 0}));
}

TEST(EncodeInput, TernaryOneSplitsBySign) {
    const std::vector<std::int8_t> x{-1, 0, 1};
    const auto e = encode_input(x, EncodingMode::t1);
    ASSERT_EQ(e.phases.size(), 2u);
    EXPECT_EQ(e.phases[0], (Bits{0, 0, 1}));
    EXPECT_EQ(e.phases[1], (Bits{1, 0, 0}));
}

TEST(EncodeInput, TernaryTwoBitSlices) {
    const std::vector<std::int8_t> x{-1, 0, 1};
    const auto e = encode_input(x, EncodingMode::t2);
    EXPECT_EQ(e.phases[0], (Bits{1, 0, 0}));
    EXPECT_EQ(e.phases[1], (Bits{1, 0, 1}));
    // -2·x¹ + x⁰ recovers x.
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(-2 * e.phases[0][i] + e.phases[1][i], x[i]);
}

TEST(EncodeInput, ZeroUnderBinaryModeNamesIndex) {
    const std::vector<std::int8_t> x{1, -1, 0};
    for (auto m : {EncodingMode::b1, EncodingMode::b2}) {
        try {
            (void)encode_input(x, m);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.category(), ErrorCategory::encoding);
            EXPECT_NE(std::string(e.what()).find("input 2"), std::string::npos);
        }
    }
    const std::vector<std::int8_t> big{2};
    EXPECT_THROW((void)encode_input(big, EncodingMode::t1), Error);
}

TEST(EncodeInput, ModeNamesRoundTrip) {
    for (auto m : all_modes) EXPECT_EQ(parse_mode(to_string(m)), m);
    EXPECT_THROW((void)parse_mode("T-III"), Error);
}

TEST(EncodeInput, PhaseCountMatchesCycles) {
    testsupport::Rng rng(22);
    for (auto m : all_modes) {
        const auto x = testsupport::random_ternary(rng, 32, supports_zero(m));
        EXPECT_EQ(encode_input(x, m).phases.size(), static_cast<std::size_t>(cycles(m)));
    }
    EXPECT_EQ(cycles(EncodingMode::b1), 1);
    EXPECT_EQ(cycles(EncodingMode::b2), 1);
    EXPECT_EQ(cycles(EncodingMode::t1), 2);
    EXPECT_EQ(cycles(EncodingMode::t2), 2);
}

TEST(EncodeInput, TernaryOnePulsesEqualNonzeroInputs) {
    testsupport::Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const auto x = testsupport::random_ternary(rng, 1 + rng.below(100));
        const auto e = encode_input(x, EncodingMode::t1);
        std::size_t pulses = 0, nonzero = 0;
        for (const auto& p : e.phases)
            for (auto b : p) pulses += b;
        for (auto v : x) nonzero += v != 0;
        EXPECT_EQ(pulses, nonzero);
    }
}

TEST(ReconstructDot, BinaryOneExample) {
    // x = [+1, -1], w = [+1, +1]: x⁺·w = 1, Σw = 2, y = 2·1 − 2 = 0.
    const std::vector<std::vector<double>> phases{{1.0}};
    const std::vector<double> sums{2.0};
    EXPECT_EQ(reconstruct_dot(phases, EncodingMode::b1, std::span<const double>(sums))[0], 0.0);
}

TEST(ReconstructDot, AllZeroTernaryInput) {
    const std::vector<std::vector<double>> phases{{0.0, 0.0}, {0.0, 0.0}};
    EXPECT_EQ(reconstruct_dot(phases, EncodingMode::t1), (std::vector<double>{0.0, 0.0}));
}

TEST(ReconstructDot, ArgumentChecks) {
    const std::vector<std::vector<double>> one{{1.0}};
    EXPECT_THROW((void)reconstruct_dot(one, EncodingMode::b1), Error);
    EXPECT_THROW((void)reconstruct_dot(one, EncodingMode::t1), Error);
    const std::vector<double> sums{1.0, 2.0};
    EXPECT_THROW((void)reconstruct_dot(one, EncodingMode::b2, std::span<const double>(sums)), Error);
}

TEST(ReconstructDot, ExhaustiveSmallVectorsThroughIdealCrossbar) {
    const auto& tech = find_preset("ReRAM-1");
    for (std::size_t n = 1; n <= 4; ++n) {
        const auto xs = testsupport::all_vectors(n, true);
        // Every weight column of length n, side by side.
        const auto ws = testsupport::all_vectors(n, true);
        Matrix<std::int8_t> w(n, ws.size());
        for (std::size_t c = 0; c < ws.size(); ++c)
            for (std::size_t r = 0; r < n; ++r) w(r, c) = ws[c][r];
        for (auto m : all_modes)
            for (const auto& x : xs) {
                if (!admissible(x, m)) continue;
                const auto y = analog_dot(x, w, m, tech);
                for (std::size_t c = 0; c < ws.size(); ++c)
                    ASSERT_EQ(y[c], static_cast<double>(testsupport::dot(x, w, c)))
                        << to_string(m) << " n=" << n;
            }
    }
}

TEST(ReconstructDot, RandomLongerVectorsThroughIdealCrossbar) {
    testsupport::Rng rng(24);
    for (int trial = 0; trial < 200; ++trial) {
        const auto m = all_modes[rng.below(4)];
        const auto& tech = testsupport::presets()[rng.below(5)];
        const std::size_t n = 5 + rng.below(60);
        const auto x = testsupport::random_ternary(rng, n, supports_zero(m));
        const auto w = testsupport::random_weights(rng, n, 4);
        const auto y = analog_dot(x, w, m, tech);
        for (std::size_t c = 0; c < 4; ++c) ASSERT_EQ(y[c], static_cast<double>(testsupport::dot(x, w, c)));
    }
}
