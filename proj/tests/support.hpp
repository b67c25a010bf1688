#pragma once

// Generators and independent reference implementations shared by the tests.

#include <cstdint>
#include <string>
#include <vector>

#include "cimsim.hpp"

namespace testsupport {

using cimsim::Matrix;
using cimsim::Rng;

inline const std::vector<cimsim::TechnologyPreset>& presets() { return cimsim::builtin_presets(); }

/// Binary crossbar of the given size with cells drawn from the preset's LRS/HRS.
inline cimsim::CrossbarInstance random_crossbar(Rng& rng, std::size_t rows, std::size_t cols,
                                                const cimsim::TechnologyPreset& tech, double r_p,
                                                double v_read = 0.2) {
    Matrix<double> g(rows, cols);
    for (double& v : g.data()) v = rng.bernoulli(0.5) ? tech.g_lrs() : tech.g_hrs();
    return cimsim::CrossbarInstance::from_conductances(std::move(g), {r_p, v_read, 10e-9});
}

inline std::vector<std::uint8_t> random_bits(Rng& rng, std::size_t n, double p = 0.5) {
    std::vector<std::uint8_t> v(n);
    for (auto& b : v) b = rng.bernoulli(p) ? 1 : 0;
    return v;
}

inline std::vector<std::int8_t> random_ternary(Rng& rng, std::size_t n, bool allow_zero = true) {
    std::vector<std::int8_t> v(n);
    for (auto& x : v) {
        if (allow_zero) x = static_cast<std::int8_t>(static_cast<int>(rng.below(3)) - 1);
        else x = rng.bernoulli(0.5) ? 1 : -1;
    }
    return v;
}

inline Matrix<std::int8_t> random_weights(Rng& rng, std::size_t rows, std::size_t cols, bool allow_zero = true) {
    return Matrix<std::int8_t>(rows, cols, random_ternary(rng, rows * cols, allow_zero));
}

inline long long dot(const std::vector<std::int8_t>& x, const Matrix<std::int8_t>& w, std::size_t col) {
    long long s = 0;
    for (std::size_t r = 0; r < x.size(); ++r) s += static_cast<long long>(x[r]) * w(r, col);
    return s;
}

/// Every vector in {-1,0,1}^n (or {-1,1}^n), in lexicographic order.
inline std::vector<std::vector<std::int8_t>> all_vectors(std::size_t n, bool allow_zero) {
    std::vector<std::int8_t> values = allow_zero ? std::vector<std::int8_t>{-1, 0, 1} : std::vector<std::int8_t>{-1, 1};
    std::vector<std::vector<std::int8_t>> out{{}};
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::vector<std::int8_t>> next;
        for (const auto& prefix : out)
            for (auto v : values) {
                auto p = prefix;
                p.push_back(v);
                next.push_back(std::move(p));
            }
        out = std::move(next);
    }
    return out;
}

/// Straightforward convolution on HWC data with zero padding, independent of
/// the im2col code path. Weight layout: w[((c*kH+ky)*kW+kx)][o].
inline std::vector<long long> direct_conv(const cimsim::QuantTensor& in, const Matrix<std::int8_t>& w,
                                          std::size_t kh, std::size_t kw, std::size_t stride,
                                          std::size_t pad, std::size_t& out_h, std::size_t& out_w) {
    const std::size_t H = in.shape.h, W = in.shape.w, C = in.shape.c, O = w.cols();
    out_h = (H + 2 * pad - kh) / stride + 1;
    out_w = (W + 2 * pad - kw) / stride + 1;
    std::vector<long long> out(out_h * out_w * O, 0);
    for (std::size_t oy = 0; oy < out_h; ++oy)
        for (std::size_t ox = 0; ox < out_w; ++ox)
            for (std::size_t o = 0; o < O; ++o) {
                long long s = 0;
                for (std::size_t ky = 0; ky < kh; ++ky)
                    for (std::size_t kx = 0; kx < kw; ++kx) {
                        const long long y = static_cast<long long>(oy * stride + ky) - static_cast<long long>(pad);
                        const long long x = static_cast<long long>(ox * stride + kx) - static_cast<long long>(pad);
                        if (y < 0 || x < 0 || y >= static_cast<long long>(H) || x >= static_cast<long long>(W))
                            continue;
                        for (std::size_t c = 0; c < C; ++c)
                            s += in.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) *
                                 w((c * kh + ky) * kw + kx, o);
                    }
                out[(oy * out_w + ox) * O + o] = s;
            }
    return out;
}

inline nlohmann::json random_quantiser(Rng& rng, cimsim::QuantKind kind) {
    nlohmann::json q{{"kind", cimsim::to_string(kind)}, {"offset", rng.uniform(-1.0, 1.0)}};
    if (kind == cimsim::QuantKind::ternary) q["threshold"] = rng.uniform(0.0, 2.0);
    return q;
}

/// Small random network: conv (random kernel, stride, padding) -> activation
/// -> optional maxpool -> flatten -> dense -> activation -> dense. Goes
/// through the manifest parser so every model it returns is valid.
inline cimsim::QuantisedModel random_model(Rng& rng, cimsim::QuantKind kind) {
    const bool binary = kind == cimsim::QuantKind::binary;
    const std::size_t h = 4 + rng.below(4), w = 4 + rng.below(4), c = 1 + rng.below(2);
    const std::size_t k = 1 + rng.below(3);
    const std::size_t pad = binary ? 0 : rng.below(k);
    std::size_t stride = 1 + rng.below(2);
    if ((h + 2 * pad - k) % stride != 0 || (w + 2 * pad - k) % stride != 0) stride = 1;
    const std::size_t oc = 1 + rng.below(6);
    const std::size_t oh = (h + 2 * pad - k) / stride + 1, ow = (w + 2 * pad - k) / stride + 1;

    nlohmann::json layers = nlohmann::json::array();
    layers.push_back({{"name", "conv1"}, {"type", "conv2d"}, {"kernel", {k, k}}, {"out_channels", oc},
                      {"stride", stride}, {"padding", pad}});
    layers.push_back({{"name", "act1"}, {"type", "activation"}, {"quantiser", random_quantiser(rng, kind)}});
    std::size_t features = oh * ow * oc;
    if (oh % 2 == 0 && ow % 2 == 0 && rng.bernoulli(0.5)) {
        layers.push_back({{"name", "pool1"}, {"type", "maxpool"}, {"size", 2}, {"stride", 2}});
        features /= 4;
    }
    layers.push_back({{"name", "flat"}, {"type", "flatten"}});
    const std::size_t hidden = 1 + rng.below(12), classes = 2 + rng.below(3);
    layers.push_back({{"name", "fc1"}, {"type", "dense"}, {"out_features", hidden}});
    layers.push_back({{"name", "act2"}, {"type", "activation"}, {"quantiser", random_quantiser(rng, kind)}});
    layers.push_back({{"name", "fc2"}, {"type", "dense"}, {"out_features", classes}});

    nlohmann::json j{{"schema", "cimsim.model/1"},
                     {"name", "random"},
                     {"kind", cimsim::to_string(kind)},
                     {"input", {{"height", h}, {"width", w}, {"channels", c}}},
                     {"input_quantiser", random_quantiser(rng, kind)},
                     {"layers", layers}};
    const std::size_t n = k * k * c * oc + features * hidden + hidden * classes;
    const auto blob = random_ternary(rng, n, !binary);
    return cimsim::parse_model(j, blob);
}

inline cimsim::Tensor random_image(Rng& rng, cimsim::Shape s) {
    cimsim::Tensor t(s);
    for (double& v : t.data) v = rng.normal(0.0, 1.5);
    return t;
}

inline std::string bundled_model_path(const std::string& name) {
    return std::string(CIMSIM_SOURCE_DIR) + "/data/models/" + name + ".json";
}

}  // namespace testsupport
