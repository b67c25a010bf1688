#pragma once

// Layer-by-layer forward pass. Matrix layers are delegated to an executor so
// the same driver serves the digital reference and the crossbar simulation.
//
// An executor provides
//   void mvm(std::size_t layer_index, const Layer&, std::span<const std::int8_t> x,
//            std::span<double> y);
// computing y = x · W for one input vector of the layer's lowered matrix.

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cimsim/lowering.hpp"
#include "cimsim/model.hpp"

namespace cimsim {

template <typename E>
concept MvmExecutor = requires(E& e, std::size_t i, const Layer& l, std::span<const std::int8_t> x,
                               std::span<double> y) {
    { e.mvm(i, l, x, y) };
};

/// Exact integer dot products.
struct DigitalExecutor {
    void mvm(std::size_t, const Layer& l, std::span<const std::int8_t> x, std::span<double> y) const {
        const auto& w = l.weights;
        for (std::size_t c = 0; c < w.cols(); ++c) {
            long long acc = 0;
            for (std::size_t r = 0; r < w.rows(); ++r) acc += static_cast<long long>(x[r]) * w(r, c);
            y[c] = static_cast<double>(acc);
        }
    }
};

namespace detail {

inline QuantTensor require_quantised(const Tensor& t, const Layer& l) {
    QuantTensor q(t.shape);
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        const double v = t.data[i];
        if (v != -1.0 && v != 0.0 && v != 1.0)
            fail(ErrorCategory::internal, "layer '" + l.name + "' received a non-quantised input");
        q.data[i] = static_cast<std::int8_t>(v);
    }
    return q;
}

}  // namespace detail

/// Runs the model on one image and returns the class scores. With `stop`
/// set, only layers [0, stop) run and their output is returned.
template <MvmExecutor E>
std::vector<double> forward(const QuantisedModel& m, const Tensor& image, E& exec,
                            std::size_t stop = static_cast<std::size_t>(-1)) {
    if (image.shape != m.input)
        fail(ErrorCategory::validation, "image shape " + to_string(image.shape) + " does not match the model input " +
                                            to_string(m.input));
    Tensor t(image.shape);
    for (std::size_t i = 0; i < image.data.size(); ++i) t.data[i] = m.input_quantiser.apply(image.data[i]);

    std::vector<std::int8_t> patch;
    for (std::size_t li = 0; li < std::min(stop, m.layers.size()); ++li) {
        const Layer& l = m.layers[li];
        switch (l.kind) {
            case LayerKind::conv2d: {
                const QuantTensor in = detail::require_quantised(t, l);
                const ConvLowering conv = lower_conv2d(l);
                Tensor out(l.out_shape);
                patch.resize(conv.patch_length());
                for (std::size_t oy = 0; oy < conv.out_h; ++oy)
                    for (std::size_t ox = 0; ox < conv.out_w; ++ox) {
                        conv.patch(in, oy, ox, patch);
                        exec.mvm(li, l, std::span<const std::int8_t>(patch),
                                 std::span<double>(&out.at(oy, ox, 0), conv.out_c));
                    }
                t = std::move(out);
                break;
            }
            case LayerKind::dense: {
                const QuantTensor in = detail::require_quantised(t, l);
                Tensor out(l.out_shape);
                exec.mvm(li, l, std::span<const std::int8_t>(in.data), std::span<double>(out.data));
                t = std::move(out);
                break;
            }
            case LayerKind::maxpool: {
                Tensor out(l.out_shape);
                for (std::size_t oy = 0; oy < l.out_shape.h; ++oy)
                    for (std::size_t ox = 0; ox < l.out_shape.w; ++ox)
                        for (std::size_t c = 0; c < l.out_shape.c; ++c) {
                            double best = t.at(oy * l.stride, ox * l.stride, c);
                            for (std::size_t ky = 0; ky < l.kernel_h; ++ky)
                                for (std::size_t kx = 0; kx < l.kernel_w; ++kx)
                                    best = std::max(best, t.at(oy * l.stride + ky, ox * l.stride + kx, c));
                            out.at(oy, ox, c) = best;
                        }
                t = std::move(out);
                break;
            }
            case LayerKind::flatten:
                t.shape = l.out_shape;
                break;
            case LayerKind::activation:
                for (double& v : t.data) v = l.activation.apply(v);
                break;
        }
    }
    return t.data;
}

/// Index of the largest score; ties go to the lowest index.
inline std::size_t predict(std::span<const double> scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return best;
}

}  // namespace cimsim
