#pragma once

// Convolution/dense layers as matrix-vector products, and their partition
// into crossbar-sized tiles.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cimsim/crossbar.hpp"
#include "cimsim/encoding.hpp"
#include "cimsim/error.hpp"
#include "cimsim/format.hpp"
#include "cimsim/matrix.hpp"
#include "cimsim/model.hpp"

namespace cimsim {

/// HWC tensor of quantised activations.
struct QuantTensor {
    Shape shape;
    std::vector<std::int8_t> data;

    QuantTensor() = default;
    explicit QuantTensor(Shape s) : shape(s), data(s.size(), 0) {}

    [[nodiscard]] std::int8_t at(std::size_t y, std::size_t x, std::size_t c) const {
        return data[(y * shape.w + x) * shape.c + c];
    }
};

/// im2col view of a conv2d layer: one MVM per output pixel.
struct ConvLowering {
    std::size_t in_h = 0, in_w = 0, in_c = 0;
    std::size_t kernel_h = 0, kernel_w = 0, stride = 1, padding = 0;
    std::size_t out_h = 0, out_w = 0, out_c = 0;

    [[nodiscard]] std::size_t patch_length() const { return kernel_h * kernel_w * in_c; }
    [[nodiscard]] std::size_t num_mvms() const { return out_h * out_w; }

    /// Receptive field of output pixel (oy, ox), channel-major:
    /// out[(c * kH + ky) * kW + kx]. Positions in the zero padding give 0.
    void patch(const QuantTensor& in, std::size_t oy, std::size_t ox, std::span<std::int8_t> out) const {
        for (std::size_t c = 0; c < in_c; ++c)
            for (std::size_t ky = 0; ky < kernel_h; ++ky)
                for (std::size_t kx = 0; kx < kernel_w; ++kx) {
                    const auto y = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(padding);
                    const auto x = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(padding);
                    const bool inside = y >= 0 && x >= 0 && y < static_cast<std::ptrdiff_t>(in_h) &&
                                        x < static_cast<std::ptrdiff_t>(in_w);
                    out[(c * kernel_h + ky) * kernel_w + kx] =
                        inside ? in.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) : 0;
                }
    }
};

inline ConvLowering lower_conv2d(const Layer& l) {
    if (l.kind != LayerKind::conv2d) fail(ErrorCategory::model, "layer '" + l.name + "' is not a conv2d");
    if (l.stride < 1 || l.padding >= l.kernel_h || l.padding >= l.kernel_w)
        fail(ErrorCategory::model, "layer '" + l.name + "': unsupported stride/padding combination");
    ConvLowering c;
    c.in_h = l.in_shape.h;
    c.in_w = l.in_shape.w;
    c.in_c = l.in_shape.c;
    c.kernel_h = l.kernel_h;
    c.kernel_w = l.kernel_w;
    c.stride = l.stride;
    c.padding = l.padding;
    c.out_h = l.out_shape.h;
    c.out_w = l.out_shape.w;
    c.out_c = l.out_shape.c;
    if (l.weights.rows() != c.patch_length() || l.weights.cols() != c.out_c)
        fail(ErrorCategory::model, "layer '" + l.name + "': lowered weights do not match the kernel shape");
    return c;
}

/// Rectangle [row_begin, row_end) x [col_begin, col_end) of a lowered matrix.
/// Columns are logical; on the crossbar a tile occupies 2 * cols() bit lines.
struct Tile {
    std::size_t row_begin = 0, row_end = 0;
    std::size_t col_begin = 0, col_end = 0;

    [[nodiscard]] std::size_t rows() const { return row_end - row_begin; }
    [[nodiscard]] std::size_t cols() const { return col_end - col_begin; }
    [[nodiscard]] std::size_t physical_cols() const { return 2 * cols(); }
    bool operator==(const Tile&) const = default;
};

struct TilePlan {
    std::size_t rows = 0, cols = 0;  // lowered matrix
    CrossbarGeometry geometry;
    EncodingMode mode = EncodingMode::t1;
    std::vector<Tile> tiles;
    std::vector<std::vector<double>> weight_sums;  // per tile, per logical column; B-I/B-II only

    [[nodiscard]] std::size_t row_blocks() const {
        return tiles.empty() ? 0 : (rows + geometry.rows - 1) / geometry.rows;
    }
};

/// Greedy row-major partition into maximal tiles of at most N_X rows and
/// M_X / 2 logical columns.
inline TilePlan plan_tiles(std::size_t rows, std::size_t cols, CrossbarGeometry geometry, EncodingMode mode) {
    if (rows == 0 || cols == 0) fail(ErrorCategory::mapping, "cannot tile a matrix with a zero dimension");
    if (geometry.rows == 0 || geometry.logical_cols() == 0)
        fail(ErrorCategory::mapping, "crossbar must have at least one row and one column pair");
    TilePlan plan;
    plan.rows = rows;
    plan.cols = cols;
    plan.geometry = geometry;
    plan.mode = mode;
    const std::size_t tr = geometry.rows, tc = geometry.logical_cols();
    for (std::size_t r = 0; r < rows; r += tr)
        for (std::size_t c = 0; c < cols; c += tc)
            plan.tiles.push_back({r, std::min(r + tr, rows), c, std::min(c + tc, cols)});
    return plan;
}

/// Σ_n w[n][k] over the tile's rows, per logical column of the tile.
inline std::vector<double> tile_weight_sums(const Matrix<std::int8_t>& w, const Tile& t) {
    std::vector<double> sums(t.cols(), 0.0);
    for (std::size_t r = t.row_begin; r < t.row_end; ++r)
        for (std::size_t c = t.col_begin; c < t.col_end; ++c) sums[c - t.col_begin] += w(r, c);
    return sums;
}

/// Plan for a concrete weight matrix; records Σw per tile when the mode needs it.
inline TilePlan plan_tiles(const Matrix<std::int8_t>& w, CrossbarGeometry geometry, EncodingMode mode) {
    TilePlan plan = plan_tiles(w.rows(), w.cols(), geometry, mode);
    if (needs_weight_sums(mode))
        for (const auto& t : plan.tiles) plan.weight_sums.push_back(tile_weight_sums(w, t));
    return plan;
}

/// Weights of one tile as a standalone matrix.
inline Matrix<std::int8_t> tile_weights(const Matrix<std::int8_t>& w, const Tile& t) {
    Matrix<std::int8_t> out(t.rows(), t.cols());
    for (std::size_t r = 0; r < t.rows(); ++r)
        for (std::size_t c = 0; c < t.cols(); ++c) out(r, c) = w(t.row_begin + r, t.col_begin + c);
    return out;
}

struct MatrixStats {
    std::size_t layers = 0;
    double mean_rows = 0.0;
    double mean_cols = 0.0;

    /// "R × C" with whole numbers printed without decimals.
    [[nodiscard]] std::string to_string() const { return fmt_num(mean_rows) + " × " + fmt_num(mean_cols); }
};

/// Arithmetic mean of the lowered matrix sizes over conv2d/dense layers.
inline MatrixStats report_matrix_stats(const QuantisedModel& m) {
    MatrixStats s;
    for (const auto& l : m.layers) {
        if (!l.is_matrix()) continue;
        ++s.layers;
        s.mean_rows += static_cast<double>(l.matrix_rows());
        s.mean_cols += static_cast<double>(l.matrix_cols());
    }
    if (s.layers == 0) fail(ErrorCategory::model, "model has no conv2d or dense layers");
    s.mean_rows /= static_cast<double>(s.layers);
    s.mean_cols /= static_cast<double>(s.layers);
    return s;
}

}  // namespace cimsim
