#pragma once

// Binary 1T1R crossbar model and output-current solvers.
//
// Data layout: conductances are stored row-major with one row per word line
// and one column per bit line. Row 0 is the row physically farthest from the
// column output (the ADC side); row n_rows-1 is adjacent to it, with one
// parasitic wire segment between each pair of neighbouring rows and one more
// between the last row and the output node.
//
// Units: conductance in µS, voltage in V, current in µA.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cimsim/error.hpp"
#include "cimsim/matrix.hpp"
#include "cimsim/technology.hpp"

namespace cimsim {

using BinaryInputVector = std::vector<std::uint8_t>;
using OutputCurrents = std::vector<double>;  // µA, one per physical column

/// Physical crossbar size: N_X word lines by M_X bit lines.
struct CrossbarGeometry {
    std::size_t rows = 0;
    std::size_t cols = 0;

    [[nodiscard]] std::size_t logical_cols() const { return cols / 2; }
    bool operator==(const CrossbarGeometry&) const = default;
};

struct ReadParams {
    double r_p = 0.0;       // Ω per column-wire segment
    double v_read = 0.2;    // V
    double t_read = 10e-9;  // s, effective read pulse length
};

class CrossbarInstance {
public:
    /// Validates and wraps a conductance matrix (µS). Instances are immutable.
    static CrossbarInstance from_conductances(Matrix<double> g_us, ReadParams read) {
        if (g_us.rows() == 0 || g_us.cols() == 0)
            fail(ErrorCategory::validation, "crossbar needs at least one row and one column");
        if (!(read.r_p >= 0.0) || !std::isfinite(read.r_p))
            fail(ErrorCategory::validation, "parasitic resistance must be finite and >= 0");
        if (!(read.v_read > 0.0)) fail(ErrorCategory::validation, "read voltage must be > 0");
        if (!(read.t_read > 0.0)) fail(ErrorCategory::validation, "read pulse length must be > 0");
        for (std::size_t r = 0; r < g_us.rows(); ++r)
            for (std::size_t c = 0; c < g_us.cols(); ++c) {
                const double g = g_us(r, c);
                if (!std::isfinite(g) || g < 0.0)
                    fail(ErrorCategory::validation,
                         "negative or non-finite conductance at (" + std::to_string(r) + ", " +
                             std::to_string(c) + ")");
            }
        return CrossbarInstance(std::move(g_us), read);
    }

    [[nodiscard]] std::size_t rows() const noexcept { return g_.rows(); }
    [[nodiscard]] std::size_t cols() const noexcept { return g_.cols(); }
    [[nodiscard]] CrossbarGeometry geometry() const { return {rows(), cols()}; }
    [[nodiscard]] double conductance(std::size_t r, std::size_t c) const { return g_(r, c); }
    [[nodiscard]] std::span<const double> row(std::size_t r) const { return g_.row(r); }
    [[nodiscard]] const Matrix<double>& conductances() const noexcept { return g_; }
    [[nodiscard]] const ReadParams& read() const noexcept { return read_; }
    [[nodiscard]] double r_p() const noexcept { return read_.r_p; }
    [[nodiscard]] double v_read() const noexcept { return read_.v_read; }
    [[nodiscard]] double t_read() const noexcept { return read_.t_read; }

    /// Same cells, different read conditions.
    [[nodiscard]] CrossbarInstance with_read(ReadParams read) const {
        return from_conductances(g_, read);
    }

    /// Keeps columns [first, first+count). Rows (and hence wire positions) are
    /// untouched, so solving the slice gives the same currents for those
    /// columns as solving the full array.
    [[nodiscard]] CrossbarInstance column_slice(std::size_t first, std::size_t count) const {
        if (count == 0 || first + count > cols())
            fail(ErrorCategory::validation, "column slice out of range");
        Matrix<double> g(rows(), count);
        for (std::size_t r = 0; r < rows(); ++r)
            for (std::size_t c = 0; c < count; ++c) g(r, c) = g_(r, first + c);
        return CrossbarInstance(std::move(g), read_);
    }

    /// True when every cell sits exactly at the LRS or HRS conductance.
    [[nodiscard]] bool is_binary(const TechnologyPreset& tech) const {
        const double lrs = tech.g_lrs();
        const double hrs = tech.g_hrs();
        for (double g : g_.data())
            if (g != lrs && g != hrs) return false;
        return true;
    }

private:
    CrossbarInstance(Matrix<double> g, ReadParams read) : g_(std::move(g)), read_(read) {}

    Matrix<double> g_;
    ReadParams read_;
};

/// Maps a signed weight matrix (rows x logical columns, entries in {-1,0,1})
/// onto a crossbar with differential column pairs: logical column k uses
/// physical columns 2k (positive) and 2k+1 (negative).
///   +1 -> (LRS, HRS),  -1 -> (HRS, LRS),  0 -> (HRS, HRS)
/// Cells not covered by the weight matrix are left at HRS.
inline CrossbarInstance program_differential(const Matrix<std::int8_t>& weights,
                                             const TechnologyPreset& tech,
                                             CrossbarGeometry geometry, ReadParams read) {
    tech.validate();
    if (weights.rows() > geometry.rows)
        fail(ErrorCategory::mapping, "rows: weight matrix has " + std::to_string(weights.rows()) +
                                         " rows but the crossbar has " +
                                         std::to_string(geometry.rows));
    if (2 * weights.cols() > geometry.cols)
        fail(ErrorCategory::mapping,
             "columns: weight matrix needs " + std::to_string(2 * weights.cols()) +
                 " differential columns but the crossbar has " + std::to_string(geometry.cols));
    const double lrs = tech.g_lrs();
    const double hrs = tech.g_hrs();
    Matrix<double> g(geometry.rows, geometry.cols, hrs);
    for (std::size_t r = 0; r < weights.rows(); ++r) {
        for (std::size_t k = 0; k < weights.cols(); ++k) {
            switch (weights(r, k)) {
                case 1: g(r, 2 * k) = lrs; break;
                case -1: g(r, 2 * k + 1) = lrs; break;
                case 0: break;
                default:
                    fail(ErrorCategory::validation,
                         "weight at (" + std::to_string(r) + ", " + std::to_string(k) +
                             ") is not in {-1, 0, 1}");
            }
        }
    }
    return CrossbarInstance::from_conductances(std::move(g), read);
}

namespace detail {

inline void check_input(const CrossbarInstance& xbar, std::span<const std::uint8_t> input) {
    if (input.size() != xbar.rows())
        fail(ErrorCategory::validation, "input length " + std::to_string(input.size()) +
                                            " does not match crossbar rows " +
                                            std::to_string(xbar.rows()));
    for (std::size_t i = 0; i < input.size(); ++i)
        if (input[i] > 1)
            fail(ErrorCategory::validation,
                 "binary input entry " + std::to_string(i) + " is not 0 or 1");
}


// Forward elimination of the tridiagonal nodal system of one column.
// diag[k] = g_k + g_wire * (number of wire neighbours); off-diagonals are -g_wire.
inline void eliminate_column(const CrossbarInstance& xbar, std::span<const std::uint8_t> input,
                             std::size_t col, double g_wire, std::vector<double>& c_prime,
                             std::vector<double>& d_prime) {
    const std::size_t n = xbar.rows();
    const double v = xbar.v_read();
    for (std::size_t k = 0; k < n; ++k) {
        const double g_cell = input[k] ? xbar.conductance(k, col) : 0.0;
        const double diag = g_cell + g_wire + (k > 0 ? g_wire : 0.0);
        const double rhs = g_cell * v;
        if (k == 0) {
            c_prime[k] = -g_wire / diag;
            d_prime[k] = rhs / diag;
        } else {
            const double m = diag + g_wire * c_prime[k - 1];
            if (!(m > 0.0)) fail(ErrorCategory::internal, "singular nodal system");
            c_prime[k] = -g_wire / m;
            d_prime[k] = (rhs + g_wire * d_prime[k - 1]) / m;
        }
    }
}

}  // namespace detail

/// Parasitic-free currents: I_c = V * sum of the conductances on active rows.
/// Rows are summed in index order.
inline void solve_ideal(const CrossbarInstance& xbar, std::span<const std::uint8_t> input,
                        std::span<double> out) {
    detail::check_input(xbar, input);
    const std::size_t cols = xbar.cols();
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(cols), 0.0);
    for (std::size_t r = 0; r < xbar.rows(); ++r) {
        if (!input[r]) continue;
        const auto g = xbar.row(r);
        for (std::size_t c = 0; c < cols; ++c) out[c] += g[c];
    }
    const double v = xbar.v_read();
    for (std::size_t c = 0; c < cols; ++c) out[c] *= v;
}

[[nodiscard]] inline OutputCurrents solve_ideal(const CrossbarInstance& xbar,
                                                std::span<const std::uint8_t> input) {
    OutputCurrents out(xbar.cols());
    solve_ideal(xbar, input, out);
    return out;
}

/// Series-parallel reduction of every column ladder, all columns at once.
/// Walking from row 0 toward the output, the conductance accumulated so far is
/// put in parallel with the row's cell (zero when the row is inactive) and in
/// series with one wire segment of 10^6 / r_p µS. With r_p == 0 there is no
/// wire and the result is exactly solve_ideal.
inline void solve_fast(const CrossbarInstance& xbar, std::span<const std::uint8_t> input,
                       std::span<double> out) {
    if (xbar.r_p() == 0.0) {
        solve_ideal(xbar, input, out);
        return;
    }
    detail::check_input(xbar, input);
    const std::size_t cols = xbar.cols();
    const double g_wire = 1e6 / xbar.r_p();
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(cols), 0.0);

    // Until the first active row the accumulator stays exactly zero.
    std::size_t r = 0;
    while (r < xbar.rows() && !input[r]) ++r;
    for (; r < xbar.rows(); ++r) {
        if (input[r]) {
            const auto g = xbar.row(r);
            for (std::size_t c = 0; c < cols; ++c) {
                const double s = out[c] + g[c];
                out[c] = s * g_wire / (s + g_wire);
            }
        } else {
            for (std::size_t c = 0; c < cols; ++c) {
                const double s = out[c];
                out[c] = s * g_wire / (s + g_wire);
            }
        }
    }
    const double v = xbar.v_read();
    for (std::size_t c = 0; c < cols; ++c) out[c] *= v;
}

[[nodiscard]] inline OutputCurrents solve_fast(const CrossbarInstance& xbar,
                                               std::span<const std::uint8_t> input) {
    OutputCurrents out(xbar.cols());
    solve_fast(xbar, input, out);
    return out;
}

/// Nodal analysis of one column ladder. Unknowns are the bit-line node
/// voltages v_0..v_{N-1}; active cells tie node k to V_read through g_k,
/// inactive cells are open, neighbouring nodes are joined by g_wire and node
/// N-1 is joined to the virtual-ground output by one more segment.
///
/// The system is tridiagonal and is solved by forward elimination (Thomas
/// algorithm). Returns the node voltages in V.
inline std::vector<double> column_node_voltages(const CrossbarInstance& xbar,
                                                std::span<const std::uint8_t> input,
                                                std::size_t col) {
    if (xbar.r_p() == 0.0)
        fail(ErrorCategory::internal, "node voltages are undefined without wire resistance");
    detail::check_input(xbar, input);
    const std::size_t n = xbar.rows();
    std::vector<double> c_prime(n), d_prime(n);
    detail::eliminate_column(xbar, input, col, 1e6 / xbar.r_p(), c_prime, d_prime);
    std::vector<double> volts(n);
    volts[n - 1] = d_prime[n - 1];
    for (std::size_t k = n - 1; k-- > 0;) volts[k] = d_prime[k] - c_prime[k] * volts[k + 1];
    return volts;
}

/// Exact reference currents from nodal analysis, one tridiagonal solve per
/// column. The output current is the current through the last wire segment.
inline void solve_oracle(const CrossbarInstance& xbar, std::span<const std::uint8_t> input,
                         std::span<double> out) {
    if (xbar.r_p() == 0.0) {
        solve_ideal(xbar, input, out);
        return;
    }
    detail::check_input(xbar, input);
    const std::size_t n = xbar.rows();
    const double g_wire = 1e6 / xbar.r_p();
    std::vector<double> c_prime(n), d_prime(n);
    for (std::size_t col = 0; col < xbar.cols(); ++col) {
        detail::eliminate_column(xbar, input, col, g_wire, c_prime, d_prime);
        out[col] = g_wire * d_prime[n - 1];
    }
}

[[nodiscard]] inline OutputCurrents solve_oracle(const CrossbarInstance& xbar,
                                                 std::span<const std::uint8_t> input) {
    OutputCurrents out(xbar.cols());
    solve_oracle(xbar, input, out);
    return out;
}

/// Same nodal system as solve_oracle, assembled as a dense N x N matrix per
/// column and solved by Gaussian elimination with partial pivoting.
/// O(M * N^3); intended as a reference for small arrays.
[[nodiscard]] inline OutputCurrents solve_oracle_dense(const CrossbarInstance& xbar,
                                                       std::span<const std::uint8_t> input) {
    if (xbar.r_p() == 0.0) return solve_ideal(xbar, input);
    detail::check_input(xbar, input);
    const std::size_t n = xbar.rows();
    const double g_wire = 1e6 / xbar.r_p();
    const double v = xbar.v_read();
    OutputCurrents out(xbar.cols());
    for (std::size_t col = 0; col < xbar.cols(); ++col) {
        Matrix<double> a(n, n, 0.0);
        std::vector<double> b(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const double g_cell = input[k] ? xbar.conductance(k, col) : 0.0;
            a(k, k) += g_cell;
            b[k] += g_cell * v;
            // Segment toward the output (node k+1, or ground after the last row).
            a(k, k) += g_wire;
            if (k + 1 < n) {
                a(k, k + 1) -= g_wire;
                a(k + 1, k) -= g_wire;
                a(k + 1, k + 1) += g_wire;
            }
        }
        for (std::size_t p = 0; p < n; ++p) {
            std::size_t pivot = p;
            for (std::size_t i = p + 1; i < n; ++i)
                if (std::abs(a(i, p)) > std::abs(a(pivot, p))) pivot = i;
            if (a(pivot, p) == 0.0) fail(ErrorCategory::internal, "singular nodal system");
            if (pivot != p) {
                for (std::size_t j = 0; j < n; ++j) std::swap(a(p, j), a(pivot, j));
                std::swap(b[p], b[pivot]);
            }
            for (std::size_t i = p + 1; i < n; ++i) {
                const double f = a(i, p) / a(p, p);
                if (f == 0.0) continue;
                for (std::size_t j = p; j < n; ++j) a(i, j) -= f * a(p, j);
                b[i] -= f * b[p];
            }
        }
        std::vector<double> x(n);
        for (std::size_t i = n; i-- > 0;) {
            double s = b[i];
            for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
            x[i] = s / a(i, i);
        }
        out[col] = g_wire * x[n - 1];
    }
    return out;
}

/// Column-pair differences δ[k] = I[2k] − I[2k+1].
inline void differential_readout(std::span<const double> currents, std::span<double> delta) {
    if (currents.size() % 2 != 0)
        fail(ErrorCategory::validation, "differential readout needs an even number of columns, got " +
                                            std::to_string(currents.size()));
    for (std::size_t k = 0; k < currents.size() / 2; ++k)
        delta[k] = currents[2 * k] - currents[2 * k + 1];
}

[[nodiscard]] inline std::vector<double> differential_readout(std::span<const double> currents) {
    if (currents.size() % 2 != 0)
        fail(ErrorCategory::validation, "differential readout needs an even number of columns, got " +
                                            std::to_string(currents.size()));
    std::vector<double> delta(currents.size() / 2);
    differential_readout(currents, delta);
    return delta;
}

}  // namespace cimsim
