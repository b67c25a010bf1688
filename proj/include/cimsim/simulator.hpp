#pragma once

// End-to-end crossbar simulation of a quantised model: tiles are programmed
// once, then every conv/dense MVM runs through encode -> crossbar -> ADC ->
// reconstruction -> digital accumulation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "cimsim/adc.hpp"
#include "cimsim/crossbar.hpp"
#include "cimsim/dataset.hpp"
#include "cimsim/encoding.hpp"
#include "cimsim/energy.hpp"
#include "cimsim/inference.hpp"
#include "cimsim/lowering.hpp"
#include "cimsim/model.hpp"
#include "cimsim/technology.hpp"

namespace cimsim {

struct SimSettings {
    TechnologyPreset tech = builtin_presets().front();
    CrossbarGeometry geometry{128, 128};
    ReadParams read;
    EncodingMode mode = EncodingMode::t1;
    AdcConfig adc;                 // delta_q is replaced by the unit step
    bool full_resolution = false;  // lossless ADC sized to the crossbar rows

    [[nodiscard]] AdcConfig effective_adc() const {
        const double step = tech.unit_step(read.v_read);
        if (full_resolution) return AdcConfig::full_resolution(geometry.rows, step);
        AdcConfig a = adc;
        a.delta_q = step;
        return a;
    }
};

/// One tile of one layer, programmed onto its own crossbar. Only the bit
/// lines the tile uses are kept; unused rows stay in the array at HRS.
struct ProgrammedTile {
    Tile tile;
    CrossbarInstance xbar;
    std::vector<double> weight_sums;
    double g_bar = 0.0;  // mean conductance over the tile's rows and bit lines, S
};

struct LayerMapping {
    std::size_t layer_index = 0;
    std::string name;
    TilePlan plan;
    std::vector<ProgrammedTile> tiles;
};

/// Integer event counters of one worker; merged by addition.
struct SimCounters {
    std::vector<std::vector<std::uint64_t>> ops;     // [mapping][tile] crossbar operations
    std::vector<std::vector<std::uint64_t>> pulses;  // [mapping][tile] active input pulses
    std::vector<LayerProfile> profile;               // per mapping, when profiling

    void merge(const SimCounters& o) {
        for (std::size_t m = 0; m < ops.size(); ++m)
            for (std::size_t t = 0; t < ops[m].size(); ++t) {
                ops[m][t] += o.ops[m][t];
                pulses[m][t] += o.pulses[m][t];
            }
        for (std::size_t m = 0; m < profile.size(); ++m) {
            profile[m].codes.merge(o.profile[m].codes);
            profile[m].accumulated.merge(o.profile[m].accumulated);
        }
    }
};

class CimAccelerator {
public:
    CimAccelerator(const QuantisedModel& model, SimSettings settings)
        : model_(&model), settings_(std::move(settings)), adc_(settings_.effective_adc()) {
        settings_.tech.validate();
        adc_.validate();
        for (std::size_t li = 0; li < model.layers.size(); ++li) {
            const Layer& l = model.layers[li];
            if (!l.is_matrix()) continue;
            LayerMapping map;
            map.layer_index = li;
            map.name = l.name;
            try {
                map.plan = plan_tiles(l.weights, settings_.geometry, settings_.mode);
                for (std::size_t t = 0; t < map.plan.tiles.size(); ++t) {
                    const Tile& tile = map.plan.tiles[t];
                    auto full = program_differential(tile_weights(l.weights, tile), settings_.tech,
                                                     settings_.geometry, settings_.read);
                    ProgrammedTile pt{tile, full.column_slice(0, tile.physical_cols()), {}, 0.0};
                    if (needs_weight_sums(settings_.mode)) pt.weight_sums = map.plan.weight_sums[t];
                    double g = 0.0;
                    for (std::size_t r = 0; r < tile.rows(); ++r)
                        for (double v : pt.xbar.row(r)) g += v;
                    pt.g_bar = g / static_cast<double>(tile.rows() * tile.physical_cols()) * 1e-6;
                    map.tiles.push_back(std::move(pt));
                }
            } catch (const Error& e) {
                throw e.with_context("layer '" + l.name + "'");
            }
            mapping_of_layer_.resize(li + 1, npos);
            mapping_of_layer_[li] = mappings_.size();
            mappings_.push_back(std::move(map));
        }
    }

    [[nodiscard]] const QuantisedModel& model() const { return *model_; }
    [[nodiscard]] const SimSettings& settings() const { return settings_; }
    [[nodiscard]] const AdcConfig& adc() const { return adc_; }
    [[nodiscard]] const std::vector<LayerMapping>& mappings() const { return mappings_; }

    [[nodiscard]] SimCounters make_counters(bool profiling) const {
        SimCounters c;
        for (const auto& m : mappings_) {
            c.ops.emplace_back(m.tiles.size(), 0);
            c.pulses.emplace_back(m.tiles.size(), 0);
            if (profiling) c.profile.push_back({m.name, {}, {}});
        }
        return c;
    }

    /// Executor bound to one worker's counters.
    class Executor {
    public:
        Executor(const CimAccelerator& acc, SimCounters& counters) : acc_(&acc), counters_(&counters) {}

        void mvm(std::size_t layer_index, const Layer& l, std::span<const std::int8_t> x, std::span<double> y) {
            const std::size_t mi = acc_->mapping_of_layer_.at(layer_index);
            const LayerMapping& map = acc_->mappings_[mi];
            const EncodingMode mode = acc_->settings_.mode;
            const auto rule = reconstruction_rule(mode);
            const int n_phases = cycles(mode);
            const std::size_t n_rows = acc_->settings_.geometry.rows;
            std::fill(y.begin(), y.end(), 0.0);
            try {
                check_encodable(x, mode);
            } catch (const Error& e) {
                throw e.with_context("layer '" + l.name + "'");
            }
            bits_.assign(n_rows, 0);
            LayerProfile* prof = counters_->profile.empty() ? nullptr : &counters_->profile[mi];

            for (std::size_t ti = 0; ti < map.tiles.size(); ++ti) {
                const ProgrammedTile& pt = map.tiles[ti];
                const Tile& tile = pt.tile;
                const std::size_t k_cols = tile.cols();
                currents_.resize(tile.physical_cols());
                delta_.resize(k_cols);
                partial_.assign(k_cols, 0.0);
                for (int p = 0; p < n_phases; ++p) {
                    std::uint64_t active = 0;
                    for (std::size_t r = 0; r < tile.rows(); ++r) {
                        const std::uint8_t b = phase_bit(mode, p, x[tile.row_begin + r]);
                        bits_[r] = b;
                        active += b;
                    }
                    counters_->pulses[mi][ti] += active;
                    solve_fast(pt.xbar, bits_, currents_);
                    differential_readout(currents_, delta_);
                    const double coeff = rule.coeff[static_cast<std::size_t>(p)];
                    for (std::size_t k = 0; k < k_cols; ++k) {
                        const AdcCode d = adc_quantise(delta_[k], acc_->adc_, map.name);
                        if (prof) prof->codes.add(d);
                        partial_[k] += coeff * reconstruct_value(d, acc_->adc_, map.name);
                    }
                }
                counters_->ops[mi][ti] += static_cast<std::uint64_t>(n_phases);
                for (std::size_t k = 0; k < k_cols; ++k) {
                    double v = partial_[k];
                    if (needs_weight_sums(mode)) v += rule.offset * pt.weight_sums[k];
                    y[tile.col_begin + k] += v;  // row tiles accumulate in plan order
                }
                std::fill(bits_.begin(), bits_.begin() + static_cast<std::ptrdiff_t>(tile.rows()), 0);
            }
            if (prof)
                for (double v : y) prof->accumulated.add(static_cast<AdcCode>(std::llround(v)));
        }

    private:
        const CimAccelerator* acc_;
        SimCounters* counters_;
        std::vector<std::uint8_t> bits_;
        std::vector<double> currents_, delta_, partial_;
    };

    /// Energy-model statistics from merged counters.
    [[nodiscard]] std::vector<TileStats> tile_stats(const SimCounters& c) const {
        std::vector<TileStats> out;
        for (std::size_t m = 0; m < mappings_.size(); ++m)
            for (std::size_t t = 0; t < mappings_[m].tiles.size(); ++t) {
                const auto& pt = mappings_[m].tiles[t];
                TileStats s;
                s.tile_id = mappings_[m].name + ".t" + std::to_string(t);
                s.o_t = c.ops[m][t];
                s.n_t = pt.tile.rows();
                s.m_t = pt.tile.physical_cols();
                s.cycles = cycles(settings_.mode);
                s.x_bar = s.o_t == 0 ? 0.0
                                     : static_cast<double>(c.pulses[m][t]) /
                                           (static_cast<double>(s.o_t) * static_cast<double>(s.n_t));
                s.g_bar = pt.g_bar;
                out.push_back(std::move(s));
            }
        return out;
    }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    const QuantisedModel* model_;
    SimSettings settings_;
    AdcConfig adc_;
    std::vector<LayerMapping> mappings_;
    std::vector<std::size_t> mapping_of_layer_;
};

struct InferenceResult {
    std::size_t samples = 0;
    std::size_t correct = 0;
    std::vector<std::size_t> predictions;
    std::vector<TileStats> tiles;
    ProfileResult profile;  // filled when profiling

    [[nodiscard]] double accuracy() const {
        return samples == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(samples);
    }
};

inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Simulates every sample; workers take samples round-robin and keep private
/// counters, merged afterwards, so results do not depend on the thread count.
inline InferenceResult simulate(const CimAccelerator& acc, std::span<const Sample> samples, unsigned threads,
                                bool profiling = false) {
    const std::size_t n = samples.size();
    const unsigned workers = static_cast<unsigned>(std::max<std::size_t>(
        1, std::min<std::size_t>(resolve_threads(threads), n)));
    std::vector<SimCounters> counters;
    for (unsigned w = 0; w < workers; ++w) counters.push_back(acc.make_counters(profiling));
    std::vector<std::size_t> predictions(n, 0);
    std::vector<std::exception_ptr> errors(workers);

    auto work = [&](unsigned w) {
        try {
            CimAccelerator::Executor exec(acc, counters[w]);
            for (std::size_t i = w; i < n; i += workers)
                predictions[i] = predict(forward(acc.model(), samples[i].image, exec));
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    SimCounters total = acc.make_counters(profiling);
    for (const auto& c : counters) total.merge(c);

    InferenceResult r;
    r.samples = n;
    r.predictions = std::move(predictions);
    for (std::size_t i = 0; i < n; ++i) r.correct += r.predictions[i] == samples[i].label;
    r.tiles = acc.tile_stats(total);
    if (profiling) {
        r.profile.mode = std::string(to_string(acc.settings().mode));
        r.profile.layers = std::move(total.profile);
    }
    return r;
}

/// Ideal per-layer ADC statistics: no wire resistance, lossless ADC, unit scales.
inline ProfileResult profile_layers(const QuantisedModel& model, SimSettings settings,
                                    std::span<const Sample> samples, unsigned threads,
                                    std::string run_id = "profile") {
    if (samples.empty()) fail(ErrorCategory::calibration, "profiling needs at least one sample");
    settings.read.r_p = 0.0;
    settings.full_resolution = true;
    settings.adc.layer_scales.clear();
    const CimAccelerator acc(model, settings);
    ProfileResult p = simulate(acc, samples, threads, true).profile;
    p.run_id = std::move(run_id);
    return p;
}

/// Accuracy of the pure digital model.
inline double reference_accuracy(const QuantisedModel& model, std::span<const Sample> samples) {
    DigitalExecutor d;
    std::size_t ok = 0;
    for (const auto& s : samples) ok += predict(forward(model, s.image, d)) == s.label;
    return samples.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(samples.size());
}

}  // namespace cimsim
