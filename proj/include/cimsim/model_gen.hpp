#pragma once

// Random desk-scale workloads fitted to the prototype task without training:
// hidden layers are random quantised projections whose activation thresholds
// are set from training-set pre-activation statistics, and the last layer
// reads out the quantised difference of class means.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cimsim/dataset.hpp"
#include "cimsim/encoding.hpp"
#include "cimsim/inference.hpp"
#include "cimsim/model.hpp"
#include "cimsim/random.hpp"

namespace cimsim {

enum class Architecture { mlp, conv };

inline std::string_view to_string(Architecture a) { return a == Architecture::mlp ? "mlp" : "conv"; }

inline Architecture parse_architecture(std::string_view s) {
    if (s == "mlp") return Architecture::mlp;
    if (s == "conv") return Architecture::conv;
    fail(ErrorCategory::config, "unknown architecture '" + std::string(s) + "' (expected mlp or conv)");
}

struct ModelGenSpec {
    std::string name;
    Architecture arch = Architecture::conv;
    QuantKind kind = QuantKind::ternary;
    std::uint64_t seed = 1;
    std::size_t train_samples = 400;
    double input_threshold = 0.5;  // ternary input quantiser
    DatasetSpec dataset;
};

namespace detail {

inline double median(std::vector<double> v) {
    if (v.empty()) fail(ErrorCategory::calibration, "median of no values");
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

inline Matrix<std::int8_t> random_quantised(std::size_t rows, std::size_t cols, QuantKind kind, Rng& rng,
                                            std::optional<double>& threshold) {
    std::vector<double> w(rows * cols);
    for (double& v : w) v = rng.normal();
    QuantisationSpec spec = QuantisationSpec::binary();
    if (kind == QuantKind::ternary) {
        spec = QuantisationSpec::ternary(calibrate_ternary_threshold(w));
        threshold = spec.threshold;
    }
    return Matrix<std::int8_t>(rows, cols, quantise(w, spec));
}

inline Layer matrix_layer(std::string name, LayerKind kind, std::size_t out) {
    Layer l;
    l.name = std::move(name);
    l.kind = kind;
    l.out_channels = out;
    return l;
}

inline Layer conv_layer(std::string name, std::size_t k, std::size_t out) {
    Layer l = matrix_layer(std::move(name), LayerKind::conv2d, out);
    l.kernel_h = l.kernel_w = k;
    return l;
}

inline Layer simple_layer(std::string name, LayerKind kind) {
    Layer l;
    l.name = std::move(name);
    l.kind = kind;
    return l;
}

}  // namespace detail

/// Layer skeleton of the two bundled architectures (weights not yet set).
inline std::vector<Layer> architecture_layers(Architecture arch) {
    using detail::conv_layer, detail::matrix_layer, detail::simple_layer;
    std::vector<Layer> ls;
    if (arch == Architecture::mlp) {
        ls.push_back(simple_layer("flat", LayerKind::flatten));
        ls.push_back(matrix_layer("fc1", LayerKind::dense, 64));
        ls.push_back(simple_layer("act1", LayerKind::activation));
        ls.push_back(matrix_layer("fc2", LayerKind::dense, 32));
        ls.push_back(simple_layer("act2", LayerKind::activation));
        ls.push_back(matrix_layer("fc3", LayerKind::dense, 2));
    } else {
        ls.push_back(conv_layer("conv1", 3, 8));
        ls.push_back(simple_layer("act1", LayerKind::activation));
        ls.push_back(conv_layer("conv2", 3, 32));
        ls.push_back(simple_layer("act2", LayerKind::activation));
        ls.push_back(simple_layer("flat", LayerKind::flatten));
        ls.push_back(matrix_layer("fc1", LayerKind::dense, 32));
        ls.push_back(simple_layer("act3", LayerKind::activation));
        ls.push_back(matrix_layer("fc2", LayerKind::dense, 2));
    }
    return ls;
}

inline QuantisedModel generate_model(const ModelGenSpec& spec) {
    QuantisedModel m;
    m.name = spec.name;
    m.kind = spec.kind;
    m.input = {spec.dataset.height, spec.dataset.width, 1};
    m.input_quantiser.quant = spec.kind == QuantKind::binary ? QuantisationSpec::binary()
                                                             : QuantisationSpec::ternary(spec.input_threshold);
    m.dataset = spec.dataset.to_json();
    m.layers = architecture_layers(spec.arch);
    // Placeholder quantisers so the shape chain validates before fitting.
    for (auto& l : m.layers)
        if (l.kind == LayerKind::activation)
            l.activation.quant = spec.kind == QuantKind::binary ? QuantisationSpec::binary()
                                                                : QuantisationSpec::ternary(0.0);
    infer_shapes(m);
    if (m.layers.back().out_channels != spec.dataset.classes)
        fail(ErrorCategory::config, "architecture output does not match the dataset class count");

    Rng rng(derive_seed(spec.seed, "weights"));
    const auto train = generate_samples(spec.dataset, spec.train_samples, derive_seed(spec.seed, "train"));
    DigitalExecutor digital;
    const std::size_t last = m.layers.size() - 1;

    for (std::size_t li = 0; li < last; ++li) {
        Layer& l = m.layers[li];
        if (l.is_matrix()) {
            const std::size_t rows =
                l.kind == LayerKind::conv2d ? l.kernel_h * l.kernel_w * l.in_shape.c : l.in_shape.size();
            l.weights = detail::random_quantised(rows, l.out_channels, spec.kind, rng, l.weight_threshold);
        } else if (l.kind == LayerKind::activation) {
            std::vector<double> pre;
            for (const auto& s : train) {
                const auto y = forward(m, s.image, digital, li);
                pre.insert(pre.end(), y.begin(), y.end());
            }
            const double offset = detail::median(pre);
            l.activation.offset = offset;
            if (spec.kind == QuantKind::ternary) {
                double dev = 0.0;
                for (double v : pre) dev += std::abs(v - offset);
                l.activation.quant = QuantisationSpec::ternary(0.7 * dev / static_cast<double>(pre.size()));
            }
        }
    }

    // Readout: column c is the quantised offset of class c's mean feature
    // vector from the overall mean.
    Layer& out = m.layers[last];
    const std::size_t features = out.in_shape.size();
    const std::size_t classes = out.out_channels;
    std::vector<std::vector<double>> feats;
    for (const auto& s : train) feats.push_back(forward(m, s.image, digital, last));
    std::vector<double> overall(features, 0.0);
    std::vector<std::vector<double>> class_mean(classes, std::vector<double>(features, 0.0));
    std::vector<std::size_t> class_count(classes, 0);
    for (std::size_t i = 0; i < train.size(); ++i) {
        ++class_count[train[i].label];
        for (std::size_t f = 0; f < features; ++f) {
            overall[f] += feats[i][f];
            class_mean[train[i].label][f] += feats[i][f];
        }
    }
    std::vector<double> diff(features * classes);
    for (std::size_t f = 0; f < features; ++f)
        for (std::size_t c = 0; c < classes; ++c) {
            const double mc = class_count[c] ? class_mean[c][f] / static_cast<double>(class_count[c]) : 0.0;
            diff[f * classes + c] = mc - overall[f] / static_cast<double>(train.size());
        }
    QuantisationSpec qs = QuantisationSpec::binary();
    if (spec.kind == QuantKind::ternary) {
        qs = QuantisationSpec::ternary(calibrate_ternary_threshold(diff));
        out.weight_threshold = qs.threshold;
    }
    out.weights = Matrix<std::int8_t>(features, classes, quantise(diff, qs));

    const auto blob = serialise_weights(m);
    m.weights_digest = fnv1a_hex(std::string_view(reinterpret_cast<const char*>(blob.data()), blob.size()));
    return m;
}

/// The four bundled workloads: {mlp, conv} x {binary, ternary}.
inline std::vector<ModelGenSpec> bundled_model_specs() {
    std::vector<ModelGenSpec> specs;
    std::uint64_t seed = 101;
    for (auto arch : {Architecture::mlp, Architecture::conv})
        for (auto kind : {QuantKind::binary, QuantKind::ternary}) {
            ModelGenSpec s;
            s.arch = arch;
            s.kind = kind;
            s.name = std::string(to_string(arch)) + (kind == QuantKind::binary ? "_bnn" : "_tnn");
            s.seed = seed++;
            specs.push_back(s);
        }
    return specs;
}

}  // namespace cimsim
