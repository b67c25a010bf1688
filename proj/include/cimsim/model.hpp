#pragma once

// Quantised network description: layers, shapes and {-1,0,1} weights, plus
// the on-disk format (JSON manifest + int8 weight blob).
//
// Manifest (schema "cimsim.model/1"):
//   {
//     "schema": "cimsim.model/1",
//     "name": "conv_tnn",
//     "kind": "binary" | "ternary",
//     "input": {"height": 8, "width": 8, "channels": 1},
//     "input_quantiser": {"kind": "ternary", "threshold": 0.5, "offset": 0.0},
//     "weights": "conv_tnn.bin",
//     "weights_bytes": 17000,
//     "dataset": {...},                       // task the model was fitted to
//     "layers": [
//       {"name": "conv1", "type": "conv2d", "kernel": [3, 3], "in_channels": 1,
//        "out_channels": 8, "stride": 1, "padding": 0, "weight_threshold": 0.55},
//       {"name": "act1", "type": "activation",
//        "quantiser": {"kind": "ternary", "threshold": 2.0, "offset": 0.5}},
//       {"name": "pool1", "type": "maxpool", "size": 2, "stride": 2},
//       {"name": "flat", "type": "flatten"},
//       {"name": "fc1", "type": "dense", "in_features": 512, "out_features": 32}
//     ]
//   }
//
// Weight blob: signed 8-bit values, conv2d/dense layers concatenated in layer
// order. Each layer is stored as its lowered matrix in row-major order:
// rows are im2col patch positions (dense: input features), columns are output
// channels. Patch positions are channel-major: row = (c * kH + ky) * kW + kx.
// Activations flow in HWC order; flatten keeps that order.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cimsim/encoding.hpp"
#include "cimsim/error.hpp"
#include "cimsim/format.hpp"
#include "cimsim/matrix.hpp"

namespace cimsim {

struct Shape {
    std::size_t h = 1, w = 1, c = 1;
    [[nodiscard]] std::size_t size() const { return h * w * c; }
    bool operator==(const Shape&) const = default;
};

inline std::string to_string(const Shape& s) {
    return std::to_string(s.h) + "x" + std::to_string(s.w) + "x" + std::to_string(s.c);
}

/// HWC tensor of doubles.
struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(Shape s, double fill = 0.0) : shape(s), data(s.size(), fill) {}

    double& at(std::size_t y, std::size_t x, std::size_t c) { return data[(y * shape.w + x) * shape.c + c]; }
    [[nodiscard]] double at(std::size_t y, std::size_t x, std::size_t c) const {
        return data[(y * shape.w + x) * shape.c + c];
    }
};

/// Quantiser applied to (x − offset). The offset carries folded batch-norm.
struct ActivationSpec {
    QuantisationSpec quant;
    double offset = 0.0;

    [[nodiscard]] std::int8_t apply(double x) const { return quantise_value(x - offset, quant); }
};

enum class LayerKind { conv2d, dense, maxpool, flatten, activation };

inline std::string_view to_string(LayerKind k) {
    switch (k) {
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::dense: return "dense";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::flatten: return "flatten";
        case LayerKind::activation: return "activation";
    }
    return "?";
}

struct Layer {
    std::string name;
    LayerKind kind = LayerKind::dense;

    // conv2d (kernel) and maxpool (kernel_h == kernel_w == size)
    std::size_t kernel_h = 0, kernel_w = 0;
    std::size_t stride = 1, padding = 0;
    std::size_t out_channels = 0;  // conv2d output channels, dense output features

    ActivationSpec activation;               // activation layers
    std::optional<double> weight_threshold;  // ternary weight quantiser, informational
    Matrix<std::int8_t> weights;             // lowered: rows x out_channels

    Shape in_shape, out_shape;

    [[nodiscard]] bool is_matrix() const { return kind == LayerKind::conv2d || kind == LayerKind::dense; }
    [[nodiscard]] std::size_t matrix_rows() const { return weights.rows(); }
    [[nodiscard]] std::size_t matrix_cols() const { return weights.cols(); }
};

struct QuantisedModel {
    std::string name;
    QuantKind kind = QuantKind::ternary;
    Shape input;
    ActivationSpec input_quantiser;
    std::vector<Layer> layers;
    nlohmann::json dataset = nlohmann::json::object();
    std::string weights_digest;  // FNV-1a of the weight blob

    [[nodiscard]] std::size_t num_classes() const { return layers.back().out_shape.size(); }
};

inline constexpr std::string_view model_schema = "cimsim.model/1";

namespace detail {

inline nlohmann::json activation_to_json(const ActivationSpec& a) {
    nlohmann::json j{{"kind", to_string(a.quant.kind)}, {"offset", a.offset}};
    if (a.quant.threshold) j["threshold"] = *a.quant.threshold;
    return j;
}

inline ActivationSpec activation_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("kind"))
        fail(ErrorCategory::model, where + ": quantiser needs a 'kind'");
    ActivationSpec a;
    if (j["kind"] == "binary") a.quant.kind = QuantKind::binary;
    else if (j["kind"] == "ternary") a.quant.kind = QuantKind::ternary;
    else fail(ErrorCategory::model, where + ": unknown quantiser kind " + j["kind"].dump());
    if (j.contains("threshold")) a.quant.threshold = j["threshold"].get<double>();
    a.offset = j.value("offset", 0.0);
    try {
        a.quant.validate();
    } catch (const Error& e) {
        throw Error(ErrorCategory::model, where + ": " + e.what());
    }
    return a;
}

inline std::size_t get_size(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<long long>() < 0)
        fail(ErrorCategory::model, where + ": '" + key + "' must be a non-negative integer");
    return j[key].get<std::size_t>();
}

}  // namespace detail

/// Fills in shapes layer by layer and checks the chain is consistent.
inline void infer_shapes(QuantisedModel& m) {
    if (m.layers.empty()) fail(ErrorCategory::model, "model has no layers");
    if (m.input.size() == 0) fail(ErrorCategory::model, "input shape is empty");
    Shape s = m.input;
    bool quantised = true;  // the input quantiser runs before the first layer
    for (auto& l : m.layers) {
        const std::string where = "layer '" + l.name + "'";
        l.in_shape = s;
        switch (l.kind) {
            case LayerKind::conv2d: {
                if (!quantised) fail(ErrorCategory::model, where + ": input is not quantised");
                if (l.kernel_h == 0 || l.kernel_w == 0 || l.out_channels == 0)
                    fail(ErrorCategory::model, where + ": kernel and channels must be positive");
                if (l.stride < 1) fail(ErrorCategory::model, where + ": stride must be >= 1");
                if (l.padding >= l.kernel_h || l.padding >= l.kernel_w)
                    fail(ErrorCategory::model, where + ": padding must be smaller than the kernel");
                const std::size_t ph = s.h + 2 * l.padding, pw = s.w + 2 * l.padding;
                if (ph < l.kernel_h || pw < l.kernel_w)
                    fail(ErrorCategory::model, where + ": kernel larger than the padded input");
                if ((ph - l.kernel_h) % l.stride != 0 || (pw - l.kernel_w) % l.stride != 0)
                    fail(ErrorCategory::model, where + ": stride does not tile the padded input exactly");
                s = {(ph - l.kernel_h) / l.stride + 1, (pw - l.kernel_w) / l.stride + 1, l.out_channels};
                quantised = false;
                break;
            }
            case LayerKind::dense:
                if (!quantised) fail(ErrorCategory::model, where + ": input is not quantised");
                if (s.h != 1 || s.w != 1)
                    fail(ErrorCategory::model, where + ": dense input must be flat, got " + to_string(s));
                if (l.out_channels == 0) fail(ErrorCategory::model, where + ": no output features");
                s = {1, 1, l.out_channels};
                quantised = false;
                break;
            case LayerKind::maxpool:
                if (l.kernel_h == 0 || l.stride < 1)
                    fail(ErrorCategory::model, where + ": pool size and stride must be positive");
                if (s.h < l.kernel_h || s.w < l.kernel_w || (s.h - l.kernel_h) % l.stride != 0 ||
                    (s.w - l.kernel_w) % l.stride != 0)
                    fail(ErrorCategory::model, where + ": pooling window does not tile the input");
                s = {(s.h - l.kernel_h) / l.stride + 1, (s.w - l.kernel_w) / l.stride + 1, s.c};
                break;
            case LayerKind::flatten:
                s = {1, 1, s.size()};
                break;
            case LayerKind::activation:
                if (l.activation.quant.kind != m.kind)
                    fail(ErrorCategory::model, where + ": quantiser kind differs from the model kind");
                quantised = true;
                break;
        }
        l.out_shape = s;
    }
    if (!m.layers.back().is_matrix())
        fail(ErrorCategory::model, "the last layer must be conv2d or dense (it produces the class scores)");
}

/// Number of weights a matrix layer expects, from its shapes.
inline std::size_t expected_matrix_rows(const Layer& l) {
    if (l.kind == LayerKind::conv2d) return l.kernel_h * l.kernel_w * l.in_shape.c;
    return l.in_shape.size();
}

/// Validates a manifest and attaches weights from a blob.
inline QuantisedModel parse_model(const nlohmann::json& j, std::span<const std::int8_t> blob) {
    if (!j.is_object()) fail(ErrorCategory::model, "manifest must be a JSON object");
    if (j.value("schema", "") != model_schema)
        fail(ErrorCategory::model, "manifest schema must be \"" + std::string(model_schema) + "\"");
    QuantisedModel m;
    m.name = j.value("name", "model");
    if (!j.contains("kind") || !j["kind"].is_string())
        fail(ErrorCategory::model, "manifest needs a 'kind' (binary or ternary)");
    if (j["kind"] == "binary") m.kind = QuantKind::binary;
    else if (j["kind"] == "ternary") m.kind = QuantKind::ternary;
    else fail(ErrorCategory::model, "unknown model kind " + j["kind"].dump());
    if (!j.contains("input") || !j["input"].is_object()) fail(ErrorCategory::model, "manifest needs 'input'");
    m.input = {detail::get_size(j["input"], "height", "input"), detail::get_size(j["input"], "width", "input"),
               detail::get_size(j["input"], "channels", "input")};
    if (!j.contains("input_quantiser")) fail(ErrorCategory::model, "manifest needs 'input_quantiser'");
    m.input_quantiser = detail::activation_from_json(j["input_quantiser"], "input_quantiser");
    if (m.input_quantiser.quant.kind != m.kind)
        fail(ErrorCategory::model, "input quantiser kind differs from the model kind");
    if (j.contains("dataset")) m.dataset = j["dataset"];
    if (!j.contains("layers") || !j["layers"].is_array()) fail(ErrorCategory::model, "manifest needs 'layers'");

    for (const auto& lj : j["layers"]) {
        Layer l;
        l.name = lj.value("name", "");
        if (l.name.empty()) fail(ErrorCategory::model, "every layer needs a 'name'");
        for (const auto& other : m.layers)
            if (other.name == l.name) fail(ErrorCategory::model, "duplicate layer name '" + l.name + "'");
        const std::string where = "layer '" + l.name + "'";
        const std::string type = lj.value("type", "");
        if (type == "conv2d") {
            l.kind = LayerKind::conv2d;
            if (!lj.contains("kernel") || !lj["kernel"].is_array() || lj["kernel"].size() != 2)
                fail(ErrorCategory::model, where + ": 'kernel' must be [kh, kw]");
            l.kernel_h = lj["kernel"][0].get<std::size_t>();
            l.kernel_w = lj["kernel"][1].get<std::size_t>();
            l.out_channels = detail::get_size(lj, "out_channels", where);
            l.stride = lj.value("stride", std::size_t{1});
            l.padding = lj.value("padding", std::size_t{0});
        } else if (type == "dense") {
            l.kind = LayerKind::dense;
            l.out_channels = detail::get_size(lj, "out_features", where);
        } else if (type == "maxpool") {
            l.kind = LayerKind::maxpool;
            l.kernel_h = l.kernel_w = detail::get_size(lj, "size", where);
            l.stride = lj.value("stride", l.kernel_h);
        } else if (type == "flatten") {
            l.kind = LayerKind::flatten;
        } else if (type == "activation") {
            l.kind = LayerKind::activation;
            if (!lj.contains("quantiser")) fail(ErrorCategory::model, where + ": needs a 'quantiser'");
            l.activation = detail::activation_from_json(lj["quantiser"], where);
        } else {
            fail(ErrorCategory::model, where + ": unknown layer type '" + type + "'");
        }
        if (lj.contains("weight_threshold")) l.weight_threshold = lj["weight_threshold"].get<double>();
        m.layers.push_back(std::move(l));
    }
    infer_shapes(m);

    // Cross-check declared sizes against the inferred chain.
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        const auto& l = m.layers[i];
        const auto& lj = j["layers"][i];
        const std::string where = "layer '" + l.name + "'";
        if (l.kind == LayerKind::conv2d && lj.contains("in_channels") &&
            lj["in_channels"].get<std::size_t>() != l.in_shape.c)
            fail(ErrorCategory::model, where + ": declares " + lj["in_channels"].dump() +
                                           " input channels but receives " + std::to_string(l.in_shape.c));
        if (l.kind == LayerKind::dense && lj.contains("in_features") &&
            lj["in_features"].get<std::size_t>() != l.in_shape.size())
            fail(ErrorCategory::model, where + ": declares " + lj["in_features"].dump() +
                                           " input features but receives " + std::to_string(l.in_shape.size()));
    }

    std::size_t needed = 0;
    for (const auto& l : m.layers)
        if (l.is_matrix()) needed += expected_matrix_rows(l) * l.out_channels;
    if (blob.size() != needed)
        fail(ErrorCategory::model, "weight blob holds " + std::to_string(blob.size()) + " bytes, expected " +
                                       std::to_string(needed));
    std::size_t pos = 0;
    for (auto& l : m.layers) {
        if (!l.is_matrix()) continue;
        const std::size_t rows = expected_matrix_rows(l), cols = l.out_channels;
        std::vector<std::int8_t> w(blob.begin() + static_cast<std::ptrdiff_t>(pos),
                                   blob.begin() + static_cast<std::ptrdiff_t>(pos + rows * cols));
        for (std::size_t k = 0; k < w.size(); ++k) {
            const int v = w[k];
            if (v < -1 || v > 1)
                fail(ErrorCategory::model, "layer '" + l.name + "': weight " + std::to_string(k) + " is " +
                                               std::to_string(v) + ", outside {-1, 0, 1}");
            if (v == 0 && m.kind == QuantKind::binary)
                fail(ErrorCategory::model, "layer '" + l.name + "': zero weight in a binary model");
        }
        l.weights = Matrix<std::int8_t>(rows, cols, std::move(w));
        pos += rows * cols;
    }
    if (m.kind == QuantKind::binary)
        for (const auto& l : m.layers)
            if (l.kind == LayerKind::conv2d && l.padding > 0)
                fail(ErrorCategory::model, "layer '" + l.name + "': zero padding is not binary-representable");
    m.weights_digest =
        fnv1a_hex(std::string_view(reinterpret_cast<const char*>(blob.data()), blob.size()));
    return m;
}

inline std::vector<std::int8_t> serialise_weights(const QuantisedModel& m) {
    std::vector<std::int8_t> blob;
    for (const auto& l : m.layers)
        if (l.is_matrix()) blob.insert(blob.end(), l.weights.data().begin(), l.weights.data().end());
    return blob;
}

inline nlohmann::json model_manifest(const QuantisedModel& m, const std::string& blob_name) {
    nlohmann::json j;
    j["schema"] = model_schema;
    j["name"] = m.name;
    j["kind"] = to_string(m.kind);
    j["input"] = {{"height", m.input.h}, {"width", m.input.w}, {"channels", m.input.c}};
    j["input_quantiser"] = detail::activation_to_json(m.input_quantiser);
    j["weights"] = blob_name;
    j["weights_bytes"] = serialise_weights(m).size();
    j["dataset"] = m.dataset;
    j["layers"] = nlohmann::json::array();
    for (const auto& l : m.layers) {
        nlohmann::json lj{{"name", l.name}, {"type", to_string(l.kind)}};
        switch (l.kind) {
            case LayerKind::conv2d:
                lj["kernel"] = {l.kernel_h, l.kernel_w};
                lj["in_channels"] = l.in_shape.c;
                lj["out_channels"] = l.out_channels;
                lj["stride"] = l.stride;
                lj["padding"] = l.padding;
                break;
            case LayerKind::dense:
                lj["in_features"] = l.in_shape.size();
                lj["out_features"] = l.out_channels;
                break;
            case LayerKind::maxpool:
                lj["size"] = l.kernel_h;
                lj["stride"] = l.stride;
                break;
            case LayerKind::flatten: break;
            case LayerKind::activation: lj["quantiser"] = detail::activation_to_json(l.activation); break;
        }
        if (l.weight_threshold) lj["weight_threshold"] = *l.weight_threshold;
        j["layers"].push_back(std::move(lj));
    }
    return j;
}

/// Loads "<dir>/<name>.json" and the blob it references (relative to the manifest).
inline QuantisedModel load_model(const std::filesystem::path& manifest_path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCategory::model, manifest_path.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("weights") || !j["weights"].is_string())
        fail(ErrorCategory::model, manifest_path.string() + ": manifest needs a 'weights' file name");
    const auto blob_path = manifest_path.parent_path() / j["weights"].get<std::string>();
    const std::string bytes = read_text_file(blob_path);
    std::span<const std::int8_t> blob(reinterpret_cast<const std::int8_t*>(bytes.data()), bytes.size());
    try {
        return parse_model(j, blob);
    } catch (const Error& e) {
        throw e.with_context(manifest_path.string());
    }
}

/// Writes "<dir>/<name>.json" and "<dir>/<name>.bin"; returns the manifest path.
inline std::filesystem::path save_model(const QuantisedModel& m, const std::filesystem::path& dir) {
    const std::string blob_name = m.name + ".bin";
    const auto blob = serialise_weights(m);
    write_text_file(dir / blob_name, std::string(reinterpret_cast<const char*>(blob.data()), blob.size()));
    const auto manifest = dir / (m.name + ".json");
    write_text_file(manifest, model_manifest(m, blob_name).dump(2) + "\n");
    return manifest;
}

}  // namespace cimsim
