#pragma once

// Procedural two-class 8x8 image task. Each class has a fixed ±amplitude
// prototype; a sample is its class prototype times a random contrast plus
// Gaussian pixel noise.

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "cimsim/error.hpp"
#include "cimsim/model.hpp"
#include "cimsim/random.hpp"

namespace cimsim {

struct DatasetSpec {
    std::uint64_t seed = 7;  // fixes the prototypes
    std::size_t height = 8, width = 8, classes = 2;
    double amplitude = 0.8;
    double contrast_min = 0.5, contrast_max = 1.0;
    double noise = 0.5;

    void validate() const {
        if (height == 0 || width == 0) fail(ErrorCategory::config, "dataset images must be non-empty");
        if (classes < 2) fail(ErrorCategory::config, "dataset needs at least two classes");
        if (!(noise >= 0.0) || !(amplitude > 0.0) || !(contrast_min <= contrast_max))
            fail(ErrorCategory::config, "invalid dataset noise, amplitude or contrast range");
    }

    [[nodiscard]] nlohmann::json to_json() const {
        return {{"generator", "prototypes"}, {"seed", seed},         {"height", height},
                {"width", width},            {"classes", classes},   {"amplitude", amplitude},
                {"contrast_min", contrast_min}, {"contrast_max", contrast_max}, {"noise", noise}};
    }

    static DatasetSpec from_json(const nlohmann::json& j) {
        if (!j.is_object() || j.value("generator", "") != "prototypes")
            fail(ErrorCategory::config, "dataset description must use the 'prototypes' generator");
        DatasetSpec d;
        d.seed = j.value("seed", d.seed);
        d.height = j.value("height", d.height);
        d.width = j.value("width", d.width);
        d.classes = j.value("classes", d.classes);
        d.amplitude = j.value("amplitude", d.amplitude);
        d.contrast_min = j.value("contrast_min", d.contrast_min);
        d.contrast_max = j.value("contrast_max", d.contrast_max);
        d.noise = j.value("noise", d.noise);
        d.validate();
        return d;
    }
};

struct Sample {
    Tensor image;
    std::size_t label = 0;
};

inline std::vector<Tensor> class_prototypes(const DatasetSpec& spec) {
    spec.validate();
    Rng rng(derive_seed(spec.seed, "prototypes"));
    std::vector<Tensor> protos;
    for (std::size_t k = 0; k < spec.classes; ++k) {
        Tensor p(Shape{spec.height, spec.width, 1});
        for (double& v : p.data) v = rng.normal() >= 0.0 ? spec.amplitude : -spec.amplitude;
        protos.push_back(std::move(p));
    }
    return protos;
}

/// `count` samples from the stream identified by `stream_seed`. The first k
/// samples do not depend on `count`.
inline std::vector<Sample> generate_samples(const DatasetSpec& spec, std::size_t count, std::uint64_t stream_seed) {
    const auto protos = class_prototypes(spec);
    Rng rng(stream_seed);
    std::vector<Sample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Sample s;
        s.label = static_cast<std::size_t>(rng.below(spec.classes));
        s.image = protos[s.label];
        const double contrast = rng.uniform(spec.contrast_min, spec.contrast_max);
        for (double& v : s.image.data) v = v * contrast + rng.normal(0.0, spec.noise);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace cimsim
