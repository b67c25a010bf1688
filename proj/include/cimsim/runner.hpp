#pragma once

// Experiment configuration and the sweeps behind the command line tool.
// Every command writes results.csv, report.json and, where it makes sense,
// plot_*.svg into an output directory. Plots are drawn from the CSV table.
//
// Configuration file (JSON, schema "cimsim.config/1"); every key is optional:
//   workloads        model manifests, relative to the config file   [data/models/conv_tnn.json]
//   technology       preset for single runs                         "ReRAM-1"
//   technologies     presets for the parasitics sweep               all five
//   presets_file     extra/overriding presets (cimsim.presets/1)
//   crossbar_size    N_X for single runs (crossbars are N_X x N_X)  128
//   crossbar_sizes   energy sweep sizes                             [64, 128, 256, 512]
//   mode / modes     encoding for single runs / sweeps; "auto" picks B-I|T-I, or
//                    [B-I, B-II] | [T-I, T-II] by model kind        "auto"
//   adc_bits         ADC resolution for run and the energy sweep    4
//   adc_bits_sweep   resolutions for the ADC sweep                  [8, 7, 6, 5, 4, 3]
//   calibration      calibrate layer scales before run/energy       true
//   full_resolution  lossless ADC for run/energy                    false
//   r_p              wire resistance for single runs, Ω             0
//   r_p_sweep        parasitics sweep, Ω                            0, 0.25, ..., 2.5
//   v_read, t_read   read pulse, V and s                            0.2, 1e-8
//   profile_samples  calibration images                            200
//   eval_samples     evaluation images                              100
//   seed             all sample streams derive from it              42
//   energy           {"e_rd": J, "adc_energy": {"<bits>": J, ...}}

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "cimsim/adc.hpp"
#include "cimsim/dataset.hpp"
#include "cimsim/energy.hpp"
#include "cimsim/format.hpp"
#include "cimsim/lowering.hpp"
#include "cimsim/model.hpp"
#include "cimsim/simulator.hpp"
#include "cimsim/svg.hpp"
#include "cimsim/technology.hpp"

#ifndef CIMSIM_VERSION
#define CIMSIM_VERSION "0.1.0"
#endif

namespace cimsim {

inline constexpr std::string_view config_schema = "cimsim.config/1";
inline constexpr std::string_view report_schema = "cimsim.report/1";

inline std::vector<double> default_rp_sweep() {
    std::vector<double> v;
    for (int i = 0; i <= 10; ++i) v.push_back(0.25 * i);
    return v;
}

struct ExperimentConfig {
    std::filesystem::path base_dir = ".";
    std::vector<std::string> workloads{"data/models/conv_tnn.json"};
    std::string technology = "ReRAM-1";
    std::vector<std::string> technologies;
    std::optional<std::string> presets_file;
    std::size_t crossbar_size = 128;
    std::vector<std::size_t> crossbar_sizes{64, 128, 256, 512};
    std::string mode = "auto";
    std::vector<std::string> modes{"auto"};
    int adc_bits = 4;
    std::vector<int> adc_bits_sweep{8, 7, 6, 5, 4, 3};
    bool calibration = true;
    bool full_resolution = false;
    double r_p = 0.0;
    std::vector<double> r_p_sweep = default_rp_sweep();
    double v_read = 0.2;
    double t_read = 10e-9;
    std::size_t profile_samples = 200;
    std::size_t eval_samples = 100;
    std::uint64_t seed = 42;
    double e_rd = 0.1e-12;
    AdcEnergyTable adc_energy = AdcEnergyTable::defaults();

    void validate() const {
        auto need = [](bool ok, const std::string& what) {
            if (!ok) fail(ErrorCategory::config, what);
        };
        need(!workloads.empty(), "'workloads' must not be empty");
        need(!crossbar_sizes.empty(), "'crossbar_sizes' must not be empty");
        need(!modes.empty(), "'modes' must not be empty");
        need(!adc_bits_sweep.empty(), "'adc_bits_sweep' must not be empty");
        need(!r_p_sweep.empty(), "'r_p_sweep' must not be empty");
        need(crossbar_size >= 2, "'crossbar_size' must be >= 2");
        for (auto s : crossbar_sizes) need(s >= 2, "crossbar sizes must be >= 2");
        for (int b : adc_bits_sweep) need(b >= 2 && b <= 16, "ADC bits must be within [2, 16]");
        need(adc_bits >= 2 && adc_bits <= 16, "'adc_bits' must be within [2, 16]");
        for (double r : r_p_sweep) need(r >= 0.0 && std::isfinite(r), "r_p values must be finite and >= 0");
        need(r_p >= 0.0 && std::isfinite(r_p), "'r_p' must be finite and >= 0");
        need(v_read > 0.0 && t_read > 0.0, "'v_read' and 't_read' must be > 0");
        need(eval_samples > 0, "'eval_samples' must be > 0");
        need(e_rd > 0.0, "'energy.e_rd' must be > 0");
        if (mode != "auto") parse_mode(mode);
        for (const auto& m : modes)
            if (m != "auto") parse_mode(m);
    }

    /// Canonical form: every field, defaults included, keys sorted.
    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json j;
        j["schema"] = config_schema;
        j["workloads"] = workloads;
        j["technology"] = technology;
        j["technologies"] = technologies;
        j["presets_file"] = presets_file ? nlohmann::json(*presets_file) : nlohmann::json(nullptr);
        j["crossbar_size"] = crossbar_size;
        j["crossbar_sizes"] = crossbar_sizes;
        j["mode"] = mode;
        j["modes"] = modes;
        j["adc_bits"] = adc_bits;
        j["adc_bits_sweep"] = adc_bits_sweep;
        j["calibration"] = calibration;
        j["full_resolution"] = full_resolution;
        j["r_p"] = r_p;
        j["r_p_sweep"] = r_p_sweep;
        j["v_read"] = v_read;
        j["t_read"] = t_read;
        j["profile_samples"] = profile_samples;
        j["eval_samples"] = eval_samples;
        j["seed"] = seed;
        nlohmann::json table = nlohmann::json::object();
        for (const auto& [b, e] : adc_energy.joules_per_conversion) table[std::to_string(b)] = e;
        j["energy"] = {{"e_rd", e_rd}, {"adc_energy", table}};
        return j;
    }

    static ExperimentConfig from_json(const nlohmann::json& j, std::filesystem::path base_dir) {
        if (!j.is_object()) fail(ErrorCategory::config, "configuration must be a JSON object");
        static const std::vector<std::string> known = {
            "schema",         "workloads",  "technology",    "technologies",  "presets_file",
            "crossbar_size",  "crossbar_sizes", "mode",      "modes",         "adc_bits",
            "adc_bits_sweep", "calibration", "full_resolution", "r_p",        "r_p_sweep",
            "v_read",         "t_read",     "profile_samples", "eval_samples", "seed",
            "energy"};
        for (const auto& [key, value] : j.items())
            if (std::find(known.begin(), known.end(), key) == known.end())
                fail(ErrorCategory::config, "unknown configuration key '" + key + "'");
        if (j.contains("schema") && j["schema"] != config_schema)
            fail(ErrorCategory::config, "unsupported configuration schema " + j["schema"].dump());
        ExperimentConfig c;
        c.base_dir = std::move(base_dir);
        try {
            if (j.contains("workloads")) c.workloads = j["workloads"].get<std::vector<std::string>>();
            c.technology = j.value("technology", c.technology);
            if (j.contains("technologies")) c.technologies = j["technologies"].get<std::vector<std::string>>();
            if (j.contains("presets_file") && !j["presets_file"].is_null())
                c.presets_file = j["presets_file"].get<std::string>();
            c.crossbar_size = j.value("crossbar_size", c.crossbar_size);
            if (j.contains("crossbar_sizes")) c.crossbar_sizes = j["crossbar_sizes"].get<std::vector<std::size_t>>();
            c.mode = j.value("mode", c.mode);
            if (j.contains("modes")) c.modes = j["modes"].get<std::vector<std::string>>();
            c.adc_bits = j.value("adc_bits", c.adc_bits);
            if (j.contains("adc_bits_sweep")) c.adc_bits_sweep = j["adc_bits_sweep"].get<std::vector<int>>();
            c.calibration = j.value("calibration", c.calibration);
            c.full_resolution = j.value("full_resolution", c.full_resolution);
            c.r_p = j.value("r_p", c.r_p);
            if (j.contains("r_p_sweep")) c.r_p_sweep = j["r_p_sweep"].get<std::vector<double>>();
            c.v_read = j.value("v_read", c.v_read);
            c.t_read = j.value("t_read", c.t_read);
            c.profile_samples = j.value("profile_samples", c.profile_samples);
            c.eval_samples = j.value("eval_samples", c.eval_samples);
            c.seed = j.value("seed", c.seed);
            if (j.contains("energy")) {
                const auto& e = j["energy"];
                c.e_rd = e.value("e_rd", c.e_rd);
                if (e.contains("adc_energy"))
                    for (const auto& [bits, joules] : e["adc_energy"].items())
                        c.adc_energy.joules_per_conversion[std::stoi(bits)] = joules.get<double>();
            }
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCategory::config, std::string("configuration: ") + e.what());
        } catch (const std::invalid_argument&) {
            fail(ErrorCategory::config, "configuration: 'energy.adc_energy' keys must be bit counts");
        }
        c.validate();
        return c;
    }

    static ExperimentConfig load(const std::filesystem::path& path) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_text_file(path));
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCategory::config, path.string() + ": " + e.what());
        }
        try {
            return from_json(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
        } catch (const Error& e) {
            throw e.with_context(path.string());
        }
    }

    [[nodiscard]] std::filesystem::path resolve(const std::string& p) const {
        const std::filesystem::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    }

    [[nodiscard]] std::vector<TechnologyPreset> presets() const {
        std::vector<TechnologyPreset> all = builtin_presets();
        if (presets_file)
            for (auto& p : load_presets(resolve(*presets_file))) {
                auto it = std::find_if(all.begin(), all.end(), [&](const auto& q) { return q.label == p.label; });
                if (it != all.end()) *it = p;
                else all.push_back(p);
            }
        return all;
    }

    [[nodiscard]] EnergyParams energy_params(int bits) const {
        return {e_rd, adc_energy.at(bits), v_read, t_read};
    }
};

/// A loaded model with its profiling and evaluation images.
struct Workload {
    std::string path;
    QuantisedModel model;
    std::vector<Sample> profile_set;
    std::vector<Sample> eval_set;

    [[nodiscard]] const std::string& name() const { return model.name; }
};

inline std::vector<Workload> load_workloads(const ExperimentConfig& cfg) {
    std::vector<Workload> out;
    for (const auto& p : cfg.workloads) {
        Workload w;
        w.path = p;
        w.model = load_model(cfg.resolve(p));
        const auto ds = DatasetSpec::from_json(w.model.dataset);
        w.profile_set = generate_samples(ds, cfg.profile_samples, derive_seed(cfg.seed, "profile"));
        w.eval_set = generate_samples(ds, cfg.eval_samples, derive_seed(cfg.seed, "eval"));
        out.push_back(std::move(w));
    }
    return out;
}

/// Encodings to run for a model: explicit names, or "auto" by model kind.
inline std::vector<EncodingMode> resolve_modes(const std::vector<std::string>& names, const QuantisedModel& m,
                                               bool single) {
    std::vector<EncodingMode> out;
    for (const auto& n : names) {
        if (n == "auto") {
            if (m.kind == QuantKind::binary) {
                out.push_back(EncodingMode::b1);
                if (!single) out.push_back(EncodingMode::b2);
            } else {
                out.push_back(EncodingMode::t1);
                if (!single) out.push_back(EncodingMode::t2);
            }
        } else {
            const EncodingMode mode = parse_mode(n);
            if (m.kind == QuantKind::ternary && !supports_zero(mode))
                fail(ErrorCategory::encoding, std::string(to_string(mode)) + " cannot run the ternary model '" +
                                                  m.name + "' (its activations contain zeros)");
            out.push_back(mode);
        }
        if (single) break;
    }
    return out;
}

/// Hash of the canonical configuration and the weights of every workload.
inline std::string config_hash(const ExperimentConfig& cfg, const std::vector<Workload>& workloads) {
    nlohmann::json j = cfg.to_json();
    nlohmann::json digests = nlohmann::json::array();
    for (const auto& w : workloads) digests.push_back(w.model.weights_digest);
    j["model_digests"] = digests;
    return fnv1a_hex(j.dump());
}

struct PointSpec {
    const Workload* workload = nullptr;
    EncodingMode mode = EncodingMode::t1;
    TechnologyPreset tech;
    std::size_t size = 128;
    int bits = 4;
    bool full_resolution = false;
    bool calibrated = false;
    double r_p = 0.0;
};

struct PointResult {
    double accuracy = 0.0;
    int bits = 0;  // effective ADC resolution
    std::vector<TileStats> tiles;
    EnergySummary energy;
    Utilisation util;
    std::map<std::string, double, std::less<>> scales;
};

/// Runs points and caches ideal profiles, which depend only on the workload,
/// the encoding and the tiling.
class ExperimentRunner {
public:
    ExperimentRunner(const ExperimentConfig& cfg, unsigned threads) : cfg_(&cfg), threads_(threads) {}

    [[nodiscard]] SimSettings settings(const PointSpec& p) const {
        SimSettings s;
        s.tech = p.tech;
        s.geometry = {p.size, p.size};
        s.read = {p.r_p, cfg_->v_read, cfg_->t_read};
        s.mode = p.mode;
        s.adc.bits = p.bits;
        s.full_resolution = p.full_resolution;
        return s;
    }

    const ProfileResult& profile(const Workload& w, EncodingMode mode, std::size_t size) {
        const auto key = std::make_tuple(w.path, mode, size);
        auto it = profiles_.find(key);
        if (it != profiles_.end()) return it->second;
        PointSpec p{&w, mode, builtin_presets().front(), size, 2, true, false, 0.0};
        ProfileResult r = profile_layers(w.model, settings(p), w.profile_set, threads_,
                                         w.name() + "/" + std::string(to_string(mode)) + "/" + std::to_string(size));
        return profiles_.emplace(key, std::move(r)).first->second;
    }

    PointResult run(const PointSpec& p) {
        SimSettings s = settings(p);
        PointResult r;
        if (p.calibrated && !p.full_resolution) {
            r.scales = calibrate_scales(profile(*p.workload, p.mode, p.size), p.bits);
            s.adc.layer_scales = r.scales;
        }
        const CimAccelerator acc(p.workload->model, s);
        const InferenceResult inf = simulate(acc, p.workload->eval_set, threads_);
        r.accuracy = inf.accuracy();
        r.bits = acc.adc().bits;
        r.tiles = inf.tiles;
        r.energy = energy_per_mac(r.tiles, cfg_->energy_params(r.bits));
        r.util = column_utilisation(r.tiles, s.geometry);
        return r;
    }

private:
    const ExperimentConfig* cfg_;
    unsigned threads_;
    std::map<std::tuple<std::string, EncodingMode, std::size_t>, ProfileResult> profiles_;
};

/// Machine-readable report skeleton shared by all commands.
inline nlohmann::json report_header(const std::string& command, const ExperimentConfig& cfg,
                                    const std::vector<Workload>& workloads, const std::string& hash) {
    nlohmann::json j;
    j["schema"] = report_schema;
    j["command"] = command;
    j["version"] = CIMSIM_VERSION;
    j["config_hash"] = hash;
    j["config"] = cfg.to_json();
    j["workloads"] = nlohmann::json::array();
    for (const auto& w : workloads) {
        const auto stats = report_matrix_stats(w.model);
        j["workloads"].push_back({{"name", w.name()},
                                  {"path", w.path},
                                  {"kind", to_string(w.model.kind)},
                                  {"weights_digest", w.model.weights_digest},
                                  {"average_matrix_size", stats.to_string()},
                                  {"reference_accuracy", reference_accuracy(w.model, w.eval_set)}});
    }
    j["points"] = nlohmann::json::array();
    return j;
}

inline nlohmann::json point_json(const PointSpec& p, const PointResult& r) {
    nlohmann::json j{{"workload", p.workload->name()},
                     {"mode", to_string(p.mode)},
                     {"technology", p.tech.label},
                     {"crossbar_size", p.size},
                     {"adc_bits", r.bits},
                     {"full_resolution", p.full_resolution},
                     {"calibrated", p.calibrated && !p.full_resolution},
                     {"r_p", p.r_p},
                     {"samples", p.workload->eval_set.size()},
                     {"accuracy", r.accuracy},
                     {"energy",
                      {{"total_j", r.energy.total_energy},
                       {"macs", r.energy.total_macs},
                       {"e_mac_j", r.energy.e_mac},
                       {"mac_per_j", r.energy.mac_per_joule},
                       {"e_mac_tile_sum_j", r.energy.e_mac_tile_sum}}},
                     {"utilisation", {{"rows", r.util.rows}, {"cols", r.util.cols}}},
                     {"tiles", r.tiles.size()}};
    if (!r.scales.empty()) {
        nlohmann::json s = nlohmann::json::object();
        for (const auto& [k, v] : r.scales) s[k] = v;
        j["scales"] = s;
    }
    return j;
}

/// Files produced by a command, keyed by name relative to the output directory.
struct CommandOutput {
    std::map<std::string, std::string> files;

    void write_to(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        for (const auto& [name, text] : files) write_text_file(dir / name, text);
    }
};

namespace detail {

inline std::string csv(const Table& t) {
    std::ostringstream o;
    t.write_csv(o);
    return o.str();
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline std::string bool_str(bool b) { return b ? "true" : "false"; }

}  // namespace detail

/// Ideal ADC-code statistics of the first workload under the single-run mode.
inline CommandOutput command_profile(const ExperimentConfig& cfg, unsigned threads, bool with_scales) {
    const auto workloads = load_workloads(cfg);
    const std::string hash = config_hash(cfg, workloads);
    const Workload& w = workloads.front();
    const EncodingMode mode = resolve_modes({cfg.mode}, w.model, true).front();
    if (cfg.profile_samples == 0) fail(ErrorCategory::calibration, "'profile_samples' is 0: nothing to profile");
    ExperimentRunner runner(cfg, threads);
    const ProfileResult& prof = runner.profile(w, mode, cfg.crossbar_size);

    Table t;
    t.header = {"config_hash", "workload", "mode", "crossbar_size", "layer", "conversions", "mu", "sigma",
                "max_abs_code", "target_max", "adc_bits", "scale"};
    std::map<std::string, double, std::less<>> scales;
    if (with_scales) scales = calibrate_scales(prof, cfg.adc_bits);
    for (const auto& l : prof.layers) {
        const double mu = l.codes.mean(), sigma = l.codes.stddev();
        t.add({hash, w.name(), std::string(to_string(mode)), std::to_string(cfg.crossbar_size), l.layer_id,
               std::to_string(l.codes.total()), fmt_num(mu), fmt_num(sigma), std::to_string(l.codes.max_abs()),
               fmt_num(compute_target_max(mu, sigma)), with_scales ? std::to_string(cfg.adc_bits) : "",
               with_scales ? fmt_num(scales.at(l.layer_id)) : ""});
    }
    nlohmann::json report = report_header(with_scales ? "calibrate" : "profile", cfg, workloads, hash);
    report["profile"] = {{"run_id", prof.run_id}, {"mode", prof.mode}, {"crossbar_size", cfg.crossbar_size}};

    CommandOutput out;
    nlohmann::json hist = profile_to_json(prof);
    hist["config_hash"] = hash;
    out.files["histograms.json"] = detail::dump(hist);
    if (with_scales) {
        nlohmann::json sj = scales_to_json(scales, cfg.adc_bits);
        sj["config_hash"] = hash;
        out.files["scales.json"] = detail::dump(sj);
        report["scales"] = sj["scales"];
    }
    out.files["results.csv"] = detail::csv(t);
    out.files["report.json"] = detail::dump(report);
    return out;
}

/// One simulation per workload at the single-run settings.
inline CommandOutput command_run(const ExperimentConfig& cfg, unsigned threads) {
    const auto workloads = load_workloads(cfg);
    const std::string hash = config_hash(cfg, workloads);
    const auto presets = cfg.presets();
    ExperimentRunner runner(cfg, threads);
    nlohmann::json report = report_header("run", cfg, workloads, hash);
    Table t;
    t.header = {"config_hash", "workload", "mode",        "technology", "crossbar_size", "adc_bits",
                "calibrated",  "r_p",      "accuracy",    "reference_accuracy", "e_mac_j", "mac_per_j",
                "row_util",    "col_util"};
    CommandOutput out;
    for (const auto& w : workloads) {
        const double ref = reference_accuracy(w.model, w.eval_set);
        for (EncodingMode mode : resolve_modes({cfg.mode}, w.model, true)) {
            PointSpec p{&w, mode, find_preset(cfg.technology, presets), cfg.crossbar_size, cfg.adc_bits,
                        cfg.full_resolution, cfg.calibration, cfg.r_p};
            const PointResult r = runner.run(p);
            t.add({hash, w.name(), std::string(to_string(mode)), p.tech.label, std::to_string(p.size),
                   std::to_string(r.bits), detail::bool_str(p.calibrated && !p.full_resolution), fmt_num(p.r_p),
                   fmt_num(r.accuracy), fmt_num(ref), fmt_num(r.energy.e_mac), fmt_num(r.energy.mac_per_joule),
                   fmt_num(r.util.rows), fmt_num(r.util.cols)});
            report["points"].push_back(point_json(p, r));
            std::ostringstream e;
            write_energy_csv(e, r.tiles, cfg.energy_params(r.bits), r.energy, r.util);
            const std::string name = workloads.size() == 1 ? "energy.csv" : "energy_" + w.name() + ".csv";
            out.files[name] = e.str();
            if (p.calibrated && !p.full_resolution) {
                const ProfileResult& prof = runner.profile(w, mode, p.size);
                nlohmann::json hist = profile_to_json(prof);
                hist["config_hash"] = hash;
                nlohmann::json sj = scales_to_json(r.scales, r.bits);
                sj["config_hash"] = hash;
                const std::string suffix = workloads.size() == 1 ? "" : "_" + w.name();
                out.files["histograms" + suffix + ".json"] = detail::dump(hist);
                out.files["scales" + suffix + ".json"] = detail::dump(sj);
            }
        }
    }
    out.files["results.csv"] = detail::csv(t);
    out.files["report.json"] = detail::dump(report);
    return out;
}

/// Accuracy against wire resistance for every technology and encoding, with
/// a lossless ADC so only the parasitics act.
inline CommandOutput command_sweep_parasitics(const ExperimentConfig& cfg, unsigned threads) {
    const auto workloads = load_workloads(cfg);
    const std::string hash = config_hash(cfg, workloads);
    const auto presets = cfg.presets();
    std::vector<std::string> techs = cfg.technologies;
    if (techs.empty())
        for (const auto& p : builtin_presets()) techs.push_back(p.label);
    ExperimentRunner runner(cfg, threads);
    nlohmann::json report = report_header("sweep-parasitics", cfg, workloads, hash);
    Table t;
    t.header = {"config_hash", "workload", "mode", "technology", "crossbar_size", "r_p", "adc_bits", "accuracy"};
    for (const auto& w : workloads)
        for (EncodingMode mode : resolve_modes(cfg.modes, w.model, false))
            for (const auto& tech : techs)
                for (double rp : cfg.r_p_sweep) {
                    PointSpec p{&w, mode, find_preset(tech, presets), cfg.crossbar_size, cfg.adc_bits, true,
                                false, rp};
                    const PointResult r = runner.run(p);
                    t.add({hash, w.name(), std::string(to_string(mode)), tech, std::to_string(p.size), fmt_num(rp),
                           std::to_string(r.bits), fmt_num(r.accuracy)});
                    report["points"].push_back(point_json(p, r));
                }
    CommandOutput out;
    out.files["results.csv"] = detail::csv(t);
    out.files["report.json"] = detail::dump(report);
    const std::size_t wl = t.column("workload");
    for (const auto& w : workloads) {
        LineChart c = chart_from_table(t, "r_p", "accuracy", {"technology", "mode"},
                                       [&](const auto& row) { return row[wl] == w.name(); });
        c.title = "Accuracy vs. wire resistance: " + w.name() + " (N_X = " + std::to_string(cfg.crossbar_size) + ")";
        c.x_label = "R_p per segment (ohm)";
        c.y_label = "top-1 accuracy";
        out.files["plot_parasitics_" + w.name() + ".svg"] = render_svg(c);
    }
    return out;
}

/// Accuracy against ADC resolution, calibrated and uncalibrated, without
/// wire resistance.
inline CommandOutput command_sweep_adc(const ExperimentConfig& cfg, unsigned threads) {
    const auto workloads = load_workloads(cfg);
    const std::string hash = config_hash(cfg, workloads);
    const auto presets = cfg.presets();
    ExperimentRunner runner(cfg, threads);
    nlohmann::json report = report_header("sweep-adc", cfg, workloads, hash);
    Table t;
    t.header = {"config_hash", "workload", "mode", "technology", "crossbar_size", "adc_bits", "calibrated",
                "accuracy", "baseline_accuracy"};
    const auto& tech = find_preset(cfg.technology, presets);
    for (const auto& w : workloads)
        for (EncodingMode mode : resolve_modes(cfg.modes, w.model, false)) {
            const PointSpec base{&w, mode, tech, cfg.crossbar_size, cfg.adc_bits, true, false, 0.0};
            const PointResult b = runner.run(base);
            report["points"].push_back(point_json(base, b));
            for (int bits : cfg.adc_bits_sweep)
                for (bool cal : {false, true}) {
                    PointSpec p{&w, mode, tech, cfg.crossbar_size, bits, false, cal, 0.0};
                    const PointResult r = runner.run(p);
                    t.add({hash, w.name(), std::string(to_string(mode)), tech.label, std::to_string(p.size),
                           std::to_string(bits), detail::bool_str(cal), fmt_num(r.accuracy), fmt_num(b.accuracy)});
                    report["points"].push_back(point_json(p, r));
                }
        }
    CommandOutput out;
    out.files["results.csv"] = detail::csv(t);
    out.files["report.json"] = detail::dump(report);
    const std::size_t wl = t.column("workload");
    for (const auto& w : workloads) {
        LineChart c = chart_from_table(t, "adc_bits", "accuracy", {"mode", "calibrated"},
                                       [&](const auto& row) { return row[wl] == w.name(); });
        c.title = "Accuracy vs. ADC resolution: " + w.name();
        c.x_label = "ADC bits";
        c.y_label = "top-1 accuracy";
        for (auto& s : c.series) {
            const auto pos = s.name.rfind(' ');
            s.name = s.name.substr(0, pos) + (s.name.substr(pos + 1) == "true" ? " calibrated" : " uncalibrated");
        }
        out.files["plot_adc_" + w.name() + ".svg"] = render_svg(c);
    }
    return out;
}

/// Energy efficiency and utilisation against crossbar size.
inline CommandOutput command_sweep_energy(const ExperimentConfig& cfg, unsigned threads) {
    const auto workloads = load_workloads(cfg);
    const std::string hash = config_hash(cfg, workloads);
    const auto presets = cfg.presets();
    ExperimentRunner runner(cfg, threads);
    nlohmann::json report = report_header("sweep-energy", cfg, workloads, hash);
    Table t;
    t.header = {"config_hash", "workload",  "mode",    "technology", "crossbar_size",    "adc_bits",
                "calibrated",  "tiles",     "mvm_ops", "macs",       "total_energy_j",   "e_mac_j",
                "mac_per_j",   "e_mac_tile_sum_j", "row_util", "col_util", "accuracy"};
    const auto& tech = find_preset(cfg.technology, presets);
    for (const auto& w : workloads)
        for (EncodingMode mode : resolve_modes(cfg.modes, w.model, false))
            for (std::size_t size : cfg.crossbar_sizes) {
                PointSpec p{&w, mode, tech, size, cfg.adc_bits, cfg.full_resolution, cfg.calibration, cfg.r_p};
                const PointResult r = runner.run(p);
                std::uint64_t ops = 0;
                for (const auto& s : r.tiles) ops += s.o_t;
                t.add({hash, w.name(), std::string(to_string(mode)), tech.label, std::to_string(size),
                       std::to_string(r.bits), detail::bool_str(p.calibrated && !p.full_resolution),
                       std::to_string(r.tiles.size()), std::to_string(ops), fmt_num(r.energy.total_macs),
                       fmt_num(r.energy.total_energy), fmt_num(r.energy.e_mac), fmt_num(r.energy.mac_per_joule),
                       fmt_num(r.energy.e_mac_tile_sum), fmt_num(r.util.rows), fmt_num(r.util.cols),
                       fmt_num(r.accuracy)});
                report["points"].push_back(point_json(p, r));
            }
    CommandOutput out;
    out.files["results.csv"] = detail::csv(t);
    out.files["report.json"] = detail::dump(report);
    auto all = [](const auto&) { return true; };
    LineChart eff = chart_from_table(t, "crossbar_size", "mac_per_j", {"workload", "mode"}, all);
    eff.title = "Energy efficiency vs. crossbar size (" + std::to_string(cfg.adc_bits) + "-bit ADC)";
    eff.x_label = "crossbar size N_X";
    eff.y_label = "MAC/J";
    eff.log2_x = true;
    out.files["plot_energy.svg"] = render_svg(eff);
    LineChart util = chart_from_table(t, "crossbar_size", "row_util", {"workload", "mode"}, all);
    util.title = "Row utilisation vs. crossbar size";
    util.x_label = "crossbar size N_X";
    util.y_label = "row utilisation";
    util.log2_x = true;
    out.files["plot_utilisation.svg"] = render_svg(util);
    return out;
}

}  // namespace cimsim
