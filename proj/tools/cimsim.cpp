// cimsim: command line front end for the crossbar simulator.
//
//   cimsim run              --config cfg.json --out results/
//   cimsim profile          --config cfg.json --out results/
//   cimsim calibrate        --config cfg.json --out results/
//   cimsim sweep-parasitics --config cfg.json --out results/ --threads 4
//   cimsim sweep-adc        --config cfg.json --out results/
//   cimsim sweep-energy     --config cfg.json --out results/
//   cimsim gen-model        --all --out data/models
//
// Exit codes: 0 success, 1 unexpected failure, 2 usage, 3..10 by error
// category (config, validation, mapping, encoding, calibration, model, io,
// internal).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cimsim.hpp"

namespace {

struct CommonOptions {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "experiment configuration (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "output directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "override the configuration seed");
    cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)")->capture_default_str();
}

cimsim::ExperimentConfig load_config(const CommonOptions& o) {
    cimsim::ExperimentConfig cfg;
    if (!o.config.empty()) cfg = cimsim::ExperimentConfig::load(o.config);
    if (o.seed) cfg.seed = *o.seed;
    return cfg;
}

void finish(const cimsim::CommandOutput& out, const std::string& dir) {
    out.write_to(dir);
    for (const auto& [name, text] : out.files) std::cout << (std::filesystem::path(dir) / name).string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RRAM compute-in-memory crossbar simulator"};
    app.set_version_flag("--version", std::string(CIMSIM_VERSION));
    app.require_subcommand(1);

    CommonOptions common;
    using Command = std::function<cimsim::CommandOutput(const cimsim::ExperimentConfig&, unsigned)>;
    std::vector<std::pair<CLI::App*, Command>> commands;
    auto add = [&](const char* name, const char* help, Command fn) {
        CLI::App* cmd = app.add_subcommand(name, help);
        add_common(cmd, common);
        commands.emplace_back(cmd, std::move(fn));
    };
    add("run", "simulate the workloads at one operating point", cimsim::command_run);
    add("profile", "record ideal per-layer ADC code histograms",
        [](const auto& c, unsigned t) { return cimsim::command_profile(c, t, false); });
    add("calibrate", "profile and derive per-layer ADC scales",
        [](const auto& c, unsigned t) { return cimsim::command_profile(c, t, true); });
    add("sweep-parasitics", "accuracy vs. wire resistance per technology", cimsim::command_sweep_parasitics);
    add("sweep-adc", "accuracy vs. ADC resolution, with and without calibration", cimsim::command_sweep_adc);
    add("sweep-energy", "energy efficiency vs. crossbar size", cimsim::command_sweep_energy);

    CLI::App* gen = app.add_subcommand("gen-model", "generate a random desk-scale model");
    bool gen_all = false;
    std::string gen_out = "data/models", gen_arch = "conv", gen_kind = "ternary", gen_name;
    std::uint64_t gen_seed = 1;
    std::size_t gen_train = 400;
    gen->add_flag("--all", gen_all, "write the four bundled models");
    gen->add_option("--out", gen_out, "output directory")->capture_default_str();
    gen->add_option("--arch", gen_arch, "mlp or conv")->capture_default_str();
    gen->add_option("--kind", gen_kind, "binary or ternary")->capture_default_str();
    gen->add_option("--name", gen_name, "model name (default <arch>_<bnn|tnn>)");
    gen->add_option("--seed", gen_seed, "weight and training-sample seed")->capture_default_str();
    gen->add_option("--train-samples", gen_train, "images used to fit thresholds")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            std::vector<cimsim::ModelGenSpec> specs;
            if (gen_all) {
                specs = cimsim::bundled_model_specs();
            } else {
                cimsim::ModelGenSpec s;
                s.arch = cimsim::parse_architecture(gen_arch);
                s.kind = cimsim::parse_quant_kind(gen_kind);
                s.seed = gen_seed;
                s.name = gen_name.empty()
                             ? std::string(cimsim::to_string(s.arch)) + (s.kind == cimsim::QuantKind::binary ? "_bnn" : "_tnn")
                             : gen_name;
                specs.push_back(s);
            }
            for (auto& s : specs) {
                s.train_samples = gen_train;
                const auto model = cimsim::generate_model(s);
                const auto path = cimsim::save_model(model, gen_out);
                std::cout << path.string() << "  " << cimsim::report_matrix_stats(model).to_string() << '\n';
            }
            return 0;
        }
        for (const auto& [cmd, fn] : commands) {
            if (!cmd->parsed()) continue;
            const auto cfg = load_config(common);
            finish(fn(cfg, common.threads), common.out);
        }
        return 0;
    } catch (const cimsim::Error& e) {
        std::cerr << "cimsim: " << cimsim::to_string(e.category()) << " error: " << e.what() << '\n';
        return cimsim::exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "cimsim: unexpected error: " << e.what() << '\n';
        return 1;
    }
}
