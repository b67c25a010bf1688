#include <filesystem>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace cimsim;

namespace {

ExperimentConfig small_config(const std::string& model) {
    ExperimentConfig c;
    c.base_dir = std::string(CIMSIM_SOURCE_DIR);
    c.workloads = {"data/models/" + model + ".json"};
    c.profile_samples = 20;
    c.eval_samples = 15;
    c.crossbar_sizes = {64, 128};
    c.adc_bits_sweep = {6, 3};
    c.r_p_sweep = {0.0, 2.5};
    c.technologies = {"ReRAM-1", "IFG"};
    return c;
}

std::size_t count(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
    const ExperimentConfig c;
    EXPECT_EQ(c.adc_bits, 4);
    EXPECT_EQ(c.crossbar_size, 128u);
    EXPECT_EQ(c.r_p_sweep.size(), 11u);
    EXPECT_DOUBLE_EQ(c.r_p_sweep.back(), 2.5);
    EXPECT_EQ(c.adc_bits_sweep, (std::vector<int>{8, 7, 6, 5, 4, 3}));
    const auto back = ExperimentConfig::from_json(c.to_json(), ".");
    EXPECT_EQ(back.to_json(), c.to_json());
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    auto expect_config_error = [](const char* text) {
        try {
            (void)ExperimentConfig::from_json(nlohmann::json::parse(text), ".");
            ADD_FAILURE() << text;
        } catch (const Error& e) {
            EXPECT_EQ(e.category(), ErrorCategory::config) << text;
        }
    };
    expect_config_error(R"({"adc_bit": 4})");
    expect_config_error(R"({"schema": "cimsim.config/9"})");
    expect_config_error(R"({"adc_bits": "four"})");
    expect_config_error(R"({"adc_bits": 1})");
    expect_config_error(R"({"crossbar_size": 0})");
    expect_config_error(R"({"r_p_sweep": [0.0, -1.0]})");
    expect_config_error(R"({"modes": ["B-III"]})");
    expect_config_error(R"({"eval_samples": 0})");
    expect_config_error(R"({"energy": {"adc_energy": {"x": 1e-12}}})");
}

TEST(Config, LoadResolvesPathsAgainstConfigDirectory) {
    const auto dir = std::filesystem::temp_directory_path() / "cimsim_cfg_test";
    std::filesystem::create_directories(dir);
    write_text_file(dir / "c.json", R"({"workloads": ["m/x.json"], "seed": 9})");
    const auto c = ExperimentConfig::load(dir / "c.json");
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.resolve("m/x.json"), dir / "m/x.json");
    EXPECT_EQ(c.resolve("/abs/y.json"), std::filesystem::path("/abs/y.json"));
    write_text_file(dir / "bad.json", "{not json");
    EXPECT_THROW((void)ExperimentConfig::load(dir / "bad.json"), Error);
    std::filesystem::remove_all(dir);
}

TEST(Config, BundledConfigsLoad) {
    for (const char* name : {"desk.json", "conv_512.json"}) {
        const auto c = ExperimentConfig::load(std::filesystem::path(CIMSIM_SOURCE_DIR) / "configs" / name);
        for (const auto& w : c.workloads) EXPECT_TRUE(std::filesystem::exists(c.resolve(w))) << w;
    }
}

TEST(Modes, AutoFollowsModelKind) {
    const auto tnn = load_model(testsupport::bundled_model_path("mlp_tnn"));
    const auto bnn = load_model(testsupport::bundled_model_path("mlp_bnn"));
    EXPECT_EQ(resolve_modes({"auto"}, tnn, true), (std::vector<EncodingMode>{EncodingMode::t1}));
    EXPECT_EQ(resolve_modes({"auto"}, tnn, false), (std::vector<EncodingMode>{EncodingMode::t1, EncodingMode::t2}));
    EXPECT_EQ(resolve_modes({"auto"}, bnn, false), (std::vector<EncodingMode>{EncodingMode::b1, EncodingMode::b2}));
    EXPECT_EQ(resolve_modes({"T-II"}, bnn, true), (std::vector<EncodingMode>{EncodingMode::t2}));
    try {
        (void)resolve_modes({"B-I"}, tnn, true);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::encoding);
    }
}

TEST(ConfigHash, TracksConfigAndWeights) {
    const auto c = small_config("mlp_tnn");
    const auto w = load_workloads(c);
    const auto h = config_hash(c, w);
    EXPECT_EQ(h.size(), 16u);
    EXPECT_EQ(h, config_hash(c, load_workloads(c)));
    auto d = c;
    d.seed = 43;
    EXPECT_NE(config_hash(d, w), h);
    auto other = w;
    other[0].model.weights_digest = "0";
    EXPECT_NE(config_hash(c, other), h);
}

TEST(Workloads, SampleStreamsFollowTheSeed) {
    auto c = small_config("mlp_tnn");
    const auto a = load_workloads(c);
    EXPECT_EQ(a[0].eval_set.size(), 15u);
    EXPECT_EQ(a[0].profile_set.size(), 20u);
    EXPECT_NE(a[0].eval_set[0].image.data, a[0].profile_set[0].image.data);
    c.seed = 7;
    EXPECT_NE(load_workloads(c)[0].eval_set[0].image.data, a[0].eval_set[0].image.data);
}

TEST(Commands, RunWritesTaggedRowsAndReport) {
    const auto c = small_config("conv_tnn");
    const auto out = command_run(c, 1);
    for (const char* f : {"results.csv", "report.json", "energy.csv", "histograms.json", "scales.json"})
        EXPECT_TRUE(out.files.contains(f)) << f;
    const auto rows = lines(out.files.at("results.csv"));
    ASSERT_GE(rows.size(), 2u);
    const auto hash = config_hash(c, load_workloads(c));
    EXPECT_EQ(rows[0].rfind("config_hash,", 0), 0u);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i].rfind(hash + ",", 0), 0u);
    const auto report = nlohmann::json::parse(out.files.at("report.json"));
    EXPECT_EQ(report["schema"], "cimsim.report/1");
    EXPECT_EQ(report["config_hash"], hash);
    EXPECT_EQ(report["workloads"][0]["average_matrix_size"],
              report_matrix_stats(load_model(testsupport::bundled_model_path("conv_tnn"))).to_string());
}

TEST(Commands, OutputsIndependentOfThreadCount) {
    const auto c = small_config("mlp_bnn");
    const auto a = command_sweep_parasitics(c, 1);
    const auto b = command_sweep_parasitics(c, 4);
    EXPECT_EQ(a.files, b.files);
    EXPECT_EQ(command_profile(c, 1, true).files, command_profile(c, 3, true).files);
}

TEST(Commands, PlotsDrawnFromTheCsv) {
    const auto c = small_config("mlp_tnn");
    const auto out = command_sweep_parasitics(c, 1);
    const auto rows = lines(out.files.at("results.csv"));
    // 2 modes x 2 technologies x 2 resistances.
    EXPECT_EQ(rows.size(), 1u + 8u);
    const auto& svg = out.files.at("plot_parasitics_mlp_tnn.svg");
    EXPECT_EQ(count(svg, "<polyline"), 4u);
    EXPECT_EQ(count(svg, "<circle"), 8u);
    // The r_p = 0 points equal the ideal reference (lossless ADC, no wires).
    const double ref = reference_accuracy(load_workloads(c)[0].model, load_workloads(c)[0].eval_set);
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].find(",0,") != std::string::npos) {
            EXPECT_EQ(rows[i].substr(rows[i].rfind(',') + 1), fmt_num(ref)) << rows[i];
        }
}

TEST(Commands, AdcSweepCoversGrid) {
    const auto c = small_config("mlp_tnn");
    const auto out = command_sweep_adc(c, 1);
    const auto rows = lines(out.files.at("results.csv"));
    // Per mode: 2 resolutions x {uncalibrated, calibrated}; the lossless
    // baseline is a column.
    EXPECT_EQ(rows.size(), 1u + 2u * 4u);
    EXPECT_NE(rows[0].find("baseline_accuracy"), std::string::npos);
    EXPECT_TRUE(out.files.contains("plot_adc_mlp_tnn.svg"));
}

TEST(Commands, EnergySweepReportsEfficiencyAndUtilisation) {
    const auto c = small_config("conv_tnn");
    const auto out = command_sweep_energy(c, 1);
    const auto rows = lines(out.files.at("results.csv"));
    EXPECT_EQ(rows.size(), 1u + 2u * 2u);
    EXPECT_NE(rows[0].find("mac_per_j"), std::string::npos);
    EXPECT_NE(rows[0].find("row_util"), std::string::npos);
    EXPECT_TRUE(out.files.contains("plot_energy.svg"));
    EXPECT_TRUE(out.files.contains("plot_utilisation.svg"));
}

TEST(Commands, CalibrateIsIdempotent) {
    const auto c = small_config("conv_bnn");
    const auto a = command_profile(c, 1, true);
    const auto b = command_profile(c, 1, true);
    EXPECT_EQ(a.files, b.files);
    const auto scales = scales_from_json(nlohmann::json::parse(a.files.at("scales.json")));
    EXPECT_FALSE(scales.empty());
}

TEST(Commands, WriteToCreatesFiles) {
    CommandOutput out;
    out.files["a.csv"] = "x\n1\n";
    const auto dir = std::filesystem::temp_directory_path() / "cimsim_out_test";
    std::filesystem::remove_all(dir);
    out.write_to(dir);
    EXPECT_EQ(read_text_file(dir / "a.csv"), "x\n1\n");
    std::filesystem::remove_all(dir);
}

TEST(Svg, ChartFromTableGroupsSeries) {
    Table t;
    t.header = {"k", "x", "y"};
    t.add({"a", "1", "0.5"});
    t.add({"a", "2", "0.7"});
    t.add({"b", "1", "0.1"});
    const auto chart = chart_from_table(t, "x", "y", {"k"}, [](const auto&) { return true; });
    ASSERT_EQ(chart.series.size(), 2u);
    EXPECT_EQ(chart.series[0].points.size(), 2u);
    EXPECT_EQ(chart.series[1].name, "b");
    const auto svg = render_svg(chart);
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_EQ(count(svg, "<polyline"), 2u);
}
