#include <filesystem>
#include <functional>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace cimsim;

namespace {

nlohmann::json dense_manifest(std::size_t in, std::size_t out) {
    return {{"schema", "cimsim.model/1"},
            {"name", "tiny"},
            {"kind", "ternary"},
            {"input", {{"height", 1}, {"width", 1}, {"channels", in}}},
            {"input_quantiser", {{"kind", "ternary"}, {"threshold", 0.5}}},
            {"layers", {{{"name", "fc"}, {"type", "dense"}, {"in_features", in}, {"out_features", out}}}}};
}

Layer conv_layer(std::size_t h, std::size_t w, std::size_t c, std::size_t k, std::size_t stride, std::size_t pad,
                 Matrix<std::int8_t> weights) {
    Layer l;
    l.name = "conv";
    l.kind = LayerKind::conv2d;
    l.kernel_h = l.kernel_w = k;
    l.stride = stride;
    l.padding = pad;
    l.out_channels = weights.cols();
    l.in_shape = {h, w, c};
    l.out_shape = {(h + 2 * pad - k) / stride + 1, (w + 2 * pad - k) / stride + 1, weights.cols()};
    l.weights = std::move(weights);
    return l;
}

std::string error_text(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(ModelFormat, MinimalDenseManifest) {
    const std::vector<std::int8_t> blob{1, 0, -1, 1, 1, 0};
    const auto m = parse_model(dense_manifest(3, 2), blob);
    ASSERT_EQ(m.layers.size(), 1u);
    EXPECT_TRUE(m.layers[0].is_matrix());
    EXPECT_EQ(m.layers[0].weights.rows(), 3u);
    EXPECT_EQ(m.layers[0].weights.cols(), 2u);
    EXPECT_EQ(m.layers[0].weights(1, 0), -1);
    EXPECT_EQ(m.num_classes(), 2u);
}

TEST(ModelFormat, ShortBlobNamesByteCounts) {
    const std::vector<std::int8_t> blob{1, 0, -1};
    const auto msg = error_text([&] { (void)parse_model(dense_manifest(3, 2), blob); });
    EXPECT_NE(msg.find("3 bytes"), std::string::npos) << msg;
    EXPECT_NE(msg.find("expected 6"), std::string::npos) << msg;
}

TEST(ModelFormat, RejectsInvalidContent) {
    const std::vector<std::int8_t> bad_value{1, 0, 2, 1, 1, 0};
    EXPECT_NE(error_text([&] { (void)parse_model(dense_manifest(3, 2), bad_value); }).find("outside"),
              std::string::npos);

    auto binary = dense_manifest(3, 2);
    binary["kind"] = "binary";
    binary["input_quantiser"] = {{"kind", "binary"}};
    const std::vector<std::int8_t> with_zero{1, 0, -1, 1, 1, -1};
    EXPECT_NE(error_text([&] { (void)parse_model(binary, with_zero); }).find("zero weight"), std::string::npos);

    const std::vector<std::int8_t> ok{1, 0, -1, 1, 1, 0};
    auto wrong_schema = dense_manifest(3, 2);
    wrong_schema["schema"] = "other";
    EXPECT_THROW((void)parse_model(wrong_schema, ok), Error);
    auto wrong_features = dense_manifest(3, 2);
    wrong_features["layers"][0]["in_features"] = 4;
    EXPECT_THROW((void)parse_model(wrong_features, ok), Error);
    auto unknown_type = dense_manifest(3, 2);
    unknown_type["layers"][0]["type"] = "lstm";
    EXPECT_THROW((void)parse_model(unknown_type, ok), Error);
    auto mixed = dense_manifest(3, 2);
    mixed["input_quantiser"] = {{"kind", "binary"}};
    EXPECT_THROW((void)parse_model(mixed, ok), Error);
}

TEST(ModelFormat, ActivationMustPrecedeMatrixLayer) {
    auto j = dense_manifest(3, 2);
    j["layers"].push_back({{"name", "fc2"}, {"type", "dense"}, {"out_features", 2}});
    const std::vector<std::int8_t> blob(10, 1);
    EXPECT_NE(error_text([&] { (void)parse_model(j, blob); }).find("not quantised"), std::string::npos);
}

TEST(ModelFormat, SaveLoadRoundTrip) {
    testsupport::Rng rng(51);
    const auto dir = std::filesystem::temp_directory_path() / "cimsim_model_roundtrip";
    std::filesystem::remove_all(dir);
    for (auto kind : {QuantKind::binary, QuantKind::ternary}) {
        const auto m = testsupport::random_model(rng, kind);
        const auto back = load_model(save_model(m, dir));
        ASSERT_EQ(back.layers.size(), m.layers.size());
        for (std::size_t i = 0; i < m.layers.size(); ++i) {
            EXPECT_EQ(back.layers[i].weights, m.layers[i].weights);
            EXPECT_EQ(back.layers[i].out_shape, m.layers[i].out_shape);
            EXPECT_EQ(back.layers[i].activation.offset, m.layers[i].activation.offset);
        }
        EXPECT_EQ(back.weights_digest, m.weights_digest);
    }
    std::filesystem::remove_all(dir);
}

TEST(ModelFormat, MissingFilesAreIoErrors) {
    try {
        (void)load_model("/nonexistent/model.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::io);
    }
}

TEST(ConvLowering, OneByOneIsIdentity) {
    const auto l = conv_layer(3, 4, 1, 1, 1, 0, Matrix<std::int8_t>(1, 1, 1));
    const auto c = lower_conv2d(l);
    EXPECT_EQ(c.num_mvms(), 12u);
    EXPECT_EQ(c.patch_length(), 1u);
    QuantTensor in({3, 4, 1});
    testsupport::Rng rng(52);
    for (auto& v : in.data) v = static_cast<std::int8_t>(static_cast<int>(rng.below(3)) - 1);
    std::vector<std::int8_t> p(1);
    for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 0; x < 4; ++x) {
            c.patch(in, y, x, p);
            EXPECT_EQ(p[0], in.at(y, x, 0));
        }
}

TEST(ConvLowering, ThreeByThreeOnFourByFour) {
    const auto l = conv_layer(4, 4, 1, 3, 1, 0, Matrix<std::int8_t>(9, 1, 1));
    const auto c = lower_conv2d(l);
    EXPECT_EQ(c.num_mvms(), 4u);
    EXPECT_EQ(c.patch_length(), 9u);
}

TEST(ConvLowering, MatchesDirectConvolution) {
    testsupport::Rng rng(53);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t h = 3 + rng.below(6), w = 3 + rng.below(6), ch = 1 + rng.below(3);
        const std::size_t k = 1 + rng.below(3), pad = rng.below(k);
        std::size_t stride = 1 + rng.below(2);
        if ((h + 2 * pad - k) % stride || (w + 2 * pad - k) % stride) stride = 1;
        const std::size_t oc = 1 + rng.below(4);
        const auto weights = testsupport::random_weights(rng, k * k * ch, oc);
        const auto l = conv_layer(h, w, ch, k, stride, pad, weights);
        const auto c = lower_conv2d(l);
        QuantTensor in({h, w, ch});
        for (auto& v : in.data) v = static_cast<std::int8_t>(static_cast<int>(rng.below(3)) - 1);

        std::size_t oh = 0, ow = 0;
        const auto want = testsupport::direct_conv(in, weights, k, k, stride, pad, oh, ow);
        ASSERT_EQ(oh, c.out_h);
        ASSERT_EQ(ow, c.out_w);
        std::vector<std::int8_t> p(c.patch_length());
        for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t x = 0; x < ow; ++x) {
                c.patch(in, y, x, p);
                for (std::size_t o = 0; o < oc; ++o)
                    ASSERT_EQ(testsupport::dot(p, weights, o), want[(y * ow + x) * oc + o]);
            }
    }
}

TEST(PlanTiles, SingleTileWhenItFits) {
    const auto p = plan_tiles(100, 100, {128, 256}, EncodingMode::t1);
    ASSERT_EQ(p.tiles.size(), 1u);
    EXPECT_EQ(p.tiles[0], (Tile{0, 100, 0, 100}));
    EXPECT_EQ(p.tiles[0].physical_cols(), 200u);
}

TEST(PlanTiles, RowSplitByCeilingDivision) {
    const auto p = plan_tiles(300, 100, {128, 256}, EncodingMode::t1);
    ASSERT_EQ(p.tiles.size(), 3u);
    EXPECT_EQ(p.tiles[0].rows(), 128u);
    EXPECT_EQ(p.tiles[1].rows(), 128u);
    EXPECT_EQ(p.tiles[2].rows(), 44u);
    EXPECT_EQ(p.row_blocks(), 3u);
}

TEST(PlanTiles, ZeroDimensionIsMappingError) {
    try {
        (void)plan_tiles(0, 5, {128, 128}, EncodingMode::t1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::mapping);
    }
    EXPECT_THROW((void)plan_tiles(5, 5, {128, 1}, EncodingMode::t1), Error);
}

TEST(PlanTiles, PartitionCoversEveryElementOnce) {
    testsupport::Rng rng(54);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t rows = 1 + rng.below(700), cols = 1 + rng.below(300);
        const std::size_t xr = 1 + rng.below(256), xc = 2 * (1 + rng.below(128));
        const auto p = plan_tiles(rows, cols, {xr, xc}, all_modes[rng.below(4)]);
        std::vector<int> hits(rows * cols, 0);
        for (const auto& t : p.tiles) {
            ASSERT_LE(t.rows(), xr);
            ASSERT_LE(t.physical_cols(), xc);
            for (std::size_t r = t.row_begin; r < t.row_end; ++r)
                for (std::size_t c = t.col_begin; c < t.col_end; ++c) ++hits[r * cols + c];
        }
        for (int h : hits) ASSERT_EQ(h, 1);
    }
}

TEST(PlanTiles, WeightSumsOnlyForBinaryModes) {
    testsupport::Rng rng(55);
    const auto w = testsupport::random_weights(rng, 10, 3, false);
    const auto b = plan_tiles(w, {4, 4}, EncodingMode::b1);
    ASSERT_EQ(b.weight_sums.size(), b.tiles.size());
    for (std::size_t i = 0; i < b.tiles.size(); ++i) {
        const auto& t = b.tiles[i];
        for (std::size_t c = t.col_begin; c < t.col_end; ++c) {
            double s = 0;
            for (std::size_t r = t.row_begin; r < t.row_end; ++r) s += w(r, c);
            EXPECT_EQ(b.weight_sums[i][c - t.col_begin], s);
        }
    }
    EXPECT_TRUE(plan_tiles(w, {4, 4}, EncodingMode::t2).weight_sums.empty());
}

TEST(PlanTiles, TiledProductEqualsUntiled) {
    testsupport::Rng rng(56);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t rows = 1 + rng.below(80), cols = 1 + rng.below(20);
        const auto w = testsupport::random_weights(rng, rows, cols);
        const auto x = testsupport::random_ternary(rng, rows);
        const auto p = plan_tiles(w, {1 + rng.below(32), 2 * (1 + rng.below(8))}, EncodingMode::t1);
        std::vector<long long> y(cols, 0);
        for (const auto& t : p.tiles) {
            const auto tw = tile_weights(w, t);
            for (std::size_t c = 0; c < t.cols(); ++c)
                for (std::size_t r = 0; r < t.rows(); ++r) y[t.col_begin + c] += x[t.row_begin + r] * tw(r, c);
        }
        for (std::size_t c = 0; c < cols; ++c) ASSERT_EQ(y[c], testsupport::dot(x, w, c));
    }
}

TEST(MatrixStats, MeansPerAxis) {
    const std::vector<std::int8_t> blob(64 * 10, 1);
    const auto one = parse_model(dense_manifest(64, 10), blob);
    EXPECT_EQ(report_matrix_stats(one).to_string(), "64 × 10");

    nlohmann::json j = dense_manifest(10, 10);
    j["layers"].push_back({{"name", "act"}, {"type", "activation"}, {"quantiser", {{"kind", "ternary"}, {"threshold", 0.5}}}});
    j["layers"].push_back({{"name", "fc_mid"}, {"type", "dense"}, {"out_features", 30}});
    j["layers"].push_back({{"name", "act2"}, {"type", "activation"}, {"quantiser", {{"kind", "ternary"}, {"threshold", 0.5}}}});
    j["layers"].push_back({{"name", "fc2"}, {"type", "dense"}, {"out_features", 20}});
    // Lowered matrices 10x10, 10x30 and 30x20.
    const std::vector<std::int8_t> blob3(100 + 300 + 600, 1);
    const auto three = parse_model(j, blob3);
    EXPECT_DOUBLE_EQ(report_matrix_stats(three).mean_rows, (10.0 + 10.0 + 30.0) / 3.0);
    EXPECT_DOUBLE_EQ(report_matrix_stats(three).mean_cols, (10.0 + 30.0 + 20.0) / 3.0);
}

TEST(MatrixStats, TwoLayerExample) {
    // A 1x1 conv over a 3x1 map of 10 channels lowers to 10x10; the dense
    // layer after it sees 30 features and lowers to 30x20.
    nlohmann::json j{{"schema", "cimsim.model/1"},
                     {"name", "two"},
                     {"kind", "ternary"},
                     {"input", {{"height", 3}, {"width", 1}, {"channels", 10}}},
                     {"input_quantiser", {{"kind", "ternary"}, {"threshold", 0.5}}},
                     {"layers",
                      {{{"name", "c"}, {"type", "conv2d"}, {"kernel", {1, 1}}, {"out_channels", 10}},
                       {{"name", "a"}, {"type", "activation"}, {"quantiser", {{"kind", "ternary"}, {"threshold", 0.5}}}},
                       {{"name", "f"}, {"type", "flatten"}},
                       {{"name", "d"}, {"type", "dense"}, {"out_features", 20}}}}};
    const std::vector<std::int8_t> blob(100 + 600, -1);
    const auto m = parse_model(j, blob);
    EXPECT_EQ(report_matrix_stats(m).to_string(), "20 × 15");
}

TEST(MatrixStats, BundledModels) {
    const auto conv = load_model(testsupport::bundled_model_path("conv_tnn"));
    const auto mlp = load_model(testsupport::bundled_model_path("mlp_bnn"));
    EXPECT_GT(report_matrix_stats(conv).mean_rows, 0.0);
    EXPECT_EQ(report_matrix_stats(conv).layers, 4u);
    EXPECT_EQ(report_matrix_stats(mlp).layers, 3u);
}
