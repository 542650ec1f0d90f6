#include <gtest/gtest.h>

#include <fstream>

#include "nucleoforge/config.hpp"
#include "test_support.hpp"

namespace nucleoforge {
namespace {

std::string error_of(std::string_view text) {
    try {
        parse_pipeline_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

TEST(PipelineConfigTest, EmptyObjectGivesDefaults) {
    const PipelineConfig cfg = parse_pipeline_config("{}");
    EXPECT_EQ(cfg.seed, 0u);
    EXPECT_EQ(cfg.output_dir, "out");
    EXPECT_EQ(cfg.synth.width, 256);
    EXPECT_EQ(cfg.synth.nuclei_count.min, 15);
    EXPECT_EQ(cfg.synth.nuclei_count.max, 40);
    EXPECT_EQ(cfg.loss.lambda, 0.1);
    EXPECT_EQ(cfg.loss.beta, 1.0);
    EXPECT_EQ(cfg.metrics.ssim_window, 11);
    EXPECT_EQ(cfg.watershed.h, 1.0);
}

TEST(PipelineConfigTest, ReadsEverySection) {
    const PipelineConfig cfg = parse_pipeline_config(R"({
        "seed": 42, "output_dir": "runs/a",
        "synth": {"width": 64, "height": 48, "nuclei_count": [2, 5], "radius": [3.5, 7],
                  "allow_overlap": false, "min_gap": 3},
        "loss": {"lambda": 0.25, "beta": 0.5},
        "metrics": {"ssim_window": 7, "gmsd_c": 0.001},
        "watershed": {"h": 2.5}
    })");
    EXPECT_EQ(cfg.seed, 42u);
    EXPECT_EQ(cfg.synth.seed, 42u);
    EXPECT_EQ(cfg.output_dir, "runs/a");
    EXPECT_EQ(cfg.synth.width, 64);
    EXPECT_EQ(cfg.synth.height, 48);
    EXPECT_EQ(cfg.synth.nuclei_count.max, 5);
    EXPECT_EQ(cfg.synth.radius.min, 3.5);
    EXPECT_FALSE(cfg.synth.allow_overlap);
    EXPECT_EQ(cfg.synth.min_gap, 3);
    EXPECT_EQ(cfg.loss.lambda, 0.25);
    EXPECT_EQ(cfg.loss.beta, 0.5);
    EXPECT_EQ(cfg.metrics.ssim_window, 7);
    EXPECT_EQ(cfg.metrics.gmsd_c, 0.001);
    EXPECT_EQ(cfg.watershed.h, 2.5);
}

TEST(PipelineConfigTest, RejectsUnknownKeysAtAnyDepth) {
    EXPECT_NE(error_of(R"({"sed": 1})").find("unknown key 'sed'"), std::string::npos);
    EXPECT_NE(error_of(R"({"synth": {"foo": 1}})").find("unknown key 'synth.foo'"), std::string::npos);
    EXPECT_NE(error_of(R"({"loss": {"gamma": 1}})").find("loss.gamma"), std::string::npos);
}

TEST(PipelineConfigTest, RejectsWrongTypesAndInvalidValues) {
    EXPECT_THROW(parse_pipeline_config(R"({"seed": "x"})"), ConfigError);
    EXPECT_THROW(parse_pipeline_config(R"({"synth": {"width": 1.5}})"), ConfigError);
    EXPECT_THROW(parse_pipeline_config(R"({"synth": {"radius": [1]}})"), ConfigError);
    EXPECT_THROW(parse_pipeline_config(R"({"synth": []})"), ConfigError);
    EXPECT_THROW(parse_pipeline_config("[]"), ConfigError);
    EXPECT_THROW(parse_pipeline_config(R"({"loss": {"beta": -0.5}})"), ConfigError);
    EXPECT_THROW(parse_pipeline_config(R"({"watershed": {"h": -1}})"), ConfigError);
    EXPECT_THROW(parse_pipeline_config(R"({"synth": {"nuclei_count": [5, 2]}})"), ConfigError);
}

TEST(PipelineConfigTest, MalformedJsonReportsLineAndColumn) {
    const std::string msg = error_of("{\n  \"seed\": 1,\n  \"synth\": {,}\n}");
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(PipelineConfigTest, RoundTripsThroughJson) {
    PipelineConfig cfg;
    cfg.seed = 9;
    cfg.synth.seed = 9;
    cfg.synth.width = 80;
    cfg.synth.radius = {2.25, 4.5};
    cfg.synth.allow_overlap = false;
    cfg.loss.lambda = 0.3;
    cfg.metrics.fsim_scales = 3;
    cfg.watershed.h = 0.75;
    cfg.output_dir = "elsewhere";
    const PipelineConfig back = parse_pipeline_config(to_json(cfg).dump());
    EXPECT_EQ(to_json(back).dump(), to_json(cfg).dump());
    EXPECT_EQ(back.synth.radius.min, 2.25);
    EXPECT_EQ(back.metrics.fsim_scales, 3);
}

TEST(PipelineConfigTest, LoadFromFile) {
    testing::TempDir dir("config");
    std::ofstream(dir / "c.json") << R"({"seed": 3})";
    EXPECT_EQ(load_pipeline_config(dir / "c.json").seed, 3u);
    EXPECT_THROW(load_pipeline_config(dir / "missing.json"), IoError);
}

}  // namespace
}  // namespace nucleoforge
