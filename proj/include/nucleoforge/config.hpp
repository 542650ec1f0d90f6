#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "nucleoforge/contour_loss.hpp"
#include "nucleoforge/mask_synth.hpp"
#include "nucleoforge/quality.hpp"
#include "nucleoforge/seg_eval.hpp"

namespace nucleoforge {

/// Everything a pipeline run depends on. JSON layout (every key optional,
/// unknown keys rejected):
///
///   { "seed": 0, "output_dir": "out",
///     "synth": { "width": 256, "height": 256, "nuclei_count": [15, 40],
///                "radius": [6, 18], "elongation": [1.0, 1.5],
///                "irregularity": 0.3, "vertex_count": 24,
///                "allow_overlap": true, "max_overlap_fraction": 0.15,
///                "min_gap": 2, "max_attempts": 200 },
///     "loss": { "lambda": 0.1, "beta": 1.0 },
///     "metrics": { "ssim_window": 11, ... },
///     "watershed": { "h": 1.0 } }
///
/// The top-level seed drives the mask generator.
struct PipelineConfig {
    SynthConfig synth;
    LossParams loss;
    MetricConstants metrics;
    WatershedParams watershed;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;
};

/// Parses and fully validates. Throws ConfigError (with line and column
/// for malformed JSON).
PipelineConfig parse_pipeline_config(std::string_view text);
/// Throws IoError if unreadable, ConfigError otherwise.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const SynthConfig& cfg);
nlohmann::ordered_json to_json(const PipelineConfig& cfg);

/// Parses JSON text, converting syntax errors into ConfigError with a
/// "line L, column C" location.
nlohmann::json parse_json(std::string_view text, const std::string& source);

}  // namespace nucleoforge
