#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "nucleoforge/raster.hpp"

namespace nucleoforge {

template <typename T>
struct Range {
    T min;
    T max;
};

/// Parameters of the nucleus-like polygon generator. Defaults target
/// 256x256 tiles.
struct SynthConfig {
    int width = 256;
    int height = 256;
    Range<int> nuclei_count{15, 40};
    Range<double> radius{6.0, 18.0};
    /// Ratio of major to minor semi-axis of the base ellipse.
    Range<double> elongation{1.0, 1.5};
    double irregularity = 0.3;
    int vertex_count = 24;
    bool allow_overlap = true;
    double max_overlap_fraction = 0.15;
    /// Minimum Euclidean distance between pixels of different nuclei when
    /// overlap is disallowed. 1 lets nuclei touch.
    int min_gap = 2;
    /// Placement attempts per nucleus before giving up.
    int max_attempts = 200;
    std::uint64_t seed = 0;
};

/// Throws ConfigError describing the first invalid field.
void validate(const SynthConfig& cfg);

/// Portable random stream: std::mt19937_64 (fully specified by the C++
/// standard) with explicit conversions, so outputs do not depend on the
/// standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [lo, hi] by rejection (no modulo bias).
    int uniform_int(int lo, int hi);

private:
    std::mt19937_64 engine_;
};

/// Fills a simple polygon given as (x, y) vertices, x along columns. A
/// pixel belongs to the polygon when its centre (col + 0.5, row + 0.5)
/// lies inside, using half-open crossings on each scan line.
std::vector<PixelCoord> rasterize_polygon(const std::vector<std::array<double, 2>>& vertices, int width, int height);

/// One label per placed nucleus, labels 1..K in placement order.
LabelMap gen_nuclei_masks(const SynthConfig& cfg);

struct ManifestEntry {
    std::string file;
    int nuclei = 0;
    std::uint64_t seed = 0;
};

struct Manifest {
    std::filesystem::path path;
    std::vector<ManifestEntry> images;
};

/// Writes `count` masks (image i uses seed cfg.seed + i) as 16-bit PNGs plus
/// manifest.json. Runs on up to `threads` workers; output does not depend on
/// the thread count. With `skeleton_maps`, each mask_NNNNN.png also gets a
/// mask_NNNNN_skeleton_map.pfm.
Manifest batch_gen(const SynthConfig& cfg, int count, const std::filesystem::path& out_dir, int threads = 1,
                   bool skeleton_maps = false);

/// Reads NUCLEOFORGE_THREADS, falling back to 1.
int thread_budget();

}  // namespace nucleoforge
