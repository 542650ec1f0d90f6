#include "nucleoforge/mask_synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>

#include "nucleoforge/config.hpp"
#include "nucleoforge/io.hpp"
#include "nucleoforge/topo_map.hpp"

namespace nucleoforge {

namespace fs = std::filesystem;

void validate(const SynthConfig& cfg) {
    auto fail = [](const std::string& msg) { throw ConfigError("synth: " + msg); };
    if (cfg.width <= 0 || cfg.height <= 0) fail("width and height must be positive");
    if (cfg.nuclei_count.min < 1) fail("nuclei_count.min must be >= 1");
    if (cfg.nuclei_count.max < cfg.nuclei_count.min) fail("nuclei_count.max < nuclei_count.min");
    if (!(cfg.radius.min >= 2.0)) fail("radius.min must be >= 2");
    if (!(cfg.radius.max >= cfg.radius.min) || !std::isfinite(cfg.radius.max)) fail("radius.max < radius.min");
    if (!(cfg.elongation.min >= 1.0) || !(cfg.elongation.max >= cfg.elongation.min) ||
        !std::isfinite(cfg.elongation.max))
        fail("elongation must satisfy 1 <= min <= max");
    if (!(cfg.irregularity >= 0.0 && cfg.irregularity <= 1.0)) fail("irregularity must lie in [0,1]");
    if (cfg.vertex_count < 8) fail("vertex_count must be >= 8");
    if (!(cfg.max_overlap_fraction >= 0.0 && cfg.max_overlap_fraction < 1.0))
        fail("max_overlap_fraction must lie in [0,1)");
    if (cfg.min_gap < 1) fail("min_gap must be >= 1");
    if (cfg.max_attempts < 1) fail("max_attempts must be >= 1");
}

int Rng::uniform_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(static_cast<std::int64_t>(hi) - lo) + 1;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return static_cast<int>(lo + static_cast<std::int64_t>(x % span));
}

std::vector<PixelCoord> rasterize_polygon(const std::vector<std::array<double, 2>>& vertices, int width, int height) {
    std::vector<PixelCoord> pixels;
    if (vertices.size() < 3) return pixels;
    double ymin = vertices[0][1], ymax = vertices[0][1];
    for (const auto& v : vertices) {
        ymin = std::min(ymin, v[1]);
        ymax = std::max(ymax, v[1]);
    }
    const int r0 = std::max(0, static_cast<int>(std::floor(ymin - 0.5)));
    const int r1 = std::min(height - 1, static_cast<int>(std::ceil(ymax - 0.5)));
    std::vector<double> xs;
    for (int r = r0; r <= r1; ++r) {
        const double y = r + 0.5;
        xs.clear();
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            const auto& a = vertices[i];
            const auto& b = vertices[(i + 1) % vertices.size()];
            if ((a[1] <= y) != (b[1] <= y)) xs.push_back(a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]));
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
            const int c0 = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
            const int c1 = std::min(width, static_cast<int>(std::ceil(xs[k + 1] - 0.5)));
            for (int c = c0; c < c1; ++c) pixels.push_back({r, c});
        }
    }
    return pixels;
}

namespace {

struct Box {
    int r0, c0, r1, c1;  // inclusive
};

Box bounding_box(const std::vector<PixelCoord>& pixels) {
    Box b{pixels[0].row, pixels[0].col, pixels[0].row, pixels[0].col};
    for (const auto& p : pixels) {
        b.r0 = std::min(b.r0, p.row);
        b.r1 = std::max(b.r1, p.row);
        b.c0 = std::min(b.c0, p.col);
        b.c1 = std::max(b.c1, p.col);
    }
    return b;
}

bool eight_connected(const std::vector<PixelCoord>& pixels) {
    if (pixels.empty()) return false;
    const Box b = bounding_box(pixels);
    BinaryMask local(b.c1 - b.c0 + 1, b.r1 - b.r0 + 1, 0);
    for (const auto& p : pixels) local(p.row - b.r0, p.col - b.c0) = 1;
    const LabelMap cc = connected_components(local, Connectivity::kEight);
    return std::ranges::all_of(cc.values(), [](std::uint32_t l) { return l <= 1; });
}

/// Star-shaped polygon around the origin; x along columns.
std::vector<std::array<double, 2>> sample_outline(const SynthConfig& cfg, Rng& rng) {
    const int n = cfg.vertex_count;
    const double radius = rng.uniform(cfg.radius.min, cfg.radius.max);
    const double elong = rng.uniform(cfg.elongation.min, cfg.elongation.max);
    const double rotation = rng.uniform(0.0, std::numbers::pi);
    std::vector<double> noise(static_cast<std::size_t>(n));
    for (double& e : noise) e = rng.uniform(-1.0, 1.0);
    const double a = radius, b = radius / elong;
    std::vector<std::array<double, 2>> outline(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double smoothed = (noise[(k + n - 1) % n] + noise[k] + noise[(k + 1) % n]) / 3.0;
        const double theta = 2.0 * std::numbers::pi * k / n;
        const double ct = std::cos(theta), st = std::sin(theta);
        const double base = a * b / std::sqrt(b * ct * b * ct + a * st * a * st);
        const double r = base * (1.0 + cfg.irregularity * smoothed);
        outline[k] = {r * std::cos(theta + rotation), r * std::sin(theta + rotation)};
    }
    return outline;
}

/// Offsets strictly closer than `gap` (including the centre).
std::vector<PixelCoord> gap_offsets(int gap) {
    std::vector<PixelCoord> offsets;
    for (int dr = -gap; dr <= gap; ++dr)
        for (int dc = -gap; dc <= gap; ++dc)
            if (dr * dr + dc * dc < gap * gap) offsets.push_back({dr, dc});
    return offsets;
}

class Placer {
public:
    explicit Placer(const SynthConfig& cfg)
        : cfg_(cfg), labels_(cfg.width, cfg.height, 0), offsets_(gap_offsets(cfg.min_gap)) {
        original_area_.push_back(0);
        current_area_.push_back(0);
        boxes_.push_back({0, 0, 0, 0});
    }

    /// Returns false when the candidate violates a placement rule.
    bool try_place(const std::vector<PixelCoord>& pixels) {
        if (pixels.empty() || !eight_connected(pixels)) return false;
        if (!cfg_.allow_overlap) {
            for (const auto& p : pixels) {
                for (const auto& o : offsets_) {
                    const int r = p.row + o.row, c = p.col + o.col;
                    if (labels_.in_bounds(r, c) && labels_(r, c) != 0) return false;
                }
            }
        } else {
            std::map<std::uint32_t, int> stolen;
            for (const auto& p : pixels) {
                if (const std::uint32_t l = labels_(p.row, p.col); l != 0) ++stolen[l];
            }
            for (const auto& [label, count] : stolen) {
                const int remaining = current_area_[label] - count;
                const double lost = static_cast<double>(original_area_[label] - remaining) / original_area_[label];
                if (remaining <= 0 || lost > cfg_.max_overlap_fraction) return false;
                if (!survivor_connected(label, pixels)) return false;
            }
        }
        const auto label = static_cast<std::uint32_t>(original_area_.size());
        for (const auto& p : pixels) {
            auto& slot = labels_(p.row, p.col);
            if (slot != 0) --current_area_[slot];
            slot = label;
        }
        original_area_.push_back(static_cast<int>(pixels.size()));
        current_area_.push_back(static_cast<int>(pixels.size()));
        boxes_.push_back(bounding_box(pixels));
        return true;
    }

    LabelMap take() && { return std::move(labels_); }

private:
    bool survivor_connected(std::uint32_t label, const std::vector<PixelCoord>& incoming) const {
        const Box& b = boxes_[label];
        BinaryMask local(b.c1 - b.c0 + 1, b.r1 - b.r0 + 1, 0);
        for (int r = b.r0; r <= b.r1; ++r)
            for (int c = b.c0; c <= b.c1; ++c)
                if (labels_(r, c) == label) local(r - b.r0, c - b.c0) = 1;
        for (const auto& p : incoming) {
            if (p.row >= b.r0 && p.row <= b.r1 && p.col >= b.c0 && p.col <= b.c1) local(p.row - b.r0, p.col - b.c0) = 0;
        }
        const LabelMap cc = connected_components(local, Connectivity::kEight);
        return std::ranges::all_of(cc.values(), [](std::uint32_t l) { return l <= 1; });
    }

    const SynthConfig& cfg_;
    LabelMap labels_;
    std::vector<PixelCoord> offsets_;
    std::vector<int> original_area_;
    std::vector<int> current_area_;
    std::vector<Box> boxes_;
};

}  // namespace

LabelMap gen_nuclei_masks(const SynthConfig& cfg) {
    validate(cfg);
    Rng rng(cfg.seed);
    const int target = rng.uniform_int(cfg.nuclei_count.min, cfg.nuclei_count.max);
    Placer placer(cfg);
    for (int k = 0; k < target; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < cfg.max_attempts && !placed; ++attempt) {
            auto outline = sample_outline(cfg, rng);
            double xmin = outline[0][0], xmax = xmin, ymin = outline[0][1], ymax = ymin;
            for (const auto& v : outline) {
                xmin = std::min(xmin, v[0]);
                xmax = std::max(xmax, v[0]);
                ymin = std::min(ymin, v[1]);
                ymax = std::max(ymax, v[1]);
            }
            // Centre range that keeps every vertex inside [0,width]x[0,height].
            const double cx_lo = -xmin, cx_hi = cfg.width - xmax;
            const double cy_lo = -ymin, cy_hi = cfg.height - ymax;
            const double cx = rng.uniform(cx_lo, cx_hi);
            const double cy = rng.uniform(cy_lo, cy_hi);
            if (cx_hi < cx_lo || cy_hi < cy_lo) continue;
            for (auto& v : outline) {
                v[0] += cx;
                v[1] += cy;
            }
            placed = placer.try_place(rasterize_polygon(outline, cfg.width, cfg.height));
        }
        if (!placed)
            throw PlacementExhausted("could not place nucleus " + std::to_string(k + 1) + " of " +
                                     std::to_string(target) + " within " + std::to_string(cfg.max_attempts) +
                                     " attempts (seed " + std::to_string(cfg.seed) + ")");
    }
    return std::move(placer).take();
}

int thread_budget() {
    if (const char* env = std::getenv("NUCLEOFORGE_THREADS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && n >= 1) return static_cast<int>(std::min<long>(n, 256));
    }
    return 1;
}

Manifest batch_gen(const SynthConfig& cfg, int count, const fs::path& out_dir, int threads, bool skeleton_maps) {
    validate(cfg);
    if (count < 1) throw ConfigError("count must be positive");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create output directory " + out_dir.string());

    Manifest manifest;
    manifest.images.resize(static_cast<std::size_t>(count));
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(count));
    std::atomic<int> next{0};
    std::atomic<bool> abort{false};
    auto worker = [&] {
        for (int i = next++; i < count && !abort; i = next++) {
            try {
                SynthConfig local = cfg;
                local.seed = cfg.seed + static_cast<std::uint64_t>(i);
                const LabelMap labels = gen_nuclei_masks(local);
                char name[32];
                std::snprintf(name, sizeof name, "mask_%05d.png", i);
                io::write_label_png(out_dir / name, labels);
                if (skeleton_maps) {
                    std::snprintf(name, sizeof name, "mask_%05d_skeleton_map.pfm", i);
                    io::write_pfm(out_dir / name, skeleton_map(labels));
                    std::snprintf(name, sizeof name, "mask_%05d.png", i);
                }
                std::uint32_t nuclei = 0;
                for (std::uint32_t l : labels.values()) nuclei = std::max(nuclei, l);
                manifest.images[i] = {name, static_cast<int>(nuclei), local.seed};
            } catch (...) {
                failures[i] = std::current_exception();
                abort = true;
            }
        }
    };
    const int workers = std::clamp(threads, 1, count);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    }
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);

    nlohmann::ordered_json doc;
    doc["config"] = to_json(cfg);
    doc["images"] = nlohmann::ordered_json::array();
    for (const auto& e : manifest.images)
        doc["images"].push_back({{"file", e.file}, {"nuclei", e.nuclei}, {"seed", e.seed}});
    manifest.path = out_dir / "manifest.json";
    io::write_file_atomic(manifest.path, doc.dump(2) + "\n");
    return manifest;
}

}  // namespace nucleoforge
