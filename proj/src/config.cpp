#include "nucleoforge/config.hpp"

#include <algorithm>
#include <limits>
#include <type_traits>
#include <set>

#include "nucleoforge/errors.hpp"
#include "nucleoforge/io.hpp"

namespace nucleoforge {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string location(std::string_view text, std::size_t byte) {
    byte = std::min(byte, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

/// Reads members of one JSON object and rejects keys nobody asked for.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    template <typename T>
    void read(const char* key, T& out) {
        known_.insert(key);
        auto it = node_.find(key);
        if (it == node_.end()) return;
        out = convert<T>(*it, name(key));
    }

    template <typename T>
    void read(const char* key, Range<T>& out) {
        known_.insert(key);
        auto it = node_.find(key);
        if (it == node_.end()) return;
        if (!it->is_array() || it->size() != 2) throw ConfigError(name(key) + ": expected [min, max]");
        out.min = convert<T>((*it)[0], name(key) + "[0]");
        out.max = convert<T>((*it)[1], name(key) + "[1]");
    }

    const json* child(const char* key) {
        known_.insert(key);
        auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        for (const auto& [key, value] : node_.items())
            if (!known_.contains(key)) throw ConfigError("unknown key '" + name(key) + "'");
    }

private:
    template <typename T>
    static T convert(const json& v, const std::string& where) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(where + ": expected a boolean");
            return v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            if (!v.is_number_unsigned()) throw ConfigError(where + ": expected a non-negative integer");
            return v.get<std::uint64_t>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
            const auto x = v.get<std::int64_t>();
            if (x < std::numeric_limits<T>::min() || x > std::numeric_limits<T>::max())
                throw ConfigError(where + ": integer out of range");
            return static_cast<T>(x);
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError(where + ": expected a number");
            return v.get<T>();
        } else {
            if (!v.is_string()) throw ConfigError(where + ": expected a string");
            return T(v.get<std::string>());
        }
    }

    const json& node_;
    std::string path_;
    std::set<std::string> known_;
};

void read_synth(const json& node, SynthConfig& s) {
    Section sec(node, "synth");
    sec.read("width", s.width);
    sec.read("height", s.height);
    sec.read("nuclei_count", s.nuclei_count);
    sec.read("radius", s.radius);
    sec.read("elongation", s.elongation);
    sec.read("irregularity", s.irregularity);
    sec.read("vertex_count", s.vertex_count);
    sec.read("allow_overlap", s.allow_overlap);
    sec.read("max_overlap_fraction", s.max_overlap_fraction);
    sec.read("min_gap", s.min_gap);
    sec.read("max_attempts", s.max_attempts);
    sec.finish();
}

void read_metrics(const json& node, MetricConstants& m) {
    Section sec(node, "metrics");
    sec.read("ssim_window", m.ssim_window);
    sec.read("ssim_sigma", m.ssim_sigma);
    sec.read("ssim_k1", m.ssim_k1);
    sec.read("ssim_k2", m.ssim_k2);
    sec.read("dynamic_range", m.dynamic_range);
    sec.read("gmsd_c", m.gmsd_c);
    sec.read("fsim_scales", m.fsim_scales);
    sec.read("fsim_orientations", m.fsim_orientations);
    sec.read("fsim_min_wavelength", m.fsim_min_wavelength);
    sec.read("fsim_mult", m.fsim_mult);
    sec.read("fsim_sigma_onf", m.fsim_sigma_onf);
    sec.read("fsim_dtheta_on_sigma", m.fsim_dtheta_on_sigma);
    sec.read("fsim_noise_k", m.fsim_noise_k);
    sec.read("fsim_t1", m.fsim_t1);
    sec.read("fsim_t2", m.fsim_t2);
    sec.finish();
}

}  // namespace

json parse_json(std::string_view text, const std::string& source) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        // e.byte is one past the offending character.
        const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
        throw ConfigError(source + ": malformed JSON at " + location(text, at));
    }
}

PipelineConfig parse_pipeline_config(std::string_view text) {
    const json doc = parse_json(text, "config");
    PipelineConfig cfg;
    {
        Section top(doc, "");
        top.read("seed", cfg.seed);
        std::string out_dir = cfg.output_dir.string();
        top.read("output_dir", out_dir);
        cfg.output_dir = out_dir;
        if (const json* s = top.child("synth")) read_synth(*s, cfg.synth);
        if (const json* l = top.child("loss")) {
            Section sec(*l, "loss");
            sec.read("lambda", cfg.loss.lambda);
            sec.read("beta", cfg.loss.beta);
            sec.finish();
        }
        if (const json* m = top.child("metrics")) read_metrics(*m, cfg.metrics);
        if (const json* w = top.child("watershed")) {
            Section sec(*w, "watershed");
            sec.read("h", cfg.watershed.h);
            sec.finish();
        }
        top.finish();
    }
    cfg.synth.seed = cfg.seed;
    validate(cfg.synth);
    validate(cfg.loss);
    validate(cfg.metrics);
    validate(cfg.watershed);
    return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    const std::string text = io::read_file(path);
    try {
        return parse_pipeline_config(text);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

ordered_json to_json(const SynthConfig& s) {
    ordered_json j;
    j["width"] = s.width;
    j["height"] = s.height;
    j["nuclei_count"] = {s.nuclei_count.min, s.nuclei_count.max};
    j["radius"] = {s.radius.min, s.radius.max};
    j["elongation"] = {s.elongation.min, s.elongation.max};
    j["irregularity"] = s.irregularity;
    j["vertex_count"] = s.vertex_count;
    j["allow_overlap"] = s.allow_overlap;
    j["max_overlap_fraction"] = s.max_overlap_fraction;
    j["min_gap"] = s.min_gap;
    j["max_attempts"] = s.max_attempts;
    j["seed"] = s.seed;
    return j;
}

ordered_json to_json(const PipelineConfig& cfg) {
    ordered_json j;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir.string();
    ordered_json synth = to_json(cfg.synth);
    synth.erase("seed");
    j["synth"] = synth;
    j["loss"] = {{"lambda", cfg.loss.lambda}, {"beta", cfg.loss.beta}};
    const MetricConstants& m = cfg.metrics;
    ordered_json metrics;
    metrics["ssim_window"] = m.ssim_window;
    metrics["ssim_sigma"] = m.ssim_sigma;
    metrics["ssim_k1"] = m.ssim_k1;
    metrics["ssim_k2"] = m.ssim_k2;
    metrics["dynamic_range"] = m.dynamic_range;
    metrics["gmsd_c"] = m.gmsd_c;
    metrics["fsim_scales"] = m.fsim_scales;
    metrics["fsim_orientations"] = m.fsim_orientations;
    metrics["fsim_min_wavelength"] = m.fsim_min_wavelength;
    metrics["fsim_mult"] = m.fsim_mult;
    metrics["fsim_sigma_onf"] = m.fsim_sigma_onf;
    metrics["fsim_dtheta_on_sigma"] = m.fsim_dtheta_on_sigma;
    metrics["fsim_noise_k"] = m.fsim_noise_k;
    metrics["fsim_t1"] = m.fsim_t1;
    metrics["fsim_t2"] = m.fsim_t2;
    j["metrics"] = metrics;
    j["watershed"] = {{"h", cfg.watershed.h}};
    return j;
}

}  // namespace nucleoforge
