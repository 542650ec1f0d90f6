#include "nucleoforge/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nucleoforge/config.hpp"
#include "nucleoforge/contour_loss.hpp"
#include "nucleoforge/io.hpp"
#include "nucleoforge/mask_synth.hpp"
#include "nucleoforge/quality.hpp"
#include "nucleoforge/seg_eval.hpp"
#include "nucleoforge/topo_map.hpp"

namespace nucleoforge::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kConfig:
        case ErrorKind::kFormat: return kExitConfig;
        case ErrorKind::kIo: return kExitIo;
        case ErrorKind::kPlacementExhausted: return kExitPlacement;
        case ErrorKind::kPrecondition: return kExitPrecondition;
    }
    return kExitInternal;
}

namespace {

void emit(const ordered_json& report, const std::string& out_path, std::ostream& out) {
    const std::string text = report.dump(2) + "\n";
    if (out_path.empty()) out << text;
    else io::write_file_atomic(out_path, text);
}

GrayImage to_gray(const FloatMap& map) {
    std::vector<double> v(map.size());
    std::ranges::transform(map.values(), v.begin(), [](float x) { return static_cast<double>(x); });
    return GrayImage::clamped(map.width(), map.height(), std::move(v));
}

Grid<std::uint8_t> binary_preview(const BinaryMask& mask) {
    Grid<std::uint8_t> out(mask.width(), mask.height(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i) out.data()[i] = mask.data()[i] ? 255 : 0;
    return out;
}

void write_gray_png(const fs::path& path, const GrayImage& img) {
    io::write_file_atomic(path, io::encode_gray8_png(io::quantize_unit(img)));
}

ordered_json breakdown_json(const LossBreakdown& b, const LossParams& p) {
    ordered_json j;
    j["l1"] = b.l1;
    j["l2"] = b.l2;
    j["ls1"] = b.ls1;
    j["ls2"] = b.ls2;
    j["beta"] = p.beta;
    j["lambda"] = p.lambda;
    j["total"] = b.total;
    return j;
}

ordered_json contrast_json(const ContrastReport& c) { return {{"cross", c.cross}, {"along", c.along}}; }

struct Inputs {
    GrayImage image;
    LabelMap labels;
    ContourSet contours;
};

Inputs load_pair(const std::string& image_path, const std::string& labels_path) {
    GrayImage image = io::read_gray_image(image_path);
    LabelMap labels = io::read_label_png(labels_path);
    if (!image.grid().same_shape(labels))
        throw DimensionMismatch("image is " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                                " but labels are " + std::to_string(labels.width()) + "x" +
                                std::to_string(labels.height()));
    ContourSet contours = extract_contours(labels);
    return {std::move(image), std::move(labels), std::move(contours)};
}

MetricConstants metrics_from(const std::string& config_path) {
    if (config_path.empty()) return {};
    return load_pipeline_config(config_path).metrics;
}

std::vector<std::pair<fs::path, fs::path>> read_pairs(const fs::path& pairs_path) {
    const nlohmann::json doc = parse_json(io::read_file(pairs_path), pairs_path.string());
    if (!doc.is_array()) throw ConfigError(pairs_path.string() + ": expected an array of pairs");
    const fs::path base = pairs_path.parent_path();
    auto resolve = [&](const nlohmann::json& v) {
        if (!v.is_string()) throw ConfigError(pairs_path.string() + ": file names must be strings");
        fs::path p = v.get<std::string>();
        return p.is_absolute() ? p : base / p;
    };
    std::vector<std::pair<fs::path, fs::path>> pairs;
    for (const auto& item : doc) {
        if (item.is_array() && item.size() == 2) {
            pairs.emplace_back(resolve(item[0]), resolve(item[1]));
        } else if (item.is_object() && item.size() == 2 && item.contains("reference") && item.contains("candidate")) {
            pairs.emplace_back(resolve(item["reference"]), resolve(item["candidate"]));
        } else {
            throw ConfigError(pairs_path.string() +
                              ": each pair must be [reference, candidate] or {\"reference\", \"candidate\"}");
        }
    }
    return pairs;
}

std::vector<std::string> png_names(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir, ec))
        if (entry.is_regular_file() && entry.path().extension() == ".png") names.push_back(entry.path().filename().string());
    if (ec) throw IoError("cannot list " + dir.string());
    std::ranges::sort(names);
    return names;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"nucleoforge: nuclei mask synthesis, skeleton maps, contour losses and evaluation metrics"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    std::function<void()> action;

    // gen-masks
    std::string cfg_path, out_dir;
    int count = 0;
    std::optional<std::uint64_t> seed;
    bool with_skeleton_maps = false;
    auto* gen = app.add_subcommand("gen-masks", "Generate synthetic nuclei label maps and a manifest");
    gen->add_option("--config", cfg_path, "Pipeline config JSON")->required();
    gen->add_option("--count", count, "Number of masks")->required();
    gen->add_option("--out", out_dir, "Output directory")->required();
    gen->add_option("--seed", seed, "Overrides the config seed");
    gen->add_flag("--skeleton-maps", with_skeleton_maps, "Also write a skeleton-map PFM per mask");
    gen->callback([&] {
        action = [&] {
            PipelineConfig cfg = load_pipeline_config(cfg_path);
            if (seed) cfg.synth.seed = cfg.seed = *seed;
            const Manifest m = batch_gen(cfg.synth, count, out_dir, thread_budget(), with_skeleton_maps);
            out << m.path.string() << "\n";
        };
    });

    // topo-map
    std::string labels_path, prefix;
    auto* topo = app.add_subcommand("topo-map", "Distance map, skeleton and skeleton map of a label map");
    topo->add_option("--labels", labels_path, "16-bit label PNG")->required();
    topo->add_option("--out", prefix, "Output prefix")->required();
    topo->callback([&] {
        action = [&] {
            const LabelMap labels = io::read_label_png(labels_path);
            const FloatMap dist = distance_map(labels);
            const BinaryMask skel = topo_skeleton(labels);
            const FloatMap smap = skeleton_map(labels);
            io::write_pfm(prefix + "_distance.pfm", dist);
            write_gray_png(prefix + "_distance.png", to_gray(dist));
            io::write_file_atomic(prefix + "_skeleton.png", io::encode_gray8_png(binary_preview(skel)));
            io::write_pfm(prefix + "_skeleton_map.pfm", smap);
            io::write_file_atomic(prefix + "_skeleton_map.png", io::encode_gray8_png(io::encode_skeleton_map_u8(smap)));
        };
    });

    // loss / optimize share inputs
    std::string image_path, report_path, gradient_path;
    LossParams params;
    std::optional<double> d_real, d_fake;
    auto* loss = app.add_subcommand("loss", "Contour regulariser values (and optionally the gradient)");
    auto add_loss_inputs = [&](CLI::App* sub) {
        sub->add_option("--image", image_path, "Grayscale or colour PNG")->required();
        sub->add_option("--labels", labels_path, "16-bit label PNG of the same size")->required();
        sub->add_option("--lambda", params.lambda, "Contrast scale on [0,1] intensities")->required();
        sub->add_option("--beta", params.beta, "Sharpness weight")->required();
    };
    add_loss_inputs(loss);
    loss->add_option("--d-real", d_real, "Discriminator score on the real pair");
    loss->add_option("--d-fake", d_fake, "Discriminator score on the generated pair");
    loss->add_option("--out", report_path, "Report path (default stdout)");
    loss->add_option("--gradient", gradient_path, "Write the regulariser gradient as PFM");
    loss->callback([&] {
        action = [&] {
            validate(params);
            const Inputs in = load_pair(image_path, labels_path);
            double l1 = 0.0, l2 = 0.0;
            if (d_real || d_fake) {
                std::tie(l1, l2) = adversarial_terms(DiscriminatorScore(d_real.value_or(1.0)),
                                                     DiscriminatorScore(d_fake.value_or(0.0)));
                if (!d_real) l1 = 0.0;
                if (!d_fake) l2 = 0.0;
            }
            const LossBreakdown b = total_loss(l1, l2, smoothness_loss(in.image, in.contours, params),
                                               sharpness_loss(in.image, in.contours, params), params);
            if (!gradient_path.empty()) io::write_pfm(gradient_path, loss_gradient(in.image, in.contours, params));
            emit(breakdown_json(b, params), report_path, out);
        };
    });

    double step = 0.0;
    int iters = 0;
    auto* opt = app.add_subcommand("optimize", "Gradient descent on the contour regulariser");
    add_loss_inputs(opt);
    opt->add_option("--step", step, "Initial step size")->required();
    opt->add_option("--iters", iters, "Maximum iterations")->required();
    opt->add_option("--out-dir", out_dir, "Directory for before/after images and report.json")->required();
    opt->callback([&] {
        action = [&] {
            validate(params);
            const Inputs in = load_pair(image_path, labels_path);
            const OptimizeResult r = optimize_patch(in.image, in.contours, params, step, iters);
            std::error_code ec;
            fs::create_directories(out_dir, ec);
            if (!fs::is_directory(out_dir)) throw IoError("cannot create output directory " + out_dir);
            const fs::path dir = out_dir;
            write_gray_png(dir / "before.png", in.image);
            write_gray_png(dir / "after.png", r.image);
            FloatMap after(r.image.width(), r.image.height(), 0.0f);
            for (std::size_t i = 0; i < after.size(); ++i) after.data()[i] = static_cast<float>(r.image.data()[i]);
            io::write_pfm(dir / "after.pfm", after);

            ordered_json report;
            report["lambda"] = params.lambda;
            report["beta"] = params.beta;
            report["step"] = step;
            report["iterations"] = static_cast<int>(r.trace.size()) - 1;
            ordered_json trace = ordered_json::array();
            for (const auto& t : r.trace) trace.push_back({{"ls1", t.ls1}, {"ls2", t.ls2}, {"total", t.total}});
            report["trace"] = trace;
            report["contrast"] = {{"before", contrast_json(contrast_report(in.image, in.contours))},
                                  {"after", contrast_json(contrast_report(r.image, in.contours))}};
            const std::string text = report.dump(2) + "\n";
            io::write_file_atomic(dir / "report.json", text);
            out << text;
        };
    });

    // quality
    std::string pairs_path;
    auto* quality = app.add_subcommand("quality", "SSIM, FSIM and GMSD over (reference, candidate) pairs");
    quality->add_option("--pairs", pairs_path, "JSON list of pairs; relative paths resolve against its directory")
        ->required();
    quality->add_option("--config", cfg_path, "Pipeline config supplying metric constants");
    quality->add_option("--out", report_path, "Report path (default stdout)");
    quality->callback([&] {
        action = [&] {
            const MetricConstants k = metrics_from(cfg_path);
            validate(k);
            const auto pairs = read_pairs(pairs_path);
            if (pairs.empty()) throw PreconditionError("no image pairs given");
            ordered_json rows = ordered_json::array();
            QualityReport mean;
            for (const auto& [ref, cand] : pairs) {
                const QualityReport q = quality_report(io::read_gray_image(ref), io::read_gray_image(cand), k);
                rows.push_back({{"reference", ref.string()},
                                {"candidate", cand.string()},
                                {"ssim", q.ssim},
                                {"fsim", q.fsim},
                                {"gmsd", q.gmsd}});
                mean.ssim += q.ssim;
                mean.fsim += q.fsim;
                mean.gmsd += q.gmsd;
            }
            const double n = static_cast<double>(pairs.size());
            ordered_json report;
            report["pairs"] = rows;
            report["mean"] = {{"ssim", mean.ssim / n}, {"fsim", mean.fsim / n}, {"gmsd", mean.gmsd / n}};
            emit(report, report_path, out);
        };
    });

    // seg-eval
    std::string pred_dir, gt_dir;
    auto* seg = app.add_subcommand("seg-eval", "DQ, SQ, PQ and AJI of predicted against ground-truth label maps");
    seg->add_option("--pred", pred_dir, "Directory of predicted label PNGs")->required();
    seg->add_option("--gt", gt_dir, "Directory of ground-truth label PNGs (same file names)")->required();
    seg->add_option("--out", report_path, "Report path (default stdout)");
    seg->callback([&] {
        action = [&] {
            const auto names = png_names(gt_dir);
            if (names.empty()) throw PreconditionError("no PNG files in " + gt_dir);
            ordered_json rows = ordered_json::array();
            SegReport mean;
            for (const auto& name : names) {
                const fs::path pred_file = fs::path(pred_dir) / name;
                if (!fs::exists(pred_file)) throw IoError("missing prediction " + pred_file.string());
                const SegReport s = seg_report(io::read_label_png(pred_file), io::read_label_png(fs::path(gt_dir) / name));
                rows.push_back({{"file", name}, {"dq", s.dq}, {"sq", s.sq}, {"pq", s.pq}, {"aji", s.aji}});
                mean.dq += s.dq;
                mean.sq += s.sq;
                mean.pq += s.pq;
                mean.aji += s.aji;
            }
            const double n = static_cast<double>(names.size());
            ordered_json report;
            report["images"] = rows;
            report["mean"] = {{"dq", mean.dq / n}, {"sq", mean.sq / n}, {"pq", mean.pq / n}, {"aji", mean.aji / n}};
            emit(report, report_path, out);
        };
    });

    // watershed
    std::string mask_path;
    std::optional<double> h;
    auto* ws = app.add_subcommand("watershed", "Split merged nuclei in a binary mask");
    ws->set_help_flag("--help", "Print this help message and exit");  // frees -h for --h
    ws->add_option("--mask", mask_path, "PNG mask; any nonzero pixel is foreground")->required();
    ws->add_option("--out", out_dir, "Output 16-bit label PNG")->required();
    ws->add_option("--h", h, "h-maxima depth in pixels (default from config, else 1)");
    ws->add_option("--config", cfg_path, "Pipeline config supplying watershed.h");
    ws->callback([&] {
        action = [&] {
            WatershedParams p = cfg_path.empty() ? WatershedParams{} : load_pipeline_config(cfg_path).watershed;
            if (h) p.h = *h;
            validate(p);
            const LabelMap split = watershed_split(binarize(io::read_label_png(mask_path)), p);
            io::write_label_png(out_dir, split);
            std::uint32_t n = 0;
            for (std::uint32_t l : split.values()) n = std::max(n, l);
            out << ordered_json{{"labels", n}, {"out", out_dir}}.dump(2) << "\n";
        };
    });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (action) action();
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace nucleoforge::cli
