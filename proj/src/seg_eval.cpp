#include "nucleoforge/seg_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <tuple>

namespace nucleoforge {

void validate(const WatershedParams& params) {
    if (!(params.h > 0.0) || !std::isfinite(params.h)) throw ConfigError("watershed h must be a finite value > 0");
}

namespace {

struct Overlap {
    std::map<std::uint32_t, std::int64_t> gt_area;
    std::map<std::uint32_t, std::int64_t> pred_area;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::int64_t> intersection;  // (gt, pred)
};

Overlap overlap(const LabelMap& pred, const LabelMap& gt) {
    if (!pred.same_shape(gt)) throw DimensionMismatch("prediction and ground truth dimensions differ");
    Overlap o;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const std::uint32_t g = gt.data()[i], p = pred.data()[i];
        if (g) ++o.gt_area[g];
        if (p) ++o.pred_area[p];
        if (g && p) ++o.intersection[{g, p}];
    }
    return o;
}

}  // namespace

MatchResult iou_matching(const LabelMap& pred, const LabelMap& gt) {
    const Overlap o = overlap(pred, gt);
    MatchResult m;
    std::set<std::uint32_t> matched_gt, matched_pred;
    for (const auto& [key, inter] : o.intersection) {
        const auto [g, p] = key;
        const std::int64_t uni = o.gt_area.at(g) + o.pred_area.at(p) - inter;
        const double iou = static_cast<double>(inter) / static_cast<double>(uni);
        if (iou > 0.5) {
            m.pairs.push_back({g, p, iou});
            matched_gt.insert(g);
            matched_pred.insert(p);
        }
    }
    for (const auto& [g, area] : o.gt_area)
        if (!matched_gt.contains(g)) m.unmatched_gt.push_back(g);
    for (const auto& [p, area] : o.pred_area)
        if (!matched_pred.contains(p)) m.unmatched_pred.push_back(p);
    return m;
}

DetectionQuality dq_sq_pq(const MatchResult& m) {
    const double tp = static_cast<double>(m.pairs.size());
    const double fp = static_cast<double>(m.unmatched_pred.size());
    const double fn = static_cast<double>(m.unmatched_gt.size());
    if (tp + fp + fn == 0.0) return {1.0, 1.0, 1.0};
    const double dq = tp / (tp + 0.5 * fp + 0.5 * fn);
    double iou_sum = 0.0;
    for (const auto& pair : m.pairs) iou_sum += pair.iou;
    const double sq = tp > 0.0 ? iou_sum / tp : 0.0;
    return {dq, sq, dq * sq};
}

double aji(const LabelMap& pred, const LabelMap& gt) {
    const Overlap o = overlap(pred, gt);
    std::map<std::uint32_t, std::vector<std::pair<std::uint32_t, std::int64_t>>> candidates;  // gt -> (pred, inter)
    for (const auto& [key, inter] : o.intersection) candidates[key.first].emplace_back(key.second, inter);

    std::int64_t c = 0, u = 0;
    std::set<std::uint32_t> used;
    for (const auto& [g, g_area] : o.gt_area) {
        std::uint32_t best = 0;
        std::int64_t best_inter = 0, best_union = 1;
        for (const auto& [p, inter] : candidates[g]) {
            if (used.contains(p)) continue;
            const std::int64_t uni = g_area + o.pred_area.at(p) - inter;
            // inter/uni > best_inter/best_union; candidates ascend by pred
            // label, so strict comparison keeps the smaller label on ties.
            if (best == 0 || inter * best_union > best_inter * uni) {
                best = p;
                best_inter = inter;
                best_union = uni;
            }
        }
        if (best == 0) {
            u += g_area;
        } else {
            used.insert(best);
            c += best_inter;
            u += best_union;
        }
    }
    for (const auto& [p, area] : o.pred_area)
        if (!used.contains(p)) u += area;
    if (u == 0) return 1.0;
    return static_cast<double>(c) / static_cast<double>(u);
}

SegReport seg_report(const LabelMap& pred, const LabelMap& gt) {
    const DetectionQuality q = dq_sq_pq(iou_matching(pred, gt));
    return {q.dq, q.sq, q.pq, aji(pred, gt)};
}

namespace {

/// 1-D squared distance transform of a sampled function (lower envelope of
/// parabolas).
void squared_edt_1d(const std::vector<double>& f, std::vector<double>& d) {
    const int n = static_cast<int>(f.size());
    std::vector<int> v(static_cast<std::size_t>(n));
    std::vector<double> z(static_cast<std::size_t>(n) + 1);
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
        if (std::isinf(f[q])) continue;
        if (std::isinf(f[v[k]])) {
            v[k] = q;
            continue;
        }
        double s;
        while (true) {
            s = ((f[q] + static_cast<double>(q) * q) - (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
                (2.0 * (q - v[k]));
            if (s <= z[k] && k > 0) --k;
            else break;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double dq = q - v[k];
        d[q] = dq * dq + f[v[k]];
    }
}

}  // namespace

Grid<double> euclidean_distance_transform(const BinaryMask& mask) {
    // One-pixel background frame stands in for "outside the image".
    const int w = mask.width() + 2, h = mask.height() + 2;
    const double inf = std::numeric_limits<double>::infinity();
    Grid<double> f(w, h, 0.0);
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c) f(r + 1, c + 1) = mask(r, c) ? inf : 0.0;

    std::vector<double> line, out;
    line.resize(static_cast<std::size_t>(h));
    out.resize(static_cast<std::size_t>(h));
    for (int c = 0; c < w; ++c) {
        for (int r = 0; r < h; ++r) line[r] = f(r, c);
        squared_edt_1d(line, out);
        for (int r = 0; r < h; ++r) f(r, c) = out[r];
    }
    line.resize(static_cast<std::size_t>(w));
    out.resize(static_cast<std::size_t>(w));
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) line[c] = f(r, c);
        squared_edt_1d(line, out);
        for (int c = 0; c < w; ++c) f(r, c) = out[c];
    }

    Grid<double> dist(mask.width(), mask.height(), 0.0);
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c) dist(r, c) = mask(r, c) ? std::sqrt(f(r + 1, c + 1)) : 0.0;
    return dist;
}

namespace {

/// Grayscale reconstruction by dilation of `marker` under `limit`, 8-connected,
/// restricted to the foreground of `mask`. Alternating raster sweeps until
/// stable.
Grid<double> reconstruct_by_dilation(Grid<double> marker, const Grid<double>& limit, const BinaryMask& mask) {
    bool changed = true;
    while (changed) {
        changed = false;
        auto sweep = [&](int r, int c, const std::array<std::array<int, 2>, 4>& nbrs) {
            if (!mask(r, c)) return;
            double v = marker(r, c);
            for (const auto& [dr, dc] : nbrs) {
                const int rr = r + dr, cc = c + dc;
                if (mask.in_bounds(rr, cc) && mask(rr, cc)) v = std::max(v, marker(rr, cc));
            }
            v = std::min(v, limit(r, c));
            if (v != marker(r, c)) {
                marker(r, c) = v;
                changed = true;
            }
        };
        constexpr std::array<std::array<int, 2>, 4> kBefore{{{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}}};
        constexpr std::array<std::array<int, 2>, 4> kAfter{{{1, 1}, {1, 0}, {1, -1}, {0, 1}}};
        for (int r = 0; r < mask.height(); ++r)
            for (int c = 0; c < mask.width(); ++c) sweep(r, c, kBefore);
        for (int r = mask.height() - 1; r >= 0; --r)
            for (int c = mask.width() - 1; c >= 0; --c) sweep(r, c, kAfter);
    }
    return marker;
}

/// Labels each 8-connected foreground plateau of `value` that has no
/// strictly higher foreground neighbour; labels in raster order.
LabelMap regional_maxima(const Grid<double>& value, const BinaryMask& mask) {
    LabelMap markers(mask.width(), mask.height(), 0);
    Grid<std::uint8_t> seen(mask.width(), mask.height(), 0);
    std::uint32_t next = 0;
    std::vector<PixelCoord> plateau;
    for (int r = 0; r < mask.height(); ++r) {
        for (int c = 0; c < mask.width(); ++c) {
            if (!mask(r, c) || seen(r, c)) continue;
            const double level = value(r, c);
            plateau.assign(1, {r, c});
            seen(r, c) = 1;
            bool is_max = true;
            for (std::size_t i = 0; i < plateau.size(); ++i) {
                const PixelCoord p = plateau[i];
                for (const auto& o : kEightNeighborhood) {
                    const int rr = p.row + o.drow, cc = p.col + o.dcol;
                    if (!mask.in_bounds(rr, cc) || !mask(rr, cc)) continue;
                    const double v = value(rr, cc);
                    if (v > level) is_max = false;
                    else if (v == level && !seen(rr, cc)) {
                        seen(rr, cc) = 1;
                        plateau.push_back({rr, cc});
                    }
                }
            }
            if (!is_max) continue;
            ++next;
            for (const auto& p : plateau) markers(p.row, p.col) = next;
        }
    }
    return markers;
}

}  // namespace

LabelMap watershed_split(const BinaryMask& mask, const WatershedParams& params) {
    validate(params);
    const Grid<double> dist = euclidean_distance_transform(mask);
    Grid<double> lowered = dist;
    for (std::size_t i = 0; i < lowered.size(); ++i)
        if (mask.data()[i]) lowered.data()[i] = dist.data()[i] - params.h;
    const Grid<double> hmax = reconstruct_by_dilation(std::move(lowered), dist, mask);
    LabelMap labels = regional_maxima(hmax, mask);

    // (distance desc, row-major index asc, push order asc)
    using Entry = std::tuple<double, std::size_t, std::uint64_t, std::uint32_t>;
    auto later = [](const Entry& a, const Entry& b) {
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
        if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) > std::get<1>(b);
        return std::get<2>(a) > std::get<2>(b);
    };
    std::priority_queue<Entry, std::vector<Entry>, decltype(later)> queue(later);
    std::uint64_t pushes = 0;
    auto push_neighbours = [&](int r, int c, std::uint32_t label) {
        for (const auto& o : kEightNeighborhood) {
            const int rr = r + o.drow, cc = c + o.dcol;
            if (mask.in_bounds(rr, cc) && mask(rr, cc) && labels(rr, cc) == 0)
                queue.emplace(dist(rr, cc), labels.index(rr, cc), pushes++, label);
        }
    };
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c)
            if (labels(r, c) != 0) push_neighbours(r, c, labels(r, c));
    while (!queue.empty()) {
        const auto [d, idx, order, label] = queue.top();
        queue.pop();
        const int r = static_cast<int>(idx / static_cast<std::size_t>(mask.width()));
        const int c = static_cast<int>(idx % static_cast<std::size_t>(mask.width()));
        if (labels(r, c) != 0) continue;
        labels(r, c) = label;
        push_neighbours(r, c, label);
    }
    return labels;
}

}  // namespace nucleoforge
