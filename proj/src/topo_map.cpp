#include "nucleoforge/topo_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

namespace nucleoforge {

namespace {

struct Nucleus {
    std::uint32_t label = 0;
    std::vector<PixelCoord> pixels;
    int r0 = 0, c0 = 0, r1 = -1, c1 = -1;
};

std::vector<Nucleus> group_nuclei(const LabelMap& labels) {
    std::map<std::uint32_t, Nucleus> by_label;
    for (int r = 0; r < labels.height(); ++r) {
        for (int c = 0; c < labels.width(); ++c) {
            const std::uint32_t l = labels(r, c);
            if (l == 0) continue;
            auto [it, fresh] = by_label.try_emplace(l);
            Nucleus& n = it->second;
            if (fresh) {
                n.label = l;
                n.r0 = n.r1 = r;
                n.c0 = n.c1 = c;
            }
            n.r0 = std::min(n.r0, r);
            n.r1 = std::max(n.r1, r);
            n.c0 = std::min(n.c0, c);
            n.c1 = std::max(n.c1, c);
            n.pixels.push_back({r, c});
        }
    }
    std::vector<Nucleus> out;
    out.reserve(by_label.size());
    for (auto& [l, n] : by_label) out.push_back(std::move(n));
    return out;
}

struct NucleusTopology {
    Grid<int> depth;  // erosion iteration at which each pixel disappears, bbox-local
    int max_depth = 0;
    std::vector<PixelCoord> skeleton;  // image coordinates
};

Grid<int> erosion_depth(const Nucleus& n, int& max_depth) {
    const int w = n.c1 - n.c0 + 1, h = n.r1 - n.r0 + 1;
    BinaryMask local(w, h, 0);
    for (const auto& p : n.pixels) local(p.row - n.r0, p.col - n.c0) = 1;
    Grid<int> depth(w, h, 0);
    int t = 0;
    bool any = true;
    while (any) {
        ++t;
        const BinaryMask eroded = erode_once(local, Connectivity::kFour);
        any = false;
        for (std::size_t i = 0; i < local.size(); ++i) {
            if (local.data()[i] && !eroded.data()[i]) depth.data()[i] = t;
            any = any || eroded.data()[i];
        }
        local = eroded;
    }
    max_depth = t;
    return depth;
}

NucleusTopology analyse(const Nucleus& n, const LabelMap& labels) {
    NucleusTopology topo;
    topo.depth = erosion_depth(n, topo.max_depth);

    std::vector<PixelCoord> contour;
    std::vector<PixelCoord> interior;
    for (const auto& p : n.pixels) {
        bool on_contour = false;
        for (const auto& o : kFourNeighborhood) {
            const int r = p.row + o.drow, c = p.col + o.dcol;
            if (!labels.in_bounds(r, c) || labels(r, c) != n.label) {
                on_contour = true;
                break;
            }
        }
        (on_contour ? contour : interior).push_back(p);
    }

    // Contour membership in bbox-local coordinates, for the local-minimum test.
    const int w = n.c1 - n.c0 + 1, h = n.r1 - n.r0 + 1;
    BinaryMask on_contour(w, h, 0);
    for (const auto& q : contour) on_contour(q.row - n.r0, q.col - n.c0) = 1;

    std::vector<PixelCoord> nearest;
    for (const auto& p : interior) {
        auto dist2 = [&](int r, int c) { return (r - p.row) * (r - p.row) + (c - p.col) * (c - p.col); };
        int d2min = std::numeric_limits<int>::max();
        for (const auto& q : contour) d2min = std::min(d2min, dist2(q.row, q.col));
        const double cutoff = std::sqrt(static_cast<double>(d2min)) + kSkeletonTieTolerance;
        nearest.clear();
        for (const auto& q : contour) {
            const int dq = dist2(q.row, q.col);
            if (std::sqrt(static_cast<double>(dq)) > cutoff) continue;
            // A contour pixel with a closer contour neighbour is just the
            // discretised flank of another nearest point, not a distinct one.
            bool flank = false;
            for (const auto& o : kEightNeighborhood) {
                const int lr = q.row + o.drow - n.r0, lc = q.col + o.dcol - n.c0;
                if (on_contour.in_bounds(lr, lc) && on_contour(lr, lc) && dist2(q.row + o.drow, q.col + o.dcol) < dq) {
                    flank = true;
                    break;
                }
            }
            if (!flank) nearest.push_back({q.row - p.row, q.col - p.col});
        }
        bool opposite = false;
        for (std::size_t i = 0; i < nearest.size() && !opposite; ++i)
            for (std::size_t j = i + 1; j < nearest.size() && !opposite; ++j)
                opposite = nearest[i].row * nearest[j].row + nearest[i].col * nearest[j].col < 0;
        if (opposite) topo.skeleton.push_back(p);
    }

    if (topo.skeleton.empty()) {
        for (const auto& p : n.pixels)
            if (topo.depth(p.row - n.r0, p.col - n.c0) == topo.max_depth) topo.skeleton.push_back(p);
    }
    return topo;
}

}  // namespace

FloatMap distance_map(const LabelMap& labels) {
    FloatMap out(labels.width(), labels.height(), 0.0f);
    for (const Nucleus& n : group_nuclei(labels)) {
        int max_depth = 0;
        const Grid<int> depth = erosion_depth(n, max_depth);
        for (const auto& p : n.pixels)
            out(p.row, p.col) =
                static_cast<float>(static_cast<double>(depth(p.row - n.r0, p.col - n.c0)) / max_depth);
    }
    return out;
}

BinaryMask topo_skeleton(const LabelMap& labels) {
    BinaryMask out(labels.width(), labels.height(), 0);
    for (const Nucleus& n : group_nuclei(labels)) {
        for (const auto& p : analyse(n, labels).skeleton) out(p.row, p.col) = 1;
    }
    return out;
}

FloatMap skeleton_map(const LabelMap& labels) {
    FloatMap out(labels.width(), labels.height(), 0.0f);
    for (const Nucleus& n : group_nuclei(labels)) {
        const NucleusTopology topo = analyse(n, labels);
        for (const auto& p : n.pixels)
            out(p.row, p.col) =
                static_cast<float>(static_cast<double>(topo.depth(p.row - n.r0, p.col - n.c0)) / topo.max_depth);
        for (const auto& p : topo.skeleton) out(p.row, p.col) += 1.0f;
    }
    return out;
}

}  // namespace nucleoforge
