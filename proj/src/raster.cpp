#include "nucleoforge/raster.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace nucleoforge {

namespace {

void check_unit_interval(const std::vector<double>& data) {
    for (double v : data) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw PreconditionError("intensity " + std::to_string(v) + " outside [0,1]");
    }
}

}  // namespace

GrayImage::GrayImage(int width, int height, double fill) : pixels_(width, height, fill) {
    if (!std::isfinite(fill) || fill < 0.0 || fill > 1.0) throw PreconditionError("fill value outside [0,1]");
}

GrayImage::GrayImage(int width, int height, std::vector<double> data) : pixels_(width, height, std::move(data)) {
    check_unit_interval(pixels_.values());
}

GrayImage GrayImage::clamped(int width, int height, std::vector<double> data) {
    for (double& v : data) {
        if (!std::isfinite(v)) throw PreconditionError("non-finite intensity");
        v = std::clamp(v, 0.0, 1.0);
    }
    return GrayImage(width, height, std::move(data));
}

void GrayImage::set(int row, int col, double value) {
    if (!std::isfinite(value) || value < 0.0 || value > 1.0)
        throw PreconditionError("intensity " + std::to_string(value) + " outside [0,1]");
    pixels_(row, col) = value;
}

RgbImage::RgbImage(int width, int height, std::vector<double> interleaved)
    : width_(width), height_(height), data_(std::move(interleaved)) {
    if (width < 0 || height < 0) throw PreconditionError("image dimensions must be non-negative");
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3)
        throw DimensionMismatch("RGB data length does not match 3*width*height");
    check_unit_interval(data_);
}

std::array<double, 3> RgbImage::pixel(int row, int col) const noexcept {
    const std::size_t i = (static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + col) * 3;
    return {data_[i], data_[i + 1], data_[i + 2]};
}

ContourSet::ContourSet(int width, int height, std::vector<ContourEntry> entries)
    : entries_(std::move(entries)), membership_(width, height, 0) {
    for (const auto& e : entries_) {
        if (!membership_.in_bounds(e.coord.row, e.coord.col))
            throw PreconditionError("contour coordinate (" + std::to_string(e.coord.row) + "," +
                                    std::to_string(e.coord.col) + ") out of bounds");
        auto& slot = membership_(e.coord.row, e.coord.col);
        if (slot != 0)
            throw PreconditionError("duplicate contour coordinate (" + std::to_string(e.coord.row) + "," +
                                    std::to_string(e.coord.col) + ")");
        slot = 1;
    }
}

bool ContourSet::consistent_with(const LabelMap& labels) const {
    if (!labels.same_shape(membership_)) return false;
    for (const auto& e : entries_) {
        if (e.label == 0 || labels(e.coord.row, e.coord.col) != e.label) return false;
    }
    return true;
}

GrayImage to_grayscale(const RgbImage& img) {
    std::vector<double> out(static_cast<std::size_t>(img.width()) * img.height());
    const auto src = img.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double y = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
        out[i] = std::clamp(y, 0.0, 1.0);
    }
    return GrayImage(img.width(), img.height(), std::move(out));
}

BinaryMask erode_once(const BinaryMask& mask, Connectivity conn) {
    BinaryMask out(mask.width(), mask.height(), 0);
    for (int r = 0; r < mask.height(); ++r) {
        for (int c = 0; c < mask.width(); ++c) {
            if (!mask(r, c)) continue;
            bool keep = true;
            auto probe = [&](const auto& nbhd) {
                for (const auto& o : nbhd) {
                    const int rr = r + o.drow, cc = c + o.dcol;
                    if (!mask.in_bounds(rr, cc) || !mask(rr, cc)) {
                        keep = false;
                        return;
                    }
                }
            };
            if (conn == Connectivity::kFour) probe(kFourNeighborhood);
            else probe(kEightNeighborhood);
            out(r, c) = keep ? 1 : 0;
        }
    }
    return out;
}

LabelMap connected_components(const BinaryMask& mask, Connectivity conn) {
    LabelMap labels(mask.width(), mask.height(), 0);
    std::uint32_t next = 0;
    std::queue<PixelCoord> frontier;
    const auto visit = [&](const auto& nbhd) {
        while (!frontier.empty()) {
            const PixelCoord p = frontier.front();
            frontier.pop();
            for (const auto& o : nbhd) {
                const int rr = p.row + o.drow, cc = p.col + o.dcol;
                if (mask.in_bounds(rr, cc) && mask(rr, cc) && labels(rr, cc) == 0) {
                    labels(rr, cc) = next;
                    frontier.push({rr, cc});
                }
            }
        }
    };
    for (int r = 0; r < mask.height(); ++r) {
        for (int c = 0; c < mask.width(); ++c) {
            if (!mask(r, c) || labels(r, c) != 0) continue;
            labels(r, c) = ++next;
            frontier.push({r, c});
            if (conn == Connectivity::kFour) visit(kFourNeighborhood);
            else visit(kEightNeighborhood);
        }
    }
    return labels;
}

ContourSet extract_contours(const LabelMap& labels) {
    std::vector<ContourEntry> entries;
    for (int r = 0; r < labels.height(); ++r) {
        for (int c = 0; c < labels.width(); ++c) {
            const std::uint32_t l = labels(r, c);
            if (l == 0) continue;
            for (const auto& o : kFourNeighborhood) {
                const int rr = r + o.drow, cc = c + o.dcol;
                if (!labels.in_bounds(rr, cc) || labels(rr, cc) != l) {
                    entries.push_back({{r, c}, l});
                    break;
                }
            }
        }
    }
    return ContourSet(labels.width(), labels.height(), std::move(entries));
}

BinaryMask binarize(const LabelMap& labels) {
    BinaryMask out(labels.width(), labels.height(), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) out.data()[i] = labels.data()[i] != 0 ? 1 : 0;
    return out;
}

}  // namespace nucleoforge
