#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nucleoforge/errors.hpp"

namespace nucleoforge {

/// Row-major 2-D grid. Coordinates are (row, col); row 0 is the top.
template <typename T>
class Grid {
public:
    using value_type = T;

    Grid() = default;
    Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
        if (width < 0 || height < 0) throw PreconditionError("grid dimensions must be non-negative");
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }
    Grid(int width, int height, std::vector<T> data) : width_(width), height_(height), data_(std::move(data)) {
        if (width < 0 || height < 0) throw PreconditionError("grid dimensions must be non-negative");
        if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw DimensionMismatch("grid data length " + std::to_string(data_.size()) + " != " +
                                    std::to_string(width) + "x" + std::to_string(height));
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    bool in_bounds(int row, int col) const noexcept {
        return row >= 0 && col >= 0 && row < height_ && col < width_;
    }
    std::size_t index(int row, int col) const noexcept {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
    }

    T& operator()(int row, int col) noexcept { return data_[index(row, col)]; }
    const T& operator()(int row, int col) const noexcept { return data_[index(row, col)]; }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    const std::vector<T>& values() const noexcept { return data_; }

    template <typename U>
    bool same_shape(const Grid<U>& other) const noexcept {
        return width_ == other.width() && height_ == other.height();
    }

    bool operator==(const Grid&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using BinaryMask = Grid<std::uint8_t>;
using LabelMap = Grid<std::uint32_t>;
/// Real-valued map (distance maps, skeleton maps, gradients). Stored as
/// float so that PFM serialization is lossless.
using FloatMap = Grid<float>;

/// Single-channel intensity image with every value finite and in [0,1].
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, double fill = 0.0);
    GrayImage(int width, int height, std::vector<double> data);

    /// Values are clamped into [0,1]; non-finite values are rejected.
    static GrayImage clamped(int width, int height, std::vector<double> data);

    int width() const noexcept { return pixels_.width(); }
    int height() const noexcept { return pixels_.height(); }
    std::size_t size() const noexcept { return pixels_.size(); }
    bool in_bounds(int row, int col) const noexcept { return pixels_.in_bounds(row, col); }

    double operator()(int row, int col) const noexcept { return pixels_(row, col); }
    void set(int row, int col, double value);

    std::span<const double> data() const noexcept { return pixels_.data(); }
    const Grid<double>& grid() const noexcept { return pixels_; }

    bool operator==(const GrayImage&) const = default;

private:
    Grid<double> pixels_;
};

/// Three-channel image, channels interleaved (R, G, B), values in [0,1].
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height, std::vector<double> interleaved);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::array<double, 3> pixel(int row, int col) const noexcept;
    std::span<const double> data() const noexcept { return data_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

struct PixelCoord {
    int row = 0;
    int col = 0;
    auto operator<=>(const PixelCoord&) const = default;
};

struct NeighborOffset {
    int drow;
    int dcol;
    double dist;  // Euclidean distance between pixel centres
};

/// The eight nearest neighbours, axis offsets first.
inline constexpr std::array<NeighborOffset, 8> kEightNeighborhood{{
    {-1, 0, 1.0},
    {1, 0, 1.0},
    {0, -1, 1.0},
    {0, 1, 1.0},
    {-1, -1, 1.4142135623730951},
    {-1, 1, 1.4142135623730951},
    {1, -1, 1.4142135623730951},
    {1, 1, 1.4142135623730951},
}};

inline constexpr std::array<NeighborOffset, 4> kFourNeighborhood{{
    {-1, 0, 1.0},
    {1, 0, 1.0},
    {0, -1, 1.0},
    {0, 1, 1.0},
}};

enum class Connectivity { kFour = 4, kEight = 8 };

struct ContourEntry {
    PixelCoord coord;
    std::uint32_t label = 0;
};

/// Set of contour pixel coordinates with owning labels. Keeps a membership
/// raster so that neighbour lookups are O(1).
class ContourSet {
public:
    ContourSet() = default;
    /// Throws PreconditionError on out-of-bounds or duplicate coordinates.
    ContourSet(int width, int height, std::vector<ContourEntry> entries);

    int width() const noexcept { return membership_.width(); }
    int height() const noexcept { return membership_.height(); }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const std::vector<ContourEntry>& entries() const noexcept { return entries_; }

    /// False for out-of-bounds coordinates.
    bool contains(int row, int col) const noexcept {
        return membership_.in_bounds(row, col) && membership_(row, col) != 0;
    }
    bool contains(PixelCoord p) const noexcept { return contains(p.row, p.col); }

    /// Checks that each entry is a foreground pixel of its owning label.
    bool consistent_with(const LabelMap& labels) const;

private:
    std::vector<ContourEntry> entries_;
    BinaryMask membership_;
};

/// Rec. 601 luma.
GrayImage to_grayscale(const RgbImage& img);

/// One step of binary erosion with a cross (4) or square (8) structuring
/// element. Out-of-bounds pixels count as background.
BinaryMask erode_once(const BinaryMask& mask, Connectivity conn);

/// Labels 1..K assigned in raster order of each component's first pixel.
LabelMap connected_components(const BinaryMask& mask, Connectivity conn);

/// Foreground pixels with a 4-neighbour that is background, out of bounds,
/// or owned by another label. Entries are in raster order.
ContourSet extract_contours(const LabelMap& labels);

BinaryMask binarize(const LabelMap& labels);

}  // namespace nucleoforge
