#pragma once

#include <cstdint>
#include <vector>

#include "nucleoforge/raster.hpp"

namespace nucleoforge {

struct MatchedPair {
    std::uint32_t gt = 0;
    std::uint32_t pred = 0;
    double iou = 0.0;
};

/// Instance matching at IoU > 0.5. Labels in each list ascend.
struct MatchResult {
    std::vector<MatchedPair> pairs;  // ordered by gt label
    std::vector<std::uint32_t> unmatched_gt;
    std::vector<std::uint32_t> unmatched_pred;
};

struct SegReport {
    double dq = 0.0;
    double sq = 0.0;
    double pq = 0.0;
    double aji = 0.0;
};

struct WatershedParams {
    /// Depth of the h-maxima transform that selects markers, in pixels.
    double h = 1.0;
};

void validate(const WatershedParams& params);

/// All (gt, pred) pairs with IoU strictly above 0.5; such pairs are unique.
/// Throws DimensionMismatch.
MatchResult iou_matching(const LabelMap& pred, const LabelMap& gt);

struct DetectionQuality {
    double dq = 0.0;
    double sq = 0.0;
    double pq = 0.0;
};

/// DQ = TP / (TP + FP/2 + FN/2), SQ = mean matched IoU, PQ = DQ * SQ.
/// Both maps empty scores (1, 1, 1).
DetectionQuality dq_sq_pq(const MatchResult& m);

/// Aggregated Jaccard index. Ground-truth nuclei are visited in ascending
/// label order; each takes the still-unused prediction with the highest IoU
/// (ties to the smaller label). Both maps empty scores 1. Throws
/// DimensionMismatch.
double aji(const LabelMap& pred, const LabelMap& gt);

SegReport seg_report(const LabelMap& pred, const LabelMap& gt);

/// Exact Euclidean distance from each foreground pixel to the nearest
/// background pixel, with everything outside the image counted as
/// background. Background pixels get 0.
Grid<double> euclidean_distance_transform(const BinaryMask& mask);

/// Marker-controlled watershed on the negated distance transform. Markers
/// are the 8-connected regional maxima of the h-maxima transform; flooding
/// visits higher distances first, ties in row-major order. Every foreground
/// pixel receives a label (no watershed lines); labels are numbered in
/// raster order of their markers.
LabelMap watershed_split(const BinaryMask& mask, const WatershedParams& params = {});

}  // namespace nucleoforge
