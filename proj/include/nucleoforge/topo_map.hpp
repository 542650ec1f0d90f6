#pragma once

#include "nucleoforge/raster.hpp"

namespace nucleoforge {

/// Per-nucleus normalised erosion depth. Each nucleus is eroded on its own
/// with a 4-connected cross (other labels and the image border act as
/// background); a pixel removed at iteration t gets t / t_max, so contour
/// pixels of an n-iteration nucleus get 1/n and the innermost pixels 1.
/// Background is 0.
FloatMap distance_map(const LabelMap& labels);

/// Discrete medial axis, computed per nucleus by brute force over its
/// contour pixels.
///
/// A pixel belongs to the skeleton when its nearest contour pixels (all
/// those within 0.5 px of the minimum Euclidean distance) include two whose
/// directions from the pixel differ by more than 90 degrees. Only contour
/// pixels that are local distance minima along the contour count as
/// nearest points; their closer-neighboured flanks are discretisation
/// artefacts of the same point. Contour pixels themselves never qualify.
///
/// A nucleus too thin to have such pixels (every pixel a contour pixel, e.g.
/// 1- or 2-pixel-wide shapes) falls back to its deepest pixels by erosion
/// depth, so every nucleus has a nonempty skeleton.
BinaryMask topo_skeleton(const LabelMap& labels);

/// distance_map + skeleton indicator; values in [0,2].
FloatMap skeleton_map(const LabelMap& labels);

/// Tie tolerance used by topo_skeleton, in pixels.
inline constexpr double kSkeletonTieTolerance = 0.5;


}  // namespace nucleoforge
