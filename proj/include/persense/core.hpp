#pragma once

#include <optional>

#include "persense/grid.hpp"

namespace persense {

// Min-max normalization to [0,255], rounding half away from zero.
// A flat input maps to all zeros.
GrayGrid normalize_to_gray(const ScalarGrid& dm);

// |a AND b| / |a OR b|. Both masks empty -> 1.0. Dimension mismatch throws.
double iou(const BinaryGrid& a, const BinaryGrid& b);

// Tight bounding box of the 1-pixels; empty mask -> nullopt.
std::optional<BBox> tight_bbox(const BinaryGrid& mask);

// Pixelwise OR of masks sharing one shape.
BinaryGrid union_masks(const std::vector<BinaryGrid>& masks, int width, int height);

// Box-vs-box IoU with inclusive pixel bounds.
double box_iou(const BBox& a, const BBox& b);

}  // namespace persense
