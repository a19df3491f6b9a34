#pragma once

#include <vector>

#include "persense/grid.hpp"
#include "persense/idm.hpp"

// Serial reference implementations of the parallel kernels. Kept for tests
// (bit-exact equivalence with the OpenMP paths) and the benchmark target.
namespace persense::reference {

GrayGrid normalize_to_gray(const ScalarGrid& dm);

double iou(const BinaryGrid& a, const BinaryGrid& b);

BinaryGrid erode3x3(const BinaryGrid& b);

ScalarGrid distance_transform(const BinaryGrid& b, const idm::Contour& region);

std::vector<idm::CandidatePoint> detect_peaks(const GrayGrid& gray, double alpha, int radius);

// Sum of truncated Gaussians; centers/masses pairs, truncation at 4*sigma.
ScalarGrid render_blobs(int width, int height, const std::vector<PixelPoint>& centers,
                        const std::vector<double>& masses, double sigma);

}  // namespace persense::reference
