#pragma once

#include <vector>

#include "persense/grid.hpp"

namespace persense::imrm {

struct AreaStats {
    double q1 = 0.0;
    double q3 = 0.0;
    double iqr = 0.0;
    double t_iqr = 0.0;      // q3 + 2*iqr
    double mu_maj = 0.0;     // majority-cluster mean
    double sigma_maj = 0.0;  // majority-cluster population std
    double t_final = 0.0;    // (mu_maj + 2*sigma_maj) + t_iqr
};

// IQR cutoff plus majority-cluster statistics from a deterministic 1-D
// 2-means (initialized at min/max; a size tie picks the smaller-mean
// cluster). Fewer than 2 areas throws.
AreaStats area_stats(const std::vector<double>& areas);

// True iff the mask's tight bounding box overlaps some detection box with
// IoU >= iou_min.
bool rescue_by_detection(const InstanceMask& mask, const std::vector<Detection>& detections,
                         double iou_min);

// Retains masks with area <= t_final or a detection rescue; order preserved.
// Fewer than 2 masks are returned unchanged.
std::vector<InstanceMask> filter_masks(const std::vector<InstanceMask>& masks,
                                       const std::vector<Detection>& detections, double iou_min);

}  // namespace persense::imrm
