#include "persense/imrm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "persense/core.hpp"
#include "persense/stats.hpp"

namespace persense::imrm {

namespace {

// Deterministic 1-D 2-means initialized at (min, max). Returns the majority
// cluster's members; a size tie picks the cluster with the smaller mean.
std::vector<double> majority_cluster(const std::vector<double>& areas) {
    const auto [lo_it, hi_it] = std::minmax_element(areas.begin(), areas.end());
    double c0 = *lo_it;
    double c1 = *hi_it;
    std::vector<char> assign(areas.size(), 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (size_t i = 0; i < areas.size(); ++i) {
            const char a = std::abs(areas[i] - c0) <= std::abs(areas[i] - c1) ? 0 : 1;
            if (a != assign[i]) {
                assign[i] = a;
                changed = true;
            }
        }
        double s0 = 0.0, s1 = 0.0;
        int n0 = 0, n1 = 0;
        for (size_t i = 0; i < areas.size(); ++i) {
            if (assign[i] == 0) {
                s0 += areas[i];
                ++n0;
            } else {
                s1 += areas[i];
                ++n1;
            }
        }
        if (n0 > 0) c0 = s0 / n0;
        if (n1 > 0) c1 = s1 / n1;
        if (!changed) break;
    }

    std::vector<double> cluster0, cluster1;
    for (size_t i = 0; i < areas.size(); ++i)
        (assign[i] == 0 ? cluster0 : cluster1).push_back(areas[i]);
    if (cluster0.empty()) return cluster1;
    if (cluster1.empty()) return cluster0;
    if (cluster0.size() != cluster1.size())
        return cluster0.size() > cluster1.size() ? cluster0 : cluster1;
    // Size tie: valid objects are assumed smaller than background blobs.
    return stats::mean(cluster0) <= stats::mean(cluster1) ? cluster0 : cluster1;
}

}  // namespace

AreaStats area_stats(const std::vector<double>& areas) {
    if (areas.size() < 2) throw std::invalid_argument("area_stats: need at least 2 areas");
    AreaStats s;
    s.q1 = stats::percentile(areas, 25.0);
    s.q3 = stats::percentile(areas, 75.0);
    s.iqr = s.q3 - s.q1;
    s.t_iqr = s.q3 + 2.0 * s.iqr;
    const std::vector<double> maj = majority_cluster(areas);
    s.mu_maj = stats::mean(maj);
    s.sigma_maj = stats::population_std(maj);
    s.t_final = (s.mu_maj + 2.0 * s.sigma_maj) + s.t_iqr;
    return s;
}

bool rescue_by_detection(const InstanceMask& mask, const std::vector<Detection>& detections,
                         double iou_min) {
    if (iou_min <= 0.0 || iou_min > 1.0)
        throw std::invalid_argument("rescue_by_detection: iou_min outside (0,1]");
    const auto box = tight_bbox(mask.mask);
    if (!box) return false;
    for (const auto& d : detections)
        if (box_iou(*box, d.box) >= iou_min) return true;
    return false;
}

std::vector<InstanceMask> filter_masks(const std::vector<InstanceMask>& masks,
                                       const std::vector<Detection>& detections, double iou_min) {
    if (masks.size() < 2) return masks;
    std::vector<double> areas;
    areas.reserve(masks.size());
    for (const auto& m : masks) areas.push_back(static_cast<double>(m.area));
    const AreaStats s = area_stats(areas);

    std::vector<InstanceMask> out;
    for (const auto& m : masks) {
        if (static_cast<double>(m.area) <= s.t_final ||
            rescue_by_detection(m, detections, iou_min))
            out.push_back(m);
    }
    return out;
}

}  // namespace persense::imrm
