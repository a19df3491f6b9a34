#include "persense/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "persense/core.hpp"
#include "persense/stats.hpp"

namespace persense::metrics {

std::string to_string(DensityBin bin) {
    switch (bin) {
        case DensityBin::Low: return "Low";
        case DensityBin::Medium: return "Medium";
        default: return "High";
    }
}

double class_miou(const std::vector<InstanceMask>& pred_masks,
                  const std::vector<InstanceMask>& gt_masks) {
    int w = 0, h = 0;
    for (const auto& m : pred_masks) {
        w = m.mask.width();
        h = m.mask.height();
        break;
    }
    if (w == 0) {
        for (const auto& m : gt_masks) {
            w = m.mask.width();
            h = m.mask.height();
            break;
        }
    }
    if (w == 0) return 1.0;  // no predictions, no ground truth

    std::vector<BinaryGrid> pred, gt;
    for (const auto& m : pred_masks) pred.push_back(m.mask);
    for (const auto& m : gt_masks) gt.push_back(m.mask);
    return iou(union_masks(pred, w, h), union_masks(gt, w, h));
}

std::pair<double, double> count_errors(const std::vector<int>& pred, const std::vector<int>& gt) {
    if (pred.size() != gt.size()) throw std::invalid_argument("count_errors: length mismatch");
    if (pred.empty()) throw std::invalid_argument("count_errors: empty input");
    double abs_sum = 0.0, sq_sum = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred[i]) - static_cast<double>(gt[i]);
        abs_sum += std::abs(d);
        sq_sum += d * d;
    }
    const double n = static_cast<double>(pred.size());
    return {abs_sum / n, std::sqrt(sq_sum / n)};
}

DensityBin density_bin(int count) {
    if (count < 0) throw std::invalid_argument("density_bin: negative count");
    if (count <= 30) return DensityBin::Low;
    if (count <= 60) return DensityBin::Medium;
    return DensityBin::High;
}

std::pair<double, double> prompt_pr(const std::vector<ppsm::PointPrompt>& prompts,
                                    const std::vector<InstanceMask>& gt_masks) {
    if (prompts.empty()) return {1.0, 0.0};
    std::vector<char> claimed(gt_masks.size(), 0);
    int tp = 0;
    for (const auto& p : prompts) {
        for (size_t i = 0; i < gt_masks.size(); ++i) {
            if (claimed[i]) continue;
            const auto& m = gt_masks[i].mask;
            if (m.in_bounds(p.point.x, p.point.y) && m.at(p.point.x, p.point.y)) {
                claimed[i] = 1;
                ++tp;
                break;
            }
        }
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(prompts.size());
    const double recall =
        gt_masks.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(gt_masks.size());
    return {precision, recall};
}

double cv_scale(const std::vector<double>& areas) {
    if (areas.empty()) throw std::invalid_argument("cv_scale: empty area list");
    const double mu = stats::mean(areas);
    if (mu <= 0.0) throw std::invalid_argument("cv_scale: mean must be positive");
    return stats::population_std(areas) / mu;
}

double exceedance_probability(double mu, double sigma, double t) {
    if (sigma <= 0.0) throw std::invalid_argument("exceedance_probability: sigma must be positive");
    return 1.0 - stats::normal_cdf((t - mu) / sigma);
}

}  // namespace persense::metrics
