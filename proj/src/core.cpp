#include "persense/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "persense/stats.hpp"

namespace persense {

InstanceMask make_instance_mask(BinaryGrid mask, double quality) {
    long long area = 0;
    for (auto v : mask.values()) area += v;
    return InstanceMask{std::move(mask), area, quality};
}

GrayGrid normalize_to_gray(const ScalarGrid& dm) {
    double lo = dm.values()[0];
    double hi = dm.values()[0];
    const double* src = dm.data();
    const long long n = static_cast<long long>(dm.size());
#pragma omp parallel for reduction(min : lo) reduction(max : hi)
    for (long long i = 0; i < n; ++i) {
        lo = std::min(lo, src[i]);
        hi = std::max(hi, src[i]);
    }

    GrayGrid out(dm.width(), dm.height(), 0);
    if (hi == lo) return out;  // degenerate flat input

    const double scale = 255.0 / (hi - lo);
    std::uint8_t* dst = out.data();
#pragma omp parallel for
    for (long long i = 0; i < n; ++i) {
        dst[i] = static_cast<std::uint8_t>(stats::round_half_away((src[i] - lo) * scale));
    }
    return out;
}

double iou(const BinaryGrid& a, const BinaryGrid& b) {
    if (!a.same_shape_as(b)) throw std::invalid_argument("iou: dimension mismatch");
    long long inter = 0;
    long long uni = 0;
    const std::uint8_t* pa = a.data();
    const std::uint8_t* pb = b.data();
    const long long n = static_cast<long long>(a.size());
#pragma omp parallel for reduction(+ : inter, uni)
    for (long long i = 0; i < n; ++i) {
        inter += pa[i] & pb[i];
        uni += pa[i] | pb[i];
    }
    if (uni == 0) return 1.0;  // nothing to find, nothing found
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::optional<BBox> tight_bbox(const BinaryGrid& mask) {
    int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.at(x, y)) continue;
            x0 = std::min(x0, x);
            y0 = std::min(y0, y);
            x1 = std::max(x1, x);
            y1 = std::max(y1, y);
        }
    }
    if (x1 < 0) return std::nullopt;
    return BBox{x0, y0, x1, y1};
}

BinaryGrid union_masks(const std::vector<BinaryGrid>& masks, int width, int height) {
    BinaryGrid out(width, height, 0);
    for (const auto& m : masks) {
        if (m.width() != width || m.height() != height)
            throw std::invalid_argument("union_masks: dimension mismatch");
        std::uint8_t* dst = out.data();
        const std::uint8_t* src = m.data();
        const long long n = static_cast<long long>(out.size());
#pragma omp parallel for
        for (long long i = 0; i < n; ++i) dst[i] |= src[i];
    }
    return out;
}

double box_iou(const BBox& a, const BBox& b) {
    const int ix0 = std::max(a.x0, b.x0);
    const int iy0 = std::max(a.y0, b.y0);
    const int ix1 = std::min(a.x1, b.x1);
    const int iy1 = std::min(a.y1, b.y1);
    if (ix0 > ix1 || iy0 > iy1) return 0.0;
    const long long inter = static_cast<long long>(ix1 - ix0 + 1) * (iy1 - iy0 + 1);
    const long long uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace persense
