#include "persense/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "persense/stats.hpp"

namespace persense::reference {

GrayGrid normalize_to_gray(const ScalarGrid& dm) {
    double lo = dm.values()[0];
    double hi = dm.values()[0];
    for (double v : dm.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    GrayGrid out(dm.width(), dm.height(), 0);
    if (hi == lo) return out;
    const double scale = 255.0 / (hi - lo);
    for (size_t i = 0; i < dm.size(); ++i)
        out.data()[i] = static_cast<std::uint8_t>(stats::round_half_away((dm.data()[i] - lo) * scale));
    return out;
}

double iou(const BinaryGrid& a, const BinaryGrid& b) {
    long long inter = 0, uni = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        inter += a.data()[i] & b.data()[i];
        uni += a.data()[i] | b.data()[i];
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

BinaryGrid erode3x3(const BinaryGrid& b) {
    BinaryGrid out(b.width(), b.height(), 0);
    for (int y = 0; y < b.height(); ++y) {
        for (int x = 0; x < b.width(); ++x) {
            std::uint8_t v = 1;
            for (int dy = -1; dy <= 1 && v; ++dy)
                for (int dx = -1; dx <= 1 && v; ++dx) {
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if (!b.in_bounds(nx, ny) || !b.at(nx, ny)) v = 0;
                }
            out.at(x, y) = v;
        }
    }
    return out;
}

ScalarGrid distance_transform(const BinaryGrid& b, const idm::Contour& region) {
    ScalarGrid out(b.width(), b.height(), 0.0);
    for (const auto& p : region.members) {
        long long best = std::numeric_limits<long long>::max();
        for (const auto& q : region.boundary) {
            const long long dx = p.x - q.x;
            const long long dy = p.y - q.y;
            best = std::min(best, dx * dx + dy * dy);
        }
        out.at(p.x, p.y) = std::sqrt(static_cast<double>(best));
    }
    return out;
}

std::vector<idm::CandidatePoint> detect_peaks(const GrayGrid& gray, double alpha, int radius) {
    std::vector<double> values(gray.values().begin(), gray.values().end());
    const double mu = stats::mean(values);
    const double sigma = stats::population_std(values);
    const double t_peak = mu + alpha * sigma;

    std::vector<idm::CandidatePoint> peaks;
    for (int y = 0; y < gray.height(); ++y) {
        for (int x = 0; x < gray.width(); ++x) {
            const double v = static_cast<double>(gray.at(x, y));
            if (!(v > t_peak)) continue;
            bool strict_max = true;
            for (int dy = -radius; dy <= radius && strict_max; ++dy)
                for (int dx = -radius; dx <= radius && strict_max; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if (!gray.in_bounds(nx, ny)) continue;
                    if (!(v > static_cast<double>(gray.at(nx, ny)))) strict_max = false;
                }
            if (strict_max) peaks.push_back({PixelPoint{x, y}, idm::CandidateSource::peak});
        }
    }
    return peaks;
}

ScalarGrid render_blobs(int width, int height, const std::vector<PixelPoint>& centers,
                        const std::vector<double>& masses, double sigma) {
    ScalarGrid out(width, height, 0.0);
    const double cutoff_sq = 16.0 * sigma * sigma;
    const int reach = static_cast<int>(std::ceil(4.0 * sigma));
    const double coef = 1.0 / (2.0 * M_PI * sigma * sigma);
    const double inv_two_sq = 1.0 / (2.0 * sigma * sigma);
    for (int y = 0; y < height; ++y) {
        for (size_t i = 0; i < centers.size(); ++i) {
            const int dy = y - centers[i].y;
            if (dy < -reach || dy > reach) continue;
            const int x0 = std::max(0, centers[i].x - reach);
            const int x1 = std::min(width - 1, centers[i].x + reach);
            for (int x = x0; x <= x1; ++x) {
                const int dx = x - centers[i].x;
                const double d2 = static_cast<double>(dx) * dx + static_cast<double>(dy) * dy;
                if (d2 > cutoff_sq) continue;
                out.at(x, y) += masses[i] * coef * std::exp(-d2 * inv_two_sq);
            }
        }
    }
    return out;
}

}  // namespace persense::reference
