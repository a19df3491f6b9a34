#include "persense/idm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

#include "persense/core.hpp"
#include "persense/stats.hpp"

namespace persense::idm {

namespace {

constexpr int kNeighbors8[8][2] = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0},
                                   {1, 0},   {-1, 1}, {0, 1},  {1, 1}};

Contour finalize_contour(std::vector<PixelPoint> members, const BinaryGrid& occupancy) {
    std::sort(members.begin(), members.end());
    Contour c;
    c.area = static_cast<long long>(members.size());
    c.bbox = BBox{members.front().x, members.front().y, members.front().x, members.front().y};
    for (const auto& p : members) {
        c.bbox.x0 = std::min(c.bbox.x0, p.x);
        c.bbox.y0 = std::min(c.bbox.y0, p.y);
        c.bbox.x1 = std::max(c.bbox.x1, p.x);
        c.bbox.y1 = std::max(c.bbox.y1, p.y);
    }
    for (const auto& p : members) {
        bool edge = false;
        for (const auto& d : kNeighbors8) {
            const int nx = p.x + d[0];
            const int ny = p.y + d[1];
            if (!occupancy.in_bounds(nx, ny) || !occupancy.at(nx, ny)) {
                edge = true;
                break;
            }
        }
        if (edge) c.boundary.push_back(p);
    }
    c.members = std::move(members);
    return c;
}

// Components of the 1-pixels of `fg`, ordered by first row-major encounter.
std::vector<Contour> components_of(const BinaryGrid& fg) {
    const int w = fg.width();
    const int h = fg.height();
    std::vector<char> visited(fg.size(), 0);
    std::vector<Contour> out;
    std::vector<PixelPoint> stack;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            if (!fg.at(x, y) || visited[i]) continue;
            std::vector<PixelPoint> members;
            stack.clear();
            stack.push_back({x, y});
            visited[i] = 1;
            while (!stack.empty()) {
                const PixelPoint p = stack.back();
                stack.pop_back();
                members.push_back(p);
                for (const auto& d : kNeighbors8) {
                    const int nx = p.x + d[0];
                    const int ny = p.y + d[1];
                    if (!fg.in_bounds(nx, ny) || !fg.at(nx, ny)) continue;
                    const size_t ni = static_cast<size_t>(ny) * w + nx;
                    if (visited[ni]) continue;
                    visited[ni] = 1;
                    stack.push_back({nx, ny});
                }
            }
            out.push_back(finalize_contour(std::move(members), fg));
        }
    }
    return out;
}

}  // namespace

BinaryGrid binarize(const GrayGrid& gray, int t) {
    if (t < 0 || t > 255) throw std::invalid_argument("binarize: threshold outside [0,255]");
    BinaryGrid out(gray.width(), gray.height(), 0);
    const std::uint8_t* src = gray.data();
    std::uint8_t* dst = out.data();
    const long long n = static_cast<long long>(gray.size());
#pragma omp parallel for
    for (long long i = 0; i < n; ++i) dst[i] = src[i] >= t ? 1 : 0;
    return out;
}

BinaryGrid erode3x3(const BinaryGrid& b) {
    const int w = b.width();
    const int h = b.height();
    BinaryGrid out(w, h, 0);
#pragma omp parallel for
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::uint8_t v = 1;
            for (int dy = -1; dy <= 1 && v; ++dy) {
                for (int dx = -1; dx <= 1 && v; ++dx) {
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if (!b.in_bounds(nx, ny) || !b.at(nx, ny)) v = 0;
                }
            }
            out.at(x, y) = v;
        }
    }
    return out;
}

std::vector<Contour> extract_contours(const BinaryGrid& b) { return components_of(b); }

ContourStats contour_stats(const std::vector<Contour>& contours) {
    if (contours.empty()) throw std::invalid_argument("contour_stats: empty contour list");
    std::vector<double> areas;
    areas.reserve(contours.size());
    for (const auto& c : contours) areas.push_back(static_cast<double>(c.area));
    ContourStats s;
    s.mu = stats::mean(areas);
    s.sigma = stats::population_std(areas);
    s.t_comp = s.mu + 2.0 * s.sigma;
    return s;
}

double composite_probability(double area, const ContourStats& stats_in) {
    (void)area;  // filtering uses the hard threshold; this reports the tail mass
    if (stats_in.sigma <= 0.0)
        throw std::invalid_argument("composite_probability: degenerate distribution (sigma = 0)");
    const double z = (stats_in.t_comp - stats_in.mu) / stats_in.sigma;
    return 1.0 - stats::normal_cdf(z);
}

ScalarGrid distance_transform(const BinaryGrid& b, const Contour& region) {
    if (region.members.empty())
        throw std::invalid_argument("distance_transform: empty region");
    ScalarGrid out(b.width(), b.height(), 0.0);
    const auto& boundary = region.boundary;
    const long long m = static_cast<long long>(region.members.size());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < m; ++i) {
        const PixelPoint p = region.members[i];
        long long best = std::numeric_limits<long long>::max();
        for (const auto& q : boundary) {
            const long long dx = p.x - q.x;
            const long long dy = p.y - q.y;
            best = std::min(best, dx * dx + dy * dy);
        }
        out.at(p.x, p.y) = std::sqrt(static_cast<double>(best));
    }
    return out;
}

std::vector<Contour> split_composite(const Contour& region, const BinaryGrid& b, double frac) {
    if (region.members.empty()) return {region};
    const ScalarGrid dist = distance_transform(b, region);
    double max_d = 0.0;
    for (const auto& p : region.members) max_d = std::max(max_d, dist.at(p.x, p.y));
    const double threshold = frac * max_d;

    BinaryGrid survivors(b.width(), b.height(), 0);
    long long kept = 0;
    for (const auto& p : region.members) {
        if (dist.at(p.x, p.y) >= threshold) {
            survivors.at(p.x, p.y) = 1;
            ++kept;
        }
    }
    if (kept == 0) return {region};

    std::vector<Contour> children = components_of(survivors);
    if (children.size() <= 1) return {region};
    return children;
}

Moments region_moments(const Contour& region, const GrayGrid& intensity) {
    Moments m;
    for (const auto& p : region.members) {
        const double v = static_cast<double>(intensity.at(p.x, p.y));
        m.m00 += v;
        m.m10 += v * p.x;
        m.m01 += v * p.y;
    }
    return m;
}

PixelPoint centroid(const Contour& region, const GrayGrid& intensity) {
    if (region.members.empty()) throw std::invalid_argument("centroid: empty region");
    // The epsilon only guards all-zero intensity; a positive mass divides
    // exactly so half-pixel centroids round as stated.
    constexpr double kEps = 1e-6;
    const Moments m = region_moments(region, intensity);
    const double cx = m.m10 / std::max(m.m00, kEps);
    const double cy = m.m01 / std::max(m.m00, kEps);
    PixelPoint p{stats::round_half_away(cx), stats::round_half_away(cy)};
    p.x = std::clamp(p.x, region.bbox.x0, region.bbox.x1);
    p.y = std::clamp(p.y, region.bbox.y0, region.bbox.y1);
    return p;
}

std::vector<CandidatePoint> detect_peaks(const GrayGrid& gray, double alpha, int radius) {
    if (radius < 1) throw std::invalid_argument("detect_peaks: radius must be >= 1");
    const int w = gray.width();
    const int h = gray.height();
    std::vector<double> values(gray.values().begin(), gray.values().end());
    const double mu = stats::mean(values);
    const double sigma = stats::population_std(values);
    const double t_peak = mu + alpha * sigma;

    std::vector<char> is_peak(gray.size(), 0);
#pragma omp parallel for
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = static_cast<double>(gray.at(x, y));
            if (!(v > t_peak)) continue;
            bool strict_max = true;
            for (int dy = -radius; dy <= radius && strict_max; ++dy) {
                for (int dx = -radius; dx <= radius && strict_max; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if (!gray.in_bounds(nx, ny)) continue;
                    if (!(v > static_cast<double>(gray.at(nx, ny)))) strict_max = false;
                }
            }
            if (strict_max) is_peak[static_cast<size_t>(y) * w + x] = 1;
        }
    }

    std::vector<CandidatePoint> peaks;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (is_peak[static_cast<size_t>(y) * w + x])
                peaks.push_back({PixelPoint{x, y}, CandidateSource::peak});
    return peaks;
}

std::vector<CandidatePoint> run_idm(const ScalarGrid& dm, const IdmConfig& cfg) {
    const GrayGrid gray = normalize_to_gray(dm);
    const BinaryGrid binary = binarize(gray, cfg.t_bin);
    const BinaryGrid eroded = erode3x3(binary);
    const std::vector<Contour> contours = extract_contours(eroded);

    std::vector<CandidatePoint> out;
    if (!contours.empty()) {
        const ContourStats cs = contour_stats(contours);
        for (const auto& c : contours) {
            if (static_cast<double>(c.area) > cs.t_comp) {
                for (const auto& child : split_composite(c, eroded, cfg.frac_split))
                    out.push_back({centroid(child, gray), CandidateSource::contour});
            } else {
                out.push_back({centroid(c, gray), CandidateSource::contour});
            }
        }
    }

    if (cfg.mode == IdmMode::hybrid) {
        const size_t n_contour = out.size();
        for (const auto& peak : detect_peaks(gray, cfg.alpha, cfg.peak_radius)) {
            bool duplicate = false;
            for (size_t i = 0; i < n_contour && !duplicate; ++i) {
                const int dx = std::abs(peak.point.x - out[i].point.x);
                const int dy = std::abs(peak.point.y - out[i].point.y);
                if (std::max(dx, dy) <= cfg.dedup_radius) duplicate = true;
            }
            if (!duplicate) out.push_back(peak);
        }
    }
    return out;
}

}  // namespace persense::idm
