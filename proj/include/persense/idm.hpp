#pragma once

#include <vector>

#include "persense/grid.hpp"

namespace persense::idm {

// Filled 8-connected component of foreground pixels. Member and boundary
// lists are kept in row-major order so downstream results are reproducible.
struct Contour {
    std::vector<PixelPoint> members;
    std::vector<PixelPoint> boundary;  // members with a non-member 8-neighbor (or at grid edge)
    long long area = 0;                // = members.size()
    BBox bbox;
};

struct ContourStats {
    double mu = 0.0;      // mean contour area, px
    double sigma = 0.0;   // population std of areas, px
    double t_comp = 0.0;  // mu + 2*sigma
};

enum class CandidateSource { contour, peak };

struct CandidatePoint {
    PixelPoint point;
    CandidateSource source = CandidateSource::contour;
};

enum class IdmMode { contour, hybrid };

struct IdmConfig {
    int t_bin = 20;           // binarization threshold on the normalized gray map
    double frac_split = 0.5;  // distance-transform threshold as a fraction of the region max
    double alpha = 1.0;       // peak threshold T_peak = mu + alpha*sigma
    int peak_radius = 3;      // half-width of the local-max window
    int dedup_radius = 3;     // Chebyshev radius for peak-vs-contour dedup
    IdmMode mode = IdmMode::contour;
};

// pixel = 1 iff gray >= t. t outside [0,255] throws.
BinaryGrid binarize(const GrayGrid& gray, int t);

// 3x3 morphological erosion; out-of-bounds neighbors count as 0.
BinaryGrid erode3x3(const BinaryGrid& b);

// One Contour per 8-connected component, ordered row-major by the
// topmost-leftmost member pixel.
std::vector<Contour> extract_contours(const BinaryGrid& b);

// Gaussian model of the contour area distribution (population std).
// Empty list throws.
ContourStats contour_stats(const std::vector<Contour>& contours);

// 1 - Phi((t_comp - mu)/sigma); diagnostic only. sigma = 0 throws.
double composite_probability(double area, const ContourStats& stats);

// Euclidean distance from each member pixel to the nearest boundary pixel of
// the region; non-member pixels are 0.
ScalarGrid distance_transform(const BinaryGrid& b, const Contour& region);

// Threshold the region's distance transform at frac * max and return the
// 8-connected components of the survivors. A single surviving component
// returns the original region unchanged.
std::vector<Contour> split_composite(const Contour& region, const BinaryGrid& b, double frac);

struct Moments {
    double m00 = 0.0;
    double m10 = 0.0;
    double m01 = 0.0;
};

// Spatial moments of the region weighted by intensity.
Moments region_moments(const Contour& region, const GrayGrid& intensity);

// Intensity-weighted centroid, rounded half away from zero and clamped into
// the region's bounding box. eps = 1e-6 guards all-zero intensity.
PixelPoint centroid(const Contour& region, const GrayGrid& intensity);

// Local maxima above T_peak = mu + alpha*sigma (statistics over all pixels).
// A peak must strictly exceed every pixel in its (2*radius+1)^2 neighborhood.
std::vector<CandidatePoint> detect_peaks(const GrayGrid& gray, double alpha, int radius);

// Full instance-detection pass over a density map: contour path always, peak
// path unioned in hybrid mode with Chebyshev dedup against contour points.
std::vector<CandidatePoint> run_idm(const ScalarGrid& dm, const IdmConfig& cfg);

}  // namespace persense::idm
