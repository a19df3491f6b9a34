#pragma once

#include <cstdint>
#include <vector>

#include "persense/grid.hpp"

namespace persense::exemplar {

struct ExemplarCandidate {
    BBox box;
    InstanceMask mask;
    double quality = 0.0;         // decoder mask score
    std::vector<double> feature;  // region-pooled feature vector
    double area = 0.0;            // box area, px
    double aspect = 1.0;          // box width / height
};

struct WeightConfig {
    double w1 = 1.0;  // cosine to own cluster centroid
    double w2 = 1.0;  // cosine to reference exemplar
    double w3 = 1.0;  // log(1 + |area deviation|)
    double w4 = 1.0;  // |aspect deviation|
};

enum class ScaleBin { small, medium, large };

struct DiverseConfig {
    double t_sam = 0.8;
    int k_clusters = 3;
    WeightConfig weights;
    std::uint64_t seed = 0;
    double p_lo = 33.0;
    double p_hi = 66.0;
    int max_iter = 100;
};

// The m highest-quality candidates; ties broken by larger area, then
// row-major box origin. Fewer than m candidates returns them all.
std::vector<ExemplarCandidate> top_m_by_score(std::vector<ExemplarCandidate> candidates, int m);

// Per-channel mean over the box pixels. Box out of bounds throws.
std::vector<double> region_pool(const std::vector<ScalarGrid>& feature_grid, const BBox& box);

// Per-dimension population z-score across the candidate set; zero-variance
// dimensions map to 0. Empty input throws.
std::vector<ExemplarCandidate> normalize_features(std::vector<ExemplarCandidate> candidates);

struct KmeansResult {
    std::vector<int> assignments;
    std::vector<std::vector<double>> centroids;
    double objective = 0.0;
    std::vector<double> objective_history;  // one entry per Lloyd iteration
};

// Lloyd iterations from k-means++-style seeding; deterministic per seed.
// Empty clusters are re-seeded to the farthest point. |features| < k throws.
KmeansResult kmeans(const std::vector<std::vector<double>>& features, int k, std::uint64_t seed,
                    int max_iter = 100);

// Keeps candidates with quality >= t_sam, preserving order.
std::vector<ExemplarCandidate> filter_by_quality(const std::vector<ExemplarCandidate>& candidates,
                                                 double t_sam);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

// Phi = w1*cos(f, centroid) + w2*cos(f, ref) - w3*log(1+|area-mean_area|)
//       - w4*|aspect-mean_aspect|
double weighted_score(const ExemplarCandidate& c, const std::vector<double>& centroid,
                      const std::vector<double>& ref, double mean_area, double mean_aspect,
                      const WeightConfig& w);

// Percentile bins over the candidate areas: <=P_lo small, <=P_hi medium,
// else large.
std::vector<ScaleBin> scale_bins(const std::vector<double>& areas, double p_lo = 33.0,
                                 double p_hi = 66.0);

// Diversity-aware selection: normalize -> cluster -> quality filter ->
// weighted score -> one argmax per nonempty scale bin (at most 3). When the
// quality filter empties the set, falls back to top_m_by_score(candidates, 3).
std::vector<ExemplarCandidate> select_diverse(const std::vector<ExemplarCandidate>& candidates,
                                              const ExemplarCandidate& ref,
                                              const DiverseConfig& cfg);

}  // namespace persense::exemplar
