#include "persense/exemplar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "persense/stats.hpp"

namespace persense::exemplar {

namespace {

struct FeatureStats {
    std::vector<double> mu;
    std::vector<double> sigma;
};

FeatureStats feature_stats(const std::vector<ExemplarCandidate>& candidates) {
    const size_t d = candidates.front().feature.size();
    FeatureStats fs{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (const auto& c : candidates) {
        if (c.feature.size() != d)
            throw std::invalid_argument("feature dimensions differ across candidates");
        for (size_t j = 0; j < d; ++j) fs.mu[j] += c.feature[j];
    }
    for (size_t j = 0; j < d; ++j) fs.mu[j] /= static_cast<double>(candidates.size());
    for (const auto& c : candidates)
        for (size_t j = 0; j < d; ++j) {
            const double dv = c.feature[j] - fs.mu[j];
            fs.sigma[j] += dv * dv;
        }
    for (size_t j = 0; j < d; ++j)
        fs.sigma[j] = std::sqrt(fs.sigma[j] / static_cast<double>(candidates.size()));
    return fs;
}

std::vector<double> apply_zscore(const std::vector<double>& f, const FeatureStats& fs) {
    std::vector<double> out(f.size());
    for (size_t j = 0; j < f.size(); ++j)
        out[j] = fs.sigma[j] > 0.0 ? (f[j] - fs.mu[j]) / fs.sigma[j] : 0.0;
    return out;
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

bool better_candidate(const ExemplarCandidate& a, const ExemplarCandidate& b) {
    if (a.quality != b.quality) return a.quality > b.quality;
    if (a.area != b.area) return a.area > b.area;
    if (a.box.y0 != b.box.y0) return a.box.y0 < b.box.y0;
    return a.box.x0 < b.box.x0;
}

}  // namespace

std::vector<ExemplarCandidate> top_m_by_score(std::vector<ExemplarCandidate> candidates, int m) {
    if (m < 1) throw std::invalid_argument("top_m_by_score: m must be >= 1");
    std::stable_sort(candidates.begin(), candidates.end(), better_candidate);
    if (static_cast<size_t>(m) < candidates.size()) candidates.resize(static_cast<size_t>(m));
    return candidates;
}

std::vector<double> region_pool(const std::vector<ScalarGrid>& feature_grid, const BBox& box) {
    if (feature_grid.empty()) return {};
    const auto& first = feature_grid.front();
    for (const auto& ch : feature_grid)
        if (!ch.same_shape_as(first))
            throw std::invalid_argument("region_pool: channel dimensions differ");
    if (box.x0 < 0 || box.y0 < 0 || box.x1 >= first.width() || box.y1 >= first.height() ||
        box.x0 > box.x1 || box.y0 > box.y1)
        throw std::invalid_argument("region_pool: box out of bounds");

    std::vector<double> out(feature_grid.size(), 0.0);
    const double inv_area = 1.0 / static_cast<double>(box.area());
    for (size_t c = 0; c < feature_grid.size(); ++c) {
        double s = 0.0;
        for (int y = box.y0; y <= box.y1; ++y)
            for (int x = box.x0; x <= box.x1; ++x) s += feature_grid[c].at(x, y);
        out[c] = s * inv_area;
    }
    return out;
}

std::vector<ExemplarCandidate> normalize_features(std::vector<ExemplarCandidate> candidates) {
    if (candidates.empty()) throw std::invalid_argument("normalize_features: empty candidate list");
    const FeatureStats fs = feature_stats(candidates);
    for (auto& c : candidates) c.feature = apply_zscore(c.feature, fs);
    return candidates;
}

KmeansResult kmeans(const std::vector<std::vector<double>>& features, int k, std::uint64_t seed,
                    int max_iter) {
    const size_t n = features.size();
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    if (n < static_cast<size_t>(k)) throw std::invalid_argument("kmeans: fewer points than clusters");

    rng::SplitMix gen(seed);
    std::vector<std::vector<double>> centroids;
    centroids.reserve(static_cast<size_t>(k));

    // k-means++ style seeding: first center uniform, rest weighted by squared
    // distance to the nearest chosen center.
    centroids.push_back(features[gen.next_u64() % n]);
    std::vector<double> d2(n, 0.0);
    while (centroids.size() < static_cast<size_t>(k)) {
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (const auto& c : centroids) best = std::min(best, sq_dist(features[i], c));
            d2[i] = best;
            total += best;
        }
        size_t pick = 0;
        if (total > 0.0) {
            const double r = gen.next_double() * total;
            double acc = 0.0;
            for (size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = gen.next_u64() % n;  // all points identical
        }
        centroids.push_back(features[pick]);
    }

    std::vector<int> assign(n, 0);
    std::vector<double> history;
    double objective = 0.0;
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        objective = 0.0;
        for (size_t i = 0; i < n; ++i) {
            int best_j = 0;
            double best = sq_dist(features[i], centroids[0]);
            for (int j = 1; j < k; ++j) {
                const double d = sq_dist(features[i], centroids[static_cast<size_t>(j)]);
                if (d < best) {
                    best = d;
                    best_j = j;
                }
            }
            objective += best;
            if (assign[i] != best_j) {
                assign[i] = best_j;
                changed = true;
            }
        }
        history.push_back(objective);

        std::vector<std::vector<double>> next(static_cast<size_t>(k),
                                              std::vector<double>(features[0].size(), 0.0));
        std::vector<int> counts(static_cast<size_t>(k), 0);
        for (size_t i = 0; i < n; ++i) {
            auto& c = next[static_cast<size_t>(assign[i])];
            for (size_t j = 0; j < c.size(); ++j) c[j] += features[i][j];
            ++counts[static_cast<size_t>(assign[i])];
        }
        for (int j = 0; j < k; ++j) {
            if (counts[static_cast<size_t>(j)] > 0) {
                for (auto& v : next[static_cast<size_t>(j)])
                    v /= static_cast<double>(counts[static_cast<size_t>(j)]);
            } else {
                // Re-seed the empty cluster to the farthest point from its
                // assigned centroid.
                size_t far_i = 0;
                double far_d = -1.0;
                for (size_t i = 0; i < n; ++i) {
                    const double d =
                        sq_dist(features[i], centroids[static_cast<size_t>(assign[i])]);
                    if (d > far_d) {
                        far_d = d;
                        far_i = i;
                    }
                }
                next[static_cast<size_t>(j)] = features[far_i];
                assign[far_i] = j;
                changed = true;
            }
        }
        centroids = std::move(next);
        if (!changed) break;
    }

    // Final assignment against the converged centroids.
    objective = 0.0;
    for (size_t i = 0; i < n; ++i) {
        int best_j = 0;
        double best = sq_dist(features[i], centroids[0]);
        for (int j = 1; j < k; ++j) {
            const double d = sq_dist(features[i], centroids[static_cast<size_t>(j)]);
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        assign[i] = best_j;
        objective += best;
    }
    return KmeansResult{std::move(assign), std::move(centroids), objective, std::move(history)};
}

std::vector<ExemplarCandidate> filter_by_quality(const std::vector<ExemplarCandidate>& candidates,
                                                 double t_sam) {
    if (t_sam < 0.0 || t_sam > 1.0)
        throw std::invalid_argument("filter_by_quality: t_sam outside [0,1]");
    std::vector<ExemplarCandidate> out;
    for (const auto& c : candidates)
        if (c.quality >= t_sam) out.push_back(c);
    return out;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double weighted_score(const ExemplarCandidate& c, const std::vector<double>& centroid,
                      const std::vector<double>& ref, double mean_area, double mean_aspect,
                      const WeightConfig& w) {
    const double s_cent = cosine(c.feature, centroid);
    const double s_ref = cosine(c.feature, ref);
    const double d_area = std::abs(c.area - mean_area);
    const double d_aspect = std::abs(c.aspect - mean_aspect);
    return w.w1 * s_cent + w.w2 * s_ref - w.w3 * std::log1p(d_area) - w.w4 * d_aspect;
}

std::vector<ScaleBin> scale_bins(const std::vector<double>& areas, double p_lo, double p_hi) {
    if (areas.empty()) throw std::invalid_argument("scale_bins: empty area list");
    const double lo = stats::percentile(areas, p_lo);
    const double hi = stats::percentile(areas, p_hi);
    std::vector<ScaleBin> out;
    out.reserve(areas.size());
    for (double a : areas) {
        if (a <= lo)
            out.push_back(ScaleBin::small);
        else if (a <= hi)
            out.push_back(ScaleBin::medium);
        else
            out.push_back(ScaleBin::large);
    }
    return out;
}

std::vector<ExemplarCandidate> select_diverse(const std::vector<ExemplarCandidate>& candidates,
                                              const ExemplarCandidate& ref,
                                              const DiverseConfig& cfg) {
    if (candidates.empty()) throw std::invalid_argument("select_diverse: empty candidate list");

    const FeatureStats fs = feature_stats(candidates);
    std::vector<std::vector<double>> normalized;
    normalized.reserve(candidates.size());
    for (const auto& c : candidates) normalized.push_back(apply_zscore(c.feature, fs));
    const std::vector<double> ref_feature = apply_zscore(ref.feature, fs);

    const int k = std::min<int>(cfg.k_clusters, static_cast<int>(candidates.size()));
    const KmeansResult km = kmeans(normalized, k, cfg.seed, cfg.max_iter);

    // Quality filter runs after clustering so centroids reflect the full set.
    std::vector<size_t> kept;
    for (size_t i = 0; i < candidates.size(); ++i)
        if (candidates[i].quality >= cfg.t_sam) kept.push_back(i);
    if (kept.empty()) return top_m_by_score(candidates, 3);

    double mean_area = 0.0, mean_aspect = 0.0;
    std::vector<double> kept_areas;
    kept_areas.reserve(kept.size());
    for (size_t i : kept) {
        mean_area += candidates[i].area;
        mean_aspect += candidates[i].aspect;
        kept_areas.push_back(candidates[i].area);
    }
    mean_area /= static_cast<double>(kept.size());
    mean_aspect /= static_cast<double>(kept.size());

    const std::vector<ScaleBin> bins = scale_bins(kept_areas, cfg.p_lo, cfg.p_hi);

    std::vector<double> phi(kept.size());
    for (size_t j = 0; j < kept.size(); ++j) {
        const size_t i = kept[j];
        ExemplarCandidate scored = candidates[i];
        scored.feature = normalized[i];
        const auto& centroid = km.centroids[static_cast<size_t>(km.assignments[i])];
        phi[j] = weighted_score(scored, centroid, ref_feature, mean_area, mean_aspect,
                                cfg.weights);
    }

    std::vector<ExemplarCandidate> out;
    for (ScaleBin bin : {ScaleBin::small, ScaleBin::medium, ScaleBin::large}) {
        int best = -1;
        for (size_t j = 0; j < kept.size(); ++j) {
            if (bins[j] != bin) continue;
            if (best < 0 || phi[j] > phi[static_cast<size_t>(best)] ||
                (phi[j] == phi[static_cast<size_t>(best)] &&
                 better_candidate(candidates[kept[j]], candidates[kept[static_cast<size_t>(best)]])))
                best = static_cast<int>(j);
        }
        if (best >= 0) out.push_back(candidates[kept[static_cast<size_t>(best)]]);
    }
    return out;
}

}  // namespace persense::exemplar
