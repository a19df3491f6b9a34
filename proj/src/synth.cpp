#include "persense/synth.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "persense/core.hpp"
#include "persense/persist.hpp"
#include "persense/stats.hpp"

namespace persense::synth {

namespace {

constexpr int kAttemptBudget = 100000;
constexpr int kHotspotMinInstanceDist = 30;
constexpr int kHotspotMinPairDist = 20;
constexpr int kHotspotMargin = 12;
// Non-overlapping scenes keep blob maxima pairs outside the dedup radius.
constexpr int kMinCenterSeparation = 9;
// Ghost injection: floor(H * (p_floor + c_cov * uncovered_terciles / 2)).
constexpr double kGhostFloor = 0.25;
constexpr double kGhostCoverageWeight = 0.4;
constexpr double kGhostMass = 0.7;
constexpr int kBackgroundBlobRadius = 28;

BinaryGrid rasterize_shape(const SceneSpec& spec, PixelPoint c, int r) {
    BinaryGrid mask(spec.width, spec.height, 0);
    const int ry = std::max(2, static_cast<int>(std::lround(0.7 * r)));
    for (int y = std::max(0, c.y - r); y <= std::min(spec.height - 1, c.y + r); ++y) {
        for (int x = std::max(0, c.x - r); x <= std::min(spec.width - 1, c.x + r); ++x) {
            const double dx = x - c.x;
            const double dy = y - c.y;
            bool inside = false;
            switch (spec.shape) {
                case Shape::disk: inside = dx * dx + dy * dy <= static_cast<double>(r) * r; break;
                case Shape::ellipse:
                    inside = (dx * dx) / (static_cast<double>(r) * r) +
                                 (dy * dy) / (static_cast<double>(ry) * ry) <=
                             1.0;
                    break;
                case Shape::rect:
                    inside = std::abs(dx) <= r && std::abs(dy) <= ry;
                    break;
            }
            if (inside) mask.at(x, y) = 1;
        }
    }
    return mask;
}

double mask_pair_iou(const BinaryGrid& a, const BinaryGrid& b) {
    long long inter = 0, uni = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        inter += a.data()[i] & b.data()[i];
        uni += a.data()[i] | b.data()[i];
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

std::string to_string(Shape s) {
    switch (s) {
        case Shape::disk: return "disk";
        case Shape::ellipse: return "ellipse";
        default: return "rect";
    }
}

Shape shape_from_string(const std::string& s) {
    if (s == "disk") return Shape::disk;
    if (s == "ellipse") return Shape::ellipse;
    if (s == "rect") return Shape::rect;
    throw std::invalid_argument("unknown shape: " + s);
}

void SceneSpec::validate() const {
    if (width < 32 || height < 32) throw std::invalid_argument("scene too small");
    if (n_instances < 1) throw std::invalid_argument("n_instances must be >= 1");
    if (radius_min < 1 || radius_min > radius_max)
        throw std::invalid_argument("invalid radius range");
    if (max_overlap < 0.0 || max_overlap >= 1.0)
        throw std::invalid_argument("max_overlap outside [0,1)");
    for (double rate : {background_mask_prob, detector_fn_rate, detector_fp_rate})
        if (rate < 0.0 || rate > 1.0) throw std::invalid_argument("rate outside [0,1]");
    if (n_distractor_hotspots < 0) throw std::invalid_argument("negative hotspot count");
    if (box_jitter < 0) throw std::invalid_argument("negative box jitter");
    if (feature_classes < 1) throw std::invalid_argument("feature_classes must be >= 1");
    if (sigma_blob <= 0.0) throw std::invalid_argument("sigma_blob must be positive");
    if (sigma_noise < 0.0) throw std::invalid_argument("sigma_noise must be >= 0");
}

SceneSpec spec_from_kv(const std::map<std::string, std::string>& kv) {
    SceneSpec spec;
    auto get = [&kv](const std::string& key) -> const std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    try {
        if (auto* v = get("width")) spec.width = std::stoi(*v);
        if (auto* v = get("height")) spec.height = std::stoi(*v);
        if (auto* v = get("n_instances")) spec.n_instances = std::stoi(*v);
        if (auto* v = get("radius_min")) spec.radius_min = std::stoi(*v);
        if (auto* v = get("radius_max")) spec.radius_max = std::stoi(*v);
        if (auto* v = get("shape")) spec.shape = shape_from_string(*v);
        if (auto* v = get("max_overlap")) spec.max_overlap = std::stod(*v);
        if (auto* v = get("n_distractor_hotspots")) spec.n_distractor_hotspots = std::stoi(*v);
        if (auto* v = get("background_mask_prob")) spec.background_mask_prob = std::stod(*v);
        if (auto* v = get("detector_fn_rate")) spec.detector_fn_rate = std::stod(*v);
        if (auto* v = get("detector_fp_rate")) spec.detector_fp_rate = std::stod(*v);
        if (auto* v = get("box_jitter")) spec.box_jitter = std::stoi(*v);
        if (auto* v = get("feature_classes")) spec.feature_classes = std::stoi(*v);
        if (auto* v = get("seed")) spec.seed = std::stoull(*v);
        if (auto* v = get("sigma_blob")) spec.sigma_blob = std::stod(*v);
        if (auto* v = get("sigma_noise")) spec.sigma_noise = std::stod(*v);
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("malformed scene spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

std::map<std::string, std::string> kv_from_spec(const SceneSpec& spec) {
    std::map<std::string, std::string> kv;
    kv["width"] = std::to_string(spec.width);
    kv["height"] = std::to_string(spec.height);
    kv["n_instances"] = std::to_string(spec.n_instances);
    kv["radius_min"] = std::to_string(spec.radius_min);
    kv["radius_max"] = std::to_string(spec.radius_max);
    kv["shape"] = to_string(spec.shape);
    kv["max_overlap"] = persist::format_double(spec.max_overlap);
    kv["n_distractor_hotspots"] = std::to_string(spec.n_distractor_hotspots);
    kv["background_mask_prob"] = persist::format_double(spec.background_mask_prob);
    kv["detector_fn_rate"] = persist::format_double(spec.detector_fn_rate);
    kv["detector_fp_rate"] = persist::format_double(spec.detector_fp_rate);
    kv["box_jitter"] = std::to_string(spec.box_jitter);
    kv["feature_classes"] = std::to_string(spec.feature_classes);
    kv["seed"] = std::to_string(spec.seed);
    kv["sigma_blob"] = persist::format_double(spec.sigma_blob);
    kv["sigma_noise"] = persist::format_double(spec.sigma_noise);
    return kv;
}

std::vector<InstanceMask> Scene::gt_masks() const {
    std::vector<InstanceMask> out;
    out.reserve(instances.size());
    for (const auto& inst : instances) out.push_back(inst.gt_mask);
    return out;
}

std::vector<double> Scene::gt_areas() const {
    std::vector<double> out;
    out.reserve(instances.size());
    for (const auto& inst : instances) out.push_back(static_cast<double>(inst.gt_mask.area));
    return out;
}

Scene generate_scene(const SceneSpec& spec) {
    spec.validate();
    Scene scene;
    scene.spec = spec;
    scene.instance_label = Grid<int>(spec.width, spec.height, -1);

    rng::SplitMix place(rng::stable_hash(spec.seed, "place"));
    rng::SplitMix class_rng(rng::stable_hash(spec.seed, "class"));

    const int blob_reach = static_cast<int>(std::ceil(4.0 * spec.sigma_blob));
    std::vector<int> radii;
    std::vector<BBox> placed_boxes;
    int attempts = 0;
    while (static_cast<int>(scene.instances.size()) < spec.n_instances) {
        if (++attempts > kAttemptBudget)
            throw std::runtime_error("generate_scene: placement budget exhausted");
        const int r = place.next_int(spec.radius_min, spec.radius_max);
        const int margin = std::max(r + 1, blob_reach);
        if (spec.width - 1 - margin < margin || spec.height - 1 - margin < margin)
            throw std::runtime_error("generate_scene: canvas too small for margin");
        const PixelPoint c{place.next_int(margin, spec.width - 1 - margin),
                           place.next_int(margin, spec.height - 1 - margin)};

        bool ok = true;
        if (spec.max_overlap == 0.0) {
            for (size_t i = 0; i < scene.instances.size() && ok; ++i) {
                const auto& other = scene.instances[i];
                const double dx = c.x - other.center.x;
                const double dy = c.y - other.center.y;
                const double min_d =
                    std::max<double>(r + radii[i] + 1, kMinCenterSeparation);
                if (dx * dx + dy * dy < min_d * min_d) ok = false;
            }
            if (!ok) continue;
        }
        BinaryGrid mask = rasterize_shape(spec, c, r);
        const BBox box = *tight_bbox(mask);
        if (spec.max_overlap > 0.0) {
            for (size_t i = 0; i < scene.instances.size() && ok; ++i) {
                if (box_iou(box, placed_boxes[i]) == 0.0) continue;
                if (mask_pair_iou(mask, scene.instances[i].gt_mask.mask) > spec.max_overlap)
                    ok = false;
            }
            if (!ok) continue;
        }

        Instance inst;
        inst.center = c;
        inst.scale = static_cast<double>(r);
        inst.feature_class = class_rng.next_int(0, spec.feature_classes - 1);
        inst.gt_mask = make_instance_mask(std::move(mask), 0.0);
        radii.push_back(r);
        placed_boxes.push_back(box);
        scene.instances.push_back(std::move(inst));
    }
    scene.gt_count = static_cast<int>(scene.instances.size());

    // Decoder quality scores: evenly spread over [0.85, 1.0] via a seeded
    // permutation, keeping the top slots above any background-blob score.
    {
        std::vector<int> perm(scene.instances.size());
        std::iota(perm.begin(), perm.end(), 0);
        rng::SplitMix qrng(rng::stable_hash(spec.seed, "quality"));
        for (size_t i = perm.size(); i > 1; --i)
            std::swap(perm[i - 1], perm[static_cast<size_t>(qrng.next_u64() % i)]);
        const double n = static_cast<double>(scene.instances.size());
        for (size_t i = 0; i < scene.instances.size(); ++i)
            scene.instances[i].gt_mask.quality = 0.85 + 0.15 * (perm[i] + 0.5) / n;
    }

    // Labels, boxes, tercile cache.
    std::vector<double> box_areas;
    for (size_t i = 0; i < scene.instances.size(); ++i) {
        const auto& m = scene.instances[i].gt_mask.mask;
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x)
                if (m.at(x, y)) scene.instance_label.at(x, y) = static_cast<int>(i);
        scene.gt_boxes.push_back(*tight_bbox(m));
        box_areas.push_back(static_cast<double>(scene.gt_boxes.back().area()));
    }
    scene.box_area_p33 = stats::percentile(box_areas, 33.0);
    scene.box_area_p66 = stats::percentile(box_areas, 66.0);
    {
        std::vector<int> sorted_radii = radii;
        std::sort(sorted_radii.begin(), sorted_radii.end());
        scene.median_radius = sorted_radii[sorted_radii.size() / 2];
    }

    // Distractor hotspots: background locations clear of instances, borders
    // and one another.
    rng::SplitMix hot(rng::stable_hash(spec.seed, "hotspot"));
    attempts = 0;
    while (static_cast<int>(scene.hotspots.size()) < spec.n_distractor_hotspots) {
        if (++attempts > kAttemptBudget)
            throw std::runtime_error("generate_scene: hotspot budget exhausted");
        const PixelPoint p{hot.next_int(kHotspotMargin, spec.width - 1 - kHotspotMargin),
                           hot.next_int(kHotspotMargin, spec.height - 1 - kHotspotMargin)};
        bool ok = true;
        for (const auto& inst : scene.instances) {
            const double dx = p.x - inst.center.x;
            const double dy = p.y - inst.center.y;
            if (dx * dx + dy * dy <
                static_cast<double>(kHotspotMinInstanceDist) * kHotspotMinInstanceDist)
                ok = false;
        }
        for (const auto& other : scene.hotspots) {
            const double dx = p.x - other.x;
            const double dy = p.y - other.y;
            if (dx * dx + dy * dy < static_cast<double>(kHotspotMinPairDist) * kHotspotMinPairDist)
                ok = false;
        }
        if (ok) scene.hotspots.push_back(p);
    }

    // Feature grid: one-hot class channels plus a normalized scale channel.
    scene.feature_grid.assign(static_cast<size_t>(spec.feature_classes) + 1,
                              ScalarGrid(spec.width, spec.height, 0.0));
    for (const auto& inst : scene.instances) {
        const auto& m = inst.gt_mask.mask;
        const double scale_value = inst.scale / static_cast<double>(spec.radius_max);
        for (int y = 0; y < spec.height; ++y) {
            for (int x = 0; x < spec.width; ++x) {
                if (!m.at(x, y)) continue;
                scene.feature_grid[static_cast<size_t>(inst.feature_class)].at(x, y) = 1.0;
                scene.feature_grid.back().at(x, y) = scale_value;
            }
        }
    }
    return scene;
}

ScalarGrid render_blobs(int width, int height, const std::vector<PixelPoint>& centers,
                        const std::vector<double>& masses, double sigma) {
    ScalarGrid out(width, height, 0.0);
    const double cutoff_sq = 16.0 * sigma * sigma;
    const int reach = static_cast<int>(std::ceil(4.0 * sigma));
    const double coef = 1.0 / (2.0 * M_PI * sigma * sigma);
    const double inv_two_sq = 1.0 / (2.0 * sigma * sigma);
    const long long n = static_cast<long long>(centers.size());
#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y) {
        for (long long i = 0; i < n; ++i) {
            const int dy = y - centers[static_cast<size_t>(i)].y;
            if (dy < -reach || dy > reach) continue;
            const int cx = centers[static_cast<size_t>(i)].x;
            const int x0 = std::max(0, cx - reach);
            const int x1 = std::min(width - 1, cx + reach);
            for (int x = x0; x <= x1; ++x) {
                const int dx = x - cx;
                const double d2 = static_cast<double>(dx) * dx + static_cast<double>(dy) * dy;
                if (d2 > cutoff_sq) continue;
                out.at(x, y) += masses[static_cast<size_t>(i)] * coef * std::exp(-d2 * inv_two_sq);
            }
        }
    }
    return out;
}

ScalarGrid render_density(const Scene& scene, double sigma_blob) {
    if (sigma_blob <= 0.0) throw std::invalid_argument("render_density: sigma must be positive");
    std::vector<PixelPoint> centers;
    centers.reserve(scene.instances.size());
    for (const auto& inst : scene.instances) centers.push_back(inst.center);
    const std::vector<double> masses(centers.size(), 1.0);
    return render_blobs(scene.spec.width, scene.spec.height, centers, masses, sigma_blob);
}

int ghost_count(const Scene& scene, const std::vector<BBox>& exemplars) {
    if (scene.hotspots.empty() || exemplars.empty()) return 0;
    bool covered[3] = {false, false, false};
    for (const auto& box : exemplars) {
        const double a = static_cast<double>(box.area());
        if (a <= scene.box_area_p33)
            covered[0] = true;
        else if (a <= scene.box_area_p66)
            covered[1] = true;
        else
            covered[2] = true;
    }
    const int uncovered = 3 - (covered[0] + covered[1] + covered[2]);
    const double p =
        std::clamp(kGhostFloor + kGhostCoverageWeight * uncovered / 2.0, 0.0, 1.0);
    return static_cast<int>(std::floor(static_cast<double>(scene.hotspots.size()) * p));
}

pipeline::Providers oracle_providers(const Scene& scene) {
    const SceneSpec spec = scene.spec;
    const std::uint64_t seed = spec.seed;
    // The scene is copied into the closures so a provider set outlives its
    // source and stays immutable.
    auto shared = std::make_shared<const Scene>(scene);

    pipeline::Providers p;

    p.similarity = [shared, seed](const std::string&) {
        const auto& sc = *shared;
        const int w = sc.spec.width;
        const int h = sc.spec.height;
        ScalarGrid sim(w, h, 0.0);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::uint64_t px = static_cast<std::uint64_t>(y) * w + x;
                const double u = rng::hash_unit(seed, "sim", px);
                sim.at(x, y) = sc.instance_label.at(x, y) >= 0 ? 0.7 + 0.3 * u : 0.3 * u;
            }
        }
        for (const auto& hs : sc.hotspots) {
            for (int dy = -2; dy <= 2; ++dy) {
                for (int dx = -2; dx <= 2; ++dx) {
                    if (dx * dx + dy * dy > 4) continue;
                    const int x = hs.x + dx;
                    const int y = hs.y + dy;
                    if (!sim.in_bounds(x, y)) continue;
                    const std::uint64_t px = static_cast<std::uint64_t>(y) * w + x;
                    sim.at(x, y) = 0.95 + 0.05 * rng::hash_unit(seed, "simhot", px);
                }
            }
        }
        return sim;
    };

    p.detector = [shared, seed](const std::string&, const std::string& label) {
        const auto& sc = *shared;
        std::vector<Detection> dets;
        for (size_t i = 0; i < sc.instances.size(); ++i) {
            if (rng::hash_unit(seed, "fn", i) < sc.spec.detector_fn_rate) continue;
            BBox box = sc.gt_boxes[i];
            if (sc.spec.box_jitter > 0) {
                rng::SplitMix j(rng::stable_hash(seed, "jitter", i));
                box.x0 = std::clamp(box.x0 + j.next_int(-sc.spec.box_jitter, sc.spec.box_jitter),
                                    0, sc.spec.width - 1);
                box.y0 = std::clamp(box.y0 + j.next_int(-sc.spec.box_jitter, sc.spec.box_jitter),
                                    0, sc.spec.height - 1);
                box.x1 = std::clamp(box.x1 + j.next_int(-sc.spec.box_jitter, sc.spec.box_jitter),
                                    0, sc.spec.width - 1);
                box.y1 = std::clamp(box.y1 + j.next_int(-sc.spec.box_jitter, sc.spec.box_jitter),
                                    0, sc.spec.height - 1);
                if (box.x0 > box.x1) std::swap(box.x0, box.x1);
                if (box.y0 > box.y1) std::swap(box.y0, box.y1);
            }
            dets.push_back(Detection{box, 0.5 + 0.5 * rng::hash_unit(seed, "conf", i), label});
        }
        // Spurious boxes sit at the leading hotspots with low confidence, so
        // the top-confidence box is always a real instance.
        const int n_fp = static_cast<int>(
            std::lround(sc.spec.detector_fp_rate * static_cast<double>(sc.hotspots.size())));
        for (int f = 0; f < n_fp && f < static_cast<int>(sc.hotspots.size()); ++f) {
            const PixelPoint hs = sc.hotspots[static_cast<size_t>(f)];
            const int r = sc.median_radius;
            BBox box{std::max(0, hs.x - r), std::max(0, hs.y - r),
                     std::min(sc.spec.width - 1, hs.x + r), std::min(sc.spec.height - 1, hs.y + r)};
            dets.push_back(Detection{
                box, 0.15 + 0.3 * rng::hash_unit(seed, "fpconf", static_cast<std::uint64_t>(f)),
                label});
        }
        return dets;
    };

    p.decoder = [shared, seed](const std::string&, const ppsm::PointPrompt& prompt) {
        const auto& sc = *shared;
        const int w = sc.spec.width;
        const int h = sc.spec.height;
        if (prompt.point.x < 0 || prompt.point.x >= w || prompt.point.y < 0 ||
            prompt.point.y >= h)
            return InstanceMask{BinaryGrid(w, h, 0), 0, 0.0};
        const int label = sc.instance_label.at(prompt.point.x, prompt.point.y);
        if (label >= 0) return sc.instances[static_cast<size_t>(label)].gt_mask;

        const std::uint64_t px =
            static_cast<std::uint64_t>(prompt.point.y) * w + prompt.point.x;
        if (rng::hash_unit(seed, "bgmask", px) < sc.spec.background_mask_prob) {
            // Large connected background blob around the prompt.
            BinaryGrid blob(w, h, 0);
            std::vector<PixelPoint> stack{prompt.point};
            blob.at(prompt.point.x, prompt.point.y) = 1;
            long long area = 1;
            const int r2 = kBackgroundBlobRadius * kBackgroundBlobRadius;
            while (!stack.empty()) {
                const PixelPoint q = stack.back();
                stack.pop_back();
                constexpr int d4[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
                for (const auto& d : d4) {
                    const int nx = q.x + d[0];
                    const int ny = q.y + d[1];
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    const int ddx = nx - prompt.point.x;
                    const int ddy = ny - prompt.point.y;
                    if (ddx * ddx + ddy * ddy > r2) continue;
                    if (blob.at(nx, ny) || sc.instance_label.at(nx, ny) >= 0) continue;
                    blob.at(nx, ny) = 1;
                    ++area;
                    stack.push_back({nx, ny});
                }
            }
            const double quality = 0.6 + 0.295 * rng::hash_unit(seed, "bgquality", px);
            return InstanceMask{std::move(blob), area, quality};
        }
        // Residual decoder noise: a small spurious mask around the prompt.
        BinaryGrid junk(w, h, 0);
        long long area = 0;
        for (int y = std::max(0, prompt.point.y - 2); y <= std::min(h - 1, prompt.point.y + 2); ++y)
            for (int x = std::max(0, prompt.point.x - 2); x <= std::min(w - 1, prompt.point.x + 2);
                 ++x) {
                junk.at(x, y) = 1;
                ++area;
            }
        return InstanceMask{std::move(junk), area,
                            0.45 + 0.15 * rng::hash_unit(seed, "junkquality", px)};
    };

    p.features = [shared](const std::string&) { return shared->feature_grid; };

    p.density = [shared, seed](const std::string&, const std::vector<BBox>& exemplars) {
        const auto& sc = *shared;
        const int e = std::max<int>(1, static_cast<int>(exemplars.size()));
        std::vector<PixelPoint> centers;
        std::vector<double> masses;
        centers.reserve(sc.instances.size());
        const double amplitude = sc.spec.sigma_noise / static_cast<double>(e);
        for (size_t i = 0; i < sc.instances.size(); ++i) {
            centers.push_back(sc.instances[i].center);
            masses.push_back(1.0 + amplitude * (2.0 * rng::hash_unit(seed, "mass", i) - 1.0));
        }
        const int ghosts = ghost_count(sc, exemplars);
        for (int g = 0; g < ghosts; ++g) {
            centers.push_back(sc.hotspots[static_cast<size_t>(g)]);
            masses.push_back(kGhostMass);
        }
        return render_blobs(sc.spec.width, sc.spec.height, centers, masses, sc.spec.sigma_blob);
    };

    return p;
}

}  // namespace persense::synth
