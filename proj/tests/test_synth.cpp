#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "persense/core.hpp"
#include "persense/idm.hpp"
#include "persense/synth.hpp"
#include "persense/stats.hpp"

using namespace persense;
using namespace persense::synth;

namespace {

SceneSpec small_spec(std::uint64_t seed, int n = 12) {
    SceneSpec spec;
    spec.width = 192;
    spec.height = 192;
    spec.n_instances = n;
    spec.seed = seed;
    return spec;
}

double grid_sum(const ScalarGrid& g) {
    double s = 0.0;
    for (double v : g.values()) s += v;
    return s;
}

}  // namespace

TEST_CASE("generate_scene is deterministic per seed") {
    const Scene a = generate_scene(small_spec(7));
    const Scene b = generate_scene(small_spec(7));
    REQUIRE(a.instances.size() == b.instances.size());
    for (size_t i = 0; i < a.instances.size(); ++i) {
        CHECK(a.instances[i].center == b.instances[i].center);
        CHECK(a.instances[i].gt_mask.mask == b.instances[i].gt_mask.mask);
        CHECK(a.instances[i].gt_mask.quality == b.instances[i].gt_mask.quality);
        CHECK(a.instances[i].feature_class == b.instances[i].feature_class);
    }
    const Scene c = generate_scene(small_spec(8));
    bool any_differs = a.instances.size() != c.instances.size();
    for (size_t i = 0; !any_differs && i < a.instances.size(); ++i)
        any_differs = !(a.instances[i].center == c.instances[i].center);
    CHECK(any_differs);
}

TEST_CASE("generate_scene respects count and the zero-overlap cap") {
    SceneSpec spec = small_spec(11, 40);
    spec.width = 320;
    spec.height = 320;
    const Scene scene = generate_scene(spec);
    CHECK(scene.gt_count == 40);
    for (size_t i = 0; i < scene.instances.size(); ++i)
        for (size_t j = i + 1; j < scene.instances.size(); ++j)
            CHECK(iou(scene.instances[i].gt_mask.mask, scene.instances[j].gt_mask.mask) == 0.0);
}

TEST_CASE("generate_scene rejects impossible packing") {
    SceneSpec spec = small_spec(3, 500);
    spec.width = 64;
    spec.height = 64;
    CHECK_THROWS_AS(generate_scene(spec), std::runtime_error);
}

TEST_CASE("instance qualities are spread over [0.85, 1.0] with a tall top-4") {
    const Scene scene = generate_scene(small_spec(13, 16));
    std::vector<double> qs;
    for (const auto& inst : scene.instances) {
        CHECK(inst.gt_mask.quality >= 0.85);
        CHECK(inst.gt_mask.quality <= 1.0);
        qs.push_back(inst.gt_mask.quality);
    }
    std::sort(qs.rbegin(), qs.rend());
    CHECK(qs[3] > 0.9);  // background blobs (quality < 0.895) can never reach top-4
}

TEST_CASE("render_density integral tracks the instance count within 1%") {
    for (int n : {1, 10, 25}) {
        SceneSpec spec = small_spec(17, n);
        const Scene scene = generate_scene(spec);
        const ScalarGrid dm = render_density(scene, 2.0);
        const double integral = grid_sum(dm);
        CHECK(integral >= 0.99 * n);
        CHECK(integral <= 1.01 * n);
        for (double v : dm.values()) CHECK(v >= 0.0);
    }
    const Scene one = generate_scene(small_spec(19, 1));
    const ScalarGrid dm = render_density(one, 2.0);
    const GrayGrid gray = normalize_to_gray(dm);
    CHECK(gray.at(one.instances[0].center.x, one.instances[0].center.y) == 255);
}

TEST_CASE("two instances 3*sigma apart merge at T=20 but keep two strict maxima") {
    // Built directly from the renderer so the geometry is exact.
    const double sigma = 3.0;
    const int sep = static_cast<int>(std::lround(3.0 * sigma));
    const ScalarGrid dm = synth::render_blobs(96, 64, {{40, 32}, {40 + sep, 32}},
                                              {1.0, 1.0}, sigma);
    const GrayGrid gray = normalize_to_gray(dm);
    const auto contours = idm::extract_contours(idm::erode3x3(idm::binarize(gray, 20)));
    CHECK(contours.size() == 1);
    CHECK(idm::detect_peaks(gray, 1.0, 3).size() == 2);
}

TEST_CASE("oracle decoder returns the instance mask at its center") {
    const Scene scene = generate_scene(small_spec(23, 10));
    const auto providers = oracle_providers(scene);
    for (const auto& inst : scene.instances) {
        const InstanceMask m =
            providers.decoder("img", {inst.center, 1.0, true});
        CHECK(m.mask == inst.gt_mask.mask);
        CHECK(m.quality == inst.gt_mask.quality);
    }
}

TEST_CASE("oracle decoder yields an oversized blob for background prompts when forced") {
    SceneSpec spec = small_spec(29, 8);
    spec.background_mask_prob = 1.0;
    const Scene scene = generate_scene(spec);
    const auto providers = oracle_providers(scene);

    REQUIRE(!scene.hotspots.empty());
    const InstanceMask blob = providers.decoder("img", {scene.hotspots[0], 1.0, true});
    double max_instance_area = 0.0;
    for (const auto& inst : scene.instances)
        max_instance_area = std::max(max_instance_area, static_cast<double>(inst.gt_mask.area));
    CHECK(static_cast<double>(blob.area) > 5.0 * max_instance_area);
    CHECK(blob.quality >= 0.6);
    CHECK(blob.quality <= 0.9);
    // The blob avoids every instance pixel.
    for (const auto& inst : scene.instances)
        CHECK(iou(blob.mask, inst.gt_mask.mask) == 0.0);

    // Without the blob draw, background prompts yield only a small spurious
    // mask with a sub-threshold score.
    SceneSpec no_blob = spec;
    no_blob.background_mask_prob = 0.0;
    const Scene scene2 = generate_scene(no_blob);
    const auto providers2 = oracle_providers(scene2);
    const InstanceMask junk = providers2.decoder("img", {scene2.hotspots[0], 1.0, true});
    CHECK(junk.area > 0);
    CHECK(junk.area <= 25);
    CHECK(junk.quality < 0.8);
}

TEST_CASE("oracle detector covers every instance when fn=0 and jitter=0") {
    SceneSpec spec = small_spec(31, 10);
    spec.box_jitter = 0;
    spec.detector_fp_rate = 0.0;
    const Scene scene = generate_scene(spec);
    const auto providers = oracle_providers(scene);
    const auto dets = providers.detector("img", "widget");
    REQUIRE(dets.size() == scene.instances.size());
    for (const auto& d : dets) CHECK(d.label == "widget");
    for (size_t i = 0; i < scene.instances.size(); ++i) {
        const auto& m = scene.instances[i].gt_mask.mask;
        for (int y = 0; y < m.height(); ++y)
            for (int x = 0; x < m.width(); ++x)
                if (m.at(x, y)) {
                    bool inside = false;
                    for (const auto& d : dets) inside |= d.box.contains({x, y});
                    CHECK(inside);
                }
    }
}

TEST_CASE("spurious detections sit at hotspots with low confidence") {
    SceneSpec spec = small_spec(37, 10);
    spec.detector_fp_rate = 1.0;
    spec.n_distractor_hotspots = 4;
    const Scene scene = generate_scene(spec);
    const auto providers = oracle_providers(scene);
    const auto dets = providers.detector("img", "x");
    REQUIRE(dets.size() == scene.instances.size() + 4);
    for (size_t i = scene.instances.size(); i < dets.size(); ++i) {
        CHECK(dets[i].confidence < 0.5);
        CHECK(dets[i].box.contains(scene.hotspots[i - scene.instances.size()]));
    }
    // Highest-confidence box is always a real instance.
    size_t best = 0;
    for (size_t i = 1; i < dets.size(); ++i)
        if (dets[i].confidence > dets[best].confidence) best = i;
    CHECK(best < scene.instances.size());
}

TEST_CASE("similarity separates instances, background, and hotspots") {
    const Scene scene = generate_scene(small_spec(41, 8));
    const auto providers = oracle_providers(scene);
    const ScalarGrid sim = providers.similarity("img");
    for (const auto& inst : scene.instances) CHECK(sim.at(inst.center.x, inst.center.y) >= 0.7);
    for (const auto& hs : scene.hotspots) CHECK(sim.at(hs.x, hs.y) >= 0.95);
    int background_samples = 0;
    for (int y = 0; y < sim.height() && background_samples < 50; ++y)
        for (int x = 0; x < sim.width() && background_samples < 50; ++x) {
            bool near_hotspot = false;
            for (const auto& hs : scene.hotspots)
                if (std::abs(x - hs.x) <= 2 && std::abs(y - hs.y) <= 2) near_hotspot = true;
            if (scene.instance_label.at(x, y) < 0 && !near_hotspot) {
                CHECK(sim.at(x, y) <= 0.3);
                ++background_samples;
            }
        }
}

TEST_CASE("ghost injection shrinks with scale coverage and nests by prefix") {
    SceneSpec spec = small_spec(43, 24);
    spec.width = 256;
    spec.height = 256;
    const Scene scene = generate_scene(spec);

    // One exemplar covering one tercile vs three spanning all terciles.
    std::vector<double> areas;
    for (const auto& b : scene.gt_boxes) areas.push_back(static_cast<double>(b.area()));
    std::vector<size_t> order(areas.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return areas[a] < areas[b]; });
    const BBox small_box = scene.gt_boxes[order.front()];
    const BBox large_box = scene.gt_boxes[order.back()];
    const BBox mid_box = scene.gt_boxes[order[order.size() / 2]];

    const int g1 = ghost_count(scene, {mid_box});
    const int g3 = ghost_count(scene, {small_box, mid_box, large_box});
    CHECK(g3 < g1);
    CHECK(g3 >= 0);

    // The DM with diverse exemplars is a strict sub-sum of the noisy one:
    // ghost blobs occupy a prefix of the hotspot list.
    const auto providers = oracle_providers(scene);
    const ScalarGrid noisy = providers.density("img", {mid_box});
    const ScalarGrid sharp = providers.density("img", {small_box, mid_box, large_box});
    const GrayGrid gn = normalize_to_gray(noisy);
    const GrayGrid gs = normalize_to_gray(sharp);
    for (int g = 0; g < g3; ++g) CHECK(gs.at(scene.hotspots[g].x, scene.hotspots[g].y) > 20);
    for (int g = g3; g < g1; ++g) {
        CHECK(gn.at(scene.hotspots[g].x, scene.hotspots[g].y) > 20);
        CHECK(gs.at(scene.hotspots[g].x, scene.hotspots[g].y) <= 20);
    }
}

TEST_CASE("density count error strictly improves from 1 exemplar to 3 diverse ones") {
    double mae_one = 0.0, mae_three = 0.0;
    const int n_scenes = 12;
    for (int s = 0; s < n_scenes; ++s) {
        SceneSpec spec = small_spec(100 + s, 20);
        spec.width = 256;
        spec.height = 256;
        const Scene scene = generate_scene(spec);
        const auto providers = oracle_providers(scene);

        std::vector<double> areas;
        for (const auto& b : scene.gt_boxes) areas.push_back(static_cast<double>(b.area()));
        std::vector<size_t> order(areas.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](size_t a, size_t b) { return areas[a] < areas[b]; });

        const ScalarGrid one = providers.density("img", {scene.gt_boxes[order[order.size() / 2]]});
        const ScalarGrid three = providers.density(
            "img", {scene.gt_boxes[order.front()], scene.gt_boxes[order[order.size() / 2]],
                    scene.gt_boxes[order.back()]});
        mae_one += std::abs(grid_sum(one) - scene.gt_count);
        mae_three += std::abs(grid_sum(three) - scene.gt_count);
    }
    CHECK(mae_three / n_scenes < mae_one / n_scenes);
}

TEST_CASE("scene spec round-trips through key=value form") {
    SceneSpec spec = small_spec(51, 9);
    spec.shape = Shape::ellipse;
    spec.max_overlap = 0.05;
    spec.background_mask_prob = 0.4;
    const SceneSpec back = spec_from_kv(kv_from_spec(spec));
    CHECK(back.width == spec.width);
    CHECK(back.n_instances == spec.n_instances);
    CHECK(back.shape == spec.shape);
    CHECK(back.max_overlap == spec.max_overlap);
    CHECK(back.background_mask_prob == spec.background_mask_prob);
    CHECK(back.seed == spec.seed);

    CHECK_THROWS_AS(spec_from_kv({{"n_instances", "0"}}), std::invalid_argument);
    CHECK_THROWS_AS(spec_from_kv({{"shape", "pyramid"}}), std::invalid_argument);
}

TEST_CASE("max_overlap caps the pairwise mask IoU") {
    SceneSpec spec = small_spec(71, 40);
    spec.width = 256;
    spec.height = 256;
    spec.max_overlap = 0.15;
    const Scene scene = generate_scene(spec);
    REQUIRE(scene.gt_count == 40);
    double worst = 0.0;
    for (size_t i = 0; i < scene.instances.size(); ++i)
        for (size_t j = i + 1; j < scene.instances.size(); ++j)
            worst = std::max(worst,
                             iou(scene.instances[i].gt_mask.mask, scene.instances[j].gt_mask.mask));
    CHECK(worst <= 0.15);
}

TEST_CASE("ellipse and rect scenes generate and stay in bounds") {
    for (Shape shape : {Shape::ellipse, Shape::rect}) {
        SceneSpec spec = small_spec(61, 6);
        spec.shape = shape;
        const Scene scene = generate_scene(spec);
        CHECK(scene.gt_count == 6);
        for (const auto& inst : scene.instances) CHECK(inst.gt_mask.area > 0);
    }
}
