#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "persense/grid.hpp"
#include "persense/pipeline.hpp"

namespace persense::synth {

enum class Shape { disk, ellipse, rect };

std::string to_string(Shape s);
Shape shape_from_string(const std::string& s);

struct SceneSpec {
    int width = 320;
    int height = 320;
    int n_instances = 40;
    int radius_min = 3;
    int radius_max = 7;
    Shape shape = Shape::disk;
    double max_overlap = 0.0;
    int n_distractor_hotspots = 6;
    double background_mask_prob = 0.15;
    double detector_fn_rate = 0.0;
    double detector_fp_rate = 1.0 / 3.0;  // fraction of hotspots given a spurious box
    int box_jitter = 1;
    int feature_classes = 3;
    std::uint64_t seed = 0;
    double sigma_blob = 2.0;
    double sigma_noise = 0.15;

    void validate() const;  // throws std::invalid_argument on bad fields
};

SceneSpec spec_from_kv(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> kv_from_spec(const SceneSpec& spec);

struct Instance {
    PixelPoint center;
    InstanceMask gt_mask;  // quality = the oracle decoder's score for it
    double scale = 0.0;    // base radius, px
    int feature_class = 0;
};

struct Scene {
    SceneSpec spec;
    std::vector<Instance> instances;
    int gt_count = 0;
    std::vector<ScalarGrid> feature_grid;  // feature_classes one-hot channels + scale channel
    std::vector<PixelPoint> hotspots;      // distractor locations, background only

    // Cached lookups.
    Grid<int> instance_label;        // instance index per pixel, -1 for background
    std::vector<BBox> gt_boxes;      // tight boxes of the instance masks
    double box_area_p33 = 0.0;       // terciles of the GT box areas
    double box_area_p66 = 0.0;
    int median_radius = 0;

    std::vector<InstanceMask> gt_masks() const;
    std::vector<double> gt_areas() const;  // mask areas
};

// Deterministic per spec.seed; rejection sampling bounded at 1e5 attempts.
Scene generate_scene(const SceneSpec& spec);

// Sum of unit-integral isotropic Gaussians at the instance centers,
// truncated at 4*sigma. OpenMP over rows with a fixed accumulation order,
// so the result is thread-count independent.
ScalarGrid render_density(const Scene& scene, double sigma_blob);

// Shared blob renderer (also used by the oracle density provider).
ScalarGrid render_blobs(int width, int height, const std::vector<PixelPoint>& centers,
                        const std::vector<double>& masses, double sigma);

// Ghost-blob count injected into the DM for a given exemplar set: the fraction
// of hotspots that materialize scales with how poorly the exemplars cover the
// scene's scale terciles.
int ghost_count(const Scene& scene, const std::vector<BBox>& exemplars);

// Deterministic oracle providers backed by the scene's ground truth.
pipeline::Providers oracle_providers(const Scene& scene);

}  // namespace persense::synth
