#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "persense/exemplar.hpp"
#include "persense/grid.hpp"
#include "persense/idm.hpp"
#include "persense/ppsm.hpp"

namespace persense::pipeline {

// Perception backends behind the pipeline. All calls must be deterministic
// for a fixed image id and inputs; decoder calls are mutually independent.
struct Providers {
    std::function<ScalarGrid(const std::string&)> similarity;
    std::function<ScalarGrid(const std::string&, const std::vector<BBox>&)> density;
    std::function<std::vector<Detection>(const std::string&, const std::string&)> detector;
    std::function<InstanceMask(const std::string&, const ppsm::PointPrompt&)> decoder;
    std::function<std::vector<ScalarGrid>(const std::string&)> features;
};

enum class Variant { persense, persense_pp };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct PipelineConfig {
    idm::IdmConfig idm;
    double k_ppsm = 1.4142135623730951;  // sqrt(2)
    int m = 4;                           // feedback exemplar count (persense)
    double t_sam = 0.8;
    exemplar::WeightConfig weights;
    int k_clusters = 3;
    double p_lo = 33.0;
    double p_hi = 66.0;
    double iou_min = 0.8;
    Variant variant = Variant::persense;
    int feedback_iters = 1;
    std::string label = "object";
    bool count_from_dm = false;  // use the rounded DM integral as the PPSM count
    std::uint64_t seed = 0;

    // Component toggles; unset means "follow the variant".
    std::optional<bool> diversity_selection;
    std::optional<bool> hybrid_idm;
    std::optional<bool> imrm_enabled;

    bool use_diversity() const {
        return diversity_selection.value_or(variant == Variant::persense_pp);
    }
    bool use_hybrid() const { return hybrid_idm.value_or(variant == Variant::persense_pp); }
    bool use_imrm() const { return imrm_enabled.value_or(variant == Variant::persense_pp); }
};

struct SegmentationResult {
    std::vector<ppsm::PointPrompt> prompts_pass1;
    std::vector<ppsm::PointPrompt> prompts_final;
    std::vector<BBox> exemplars_pass1;
    std::vector<BBox> exemplars_final;
    std::vector<InstanceMask> masks;
    int predicted_count = 0;
};

class NoGroundingError : public std::runtime_error {
public:
    NoGroundingError() : std::runtime_error("no-grounding") {}
};

// Positive location prior: the similarity argmax inside the top-confidence
// detection box, decoded into the initial exemplar.
std::pair<BBox, exemplar::ExemplarCandidate> initial_exemplar(const Providers& providers,
                                                              const std::string& image_id,
                                                              const std::string& label);

// Two-pass flow: initial exemplar -> DM -> IDM -> PPSM -> decode -> feedback
// exemplars -> DM -> IDM -> PPSM -> decode, with IMRM last for persense_pp.
// Feedback always reselects from the pass-1 segmentation; feedback_iters > 1
// repeats the selection + second pass.
SegmentationResult run(const Providers& providers, const PipelineConfig& cfg,
                       const std::string& image_id);

}  // namespace persense::pipeline
