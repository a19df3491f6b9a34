#include "persense/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "persense/core.hpp"
#include "persense/imrm.hpp"

namespace persense::pipeline {

std::string to_string(Variant v) {
    return v == Variant::persense ? "persense" : "persense_pp";
}

Variant variant_from_string(const std::string& s) {
    if (s == "persense") return Variant::persense;
    if (s == "persense_pp") return Variant::persense_pp;
    throw std::invalid_argument("unknown variant: " + s);
}

namespace {

exemplar::ExemplarCandidate candidate_from_mask(const InstanceMask& mask, const BBox& box,
                                                const std::vector<ScalarGrid>& feats) {
    exemplar::ExemplarCandidate c;
    c.box = box;
    c.mask = mask;
    c.quality = mask.quality;
    c.feature = exemplar::region_pool(feats, box);
    c.area = static_cast<double>(box.area());
    c.aspect = box.aspect();
    return c;
}

std::vector<InstanceMask> decode_batch(const Providers& providers, const std::string& image_id,
                                       const std::vector<ppsm::PointPrompt>& prompts) {
    std::vector<InstanceMask> decoded(prompts.size());
    const long long n = static_cast<long long>(prompts.size());
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < n; ++i)
        decoded[static_cast<size_t>(i)] = providers.decoder(image_id, prompts[static_cast<size_t>(i)]);
    std::vector<InstanceMask> out;
    out.reserve(decoded.size());
    for (auto& m : decoded)
        if (m.area > 0) out.push_back(std::move(m));
    return out;
}

int ppsm_count(const PipelineConfig& cfg, const ScalarGrid& dm) {
    if (!cfg.count_from_dm) return -1;
    double total = 0.0;
    for (double v : dm.values()) total += v;
    return static_cast<int>(std::llround(total));
}

}  // namespace

std::pair<BBox, exemplar::ExemplarCandidate> initial_exemplar(const Providers& providers,
                                                              const std::string& image_id,
                                                              const std::string& label) {
    const std::vector<Detection> dets = providers.detector(image_id, label);
    if (dets.empty()) throw NoGroundingError();

    size_t best = 0;
    for (size_t i = 1; i < dets.size(); ++i)
        if (dets[i].confidence > dets[best].confidence) best = i;
    const BBox b_max = dets[best].box;

    const ScalarGrid sim = providers.similarity(image_id);
    PixelPoint p_max{b_max.x0, b_max.y0};
    double s_best = sim.at(p_max.x, p_max.y);
    for (int y = b_max.y0; y <= b_max.y1; ++y) {
        for (int x = b_max.x0; x <= b_max.x1; ++x) {
            if (sim.at(x, y) > s_best) {  // row-major tie-break: keep the first
                s_best = sim.at(x, y);
                p_max = PixelPoint{x, y};
            }
        }
    }

    const InstanceMask mask =
        providers.decoder(image_id, ppsm::PointPrompt{p_max, s_best, true});
    const BBox box = tight_bbox(mask.mask).value_or(b_max);
    const std::vector<ScalarGrid> feats = providers.features(image_id);
    return {box, candidate_from_mask(mask, box, feats)};
}

SegmentationResult run(const Providers& providers, const PipelineConfig& cfg,
                       const std::string& image_id) {
    const auto [box0, ref] = initial_exemplar(providers, image_id, cfg.label);
    const std::vector<Detection> dets = providers.detector(image_id, cfg.label);
    const ScalarGrid sim = providers.similarity(image_id);
    const std::vector<ScalarGrid> feats = providers.features(image_id);

    SegmentationResult result;
    result.exemplars_pass1 = {box0};

    // Pass 1: contour-mode IDM conditioned on the initial exemplar.
    idm::IdmConfig idm_pass1 = cfg.idm;
    idm_pass1.mode = idm::IdmMode::contour;
    const ScalarGrid dm1 = providers.density(image_id, {box0});
    const auto cands1 = idm::run_idm(dm1, idm_pass1);
    result.prompts_pass1 =
        ppsm::select_prompts(cands1, sim, dets, cfg.k_ppsm, ppsm_count(cfg, dm1));
    const std::vector<InstanceMask> masks1 = decode_batch(providers, image_id, result.prompts_pass1);

    std::vector<exemplar::ExemplarCandidate> pool;
    for (const auto& m : masks1) {
        const auto box = tight_bbox(m.mask);
        if (box) pool.push_back(candidate_from_mask(m, *box, feats));
    }

    idm::IdmConfig idm_pass2 = cfg.idm;
    idm_pass2.mode = cfg.use_hybrid() ? idm::IdmMode::hybrid : idm::IdmMode::contour;

    std::vector<InstanceMask> masks2;
    for (int iter = 0; iter < std::max(1, cfg.feedback_iters); ++iter) {
        // Feedback reselects from the initial segmentation each iteration.
        std::vector<BBox> sel_boxes;
        if (!pool.empty()) {
            const auto sel =
                cfg.use_diversity()
                    ? exemplar::select_diverse(
                          pool, ref,
                          exemplar::DiverseConfig{cfg.t_sam, cfg.k_clusters, cfg.weights,
                                                  cfg.seed, cfg.p_lo, cfg.p_hi, 100})
                    : exemplar::top_m_by_score(pool, cfg.m);
            for (const auto& c : sel) sel_boxes.push_back(c.box);
        }
        if (sel_boxes.empty()) sel_boxes = {box0};  // never dead-end

        const ScalarGrid dm2 = providers.density(image_id, sel_boxes);
        const auto cands2 = idm::run_idm(dm2, idm_pass2);
        result.prompts_final =
            ppsm::select_prompts(cands2, sim, dets, cfg.k_ppsm, ppsm_count(cfg, dm2));
        masks2 = decode_batch(providers, image_id, result.prompts_final);
        result.exemplars_final = sel_boxes;
    }

    result.masks = cfg.use_imrm() ? imrm::filter_masks(masks2, dets, cfg.iou_min) : masks2;
    result.predicted_count = static_cast<int>(result.masks.size());
    return result;
}

}  // namespace persense::pipeline
