#pragma once

#include <vector>

#include "persense/grid.hpp"
#include "persense/idm.hpp"

namespace persense::ppsm {

struct PointPrompt {
    PixelPoint point;
    double similarity = 0.0;
    bool gated = true;  // passed the box gate
};

// T_adapt = s_max * k / count. Requires count > 1 and k > 0; with a single
// candidate the caller selects it directly.
double adaptive_threshold(double s_max, int count, double k);

// True iff p lies inside at least one detection box (inclusive bounds).
bool box_gate(const PixelPoint& p, const std::vector<Detection>& detections);

// Filters candidates by the adaptive similarity threshold and the box gate.
// count_override > 0 substitutes the object count used for T_adapt (e.g. the
// rounded DM integral); otherwise the candidate count is used.
std::vector<PointPrompt> select_prompts(const std::vector<idm::CandidatePoint>& candidates,
                                        const ScalarGrid& sim,
                                        const std::vector<Detection>& detections, double k,
                                        int count_override = -1);

}  // namespace persense::ppsm
