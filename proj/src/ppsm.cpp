#include "persense/ppsm.hpp"

#include <algorithm>
#include <stdexcept>

namespace persense::ppsm {

double adaptive_threshold(double s_max, int count, double k) {
    if (count <= 1) throw std::invalid_argument("adaptive_threshold: count must exceed 1");
    if (k <= 0.0) throw std::invalid_argument("adaptive_threshold: k must be positive");
    return s_max * k / static_cast<double>(count);
}

bool box_gate(const PixelPoint& p, const std::vector<Detection>& detections) {
    for (const auto& d : detections)
        if (d.box.contains(p)) return true;
    return false;
}

std::vector<PointPrompt> select_prompts(const std::vector<idm::CandidatePoint>& candidates,
                                        const ScalarGrid& sim,
                                        const std::vector<Detection>& detections, double k,
                                        int count_override) {
    if (candidates.empty()) return {};
    for (const auto& c : candidates)
        if (!sim.in_bounds(c.point.x, c.point.y))
            throw std::invalid_argument("select_prompts: candidate outside similarity grid");

    if (candidates.size() == 1) {
        const auto& p = candidates.front().point;
        return {PointPrompt{p, sim.at(p.x, p.y), true}};
    }

    double s_max = sim.at(candidates.front().point.x, candidates.front().point.y);
    for (const auto& c : candidates) s_max = std::max(s_max, sim.at(c.point.x, c.point.y));

    const int count =
        count_override > 1 ? count_override : static_cast<int>(candidates.size());
    const double t_adapt = adaptive_threshold(s_max, count, k);

    std::vector<PointPrompt> out;
    for (const auto& c : candidates) {
        const double s = sim.at(c.point.x, c.point.y);
        if (s >= t_adapt && box_gate(c.point, detections))
            out.push_back(PointPrompt{c.point, s, true});
    }
    return out;
}

}  // namespace persense::ppsm
