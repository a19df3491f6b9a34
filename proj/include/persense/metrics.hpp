#pragma once

#include <string>
#include <utility>
#include <vector>

#include "persense/grid.hpp"
#include "persense/ppsm.hpp"

namespace persense::metrics {

enum class DensityBin { Low, Medium, High };

std::string to_string(DensityBin bin);

struct EvalReport {
    std::string image_id;
    std::string variant;
    double miou = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
    double prompt_precision = 0.0;
    double prompt_recall = 0.0;
    DensityBin bin = DensityBin::Low;
    double cv_scale = 0.0;
};

// Union of predictions vs union of ground truth for one image.
double class_miou(const std::vector<InstanceMask>& pred_masks,
                  const std::vector<InstanceMask>& gt_masks);

// (MAE, RMSE) over per-image count pairs. Length mismatch or empty throws.
std::pair<double, double> count_errors(const std::vector<int>& pred, const std::vector<int>& gt);

// Low <= 30 < Medium <= 60 < High.
DensityBin density_bin(int count);

// Greedy point-in-mask matching in prompt order; an instance claimed once
// stops claiming further prompts. Empty prompts -> (1, 0).
std::pair<double, double> prompt_pr(const std::vector<ppsm::PointPrompt>& prompts,
                                    const std::vector<InstanceMask>& gt_masks);

// Coefficient of variation sigma/mu over instance areas; mu <= 0 throws.
double cv_scale(const std::vector<double>& areas);

// 1 - Phi((t - mu)/sigma); sigma <= 0 throws.
double exceedance_probability(double mu, double sigma, double t);

}  // namespace persense::metrics
