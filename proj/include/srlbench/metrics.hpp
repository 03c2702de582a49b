#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "srlbench/env.hpp"

namespace srlbench::metrics {

// Row-major sample matrix: rows = samples, cols = dimensions.
struct Mat {
    int64_t rows = 0;
    int64_t cols = 0;
    std::vector<double> values;

    double at(int64_t r, int64_t c) const { return values[static_cast<size_t>(r * cols + c)]; }
    static Mat from_rows(const std::vector<std::vector<double>>& rows);
};

struct PearsonResult {
    double rho = 0.0;
    // set when either input has zero variance; rho is then 0 by convention
    bool zero_variance = false;
};

PearsonResult pearson(std::span<const double> x, std::span<const double> y);

// Per ground-truth dimension, the maximum |Pearson| over learned dimensions.
struct GtcReport {
    std::vector<double> gtc;                 // one entry per GT dim, in [0, 1]
    std::vector<int> argmax;                 // learned dim attaining the max (ties: smallest)
    std::vector<bool> gt_zero_variance;      // per GT dim
    std::vector<bool> learned_zero_variance; // per learned dim
    double gtc_mean = 0.0;
};

GtcReport gtc(const Mat& learned_states, const Mat& gt_states);

struct EvalResult {
    double mean_reward = 0.0;
    double std_error = 0.0;  // sample std / sqrt(episodes)
    std::vector<double> episode_rewards;
    int64_t budget_timesteps = 0;
};

// Runs fresh episodes with deterministic per-episode seeds; the policy maps
// a StepResult (observation + ground truth) to a discrete action.
EvalResult evaluate_policy(const std::function<int(const env::StepResult&)>& policy,
                           const env::NavConfig& cfg, int episodes, uint64_t seed);

}  // namespace srlbench::metrics
