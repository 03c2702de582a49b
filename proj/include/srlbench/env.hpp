#pragma once

#include <cstdint>
#include <vector>

#include "srlbench/rng.hpp"

namespace srlbench::env {

enum class Variant { target_1d, target_2d };

struct NavConfig {
    Variant variant = Variant::target_2d;
    double arena_size = 1.0;
    int image_size = 32;
    int max_steps = 250;
    double step_length = 0.08;
    double target_radius = 0.08;
    uint64_t seed = 0;
    // rendering can be skipped for ground-truth-only consumers
    bool render_observations = true;

    void validate() const;
    int gt_dim() const { return variant == Variant::target_1d ? 3 : 4; }
};

// H*W*3 RGB, row-major, 8-bit channels.
using Image = std::vector<uint8_t>;

struct EnvState {
    double robot_x = 0.0;
    double robot_y = 0.0;
    double target_x = 0.0;
    double target_y = 0.0;  // unused for target_1d
    int steps_elapsed = 0;
};

struct StepResult {
    Image observation;
    int reward = 0;  // in {-1, 0, +1}
    bool done = false;
    std::vector<double> gt_state;
};

// Deterministic rasterization of the arena: bordered background, the target
// as a filled disk (2D) or full-height band (1D), the robot as a filled disk
// on top. Disk edges are drawn with supersampled coverage so sub-pixel
// position changes show up in the image.
Image render(const EnvState& state, const NavConfig& cfg);

// Mobile navigation with a random target. Four actions translate the robot
// along the axes; motion past a wall clamps to the boundary and costs -1;
// being within target_radius of the target earns +1 every step; episodes run
// exactly max_steps.
class NavEnv {
public:
    static constexpr int kNumActions = 4;
    // 0: right (+x), 1: left (-x), 2: forward (+y), 3: backward (-y)

    explicit NavEnv(NavConfig cfg);

    StepResult reset(uint64_t episode_seed);
    StepResult step(int action);

    const NavConfig& config() const { return cfg_; }
    const EnvState& state() const { return state_; }
    bool done() const { return done_; }
    bool on_target() const;

    // Positions normalized to [0, 1]: (x_robot, y_robot, x_target[, y_target]).
    std::vector<double> gt_state() const;

private:
    NavConfig cfg_;
    EnvState state_;
    bool done_ = true;
};

// Scripted reference policy on ground-truth state: step along the axis with
// the largest robot-to-target gap.
int greedy_action(const std::vector<double>& gt_state, Variant variant);

}  // namespace srlbench::env
