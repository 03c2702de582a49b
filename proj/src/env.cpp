#include "srlbench/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace srlbench::env {

namespace {

constexpr uint8_t kBackground[3] = {230, 230, 230};
constexpr uint8_t kWall[3] = {40, 40, 40};
constexpr uint8_t kTarget[3] = {214, 58, 46};
constexpr uint8_t kRobot[3] = {38, 70, 213};

// robot disk radius as a fraction of the image side
constexpr double kRobotRadiusFrac = 1.0 / 16.0;
constexpr int kSubsamples = 4;  // per axis

void blend(uint8_t* px, const uint8_t color[3], double alpha) {
    for (int c = 0; c < 3; ++c) {
        const double v = (1.0 - alpha) * px[c] + alpha * color[c];
        px[c] = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
}

void fill_disk(Image& img, int n, double cx, double cy, double radius, const uint8_t color[3]) {
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius - 1.0)));
    const int x1 = std::min(n - 1, static_cast<int>(std::ceil(cx + radius + 1.0)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius - 1.0)));
    const int y1 = std::min(n - 1, static_cast<int>(std::ceil(cy + radius + 1.0)));
    const double r2 = radius * radius;
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            int inside = 0;
            for (int sy = 0; sy < kSubsamples; ++sy) {
                const double py = y + (sy + 0.5) / kSubsamples;
                for (int sx = 0; sx < kSubsamples; ++sx) {
                    const double px = x + (sx + 0.5) / kSubsamples;
                    const double dx = px - cx, dy = py - cy;
                    if (dx * dx + dy * dy <= r2) ++inside;
                }
            }
            if (inside == 0) continue;
            blend(&img[(y * n + x) * 3], color, inside / double(kSubsamples * kSubsamples));
        }
    }
}

void fill_band(Image& img, int n, double cx, double half_width, const uint8_t color[3]) {
    const double lo = cx - half_width, hi = cx + half_width;
    const int x0 = std::max(0, static_cast<int>(std::floor(lo)));
    const int x1 = std::min(n - 1, static_cast<int>(std::ceil(hi)));
    for (int x = x0; x <= x1; ++x) {
        // horizontal overlap of the pixel column [x, x+1) with the band
        const double cover = std::clamp(std::min(hi, x + 1.0) - std::max(lo, double(x)), 0.0, 1.0);
        if (cover <= 0.0) continue;
        for (int y = 0; y < n; ++y) blend(&img[(y * n + x) * 3], color, cover);
    }
}

}  // namespace

void NavConfig::validate() const {
    if (arena_size <= 0.0) throw std::invalid_argument("env: arena_size must be positive");
    if (image_size <= 0) throw std::invalid_argument("env: image_size must be positive");
    if (max_steps <= 0) throw std::invalid_argument("env: max_steps must be positive");
    if (step_length <= 0.0) throw std::invalid_argument("env: step_length must be positive");
    if (target_radius <= 0.0) throw std::invalid_argument("env: target_radius must be positive");
    if (!(step_length < arena_size / 4.0)) {
        throw std::invalid_argument("env: step_length must be below arena_size / 4");
    }
    if (!(target_radius >= step_length / 2.0)) {
        throw std::invalid_argument("env: target_radius must be at least step_length / 2");
    }
    const double scale = image_size / arena_size;
    if (target_radius * scale < 1.0 || image_size * kRobotRadiusFrac < 1.0) {
        throw std::invalid_argument("env: image_size " + std::to_string(image_size) +
                                    " too small to render distinguishable robot and target");
    }
}

Image render(const EnvState& state, const NavConfig& cfg) {
    cfg.validate();
    const int n = cfg.image_size;
    const double scale = n / cfg.arena_size;

    Image img(static_cast<size_t>(n) * n * 3);
    for (int i = 0; i < n * n; ++i) {
        img[i * 3] = kBackground[0];
        img[i * 3 + 1] = kBackground[1];
        img[i * 3 + 2] = kBackground[2];
    }
    const int border = std::max(1, n / 32);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            if (y < border || y >= n - border || x < border || x >= n - border) {
                uint8_t* px = &img[(y * n + x) * 3];
                px[0] = kWall[0]; px[1] = kWall[1]; px[2] = kWall[2];
            }
        }
    }

    if (cfg.variant == Variant::target_2d) {
        fill_disk(img, n, state.target_x * scale, state.target_y * scale,
                  cfg.target_radius * scale, kTarget);
    } else {
        fill_band(img, n, state.target_x * scale, cfg.target_radius * scale, kTarget);
    }
    fill_disk(img, n, state.robot_x * scale, state.robot_y * scale, n * kRobotRadiusFrac, kRobot);
    return img;
}

NavEnv::NavEnv(NavConfig cfg) : cfg_(cfg) {
    cfg_.validate();
}

bool NavEnv::on_target() const {
    if (cfg_.variant == Variant::target_1d) {
        return std::abs(state_.robot_x - state_.target_x) <= cfg_.target_radius;
    }
    const double dx = state_.robot_x - state_.target_x;
    const double dy = state_.robot_y - state_.target_y;
    return dx * dx + dy * dy <= cfg_.target_radius * cfg_.target_radius;
}

StepResult NavEnv::reset(uint64_t episode_seed) {
    Rng rng(mix_seed(cfg_.seed, episode_seed));
    const double a = cfg_.arena_size;
    const double r = cfg_.target_radius;

    // target fully inside the arena
    state_.target_x = rng.uniform(r, a - r);
    state_.target_y = cfg_.variant == Variant::target_2d ? rng.uniform(r, a - r) : 0.0;

    // robot anywhere, but never starting on the target
    int tries = 0;
    do {
        if (++tries > 10000) throw std::runtime_error("env: target region covers the whole arena");
        state_.robot_x = rng.uniform(0.0, a);
        state_.robot_y = rng.uniform(0.0, a);
    } while (on_target());
    state_.steps_elapsed = 0;
    done_ = false;

    StepResult out;
    out.reward = 0;
    out.done = false;
    out.gt_state = gt_state();
    if (cfg_.render_observations) out.observation = render(state_, cfg_);
    return out;
}

StepResult NavEnv::step(int action) {
    if (done_) throw std::logic_error("env: step() called on a finished episode");
    if (action < 0 || action >= kNumActions) {
        throw std::invalid_argument("env: action " + std::to_string(action) + " outside [0, 4)");
    }
    double dx = 0.0, dy = 0.0;
    switch (action) {
        case 0: dx = cfg_.step_length; break;
        case 1: dx = -cfg_.step_length; break;
        case 2: dy = cfg_.step_length; break;
        case 3: dy = -cfg_.step_length; break;
    }
    const double a = cfg_.arena_size;
    const double nx = state_.robot_x + dx;
    const double ny = state_.robot_y + dy;
    const bool hit_wall = nx < 0.0 || nx > a || ny < 0.0 || ny > a;
    state_.robot_x = std::clamp(nx, 0.0, a);
    state_.robot_y = std::clamp(ny, 0.0, a);
    ++state_.steps_elapsed;
    done_ = state_.steps_elapsed >= cfg_.max_steps;

    StepResult out;
    out.reward = hit_wall ? -1 : (on_target() ? 1 : 0);
    out.done = done_;
    out.gt_state = gt_state();
    if (cfg_.render_observations) out.observation = render(state_, cfg_);
    return out;
}

std::vector<double> NavEnv::gt_state() const {
    const double a = cfg_.arena_size;
    if (cfg_.variant == Variant::target_1d) {
        return {state_.robot_x / a, state_.robot_y / a, state_.target_x / a};
    }
    return {state_.robot_x / a, state_.robot_y / a, state_.target_x / a, state_.target_y / a};
}

int greedy_action(const std::vector<double>& gt_state, Variant variant) {
    const double dx = gt_state[2] - gt_state[0];
    const double dy = variant == Variant::target_2d ? gt_state[3] - gt_state[1] : 0.0;
    if (std::abs(dx) >= std::abs(dy)) return dx >= 0.0 ? 0 : 1;
    return dy >= 0.0 ? 2 : 3;
}

}  // namespace srlbench::env
