#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "srlbench/env.hpp"

namespace srlbench::data {

enum class NormMode { pixel_scale, running_meanstd };

// HWC bytes -> CHW doubles.
std::vector<double> image_to_planar(const env::Image& image);

// Per-dimension streaming normalization statistics (Welford). Variance is
// the population variance m2/count; normalization uses sqrt(var + 1e-8).
struct NormStats {
    NormMode mode = NormMode::pixel_scale;
    std::vector<double> mean;
    std::vector<double> m2;
    int64_t count = 0;

    static constexpr double kEps = 1e-8;

    explicit NormStats(NormMode m = NormMode::pixel_scale, int64_t dim = 0)
        : mode(m), mean(static_cast<size_t>(dim), 0.0), m2(static_cast<size_t>(dim), 0.0) {}

    int64_t dim() const { return static_cast<int64_t>(mean.size()); }
    double variance(int64_t i) const { return count > 0 ? m2[static_cast<size_t>(i)] / count : 0.0; }

    void update(std::span<const double> sample);
    void update(const env::Image& image);

    void normalize(std::span<const double> x, std::span<double> out) const;
    std::vector<double> normalize_image(const env::Image& image) const;
};

}  // namespace srlbench::data
