#include "srlbench/norm.hpp"

#include <cmath>
#include <stdexcept>

namespace srlbench::data {

std::vector<double> image_to_planar(const env::Image& image) {
    // HWC bytes -> CHW doubles, so a flat observation vector reshapes
    // directly to [3, H, W] for convolutional consumers
    const size_t hw = image.size() / 3;
    std::vector<double> out(image.size());
    for (size_t i = 0; i < hw; ++i) {
        for (size_t c = 0; c < 3; ++c) out[c * hw + i] = static_cast<double>(image[i * 3 + c]);
    }
    return out;
}

void NormStats::update(std::span<const double> sample) {
    if (static_cast<int64_t>(sample.size()) != dim()) {
        throw std::invalid_argument("norm: sample dimension " + std::to_string(sample.size()) +
                                    " does not match stats dimension " + std::to_string(dim()));
    }
    ++count;
    for (size_t i = 0; i < sample.size(); ++i) {
        const double delta = sample[i] - mean[i];
        mean[i] += delta / count;
        m2[i] += delta * (sample[i] - mean[i]);
    }
}

void NormStats::update(const env::Image& image) {
    const std::vector<double> v = image_to_planar(image);
    update(std::span<const double>(v));
}

void NormStats::normalize(std::span<const double> x, std::span<double> out) const {
    if (x.size() != out.size()) throw std::invalid_argument("norm: output size mismatch");
    if (mode == NormMode::pixel_scale) {
        for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] / 255.0;
        return;
    }
    if (count == 0) throw std::logic_error("norm: running statistics not fitted");
    if (static_cast<int64_t>(x.size()) != dim()) {
        throw std::invalid_argument("norm: input dimension " + std::to_string(x.size()) +
                                    " does not match stats dimension " + std::to_string(dim()));
    }
    for (size_t i = 0; i < x.size(); ++i) {
        out[i] = (x[i] - mean[i]) / std::sqrt(variance(static_cast<int64_t>(i)) + kEps);
    }
}

std::vector<double> NormStats::normalize_image(const env::Image& image) const {
    const std::vector<double> v = image_to_planar(image);
    std::vector<double> out(v.size());
    normalize(std::span<const double>(v), std::span<double>(out));
    return out;
}

}  // namespace srlbench::data
