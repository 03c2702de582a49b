#include "srlbench/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace srlbench::ad {

Optimizer::Optimizer(OptimizerConfig config, std::vector<Tensor> params)
    : config_(config), params_(std::move(params)) {
    if (config_.learning_rate <= 0.0) throw std::invalid_argument("optimizer: learning rate must be positive");
    if (config_.kind == OptimizerConfig::Kind::adam) {
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (size_t i = 0; i < params_.size(); ++i) {
            m_[i].assign(params_[i].data().size(), 0.0);
            v_[i].assign(params_[i].data().size(), 0.0);
        }
    }
}

void Optimizer::step() {
    for (auto& p : params_) {
        if (!p.has_grad()) throw std::runtime_error("optimizer: parameter has no gradient");
    }
    ++step_count_;
    const double lr = config_.learning_rate;
    if (config_.kind == OptimizerConfig::Kind::sgd) {
        for (auto& p : params_) {
            const std::vector<double>& g = p.grad();
            std::vector<double>& d = p.data();
            for (size_t i = 0; i < d.size(); ++i) d[i] -= lr * g[i];
        }
        return;
    }
    const double b1 = config_.beta1, b2 = config_.beta2, eps = config_.epsilon;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        const std::vector<double>& g = params_[pi].grad();
        std::vector<double>& d = params_[pi].data();
        std::vector<double>& m = m_[pi];
        std::vector<double>& v = v_[pi];
        for (size_t i = 0; i < d.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            d[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

void Optimizer::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

}  // namespace srlbench::ad
