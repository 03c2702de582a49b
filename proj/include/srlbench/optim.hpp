#pragma once

#include <cstdint>
#include <vector>

#include "srlbench/tensor.hpp"

namespace srlbench::ad {

struct OptimizerConfig {
    enum class Kind { sgd, adam };
    Kind kind = Kind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// SGD / Adam over a fixed parameter list. Moment buffers are index-aligned
// with the parameters given at construction. step() requires every
// parameter's gradient to have been populated; it never clears gradients.
class Optimizer {
public:
    Optimizer(OptimizerConfig config, std::vector<Tensor> params);

    void step();
    void zero_grad();
    int64_t step_count() const { return step_count_; }
    const OptimizerConfig& config() const { return config_; }

private:
    OptimizerConfig config_;
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    int64_t step_count_ = 0;
};

}  // namespace srlbench::ad
