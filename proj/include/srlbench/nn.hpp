#pragma once

#include <string>
#include <utility>
#include <vector>

#include "srlbench/ops.hpp"
#include "srlbench/rng.hpp"
#include "srlbench/tensor.hpp"

namespace srlbench::nn {

using NamedParams = std::vector<std::pair<std::string, ad::Tensor>>;

enum class Activation { relu, tanh, linear };

// Fully connected layer, weight [in, out], He init for relu fan-ins and
// Xavier otherwise, zero bias.
struct Linear {
    ad::Tensor weight;
    ad::Tensor bias;

    Linear() = default;
    Linear(int in, int out, Activation downstream, Rng& rng);

    ad::Tensor forward(ad::Tape* tape, const ad::Tensor& x) const;
    void collect(NamedParams& out, const std::string& prefix) const;
    int in_features() const { return weight.dim(0); }
    int out_features() const { return weight.dim(1); }
};

struct Conv2d {
    ad::Tensor weight;  // [out_c, in_c, k, k]
    ad::Tensor bias;
    int stride = 1;
    int padding = 0;

    Conv2d() = default;
    Conv2d(int in_c, int out_c, int kernel, int stride, int padding, Rng& rng);

    ad::Tensor forward(ad::Tape* tape, const ad::Tensor& x) const;
    void collect(NamedParams& out, const std::string& prefix) const;
};

// MLP with a shared hidden activation; the output layer is linear.
struct Mlp {
    std::vector<Linear> layers;
    Activation hidden_act = Activation::relu;

    Mlp() = default;
    Mlp(int in, const std::vector<int>& hidden, int out, Activation act, Rng& rng);

    ad::Tensor forward(ad::Tape* tape, const ad::Tensor& x) const;
    void collect(NamedParams& out, const std::string& prefix) const;
    int in_features() const { return layers.front().in_features(); }
    int out_features() const { return layers.back().out_features(); }
};

void set_requires_grad(const NamedParams& params, bool value);
void zero_grads(const NamedParams& params);
// Deep copy of parameter values (for best-epoch snapshots).
std::vector<std::vector<double>> snapshot(const NamedParams& params);
void restore(const NamedParams& params, const std::vector<std::vector<double>>& snap);

}  // namespace srlbench::nn
