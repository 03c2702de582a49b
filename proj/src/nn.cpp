#include "srlbench/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace srlbench::nn {

namespace {

ad::Tensor init_weight(const ad::Shape& shape, int fan_in, int fan_out, Activation downstream,
                       Rng& rng) {
    const double std_dev = downstream == Activation::relu
                               ? std::sqrt(2.0 / fan_in)
                               : std::sqrt(2.0 / (fan_in + fan_out));
    ad::Tensor w = ad::Tensor::zeros(shape, true);
    for (auto& v : w.data()) v = rng.normal() * std_dev;
    return w;
}

}  // namespace

Linear::Linear(int in, int out, Activation downstream, Rng& rng) {
    weight = init_weight({in, out}, in, out, downstream, rng);
    bias = ad::Tensor::zeros({out}, true);
}

ad::Tensor Linear::forward(ad::Tape* tape, const ad::Tensor& x) const {
    return ad::add(tape, ad::matmul(tape, x, weight), bias);
}

void Linear::collect(NamedParams& out, const std::string& prefix) const {
    out.emplace_back(prefix + ".weight", weight);
    out.emplace_back(prefix + ".bias", bias);
}

Conv2d::Conv2d(int in_c, int out_c, int kernel, int stride_, int padding_, Rng& rng)
    : stride(stride_), padding(padding_) {
    const int fan_in = in_c * kernel * kernel;
    weight = init_weight({out_c, in_c, kernel, kernel}, fan_in, out_c * kernel * kernel,
                         Activation::relu, rng);
    bias = ad::Tensor::zeros({out_c}, true);
}

ad::Tensor Conv2d::forward(ad::Tape* tape, const ad::Tensor& x) const {
    return ad::conv2d(tape, x, weight, bias, stride, padding);
}

void Conv2d::collect(NamedParams& out, const std::string& prefix) const {
    out.emplace_back(prefix + ".weight", weight);
    out.emplace_back(prefix + ".bias", bias);
}

Mlp::Mlp(int in, const std::vector<int>& hidden, int out, Activation act, Rng& rng)
    : hidden_act(act) {
    int cur = in;
    for (int h : hidden) {
        layers.emplace_back(cur, h, act, rng);
        cur = h;
    }
    layers.emplace_back(cur, out, Activation::linear, rng);
}

ad::Tensor Mlp::forward(ad::Tape* tape, const ad::Tensor& x) const {
    ad::Tensor cur = x;
    for (size_t i = 0; i < layers.size(); ++i) {
        cur = layers[i].forward(tape, cur);
        if (i + 1 < layers.size()) {
            cur = hidden_act == Activation::tanh ? ad::tanh(tape, cur) : ad::relu(tape, cur);
        }
    }
    return cur;
}

void Mlp::collect(NamedParams& out, const std::string& prefix) const {
    for (size_t i = 0; i < layers.size(); ++i) {
        layers[i].collect(out, prefix + ".fc" + std::to_string(i));
    }
}

void set_requires_grad(const NamedParams& params, bool value) {
    for (const auto& [name, t] : params) {
        ad::Tensor tt = t;
        tt.set_requires_grad(value);
    }
}

void zero_grads(const NamedParams& params) {
    for (const auto& [name, t] : params) {
        ad::Tensor tt = t;
        tt.zero_grad();
    }
}

std::vector<std::vector<double>> snapshot(const NamedParams& params) {
    std::vector<std::vector<double>> snap;
    snap.reserve(params.size());
    for (const auto& [name, t] : params) snap.push_back(t.data());
    return snap;
}

void restore(const NamedParams& params, const std::vector<std::vector<double>>& snap) {
    if (snap.size() != params.size()) throw std::invalid_argument("restore: parameter count mismatch");
    for (size_t i = 0; i < params.size(); ++i) {
        ad::Tensor t = params[i].second;
        if (t.data().size() != snap[i].size()) {
            throw std::invalid_argument("restore: size mismatch for " + params[i].first);
        }
        t.data() = snap[i];
    }
}

}  // namespace srlbench::nn
