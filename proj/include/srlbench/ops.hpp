#pragma once

#include <functional>
#include <vector>

#include "srlbench/tensor.hpp"

namespace srlbench::ad {

// Differentiable ops. Each takes an optional tape; the op is recorded when
// tape != nullptr and at least one input requires a gradient, and the output
// then requires a gradient too. Every op validates shapes and rejects
// non-finite results.

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b);

// Same-shape elementwise add, or broadcast of b over leading dims of a
// when b.shape is a suffix of a.shape (bias add).
Tensor add(Tape* tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape* tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape* tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape* tape, const Tensor& a, double factor);

Tensor relu(Tape* tape, const Tensor& x);
Tensor tanh(Tape* tape, const Tensor& x);
Tensor exp(Tape* tape, const Tensor& x);

// Softmax / log-softmax over the last axis.
Tensor softmax(Tape* tape, const Tensor& x);
Tensor log_softmax(Tape* tape, const Tensor& x);

// Contiguous [begin, end) range on the last axis.
Tensor slice(Tape* tape, const Tensor& x, int begin, int end);
// Concatenation along the last axis; leading dims must match.
Tensor concat(Tape* tape, const Tensor& a, const Tensor& b);

Tensor reshape(Tape* tape, const Tensor& x, const Shape& shape);
// Collapse all but the first axis: [d0, ...] -> [d0, rest].
Tensor flatten(Tape* tape, const Tensor& x);

Tensor sum(Tape* tape, const Tensor& x);
Tensor mean(Tape* tape, const Tensor& x);

// Mean squared error over all elements.
Tensor mse(Tape* tape, const Tensor& pred, const Tensor& target);

// Mean softmax cross-entropy with integer class targets; optional per-class
// weights (weighted mean, normalized by the sum of sample weights).
Tensor cross_entropy(Tape* tape, const Tensor& logits, const std::vector<int>& targets,
                     const std::vector<double>* class_weights = nullptr);

// Per-row log softmax(logits)[action]; output shape [rows].
Tensor gather_log_prob(Tape* tape, const Tensor& logits, const std::vector<int>& actions);

Tensor minimum(Tape* tape, const Tensor& a, const Tensor& b);
Tensor clamp(Tape* tape, const Tensor& x, double lo, double hi);

// 2D convolution, x [B,C,H,W], w [O,C,K,K], bias [O].
Tensor conv2d(Tape* tape, const Tensor& x, const Tensor& w, const Tensor& bias,
              int stride = 1, int padding = 0);

Tensor one_hot(const std::vector<int>& indices, int num_classes);

// Extension hook: append a custom backward rule to the tape.
void record_custom(Tape* tape, std::function<void()> backward);

struct GradCheckReport {
    double max_rel_error = 0.0;
    int64_t components_checked = 0;
};

// Compares autodiff gradients of a scalar-valued function against central
// finite differences (step h) on every requires_grad input component.
GradCheckReport grad_check(
    const std::function<Tensor(Tape*, std::vector<Tensor>&)>& fn,
    std::vector<Tensor> inputs, double h = 1e-5);

}  // namespace srlbench::ad
