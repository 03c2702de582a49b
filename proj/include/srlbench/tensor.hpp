#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace srlbench::ad {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
int64_t shape_numel(const Shape& s);

// Dense 64-bit float tensor with an optional gradient accumulator.
// Value type over shared storage: copies alias the same buffer, which is
// what the tape's backward closures rely on.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(const Shape& shape, bool requires_grad = false);
    static Tensor full(const Shape& shape, double value, bool requires_grad = false);
    static Tensor from_vector(const Shape& shape, std::vector<double> values,
                              bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    int ndim() const { return static_cast<int>(impl_->shape.size()); }
    int dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
    int64_t size() const { return static_cast<int64_t>(impl_->data.size()); }

    std::vector<double>& data() { return impl_->data; }
    const std::vector<double>& data() const { return impl_->data; }

    bool requires_grad() const { return impl_ && impl_->requires_grad; }
    void set_requires_grad(bool v) { impl_->requires_grad = v; }

    bool has_grad() const { return impl_ && !impl_->grad.empty(); }
    // Gradient accumulator, allocated zero-filled on first access.
    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    void zero_grad();

    // Scalar tensors only.
    double item() const;

    // Deep copy without gradient tracking.
    Tensor detach() const;
    // Deep copy preserving requires_grad.
    Tensor clone() const;

    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

private:
    struct Impl {
        Shape shape;
        std::vector<double> data;
        std::vector<double> grad;  // empty until touched
        bool requires_grad = false;
    };
    std::shared_ptr<Impl> impl_;
};

// Ordered record of differentiable operations for one forward pass.
// Ops append themselves in execution order, which is a topological order
// by construction; backward() replays the list once in reverse.
class Tape {
public:
    using BackwardFn = std::function<void()>;

    void record(BackwardFn fn) { ops_.push_back(std::move(fn)); }

    // Seeds d(loss)/d(loss) = 1 and runs every recorded backward rule
    // exactly once, accumulating into .grad() of requires_grad tensors.
    void backward(Tensor& loss);

    size_t num_ops() const { return ops_.size(); }
    void clear() { ops_.clear(); }

private:
    std::vector<BackwardFn> ops_;
};

}  // namespace srlbench::ad
