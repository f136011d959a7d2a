#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "absa/error.hpp"

namespace absa {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

// Row-major strides for a shape.
inline std::vector<std::size_t> row_major_strides(const Shape& shape) {
    std::vector<std::size_t> strides(shape.size(), 1);
    for (std::size_t i = shape.size(); i-- > 1;) {
        strides[i - 1] = strides[i] * shape[i];
    }
    return strides;
}

template <typename Real>
class TapeT;

// Dense n-dimensional array with an optional gradient slot. Copies are
// shallow handles onto shared storage; `detached()` yields a view that sees
// the same values but never accumulates gradient.
template <typename Real>
class TensorT {
public:
    TensorT() = default;

    explicit TensorT(Shape shape, Real fill = Real(0))
        : impl_(std::make_shared<Impl>()) {
        impl_->shape = std::move(shape);
        validate_shape(impl_->shape);
        impl_->values = std::make_shared<std::vector<Real>>(shape_size(impl_->shape), fill);
    }

    TensorT(Shape shape, std::vector<Real> values) : impl_(std::make_shared<Impl>()) {
        impl_->shape = std::move(shape);
        validate_shape(impl_->shape);
        if (shape_size(impl_->shape) != values.size()) {
            throw ShapeError("tensor data length " + std::to_string(values.size()) +
                             " does not match shape " + shape_str(impl_->shape));
        }
        impl_->values = std::make_shared<std::vector<Real>>(std::move(values));
    }

    static TensorT scalar(Real v) { return TensorT({1}, std::vector<Real>{v}); }

    bool defined() const { return impl_ != nullptr; }

    const Shape& shape() const { return check().shape; }
    std::size_t rank() const { return check().shape.size(); }
    std::size_t size() const { return check().values->size(); }

    std::vector<Real>& values() { return *check().values; }
    const std::vector<Real>& values() const { return *check().values; }

    Real scalar_value() const {
        if (size() != 1) throw UsageError("scalar_value on tensor of shape " + shape_str(shape()));
        return (*check().values)[0];
    }

    bool requires_grad() const { return check().requires_grad; }

    void set_requires_grad(bool on) {
        check().requires_grad = on;
        if (!on) impl_->grad.reset();
    }

    bool grad_allocated() const { return check().grad != nullptr; }

    // Gradient buffer, zero-initialized on first access. Only tensors that
    // require grad may hold one.
    std::vector<Real>& grad() {
        Impl& im = check();
        if (!im.requires_grad) {
            throw UsageError("grad() on a tensor that does not require gradient");
        }
        if (!im.grad) im.grad = std::make_unique<std::vector<Real>>(im.values->size(), Real(0));
        return *im.grad;
    }

    const std::vector<Real>& grad_view() const {
        const Impl& im = check();
        if (!im.grad) throw UsageError("gradient has not been populated");
        return *im.grad;
    }

    void zero_grad() {
        Impl& im = check();
        if (im.grad) std::fill(im.grad->begin(), im.grad->end(), Real(0));
    }

    void drop_grad() { check().grad.reset(); }

    // Constant view: same values (shared storage), never records gradient.
    TensorT detached() const {
        const Impl& im = check();
        TensorT out;
        out.impl_ = std::make_shared<Impl>();
        out.impl_->shape = im.shape;
        out.impl_->values = im.values;
        return out;
    }

    // Deep copy, off any tape, gradient state reset.
    TensorT clone() const {
        const Impl& im = check();
        TensorT out(im.shape, *im.values);
        out.impl_->requires_grad = im.requires_grad;
        return out;
    }

    // Tape bookkeeping (set by recorded operations).
    void mark_on_tape(const void* tape, long node) {
        check().tape = tape;
        check().node = node;
    }
    const void* tape_id() const { return check().tape; }
    long tape_node() const { return check().node; }

    // Identity of the underlying storage; detached views share it.
    const void* storage_id() const { return check().values.get(); }

private:
    struct Impl {
        Shape shape;
        std::shared_ptr<std::vector<Real>> values;
        std::unique_ptr<std::vector<Real>> grad;
        bool requires_grad = false;
        const void* tape = nullptr;
        long node = -1;
    };

    static void validate_shape(const Shape& shape) {
        if (shape.empty()) throw ShapeError("tensor rank must be >= 1");
        for (std::size_t e : shape) {
            if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
        }
    }

    Impl& check() {
        if (!impl_) throw UsageError("operation on an undefined tensor");
        return *impl_;
    }
    const Impl& check() const {
        if (!impl_) throw UsageError("operation on an undefined tensor");
        return *impl_;
    }

    std::shared_ptr<Impl> impl_;
};

// Ordered record of executed operations. Each op that produces a
// gradient-tracked output appends one backward closure; `backward` replays
// the record once, in reverse execution order.
//
// Gradient lifetimes: tensors produced by recorded operations (interior
// nodes) hold per-sweep flow buffers that are reset at the start of every
// backward call; leaf tensors (parameters, explicitly flagged inputs)
// accumulate across calls until their grads are cleared.
template <typename Real>
class TapeT {
public:
    TapeT() = default;
    TapeT(const TapeT&) = delete;
    TapeT& operator=(const TapeT&) = delete;

    long record(TensorT<Real> output, std::function<void()> backward_fn) {
        nodes_.push_back(std::move(backward_fn));
        outputs_.push_back(std::move(output));
        return static_cast<long>(nodes_.size()) - 1;
    }

    // Seeds d(loss)/d(loss) = 1 and sweeps the tape backwards, touching each
    // recorded operation at or before the loss exactly once.
    void backward(TensorT<Real>& loss) {
        if (!loss.defined() || loss.tape_id() != this || loss.tape_node() < 0) {
            throw UsageError("backward: tensor was not produced by an operation recorded on this tape");
        }
        if (loss.size() != 1) {
            throw UsageError("backward expects a scalar loss, got shape " + shape_str(loss.shape()));
        }
        for (long i = 0; i <= loss.tape_node(); ++i) {
            outputs_[static_cast<std::size_t>(i)].drop_grad();
        }
        loss.grad()[0] += Real(1);
        for (long i = loss.tape_node(); i >= 0; --i) {
            nodes_[static_cast<std::size_t>(i)]();
        }
    }

    void clear() {
        nodes_.clear();
        outputs_.clear();
    }
    std::size_t node_count() const { return nodes_.size(); }

private:
    std::vector<std::function<void()>> nodes_;
    std::vector<TensorT<Real>> outputs_;
};

using Tensor = TensorT<float>;
using Tape = TapeT<float>;

}  // namespace absa
