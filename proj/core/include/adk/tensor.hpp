#pragma once

#include <functional>
#include <memory>

#include "adk/common.hpp"

namespace adk {

// Dense n-dimensional array with reverse-mode gradient tracking.
//
// Tensors are handles to shared storage; the value buffer is treated as
// immutable once an op has produced it, only the grad buffer mutates.
// Scalar type is f32 for training and f64 for finite-difference checks.
template <class S>
struct TensorImpl {
    Shape shape;
    std::vector<S> v;
    bool requires_grad = false;
    std::vector<S> grad;  // empty until touched by backward()
};

template <class S>
class TensorT {
public:
    TensorT() = default;

    static TensorT zeros(Shape s) {
        TensorT t;
        t.impl_ = std::make_shared<TensorImpl<S>>();
        t.impl_->shape = std::move(s);
        t.impl_->v.assign(size_t(numel(t.impl_->shape)), S(0));
        return t;
    }

    static TensorT full(Shape s, S val) {
        TensorT t = zeros(std::move(s));
        for (auto& x : t.impl_->v) x = val;
        return t;
    }

    static TensorT scalar(S val) { return full({}, val); }

    static TensorT from(Shape s, std::vector<S> vals) {
        ADK_CHECK(int64_t(vals.size()) == numel(s), "tensor from(): ", shape_str(s),
                  " needs ", numel(s), " values, got ", vals.size());
        TensorT t;
        t.impl_ = std::make_shared<TensorImpl<S>>();
        t.impl_->shape = std::move(s);
        t.impl_->v = std::move(vals);
        return t;
    }

    static TensorT randn(Shape s, Rng& rng, double stdev = 1.0) {
        TensorT t = zeros(std::move(s));
        for (auto& x : t.impl_->v) x = S(rng.normal() * stdev);
        return t;
    }

    static TensorT uniform(Shape s, Rng& rng, double lo, double hi) {
        TensorT t = zeros(std::move(s));
        for (auto& x : t.impl_->v) x = S(rng.uniform(lo, hi));
        return t;
    }

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    int ndim() const { return int(impl_->shape.size()); }
    int dim(int i) const { return impl_->shape[size_t(i)]; }
    int64_t size() const { return int64_t(impl_->v.size()); }

    S* data() { return impl_->v.data(); }
    const S* data() const { return impl_->v.data(); }
    std::vector<S>& vec() { return impl_->v; }
    const std::vector<S>& vec() const { return impl_->v; }

    S item() const {
        ADK_CHECK(size() == 1, "item(): tensor ", shape_str(shape()), " is not a scalar");
        return impl_->v[0];
    }

    bool requires_grad() const { return impl_ && impl_->requires_grad; }
    TensorT& set_requires_grad(bool b) {
        impl_->requires_grad = b;
        return *this;
    }

    bool has_grad() const { return impl_ && !impl_->grad.empty(); }
    void ensure_grad() {
        if (impl_->grad.empty()) impl_->grad.assign(impl_->v.size(), S(0));
    }
    std::vector<S>& grad() {
        ADK_CHECK(has_grad(), "grad(): no gradient present");
        return impl_->grad;
    }
    const std::vector<S>& grad() const {
        ADK_CHECK(has_grad(), "grad(): no gradient present");
        return impl_->grad;
    }
    void zero_grad() {
        if (impl_) impl_->grad.clear();
    }

    // Value copy without any grad linkage.
    TensorT clone_detached() const {
        TensorT t = zeros(shape());
        t.impl_->v = impl_->v;
        return t;
    }

    template <class T2>
    TensorT<T2> cast() const {
        auto t = TensorT<T2>::zeros(shape());
        for (int64_t i = 0; i < size(); ++i) t.data()[i] = T2(impl_->v[size_t(i)]);
        return t;
    }

    TensorImpl<S>* impl() const { return impl_.get(); }
    std::shared_ptr<TensorImpl<S>> impl_ptr() const { return impl_; }

private:
    std::shared_ptr<TensorImpl<S>> impl_;
};

using Tensor = TensorT<float>;
using DTensor = TensorT<double>;

namespace detail {

// Type-erased adjoint step (avoids std::function, which gcc cannot
// instantiate for local lambda types inside explicit template instantiation).
struct TapeStep {
    virtual ~TapeStep() = default;
    virtual void run() = 0;
};

template <class F>
struct TapeStepImpl final : TapeStep {
    F fn;
    explicit TapeStepImpl(F f) : fn(std::move(f)) {}
    void run() override { fn(); }
};

}  // namespace detail

// Dynamic define-by-run tape. Ops append adjoint steps during forward
// evaluation; backward() replays them in reverse (execution order is a valid
// topological order) and then clears the tape. One tape per scalar type per
// thread; a backward pass owns it exclusively.
template <class S>
class TapeT {
public:
    static TapeT& instance() {
        static thread_local TapeT tape;
        return tape;
    }

    template <class F>
    void record(F fn) {
        steps_.push_back(std::make_unique<detail::TapeStepImpl<F>>(std::move(fn)));
    }
    size_t size() const { return steps_.size(); }
    void clear() { steps_.clear(); }

    std::vector<std::unique_ptr<detail::TapeStep>>& steps() { return steps_; }

private:
    std::vector<std::unique_ptr<detail::TapeStep>> steps_;
};

namespace detail {
inline bool& grad_mode() {
    static thread_local bool enabled = true;
    return enabled;
}
}  // namespace detail

inline bool grad_enabled() { return detail::grad_mode(); }

struct NoGrad {
    bool prev;
    NoGrad() : prev(detail::grad_mode()) { detail::grad_mode() = false; }
    ~NoGrad() { detail::grad_mode() = prev; }
    NoGrad(const NoGrad&) = delete;
    NoGrad& operator=(const NoGrad&) = delete;
};

template <class S>
bool should_record(std::initializer_list<const TensorT<S>*> inputs) {
    if (!grad_enabled()) return false;
    for (const auto* t : inputs)
        if (t->requires_grad()) return true;
    return false;
}

// Populates d(loss)/d(x) for every requires_grad tensor reachable from loss.
template <class S>
void backward(TensorT<S> loss) {
    ADK_CHECK(loss.size() == 1, "backward(): loss must be scalar, got ",
              shape_str(loss.shape()));
    auto& tape = TapeT<S>::instance();
    ADK_CHECK(tape.size() > 0, "backward(): tape is empty");
    loss.ensure_grad();
    loss.grad()[0] = S(1);
    auto& steps = tape.steps();
    for (auto it = steps.rbegin(); it != steps.rend(); ++it) (*it)->run();
    tape.clear();
}

}  // namespace adk
