#pragma once

#include "adk/tensor.hpp"

namespace adk {

// Differentiable primitives. Every op records its adjoint on the active tape
// when gradients are enabled and an input requires them.
//
// Broadcasting rule: operand shapes must be equal, or the smaller operand's
// shape must equal a trailing suffix of the larger's (the smaller operand is
// repeated along the leading dimensions). Scalars broadcast to anything.

// elementwise
template <class S> TensorT<S> add(TensorT<S> a, TensorT<S> b);
template <class S> TensorT<S> sub(TensorT<S> a, TensorT<S> b);
template <class S> TensorT<S> mul(TensorT<S> a, TensorT<S> b);
template <class S> TensorT<S> div(TensorT<S> a, TensorT<S> b);
template <class S> TensorT<S> neg(TensorT<S> x);
template <class S> TensorT<S> exp(TensorT<S> x);
template <class S> TensorT<S> log(TensorT<S> x);
template <class S> TensorT<S> sqrt(TensorT<S> x);
template <class S> TensorT<S> sin(TensorT<S> x);
template <class S> TensorT<S> cos(TensorT<S> x);
template <class S> TensorT<S> sigmoid(TensorT<S> x);
template <class S> TensorT<S> softplus(TensorT<S> x);
template <class S> TensorT<S> silu(TensorT<S> x);
template <class S> TensorT<S> relu(TensorT<S> x);
template <class S> TensorT<S> clamp(TensorT<S> x, double lo, double hi);
template <class S> TensorT<S> mul_scalar(TensorT<S> x, double c);
template <class S> TensorT<S> add_scalar(TensorT<S> x, double c);
template <class S> TensorT<S> square(TensorT<S> x);

// shape
template <class S> TensorT<S> reshape(TensorT<S> x, Shape s);
template <class S> TensorT<S> permute(TensorT<S> x, const std::vector<int>& perm);
template <class S> TensorT<S> concat(const std::vector<TensorT<S>>& parts, int axis);
template <class S> TensorT<S> slice(TensorT<S> x, int axis, int start, int len);

// linear algebra / convolution
template <class S>
TensorT<S> matmul(TensorT<S> a, TensorT<S> b);
template <class S>
TensorT<S> conv2d(TensorT<S> x, TensorT<S> w, TensorT<S> bias,
                  int stride = 1, int pad = 0);
template <class S>
TensorT<S> conv3d(TensorT<S> x, TensorT<S> w, TensorT<S> bias,
                  int pad = 0);

// normalization / attention pieces
template <class S> TensorT<S> softmax(TensorT<S> x);
template <class S>
TensorT<S> layer_norm(TensorT<S> x, TensorT<S> gamma, TensorT<S> beta,
                      double eps = 1e-5);
template <class S>
TensorT<S> group_norm(TensorT<S> x, int groups, TensorT<S> gamma,
                      TensorT<S> beta, double eps = 1e-5);
template <class S>
TensorT<S> add_channel_bias(TensorT<S> x, TensorT<S> bias);

// interpolation / resampling
template <class S>
TensorT<S> interpolate_bilinear(TensorT<S> map, TensorT<S> pts);
template <class S>
TensorT<S> interpolate_trilinear(TensorT<S> vol, TensorT<S> pts);
template <class S>
TensorT<S> splat_trilinear(TensorT<S> feats, TensorT<S> pts, int D, int H, int W);
template <class S>
TensorT<S> resize_bilinear(TensorT<S> x, int out_h, int out_w);
template <class S>
TensorT<S> avg_pool2d(TensorT<S> x, int k);

// reductions / indexing
template <class S> TensorT<S> reduce_sum(TensorT<S> x);
template <class S> TensorT<S> reduce_mean(TensorT<S> x);
template <class S> TensorT<S> reduce_sum_axis(TensorT<S> x, int axis);
template <class S> TensorT<S> reduce_mean_axis(TensorT<S> x, int axis);
template <class S> TensorT<S> cumsum_exclusive(TensorT<S> x);
template <class S> TensorT<S> gather_rows(TensorT<S> table, const std::vector<int>& idx);
template <class S> TensorT<S> scale_rows(TensorT<S> x, TensorT<S> s);

// composites used all over the place
template <class S>
TensorT<S> mse(TensorT<S> a, TensorT<S> b) {
    return reduce_mean(square(sub(a, b)));
}

}  // namespace adk
