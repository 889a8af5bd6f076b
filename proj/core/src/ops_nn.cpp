#include <algorithm>
#include <cmath>
#include <memory>

#include "adk/gemm.hpp"
#include "adk/ops.hpp"

namespace adk {

template <class S>
TensorT<S> matmul(TensorT<S> a, TensorT<S> b) {
    ADK_CHECK(a.ndim() >= 2 && b.ndim() >= 2, "matmul: shapes ", shape_str(a.shape()), " and ",
              shape_str(b.shape()), " must be at least 2D");
    const int64_t M = a.dim(a.ndim() - 2);
    const int64_t K = a.dim(a.ndim() - 1);
    const int64_t N = b.dim(b.ndim() - 1);
    const bool shared_b = (b.ndim() == 2);
    ADK_CHECK(b.dim(b.ndim() - 2) == K, "matmul: inner dims of ", shape_str(a.shape()), " and ",
              shape_str(b.shape()), " differ");
    if (!shared_b) {
        ADK_CHECK(a.ndim() == b.ndim(), "matmul: batch ranks of ", shape_str(a.shape()), " and ",
                  shape_str(b.shape()), " differ");
        for (int i = 0; i < a.ndim() - 2; ++i)
            ADK_CHECK(a.dim(i) == b.dim(i), "matmul: batch dims of ", shape_str(a.shape()),
                      " and ", shape_str(b.shape()), " differ");
    }
    const int64_t batch = a.size() / (M * K);
    Shape ys(a.shape().begin(), a.shape().end() - 2);
    ys.push_back(int(M));
    ys.push_back(int(N));
    auto y = TensorT<S>::zeros(ys);
    for (int64_t i = 0; i < batch; ++i)
        gemm_nn(M, K, N, a.data() + i * M * K, b.data() + (shared_b ? 0 : i * K * N),
                y.data() + i * M * N, false);
    if (should_record<S>({&a, &b})) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([a, b, y, M, K, N, batch, shared_b]() mutable {
            y.ensure_grad();
            const S* g = y.grad().data();
            if (a.requires_grad()) {
                a.ensure_grad();
                for (int64_t i = 0; i < batch; ++i)
                    gemm_nt(M, N, K, g + i * M * N, b.data() + (shared_b ? 0 : i * K * N),
                            a.grad().data() + i * M * K, true);
            }
            if (b.requires_grad()) {
                b.ensure_grad();
                for (int64_t i = 0; i < batch; ++i)
                    gemm_tn(K, M, N, a.data() + i * M * K, g + i * M * N,
                            b.grad().data() + (shared_b ? 0 : i * K * N), true);
            }
        });
    }
    return y;
}

namespace {

struct ConvDims {
    int64_t n, ci, h, w;  // input
    int64_t co, kh, kw;
    int64_t ho, wo;
    int stride, pad;
    bool batched;
};

template <class S>
ConvDims conv2d_dims(TensorT<S> x, TensorT<S> w, int stride, int pad) {
    ADK_CHECK(x.ndim() == 3 || x.ndim() == 4, "conv2d: input must be [C,H,W] or [N,C,H,W], got ",
              shape_str(x.shape()));
    ADK_CHECK(w.ndim() == 4, "conv2d: weight must be [Co,Ci,kh,kw], got ", shape_str(w.shape()));
    ConvDims d;
    d.batched = x.ndim() == 4;
    d.n = d.batched ? x.dim(0) : 1;
    d.ci = x.dim(d.batched ? 1 : 0);
    d.h = x.dim(d.batched ? 2 : 1);
    d.w = x.dim(d.batched ? 3 : 2);
    d.co = w.dim(0);
    d.kh = w.dim(2);
    d.kw = w.dim(3);
    d.stride = stride;
    d.pad = pad;
    ADK_CHECK(w.dim(1) == d.ci, "conv2d: weight ", shape_str(w.shape()), " does not match input ",
              shape_str(x.shape()));
    d.ho = (d.h + 2 * pad - d.kh) / stride + 1;
    d.wo = (d.w + 2 * pad - d.kw) / stride + 1;
    ADK_CHECK(d.ho > 0 && d.wo > 0, "conv2d: kernel ", shape_str(w.shape()),
              " too large for input ", shape_str(x.shape()));
    return d;
}

// cols layout: [Ci*kh*kw, Ho*Wo]
template <class S>
void im2col(const S* x, const ConvDims& d, S* cols) {
    const int64_t P = d.ho * d.wo;
    for (int64_t ci = 0; ci < d.ci; ++ci)
        for (int64_t ki = 0; ki < d.kh; ++ki)
            for (int64_t kj = 0; kj < d.kw; ++kj) {
                S* dst = cols + ((ci * d.kh + ki) * d.kw + kj) * P;
                for (int64_t oy = 0; oy < d.ho; ++oy) {
                    const int64_t iy = oy * d.stride - d.pad + ki;
                    if (iy < 0 || iy >= d.h) {
                        std::fill(dst + oy * d.wo, dst + (oy + 1) * d.wo, S(0));
                        continue;
                    }
                    const S* src = x + (ci * d.h + iy) * d.w;
                    for (int64_t ox = 0; ox < d.wo; ++ox) {
                        const int64_t ix = ox * d.stride - d.pad + kj;
                        dst[oy * d.wo + ox] = (ix >= 0 && ix < d.w) ? src[ix] : S(0);
                    }
                }
            }
}

template <class S>
void col2im_add(const S* cols, const ConvDims& d, S* dx) {
    for (int64_t ci = 0; ci < d.ci; ++ci)
        for (int64_t ki = 0; ki < d.kh; ++ki)
            for (int64_t kj = 0; kj < d.kw; ++kj) {
                const S* src = cols + ((ci * d.kh + ki) * d.kw + kj) * d.ho * d.wo;
                for (int64_t oy = 0; oy < d.ho; ++oy) {
                    const int64_t iy = oy * d.stride - d.pad + ki;
                    if (iy < 0 || iy >= d.h) continue;
                    S* dst = dx + (ci * d.h + iy) * d.w;
                    for (int64_t ox = 0; ox < d.wo; ++ox) {
                        const int64_t ix = ox * d.stride - d.pad + kj;
                        if (ix >= 0 && ix < d.w) dst[ix] += src[oy * d.wo + ox];
                    }
                }
            }
}

}  // namespace

template <class S>
TensorT<S> conv2d(TensorT<S> x, TensorT<S> w, TensorT<S> bias, int stride,
                  int pad) {
    ConvDims d = conv2d_dims(x, w, stride, pad);
    if (bias.defined())
        ADK_CHECK(bias.ndim() == 1 && bias.dim(0) == d.co, "conv2d: bias ",
                  shape_str(bias.shape()), " vs Co=", d.co);
    const int64_t K = d.ci * d.kh * d.kw;
    const int64_t P = d.ho * d.wo;
    Shape ys = d.batched ? Shape{int(d.n), int(d.co), int(d.ho), int(d.wo)}
                         : Shape{int(d.co), int(d.ho), int(d.wo)};
    auto y = TensorT<S>::zeros(ys);
    auto cols_all = std::make_shared<std::vector<std::vector<S>>>(size_t(d.n));
    for (int64_t n = 0; n < d.n; ++n) {
        auto& cols = (*cols_all)[size_t(n)];
        cols.resize(size_t(K * P));
        im2col(x.data() + n * d.ci * d.h * d.w, d, cols.data());
        S* yn = y.data() + n * d.co * P;
        gemm_nn(d.co, K, P, w.data(), cols.data(), yn, false);
        if (bias.defined())
            for (int64_t c = 0; c < d.co; ++c) {
                const S b = bias.data()[c];
                for (int64_t p = 0; p < P; ++p) yn[c * P + p] += b;
            }
    }
    bool rec = grad_enabled() &&
               (x.requires_grad() || w.requires_grad() || (bias.defined() && bias.requires_grad()));
    if (rec) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([x, w, bias, y, d, K, P, cols_all]() mutable {
            y.ensure_grad();
            const S* g = y.grad().data();
            if (w.requires_grad()) {
                w.ensure_grad();
                for (int64_t n = 0; n < d.n; ++n)
                    gemm_nt(d.co, P, K, g + n * d.co * P, (*cols_all)[size_t(n)].data(),
                            w.grad().data(), true);
            }
            if (bias.defined() && bias.requires_grad()) {
                bias.ensure_grad();
                S* bg = bias.grad().data();
                for (int64_t n = 0; n < d.n; ++n)
                    for (int64_t c = 0; c < d.co; ++c) {
                        S acc = 0;
                        const S* gr = g + (n * d.co + c) * P;
                        for (int64_t p = 0; p < P; ++p) acc += gr[p];
                        bg[c] += acc;
                    }
            }
            if (x.requires_grad()) {
                x.ensure_grad();
                std::vector<S> dcols(size_t(K * P));
                for (int64_t n = 0; n < d.n; ++n) {
                    gemm_tn(K, d.co, P, w.data(), g + n * d.co * P, dcols.data(), false);
                    col2im_add(dcols.data(), d, x.grad().data() + n * d.ci * d.h * d.w);
                }
            }
        });
    }
    return y;
}

namespace {

struct Conv3Dims {
    int64_t n, ci, dd, h, w, co, kd, kh, kw, do_, ho, wo;
    int pad;
    bool batched;
};

template <class S>
void im2col3(const S* x, const Conv3Dims& d, S* cols) {
    const int64_t P = d.do_ * d.ho * d.wo;
    int64_t row = 0;
    for (int64_t ci = 0; ci < d.ci; ++ci)
        for (int64_t kz = 0; kz < d.kd; ++kz)
            for (int64_t ki = 0; ki < d.kh; ++ki)
                for (int64_t kj = 0; kj < d.kw; ++kj, ++row) {
                    S* dst = cols + row * P;
                    for (int64_t oz = 0; oz < d.do_; ++oz) {
                        const int64_t iz = oz - d.pad + kz;
                        for (int64_t oy = 0; oy < d.ho; ++oy) {
                            const int64_t iy = oy - d.pad + ki;
                            S* drow = dst + (oz * d.ho + oy) * d.wo;
                            if (iz < 0 || iz >= d.dd || iy < 0 || iy >= d.h) {
                                std::fill(drow, drow + d.wo, S(0));
                                continue;
                            }
                            const S* src = x + ((ci * d.dd + iz) * d.h + iy) * d.w;
                            for (int64_t ox = 0; ox < d.wo; ++ox) {
                                const int64_t ix = ox - d.pad + kj;
                                drow[ox] = (ix >= 0 && ix < d.w) ? src[ix] : S(0);
                            }
                        }
                    }
                }
}

template <class S>
void col2im3_add(const S* cols, const Conv3Dims& d, S* dx) {
    int64_t row = 0;
    for (int64_t ci = 0; ci < d.ci; ++ci)
        for (int64_t kz = 0; kz < d.kd; ++kz)
            for (int64_t ki = 0; ki < d.kh; ++ki)
                for (int64_t kj = 0; kj < d.kw; ++kj, ++row) {
                    const S* src = cols + row * d.do_ * d.ho * d.wo;
                    for (int64_t oz = 0; oz < d.do_; ++oz) {
                        const int64_t iz = oz - d.pad + kz;
                        if (iz < 0 || iz >= d.dd) continue;
                        for (int64_t oy = 0; oy < d.ho; ++oy) {
                            const int64_t iy = oy - d.pad + ki;
                            if (iy < 0 || iy >= d.h) continue;
                            S* dst = dx + ((ci * d.dd + iz) * d.h + iy) * d.w;
                            const S* srow = src + (oz * d.ho + oy) * d.wo;
                            for (int64_t ox = 0; ox < d.wo; ++ox) {
                                const int64_t ix = ox - d.pad + kj;
                                if (ix >= 0 && ix < d.w) dst[ix] += srow[ox];
                            }
                        }
                    }
                }
}

}  // namespace

template <class S>
TensorT<S> conv3d(TensorT<S> x, TensorT<S> w, TensorT<S> bias, int pad) {
    ADK_CHECK(x.ndim() == 4 || x.ndim() == 5,
              "conv3d: input must be [C,D,H,W] or [N,C,D,H,W], got ", shape_str(x.shape()));
    ADK_CHECK(w.ndim() == 5, "conv3d: weight must be [Co,Ci,kd,kh,kw], got ",
              shape_str(w.shape()));
    Conv3Dims d;
    d.batched = x.ndim() == 5;
    d.n = d.batched ? x.dim(0) : 1;
    d.ci = x.dim(d.batched ? 1 : 0);
    d.dd = x.dim(d.batched ? 2 : 1);
    d.h = x.dim(d.batched ? 3 : 2);
    d.w = x.dim(d.batched ? 4 : 3);
    d.co = w.dim(0);
    d.kd = w.dim(2);
    d.kh = w.dim(3);
    d.kw = w.dim(4);
    d.pad = pad;
    ADK_CHECK(w.dim(1) == d.ci, "conv3d: weight ", shape_str(w.shape()), " vs input ",
              shape_str(x.shape()));
    d.do_ = d.dd + 2 * pad - d.kd + 1;
    d.ho = d.h + 2 * pad - d.kh + 1;
    d.wo = d.w + 2 * pad - d.kw + 1;
    ADK_CHECK(d.do_ > 0 && d.ho > 0 && d.wo > 0, "conv3d: kernel too large");
    if (bias.defined())
        ADK_CHECK(bias.ndim() == 1 && bias.dim(0) == d.co, "conv3d: bias ",
                  shape_str(bias.shape()), " vs Co=", d.co);
    const int64_t K = d.ci * d.kd * d.kh * d.kw;
    const int64_t P = d.do_ * d.ho * d.wo;
    Shape ys = d.batched ? Shape{int(d.n), int(d.co), int(d.do_), int(d.ho), int(d.wo)}
                         : Shape{int(d.co), int(d.do_), int(d.ho), int(d.wo)};
    auto y = TensorT<S>::zeros(ys);
    auto cols_all = std::make_shared<std::vector<std::vector<S>>>(size_t(d.n));
    for (int64_t n = 0; n < d.n; ++n) {
        auto& cols = (*cols_all)[size_t(n)];
        cols.resize(size_t(K * P));
        im2col3(x.data() + n * d.ci * d.dd * d.h * d.w, d, cols.data());
        S* yn = y.data() + n * d.co * P;
        gemm_nn(d.co, K, P, w.data(), cols.data(), yn, false);
        if (bias.defined())
            for (int64_t c = 0; c < d.co; ++c) {
                const S b = bias.data()[c];
                for (int64_t p = 0; p < P; ++p) yn[c * P + p] += b;
            }
    }
    bool rec = grad_enabled() &&
               (x.requires_grad() || w.requires_grad() || (bias.defined() && bias.requires_grad()));
    if (rec) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([x, w, bias, y, d, K, P, cols_all]() mutable {
            y.ensure_grad();
            const S* g = y.grad().data();
            if (w.requires_grad()) {
                w.ensure_grad();
                for (int64_t n = 0; n < d.n; ++n)
                    gemm_nt(d.co, P, K, g + n * d.co * P, (*cols_all)[size_t(n)].data(),
                            w.grad().data(), true);
            }
            if (bias.defined() && bias.requires_grad()) {
                bias.ensure_grad();
                S* bg = bias.grad().data();
                for (int64_t n = 0; n < d.n; ++n)
                    for (int64_t c = 0; c < d.co; ++c) {
                        S acc = 0;
                        const S* gr = g + (n * d.co + c) * P;
                        for (int64_t p = 0; p < P; ++p) acc += gr[p];
                        bg[c] += acc;
                    }
            }
            if (x.requires_grad()) {
                x.ensure_grad();
                std::vector<S> dcols(size_t(K * P));
                for (int64_t n = 0; n < d.n; ++n) {
                    gemm_tn(K, d.co, P, w.data(), g + n * d.co * P, dcols.data(), false);
                    col2im3_add(dcols.data(), d, x.grad().data() + n * d.ci * d.dd * d.h * d.w);
                }
            }
        });
    }
    return y;
}

template <class S>
TensorT<S> softmax(TensorT<S> x) {
    ADK_CHECK(x.ndim() >= 1, "softmax: scalar input");
    const int64_t D = x.dim(x.ndim() - 1);
    const int64_t rows = x.size() / D;
    auto y = TensorT<S>::zeros(x.shape());
    const S* xd = x.data();
    S* yd = y.data();
    for (int64_t r = 0; r < rows; ++r) {
        const S* xr = xd + r * D;
        S* yr = yd + r * D;
        S mx = xr[0];
        for (int64_t i = 1; i < D; ++i) mx = std::max(mx, xr[i]);
        S denom = 0;
        for (int64_t i = 0; i < D; ++i) {
            yr[i] = S(std::exp(double(xr[i] - mx)));
            denom += yr[i];
        }
        const S inv = S(1) / denom;
        for (int64_t i = 0; i < D; ++i) yr[i] *= inv;
    }
    if (should_record<S>({&x})) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([x, y, rows, D]() mutable {
            if (!x.requires_grad()) return;
            y.ensure_grad();
            x.ensure_grad();
            const S* g = y.grad().data();
            const S* yd = y.data();
            S* xg = x.grad().data();
            for (int64_t r = 0; r < rows; ++r) {
                S dot = 0;
                for (int64_t i = 0; i < D; ++i) dot += g[r * D + i] * yd[r * D + i];
                for (int64_t i = 0; i < D; ++i)
                    xg[r * D + i] += yd[r * D + i] * (g[r * D + i] - dot);
            }
        });
    }
    return y;
}

template <class S>
TensorT<S> layer_norm(TensorT<S> x, TensorT<S> gamma, TensorT<S> beta,
                      double eps) {
    ADK_CHECK(x.ndim() >= 1, "layer_norm: scalar input");
    const int64_t D = x.dim(x.ndim() - 1);
    ADK_CHECK(gamma.ndim() == 1 && gamma.dim(0) == D && beta.ndim() == 1 && beta.dim(0) == D,
              "layer_norm: gamma/beta ", shape_str(gamma.shape()), "/", shape_str(beta.shape()),
              " vs feature dim ", D);
    const int64_t rows = x.size() / D;
    auto y = TensorT<S>::zeros(x.shape());
    auto stats = std::make_shared<std::vector<S>>(size_t(rows * 2));  // mean, invstd per row
    const S* xd = x.data();
    const S* gm = gamma.data();
    const S* bt = beta.data();
    S* yd = y.data();
    for (int64_t r = 0; r < rows; ++r) {
        const S* xr = xd + r * D;
        S mean = 0;
        for (int64_t i = 0; i < D; ++i) mean += xr[i];
        mean /= S(D);
        S var = 0;
        for (int64_t i = 0; i < D; ++i) var += (xr[i] - mean) * (xr[i] - mean);
        var /= S(D);
        const S invstd = S(1) / S(std::sqrt(double(var) + eps));
        (*stats)[size_t(2 * r)] = mean;
        (*stats)[size_t(2 * r + 1)] = invstd;
        for (int64_t i = 0; i < D; ++i)
            yd[r * D + i] = (xr[i] - mean) * invstd * gm[i] + bt[i];
    }
    bool rec = grad_enabled() &&
               (x.requires_grad() || gamma.requires_grad() || beta.requires_grad());
    if (rec) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([x, gamma, beta, y, rows, D, stats]() mutable {
            y.ensure_grad();
            const S* g = y.grad().data();
            const S* xd = x.data();
            const S* gm = gamma.data();
            if (gamma.requires_grad()) gamma.ensure_grad();
            if (beta.requires_grad()) beta.ensure_grad();
            if (x.requires_grad()) x.ensure_grad();
            for (int64_t r = 0; r < rows; ++r) {
                const S mean = (*stats)[size_t(2 * r)];
                const S invstd = (*stats)[size_t(2 * r + 1)];
                const S* xr = xd + r * D;
                const S* gr = g + r * D;
                if (gamma.requires_grad() || beta.requires_grad()) {
                    for (int64_t i = 0; i < D; ++i) {
                        const S xhat = (xr[i] - mean) * invstd;
                        if (gamma.requires_grad()) gamma.grad()[size_t(i)] += gr[i] * xhat;
                        if (beta.requires_grad()) beta.grad()[size_t(i)] += gr[i];
                    }
                }
                if (x.requires_grad()) {
                    S mean_dy = 0, mean_dyx = 0;
                    for (int64_t i = 0; i < D; ++i) {
                        const S dyh = gr[i] * gm[i];
                        const S xhat = (xr[i] - mean) * invstd;
                        mean_dy += dyh;
                        mean_dyx += dyh * xhat;
                    }
                    mean_dy /= S(D);
                    mean_dyx /= S(D);
                    S* xg = x.grad().data() + r * D;
                    for (int64_t i = 0; i < D; ++i) {
                        const S dyh = gr[i] * gm[i];
                        const S xhat = (xr[i] - mean) * invstd;
                        xg[i] += invstd * (dyh - mean_dy - xhat * mean_dyx);
                    }
                }
            }
        });
    }
    return y;
}

template <class S>
TensorT<S> group_norm(TensorT<S> x, int groups, TensorT<S> gamma,
                      TensorT<S> beta, double eps) {
    ADK_CHECK(x.ndim() >= 3, "group_norm: input must be [C,...] with spatial dims, got ",
              shape_str(x.shape()));
    const bool batched = x.ndim() >= 4;
    const int64_t N = batched ? x.dim(0) : 1;
    const int64_t C = x.dim(batched ? 1 : 0);
    const int64_t sp = x.size() / (N * C);
    ADK_CHECK(C % groups == 0, "group_norm: channels ", C, " not divisible by groups ", groups);
    ADK_CHECK(gamma.size() == C && beta.size() == C, "group_norm: gamma/beta size vs C=", C);
    const int64_t cpg = C / groups;
    const int64_t glen = cpg * sp;
    auto y = TensorT<S>::zeros(x.shape());
    auto stats = std::make_shared<std::vector<S>>(size_t(N * groups * 2));
    const S* xd = x.data();
    const S* gm = gamma.data();
    const S* bt = beta.data();
    S* yd = y.data();
    for (int64_t n = 0; n < N; ++n)
        for (int64_t gidx = 0; gidx < groups; ++gidx) {
            const S* base = xd + (n * C + gidx * cpg) * sp;
            S mean = 0;
            for (int64_t i = 0; i < glen; ++i) mean += base[i];
            mean /= S(glen);
            S var = 0;
            for (int64_t i = 0; i < glen; ++i) var += (base[i] - mean) * (base[i] - mean);
            var /= S(glen);
            const S invstd = S(1) / S(std::sqrt(double(var) + eps));
            (*stats)[size_t(2 * (n * groups + gidx))] = mean;
            (*stats)[size_t(2 * (n * groups + gidx) + 1)] = invstd;
            S* out = yd + (n * C + gidx * cpg) * sp;
            for (int64_t c = 0; c < cpg; ++c) {
                const S gc = gm[gidx * cpg + c];
                const S bc = bt[gidx * cpg + c];
                for (int64_t i = 0; i < sp; ++i)
                    out[c * sp + i] = (base[c * sp + i] - mean) * invstd * gc + bc;
            }
        }
    bool rec = grad_enabled() &&
               (x.requires_grad() || gamma.requires_grad() || beta.requires_grad());
    if (rec) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([x, gamma, beta, y, N, C, sp, groups, cpg, glen,
                                     stats]() mutable {
            y.ensure_grad();
            const S* g = y.grad().data();
            const S* xd = x.data();
            const S* gm = gamma.data();
            if (gamma.requires_grad()) gamma.ensure_grad();
            if (beta.requires_grad()) beta.ensure_grad();
            if (x.requires_grad()) x.ensure_grad();
            for (int64_t n = 0; n < N; ++n)
                for (int64_t gidx = 0; gidx < groups; ++gidx) {
                    const S mean = (*stats)[size_t(2 * (n * groups + gidx))];
                    const S invstd = (*stats)[size_t(2 * (n * groups + gidx) + 1)];
                    const S* base = xd + (n * C + gidx * cpg) * sp;
                    const S* gr = g + (n * C + gidx * cpg) * sp;
                    if (gamma.requires_grad() || beta.requires_grad()) {
                        for (int64_t c = 0; c < cpg; ++c) {
                            S dg = 0, db = 0;
                            for (int64_t i = 0; i < sp; ++i) {
                                const S xhat = (base[c * sp + i] - mean) * invstd;
                                dg += gr[c * sp + i] * xhat;
                                db += gr[c * sp + i];
                            }
                            if (gamma.requires_grad()) gamma.grad()[size_t(gidx * cpg + c)] += dg;
                            if (beta.requires_grad()) beta.grad()[size_t(gidx * cpg + c)] += db;
                        }
                    }
                    if (x.requires_grad()) {
                        S mean_dy = 0, mean_dyx = 0;
                        for (int64_t c = 0; c < cpg; ++c) {
                            const S gc = gm[gidx * cpg + c];
                            for (int64_t i = 0; i < sp; ++i) {
                                const S dyh = gr[c * sp + i] * gc;
                                const S xhat = (base[c * sp + i] - mean) * invstd;
                                mean_dy += dyh;
                                mean_dyx += dyh * xhat;
                            }
                        }
                        mean_dy /= S(glen);
                        mean_dyx /= S(glen);
                        S* xg = x.grad().data() + (n * C + gidx * cpg) * sp;
                        for (int64_t c = 0; c < cpg; ++c) {
                            const S gc = gm[gidx * cpg + c];
                            for (int64_t i = 0; i < sp; ++i) {
                                const S dyh = gr[c * sp + i] * gc;
                                const S xhat = (base[c * sp + i] - mean) * invstd;
                                xg[c * sp + i] += invstd * (dyh - mean_dy - xhat * mean_dyx);
                            }
                        }
                    }
                }
        });
    }
    return y;
}

template <class S>
TensorT<S> add_channel_bias(TensorT<S> x, TensorT<S> bias) {
    ADK_CHECK(x.ndim() >= 3, "add_channel_bias: input ", shape_str(x.shape()),
              " must have [..,C,H,W] layout");
    const int64_t C = x.dim(x.ndim() - 3);
    ADK_CHECK(bias.ndim() == 1 && bias.dim(0) == C, "add_channel_bias: bias ",
              shape_str(bias.shape()), " vs C=", C);
    const int64_t sp = int64_t(x.dim(x.ndim() - 2)) * x.dim(x.ndim() - 1);
    const int64_t N = x.size() / (C * sp);
    auto y = TensorT<S>::zeros(x.shape());
    const S* xd = x.data();
    const S* bd = bias.data();
    S* yd = y.data();
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c) {
            const S b = bd[c];
            const S* xr = xd + (n * C + c) * sp;
            S* yr = yd + (n * C + c) * sp;
            for (int64_t i = 0; i < sp; ++i) yr[i] = xr[i] + b;
        }
    if (should_record<S>({&x, &bias})) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([x, bias, y, N, C, sp]() mutable {
            y.ensure_grad();
            const S* g = y.grad().data();
            if (x.requires_grad()) {
                x.ensure_grad();
                S* xg = x.grad().data();
                for (int64_t i = 0; i < x.size(); ++i) xg[i] += g[i];
            }
            if (bias.requires_grad()) {
                bias.ensure_grad();
                S* bg = bias.grad().data();
                for (int64_t n = 0; n < N; ++n)
                    for (int64_t c = 0; c < C; ++c) {
                        S acc = 0;
                        const S* gr = g + (n * C + c) * sp;
                        for (int64_t i = 0; i < sp; ++i) acc += gr[i];
                        bg[c] += acc;
                    }
            }
        });
    }
    return y;
}

template <class S>
TensorT<S> interpolate_bilinear(TensorT<S> map, TensorT<S> pts) {
    ADK_CHECK(map.ndim() == 3, "interpolate_bilinear: map must be [C,H,W], got ",
              shape_str(map.shape()));
    ADK_CHECK(pts.ndim() == 2 && pts.dim(1) == 2, "interpolate_bilinear: pts must be [M,2], got ",
              shape_str(pts.shape()));
    ADK_CHECK(!pts.requires_grad(), "interpolate_bilinear: sample points are not differentiable");
    const int64_t C = map.dim(0), H = map.dim(1), W = map.dim(2);
    const int64_t M = pts.dim(0);
    auto y = TensorT<S>::zeros({int(M), int(C)});
    const S* md = map.data();
    const S* pd = pts.data();
    S* yd = y.data();
    auto corners = [&](int64_t m, int64_t c[4], S w[4]) {
        const double px = double(pd[m * 2]);
        const double py = double(pd[m * 2 + 1]);
        const int64_t x0 = int64_t(std::floor(px));
        const int64_t y0 = int64_t(std::floor(py));
        const double fx = px - double(x0), fy = py - double(y0);
        const int64_t xs[2] = {x0, x0 + 1};
        const int64_t ys[2] = {y0, y0 + 1};
        const double wx[2] = {1.0 - fx, fx};
        const double wy[2] = {1.0 - fy, fy};
        int k = 0;
        for (int j = 0; j < 2; ++j)
            for (int i = 0; i < 2; ++i, ++k) {
                if (xs[i] >= 0 && xs[i] < W && ys[j] >= 0 && ys[j] < H) {
                    c[k] = ys[j] * W + xs[i];
                    w[k] = S(wx[i] * wy[j]);
                } else {
                    c[k] = -1;
                    w[k] = 0;
                }
            }
    };
    for (int64_t m = 0; m < M; ++m) {
        int64_t cidx[4];
        S wts[4];
        corners(m, cidx, wts);
        for (int64_t c = 0; c < C; ++c) {
            S acc = 0;
            for (int k = 0; k < 4; ++k)
                if (cidx[k] >= 0) acc += wts[k] * md[c * H * W + cidx[k]];
            yd[m * C + c] = acc;
        }
    }
    if (should_record<S>({&map})) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([map, pts, y, M, C, H, W]() mutable {
            if (!map.requires_grad()) return;
            y.ensure_grad();
            map.ensure_grad();
            const S* g = y.grad().data();
            const S* pd = pts.data();
            S* mg = map.grad().data();
            for (int64_t m = 0; m < M; ++m) {
                const double px = double(pd[m * 2]);
                const double py = double(pd[m * 2 + 1]);
                const int64_t x0 = int64_t(std::floor(px));
                const int64_t y0 = int64_t(std::floor(py));
                const double fx = px - double(x0), fy = py - double(y0);
                const int64_t xs[2] = {x0, x0 + 1};
                const int64_t ys[2] = {y0, y0 + 1};
                const double wx[2] = {1.0 - fx, fx};
                const double wy[2] = {1.0 - fy, fy};
                for (int j = 0; j < 2; ++j)
                    for (int i = 0; i < 2; ++i) {
                        if (xs[i] < 0 || xs[i] >= W || ys[j] < 0 || ys[j] >= H) continue;
                        const S w = S(wx[i] * wy[j]);
                        for (int64_t c = 0; c < C; ++c)
                            mg[c * H * W + ys[j] * W + xs[i]] += w * g[m * C + c];
                    }
            }
        });
    }
    return y;
}

template <class S>
TensorT<S> interpolate_trilinear(TensorT<S> vol, TensorT<S> pts) {
    ADK_CHECK(vol.ndim() == 4, "interpolate_trilinear: volume must be [C,D,H,W], got ",
              shape_str(vol.shape()));
    ADK_CHECK(pts.ndim() == 2 && pts.dim(1) == 3,
              "interpolate_trilinear: pts must be [M,3], got ", shape_str(pts.shape()));
    ADK_CHECK(!pts.requires_grad(), "interpolate_trilinear: sample points are not differentiable");
    const int64_t C = vol.dim(0), D = vol.dim(1), H = vol.dim(2), W = vol.dim(3);
    const int64_t M = pts.dim(0);
    auto y = TensorT<S>::zeros({int(M), int(C)});
    const S* vd = vol.data();
    const S* pd = pts.data();
    S* yd = y.data();
    for (int64_t m = 0; m < M; ++m) {
        const double px = double(pd[m * 3]);
        const double py = double(pd[m * 3 + 1]);
        const double pz = double(pd[m * 3 + 2]);
        const int64_t x0 = int64_t(std::floor(px)), y0 = int64_t(std::floor(py)),
                      z0 = int64_t(std::floor(pz));
        const double fx = px - double(x0), fy = py - double(y0), fz = pz - double(z0);
        for (int kz = 0; kz < 2; ++kz)
            for (int ky = 0; ky < 2; ++ky)
                for (int kx = 0; kx < 2; ++kx) {
                    const int64_t xi = x0 + kx, yi = y0 + ky, zi = z0 + kz;
                    if (xi < 0 || xi >= W || yi < 0 || yi >= H || zi < 0 || zi >= D) continue;
                    const S w = S((kx ? fx : 1 - fx) * (ky ? fy : 1 - fy) * (kz ? fz : 1 - fz));
                    if (w == S(0)) continue;
                    const int64_t cell = (zi * H + yi) * W + xi;
                    for (int64_t c = 0; c < C; ++c) yd[m * C + c] += w * vd[c * D * H * W + cell];
                }
    }
    if (should_record<S>({&vol})) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([vol, pts, y, M, C, D, H, W]() mutable {
            if (!vol.requires_grad()) return;
            y.ensure_grad();
            vol.ensure_grad();
            const S* g = y.grad().data();
            const S* pd = pts.data();
            S* vg = vol.grad().data();
            for (int64_t m = 0; m < M; ++m) {
                const double px = double(pd[m * 3]);
                const double py = double(pd[m * 3 + 1]);
                const double pz = double(pd[m * 3 + 2]);
                const int64_t x0 = int64_t(std::floor(px)), y0 = int64_t(std::floor(py)),
                              z0 = int64_t(std::floor(pz));
                const double fx = px - double(x0), fy = py - double(y0), fz = pz - double(z0);
                for (int kz = 0; kz < 2; ++kz)
                    for (int ky = 0; ky < 2; ++ky)
                        for (int kx = 0; kx < 2; ++kx) {
                            const int64_t xi = x0 + kx, yi = y0 + ky, zi = z0 + kz;
                            if (xi < 0 || xi >= W || yi < 0 || yi >= H || zi < 0 || zi >= D)
                                continue;
                            const S w = S((kx ? fx : 1 - fx) * (ky ? fy : 1 - fy) *
                                          (kz ? fz : 1 - fz));
                            if (w == S(0)) continue;
                            const int64_t cell = (zi * H + yi) * W + xi;
                            for (int64_t c = 0; c < C; ++c)
                                vg[c * D * H * W + cell] += w * g[m * C + c];
                        }
            }
        });
    }
    return y;
}

template <class S>
TensorT<S> splat_trilinear(TensorT<S> feats, TensorT<S> pts, int D, int H, int W) {
    ADK_CHECK(feats.ndim() == 2, "splat_trilinear: feats must be [M,C], got ",
              shape_str(feats.shape()));
    ADK_CHECK(pts.ndim() == 2 && pts.dim(1) == 3 && pts.dim(0) == feats.dim(0),
              "splat_trilinear: pts ", shape_str(pts.shape()), " vs feats ",
              shape_str(feats.shape()));
    ADK_CHECK(!pts.requires_grad(), "splat_trilinear: splat points are not differentiable");
    const int64_t M = feats.dim(0), C = feats.dim(1);
    const int64_t cells = int64_t(D) * H * W;
    auto y = TensorT<S>::zeros({int(C), D, H, W});
    auto wsum = std::make_shared<std::vector<S>>(size_t(cells), S(0));
    const S* fd = feats.data();
    const S* pd = pts.data();
    S* yd = y.data();
    const S eps = S(1e-12);
    auto each_corner = [&](int64_t m, auto&& fn) {
        const double px = double(pd[m * 3]);
        const double py = double(pd[m * 3 + 1]);
        const double pz = double(pd[m * 3 + 2]);
        const int64_t x0 = int64_t(std::floor(px)), y0 = int64_t(std::floor(py)),
                      z0 = int64_t(std::floor(pz));
        const double fx = px - double(x0), fy = py - double(y0), fz = pz - double(z0);
        for (int kz = 0; kz < 2; ++kz)
            for (int ky = 0; ky < 2; ++ky)
                for (int kx = 0; kx < 2; ++kx) {
                    const int64_t xi = x0 + kx, yi = y0 + ky, zi = z0 + kz;
                    if (xi < 0 || xi >= W || yi < 0 || yi >= H || zi < 0 || zi >= D) continue;
                    const S w = S((kx ? fx : 1 - fx) * (ky ? fy : 1 - fy) * (kz ? fz : 1 - fz));
                    if (w <= S(0)) continue;
                    fn((zi * int64_t(H) + yi) * W + xi, w);
                }
    };
    for (int64_t m = 0; m < M; ++m)
        each_corner(m, [&](int64_t cell, S w) {
            (*wsum)[size_t(cell)] += w;
            for (int64_t c = 0; c < C; ++c) yd[c * cells + cell] += w * fd[m * C + c];
        });
    for (int64_t cell = 0; cell < cells; ++cell) {
        const S ws = (*wsum)[size_t(cell)];
        if (ws > eps) {
            const S inv = S(1) / ws;
            for (int64_t c = 0; c < C; ++c) yd[c * cells + cell] *= inv;
        }
    }
    if (should_record<S>({&feats})) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([feats, pts, y, M, C, cells, wsum, eps, D, H, W]() mutable {
            if (!feats.requires_grad()) return;
            y.ensure_grad();
            feats.ensure_grad();
            const S* g = y.grad().data();
            const S* pd = pts.data();
            S* fg = feats.grad().data();
            for (int64_t m = 0; m < M; ++m) {
                const double px = double(pd[m * 3]);
                const double py = double(pd[m * 3 + 1]);
                const double pz = double(pd[m * 3 + 2]);
                const int64_t x0 = int64_t(std::floor(px)), y0 = int64_t(std::floor(py)),
                              z0 = int64_t(std::floor(pz));
                const double fx = px - double(x0), fy = py - double(y0), fz = pz - double(z0);
                for (int kz = 0; kz < 2; ++kz)
                    for (int ky = 0; ky < 2; ++ky)
                        for (int kx = 0; kx < 2; ++kx) {
                            const int64_t xi = x0 + kx, yi = y0 + ky, zi = z0 + kz;
                            if (xi < 0 || xi >= W || yi < 0 || yi >= H || zi < 0 || zi >= D)
                                continue;
                            const S w = S((kx ? fx : 1 - fx) * (ky ? fy : 1 - fy) *
                                          (kz ? fz : 1 - fz));
                            if (w <= S(0)) continue;
                            const int64_t cell = (zi * int64_t(H) + yi) * W + xi;
                            const S ws = (*wsum)[size_t(cell)];
                            if (ws <= eps) continue;
                            const S scale = w / ws;
                            for (int64_t c = 0; c < C; ++c)
                                fg[m * C + c] += scale * g[c * cells + cell];
                        }
            }
        });
    }
    return y;
}

template <class S>
TensorT<S> resize_bilinear(TensorT<S> x, int out_h, int out_w) {
    ADK_CHECK(x.ndim() == 3 || x.ndim() == 4, "resize_bilinear: input must be [C,H,W] or "
              "[N,C,H,W], got ", shape_str(x.shape()));
    const bool batched = x.ndim() == 4;
    const int64_t N = batched ? x.dim(0) : 1;
    const int64_t C = x.dim(batched ? 1 : 0);
    const int64_t H = x.dim(batched ? 2 : 1);
    const int64_t W = x.dim(batched ? 3 : 2);
    Shape ys = batched ? Shape{int(N), int(C), out_h, out_w} : Shape{int(C), out_h, out_w};
    auto y = TensorT<S>::zeros(ys);
    // Half-pixel mapping with clamped borders.
    const double sy = double(H) / out_h, sx = double(W) / out_w;
    std::vector<int64_t> x0v(static_cast<size_t>(out_w));
    std::vector<int64_t> y0v(static_cast<size_t>(out_h));
    std::vector<double> fxv(static_cast<size_t>(out_w));
    std::vector<double> fyv(static_cast<size_t>(out_h));
    for (int64_t ox = 0; ox < out_w; ++ox) {
        double px = (double(ox) + 0.5) * sx - 0.5;
        px = std::min(std::max(px, 0.0), double(W - 1));
        x0v[size_t(ox)] = std::min(int64_t(px), W - 2 >= 0 ? W - 2 : 0);
        fxv[size_t(ox)] = W > 1 ? px - double(x0v[size_t(ox)]) : 0.0;
    }
    for (int64_t oy = 0; oy < out_h; ++oy) {
        double py = (double(oy) + 0.5) * sy - 0.5;
        py = std::min(std::max(py, 0.0), double(H - 1));
        y0v[size_t(oy)] = std::min(int64_t(py), H - 2 >= 0 ? H - 2 : 0);
        fyv[size_t(oy)] = H > 1 ? py - double(y0v[size_t(oy)]) : 0.0;
    }
    const S* xd = x.data();
    S* yd = y.data();
    for (int64_t nc = 0; nc < N * C; ++nc) {
        const S* src = xd + nc * H * W;
        S* dst = yd + nc * int64_t(out_h) * out_w;
        for (int64_t oy = 0; oy < out_h; ++oy) {
            const int64_t yy = y0v[size_t(oy)];
            const double fy = fyv[size_t(oy)];
            for (int64_t ox = 0; ox < out_w; ++ox) {
                const int64_t xx = x0v[size_t(ox)];
                const double fx = fxv[size_t(ox)];
                const double v00 = double(src[yy * W + xx]);
                const double v01 = double(src[yy * W + std::min(xx + 1, W - 1)]);
                const double v10 = double(src[std::min(yy + 1, H - 1) * W + xx]);
                const double v11 = double(src[std::min(yy + 1, H - 1) * W + std::min(xx + 1, W - 1)]);
                dst[oy * out_w + ox] =
                    S((1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11));
            }
        }
    }
    if (should_record<S>({&x})) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([x, y, N, C, H, W, out_h, out_w, x0v, y0v, fxv,
                                     fyv]() mutable {
            if (!x.requires_grad()) return;
            y.ensure_grad();
            x.ensure_grad();
            const S* g = y.grad().data();
            S* xg = x.grad().data();
            for (int64_t nc = 0; nc < N * C; ++nc) {
                S* dst = xg + nc * H * W;
                const S* gr = g + nc * int64_t(out_h) * out_w;
                for (int64_t oy = 0; oy < out_h; ++oy) {
                    const int64_t yy = y0v[size_t(oy)];
                    const double fy = fyv[size_t(oy)];
                    for (int64_t ox = 0; ox < out_w; ++ox) {
                        const int64_t xx = x0v[size_t(ox)];
                        const double fx = fxv[size_t(ox)];
                        const S gv = gr[oy * out_w + ox];
                        dst[yy * W + xx] += S((1 - fy) * (1 - fx)) * gv;
                        dst[yy * W + std::min(xx + 1, W - 1)] += S((1 - fy) * fx) * gv;
                        dst[std::min(yy + 1, H - 1) * W + xx] += S(fy * (1 - fx)) * gv;
                        dst[std::min(yy + 1, H - 1) * W + std::min(xx + 1, W - 1)] +=
                            S(fy * fx) * gv;
                    }
                }
            }
        });
    }
    return y;
}

template <class S>
TensorT<S> avg_pool2d(TensorT<S> x, int k) {
    ADK_CHECK(x.ndim() == 3 || x.ndim() == 4, "avg_pool2d: input must be [C,H,W] or [N,C,H,W]");
    const bool batched = x.ndim() == 4;
    const int64_t N = batched ? x.dim(0) : 1;
    const int64_t C = x.dim(batched ? 1 : 0);
    const int64_t H = x.dim(batched ? 2 : 1);
    const int64_t W = x.dim(batched ? 3 : 2);
    ADK_CHECK(H % k == 0 && W % k == 0, "avg_pool2d: ", H, "x", W, " not divisible by ", k);
    const int64_t ho = H / k, wo = W / k;
    Shape ys = batched ? Shape{int(N), int(C), int(ho), int(wo)} : Shape{int(C), int(ho), int(wo)};
    auto y = TensorT<S>::zeros(ys);
    const S inv = S(1) / S(k * k);
    const S* xd = x.data();
    S* yd = y.data();
    for (int64_t nc = 0; nc < N * C; ++nc)
        for (int64_t oy = 0; oy < ho; ++oy)
            for (int64_t ox = 0; ox < wo; ++ox) {
                S acc = 0;
                for (int i = 0; i < k; ++i)
                    for (int j = 0; j < k; ++j)
                        acc += xd[nc * H * W + (oy * k + i) * W + ox * k + j];
                yd[nc * ho * wo + oy * wo + ox] = acc * inv;
            }
    if (should_record<S>({&x})) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([x, y, N, C, H, W, ho, wo, k, inv]() mutable {
            if (!x.requires_grad()) return;
            y.ensure_grad();
            x.ensure_grad();
            const S* g = y.grad().data();
            S* xg = x.grad().data();
            for (int64_t nc = 0; nc < N * C; ++nc)
                for (int64_t oy = 0; oy < ho; ++oy)
                    for (int64_t ox = 0; ox < wo; ++ox) {
                        const S gv = g[nc * ho * wo + oy * wo + ox] * inv;
                        for (int i = 0; i < k; ++i)
                            for (int j = 0; j < k; ++j)
                                xg[nc * H * W + (oy * k + i) * W + ox * k + j] += gv;
                    }
        });
    }
    return y;
}

#define ADK_INSTANTIATE_NN(S)                                                                     \
    template TensorT<S> matmul<S>(TensorT<S>, TensorT<S>);                          \
    template TensorT<S> conv2d<S>(TensorT<S>, TensorT<S>, TensorT<S>, int,  \
                                  int);                                                           \
    template TensorT<S> conv3d<S>(TensorT<S>, TensorT<S>, TensorT<S>, int); \
    template TensorT<S> softmax<S>(TensorT<S>);                                            \
    template TensorT<S> layer_norm<S>(TensorT<S>, TensorT<S>, TensorT<S>,   \
                                      double);                                                    \
    template TensorT<S> group_norm<S>(TensorT<S>, int, TensorT<S>,                  \
                                      TensorT<S>, double);                                 \
    template TensorT<S> add_channel_bias<S>(TensorT<S>, TensorT<S>);                \
    template TensorT<S> interpolate_bilinear<S>(TensorT<S>, TensorT<S>);            \
    template TensorT<S> interpolate_trilinear<S>(TensorT<S>, TensorT<S>);           \
    template TensorT<S> splat_trilinear<S>(TensorT<S>, TensorT<S>, int, int, int);  \
    template TensorT<S> resize_bilinear<S>(TensorT<S>, int, int);                          \
    template TensorT<S> avg_pool2d<S>(TensorT<S>, int);

ADK_INSTANTIATE_NN(float)
ADK_INSTANTIATE_NN(double)

}  // namespace adk
