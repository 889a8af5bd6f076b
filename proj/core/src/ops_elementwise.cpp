#include <algorithm>
#include <cmath>

#include "adk/ops.hpp"

namespace adk {

namespace {

// Suffix-broadcast layout: the larger operand is [rep x inner], the smaller
// is [inner]. small = 0 means shapes are equal.
struct BCast {
    int small;  // 0 none, 1 = a is the smaller operand, 2 = b
    int64_t rep = 1;
    int64_t inner = 1;
};

bool is_suffix(const Shape& small, const Shape& big) {
    if (small.size() > big.size()) return false;
    size_t off = big.size() - small.size();
    for (size_t i = 0; i < small.size(); ++i)
        if (big[off + i] != small[i]) return false;
    return true;
}

template <class S>
BCast bcast_of(const char* op, TensorT<S> a, TensorT<S> b) {
    BCast bc;
    if (a.shape() == b.shape()) {
        bc.small = 0;
        bc.inner = a.size();
        return bc;
    }
    if (is_suffix(b.shape(), a.shape())) {
        bc.small = 2;
        bc.inner = b.size();
        bc.rep = a.size() / std::max<int64_t>(1, b.size());
        return bc;
    }
    if (is_suffix(a.shape(), b.shape())) {
        bc.small = 1;
        bc.inner = a.size();
        bc.rep = b.size() / std::max<int64_t>(1, a.size());
        return bc;
    }
    fail(op, ": shapes ", shape_str(a.shape()), " and ", shape_str(b.shape()),
         " do not broadcast (suffix rule)");
}

template <class S, class FwdF, class DaF, class DbF>
TensorT<S> binary_op(const char* name, TensorT<S> a, TensorT<S> b, FwdF f,
                     DaF da_of, DbF db_of) {
    BCast bc = bcast_of(name, a, b);
    TensorT<S> big = bc.small == 1 ? b : a;
    auto y = TensorT<S>::zeros(big.shape());
    const S* ad = a.data();
    const S* bd = b.data();
    S* yd = y.data();
    if (bc.small == 0) {
        for (int64_t i = 0; i < y.size(); ++i) yd[i] = f(ad[i], bd[i]);
    } else if (bc.small == 2) {
        for (int64_t r = 0; r < bc.rep; ++r)
            for (int64_t i = 0; i < bc.inner; ++i)
                yd[r * bc.inner + i] = f(ad[r * bc.inner + i], bd[i]);
    } else {
        for (int64_t r = 0; r < bc.rep; ++r)
            for (int64_t i = 0; i < bc.inner; ++i)
                yd[r * bc.inner + i] = f(ad[i], bd[r * bc.inner + i]);
    }
    if (should_record<S>({&a, &b})) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([a, b, y, bc, da_of, db_of]() mutable {
            y.ensure_grad();
            const S* g = y.grad().data();
            const S* ad = a.data();
            const S* bd = b.data();
            auto aval = [&](int64_t r, int64_t i) {
                return bc.small == 1 ? ad[i] : ad[r * bc.inner + i];
            };
            auto bval = [&](int64_t r, int64_t i) {
                return bc.small == 2 ? bd[i] : bd[r * bc.inner + i];
            };
            if (a.requires_grad()) {
                a.ensure_grad();
                S* ag = a.grad().data();
                for (int64_t r = 0; r < bc.rep; ++r)
                    for (int64_t i = 0; i < bc.inner; ++i) {
                        S d = g[r * bc.inner + i] * da_of(aval(r, i), bval(r, i));
                        ag[bc.small == 1 ? i : r * bc.inner + i] += d;
                    }
            }
            if (b.requires_grad()) {
                b.ensure_grad();
                S* bg = b.grad().data();
                for (int64_t r = 0; r < bc.rep; ++r)
                    for (int64_t i = 0; i < bc.inner; ++i) {
                        S d = g[r * bc.inner + i] * db_of(aval(r, i), bval(r, i));
                        bg[bc.small == 2 ? i : r * bc.inner + i] += d;
                    }
            }
        });
    }
    return y;
}

// dfun(x, y) returns dy/dx given input and output values.
template <class S, class FwdF, class DF>
TensorT<S> unary_op(TensorT<S> x, FwdF f, DF dfun) {
    auto y = TensorT<S>::zeros(x.shape());
    const S* xd = x.data();
    S* yd = y.data();
    for (int64_t i = 0; i < x.size(); ++i) yd[i] = f(xd[i]);
    if (should_record<S>({&x})) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([x, y, dfun]() mutable {
            if (!x.requires_grad()) return;
            y.ensure_grad();
            x.ensure_grad();
            const S* g = y.grad().data();
            const S* xd = x.data();
            const S* yd = y.data();
            S* xg = x.grad().data();
            for (int64_t i = 0; i < x.size(); ++i) xg[i] += g[i] * dfun(xd[i], yd[i]);
        });
    }
    return y;
}

template <class S>
S stable_sigmoid(S v) {
    if (v >= 0) {
        S e = S(std::exp(double(-v)));
        return S(1) / (S(1) + e);
    }
    S e = S(std::exp(double(v)));
    return e / (S(1) + e);
}

template <class S>
S stable_softplus(S v) {
    if (v > S(20)) return v;
    if (v < S(-20)) return S(std::exp(double(v)));
    return S(std::log1p(std::exp(double(v))));
}

}  // namespace

template <class S>
TensorT<S> add(TensorT<S> a, TensorT<S> b) {
    return binary_op("add", a, b, [](S p, S q) { return p + q; },
                     [](S, S) { return S(1); }, [](S, S) { return S(1); });
}

template <class S>
TensorT<S> sub(TensorT<S> a, TensorT<S> b) {
    return binary_op("sub", a, b, [](S p, S q) { return p - q; },
                     [](S, S) { return S(1); }, [](S, S) { return S(-1); });
}

template <class S>
TensorT<S> mul(TensorT<S> a, TensorT<S> b) {
    return binary_op("mul", a, b, [](S p, S q) { return p * q; },
                     [](S, S q) { return q; }, [](S p, S) { return p; });
}

template <class S>
TensorT<S> div(TensorT<S> a, TensorT<S> b) {
    return binary_op("div", a, b, [](S p, S q) { return p / q; },
                     [](S, S q) { return S(1) / q; },
                     [](S p, S q) { return -p / (q * q); });
}

template <class S>
TensorT<S> neg(TensorT<S> x) {
    return unary_op(x, [](S v) { return -v; }, [](S, S) { return S(-1); });
}

template <class S>
TensorT<S> exp(TensorT<S> x) {
    return unary_op(x, [](S v) { return S(std::exp(double(v))); },
                    [](S, S y) { return y; });
}

template <class S>
TensorT<S> log(TensorT<S> x) {
    return unary_op(x, [](S v) { return S(std::log(double(v))); },
                    [](S v, S) { return S(1) / v; });
}

template <class S>
TensorT<S> sqrt(TensorT<S> x) {
    return unary_op(x, [](S v) { return S(std::sqrt(double(v))); },
                    [](S, S y) { return S(0.5) / y; });
}

template <class S>
TensorT<S> sin(TensorT<S> x) {
    return unary_op(x, [](S v) { return S(std::sin(double(v))); },
                    [](S v, S) { return S(std::cos(double(v))); });
}

template <class S>
TensorT<S> cos(TensorT<S> x) {
    return unary_op(x, [](S v) { return S(std::cos(double(v))); },
                    [](S v, S) { return S(-std::sin(double(v))); });
}

template <class S>
TensorT<S> sigmoid(TensorT<S> x) {
    return unary_op(x, [](S v) { return stable_sigmoid(v); },
                    [](S, S y) { return y * (S(1) - y); });
}

template <class S>
TensorT<S> softplus(TensorT<S> x) {
    return unary_op(x, [](S v) { return stable_softplus(v); },
                    [](S v, S) { return stable_sigmoid(v); });
}

template <class S>
TensorT<S> silu(TensorT<S> x) {
    return unary_op(x, [](S v) { return v * stable_sigmoid(v); },
                    [](S v, S) {
                        S s = stable_sigmoid(v);
                        return s * (S(1) + v * (S(1) - s));
                    });
}

template <class S>
TensorT<S> relu(TensorT<S> x) {
    return unary_op(x, [](S v) { return v > S(0) ? v : S(0); },
                    [](S v, S) { return v > S(0) ? S(1) : S(0); });
}

template <class S>
TensorT<S> clamp(TensorT<S> x, double lo, double hi) {
    S l = S(lo), h = S(hi);
    return unary_op(x, [l, h](S v) { return std::min(std::max(v, l), h); },
                    [l, h](S v, S) { return (v > l && v < h) ? S(1) : S(0); });
}

template <class S>
TensorT<S> mul_scalar(TensorT<S> x, double c) {
    S cs = S(c);
    return unary_op(x, [cs](S v) { return v * cs; }, [cs](S, S) { return cs; });
}

template <class S>
TensorT<S> add_scalar(TensorT<S> x, double c) {
    S cs = S(c);
    return unary_op(x, [cs](S v) { return v + cs; }, [](S, S) { return S(1); });
}

template <class S>
TensorT<S> square(TensorT<S> x) {
    return unary_op(x, [](S v) { return v * v; }, [](S v, S) { return S(2) * v; });
}

template <class S>
TensorT<S> reshape(TensorT<S> x, Shape s) {
    ADK_CHECK(numel(s) == x.size(), "reshape: ", shape_str(x.shape()), " -> ", shape_str(s),
              " changes element count");
    auto y = TensorT<S>::zeros(std::move(s));
    y.vec() = x.vec();
    if (should_record<S>({&x})) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([x, y]() mutable {
            if (!x.requires_grad()) return;
            y.ensure_grad();
            x.ensure_grad();
            const S* g = y.grad().data();
            S* xg = x.grad().data();
            for (int64_t i = 0; i < x.size(); ++i) xg[i] += g[i];
        });
    }
    return y;
}

namespace {

// dst[perm-applied index] layout copy; fwd=true maps x->y under perm,
// fwd=false scatters y-grad back into x layout.
template <class S>
void permute_copy(const Shape& xshape, const std::vector<int>& perm, const S* src, S* dst,
                  bool fwd, bool accumulate) {
    int nd = int(xshape.size());
    Shape yshape(nd);
    for (int i = 0; i < nd; ++i) yshape[i] = xshape[size_t(perm[size_t(i)])];
    std::vector<int64_t> xstr(nd, 1), ystr(nd, 1);
    for (int i = nd - 2; i >= 0; --i) xstr[i] = xstr[i + 1] * xshape[i + 1];
    for (int i = nd - 2; i >= 0; --i) ystr[i] = ystr[i + 1] * yshape[i + 1];
    int64_t n = numel(xshape);
    std::vector<int> idx(nd, 0);
    for (int64_t lin = 0; lin < n; ++lin) {
        int64_t xoff = 0, yoff = 0;
        for (int i = 0; i < nd; ++i) xoff += int64_t(idx[size_t(i)]) * xstr[i];
        for (int i = 0; i < nd; ++i) yoff += int64_t(idx[size_t(perm[size_t(i)])]) * ystr[i];
        if (fwd) {
            dst[yoff] = src[xoff];
        } else if (accumulate) {
            dst[xoff] += src[yoff];
        }
        for (int i = nd - 1; i >= 0; --i) {
            if (++idx[size_t(i)] < xshape[size_t(i)]) break;
            idx[size_t(i)] = 0;
        }
    }
}

}  // namespace

template <class S>
TensorT<S> permute(TensorT<S> x, const std::vector<int>& perm) {
    ADK_CHECK(int(perm.size()) == x.ndim(), "permute: perm rank ", perm.size(),
              " vs tensor ", shape_str(x.shape()));
    Shape ys(perm.size());
    for (size_t i = 0; i < perm.size(); ++i) ys[i] = x.dim(perm[i]);
    auto y = TensorT<S>::zeros(ys);
    permute_copy(x.shape(), perm, x.data(), y.data(), true, false);
    if (should_record<S>({&x})) {
        y.set_requires_grad(true);
        auto xshape = x.shape();
        TapeT<S>::instance().record([x, y, perm, xshape]() mutable {
            if (!x.requires_grad()) return;
            y.ensure_grad();
            x.ensure_grad();
            permute_copy(xshape, perm, y.grad().data(), x.grad().data(), false, true);
        });
    }
    return y;
}

template <class S>
TensorT<S> concat(const std::vector<TensorT<S>>& parts, int axis) {
    ADK_CHECK(!parts.empty(), "concat: no inputs");
    const Shape& s0 = parts[0].shape();
    ADK_CHECK(axis >= 0 && axis < int(s0.size()), "concat: axis ", axis, " out of range for ",
              shape_str(s0));
    Shape ys = s0;
    int total = 0;
    for (const auto& p : parts) {
        ADK_CHECK(p.ndim() == int(s0.size()), "concat: rank mismatch ", shape_str(p.shape()),
                  " vs ", shape_str(s0));
        for (int i = 0; i < int(s0.size()); ++i)
            ADK_CHECK(i == axis || p.dim(i) == s0[size_t(i)], "concat: shape ",
                      shape_str(p.shape()), " vs ", shape_str(s0));
        total += p.dim(axis);
    }
    ys[size_t(axis)] = total;
    auto y = TensorT<S>::zeros(ys);
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= s0[size_t(i)];
    for (int i = axis + 1; i < int(s0.size()); ++i) inner *= s0[size_t(i)];
    int64_t ystride = int64_t(total) * inner;
    int64_t off = 0;
    for (const auto& p : parts) {
        int64_t pa = int64_t(p.dim(axis)) * inner;
        const S* pd = p.data();
        S* yd = y.data();
        for (int64_t o = 0; o < outer; ++o)
            std::copy(pd + o * pa, pd + (o + 1) * pa, yd + o * ystride + off);
        off += pa;
    }
    bool rec = false;
    if (grad_enabled())
        for (const auto& p : parts)
            if (p.requires_grad()) rec = true;
    if (rec) {
        y.set_requires_grad(true);
        auto parts_copy = parts;
        TapeT<S>::instance().record([parts_copy, y, outer, ystride]() mutable {
            y.ensure_grad();
            const S* g = y.grad().data();
            int64_t off = 0;
            for (auto& p : parts_copy) {
                int64_t pa = p.size() / outer;
                if (p.requires_grad()) {
                    p.ensure_grad();
                    S* pg = p.grad().data();
                    for (int64_t o = 0; o < outer; ++o)
                        for (int64_t i = 0; i < pa; ++i) pg[o * pa + i] += g[o * ystride + off + i];
                }
                off += pa;
            }
        });
    }
    return y;
}

template <class S>
TensorT<S> slice(TensorT<S> x, int axis, int start, int len) {
    ADK_CHECK(axis >= 0 && axis < x.ndim(), "slice: axis ", axis, " out of range for ",
              shape_str(x.shape()));
    ADK_CHECK(start >= 0 && len > 0 && start + len <= x.dim(axis), "slice: [", start, ",",
              start + len, ") out of range for ", shape_str(x.shape()), " axis ", axis);
    Shape ys = x.shape();
    ys[size_t(axis)] = len;
    auto y = TensorT<S>::zeros(ys);
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= x.dim(i);
    for (int i = axis + 1; i < x.ndim(); ++i) inner *= x.dim(i);
    int64_t xa = int64_t(x.dim(axis)) * inner;
    int64_t ya = int64_t(len) * inner;
    const S* xd = x.data();
    S* yd = y.data();
    for (int64_t o = 0; o < outer; ++o)
        std::copy(xd + o * xa + start * inner, xd + o * xa + (start + len) * inner, yd + o * ya);
    if (should_record<S>({&x})) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([x, y, outer, inner, xa, ya, start]() mutable {
            if (!x.requires_grad()) return;
            y.ensure_grad();
            x.ensure_grad();
            const S* g = y.grad().data();
            S* xg = x.grad().data();
            for (int64_t o = 0; o < outer; ++o)
                for (int64_t i = 0; i < ya; ++i) xg[o * xa + start * inner + i] += g[o * ya + i];
        });
    }
    return y;
}

template <class S>
TensorT<S> reduce_sum(TensorT<S> x) {
    auto y = TensorT<S>::zeros({});
    S acc = 0;
    const S* xd = x.data();
    for (int64_t i = 0; i < x.size(); ++i) acc += xd[i];
    y.data()[0] = acc;
    if (should_record<S>({&x})) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([x, y]() mutable {
            if (!x.requires_grad()) return;
            y.ensure_grad();
            x.ensure_grad();
            const S g = y.grad()[0];
            S* xg = x.grad().data();
            for (int64_t i = 0; i < x.size(); ++i) xg[i] += g;
        });
    }
    return y;
}

template <class S>
TensorT<S> reduce_mean(TensorT<S> x) {
    ADK_CHECK(x.size() > 0, "reduce_mean: empty tensor");
    return mul_scalar(reduce_sum(x), 1.0 / double(x.size()));
}

template <class S>
TensorT<S> reduce_sum_axis(TensorT<S> x, int axis) {
    ADK_CHECK(axis >= 0 && axis < x.ndim(), "reduce_sum_axis: axis ", axis, " for ",
              shape_str(x.shape()));
    Shape ys;
    for (int i = 0; i < x.ndim(); ++i)
        if (i != axis) ys.push_back(x.dim(i));
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= x.dim(i);
    for (int i = axis + 1; i < x.ndim(); ++i) inner *= x.dim(i);
    int64_t A = x.dim(axis);
    auto y = TensorT<S>::zeros(ys);
    const S* xd = x.data();
    S* yd = y.data();
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t a = 0; a < A; ++a)
            for (int64_t i = 0; i < inner; ++i) yd[o * inner + i] += xd[(o * A + a) * inner + i];
    if (should_record<S>({&x})) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([x, y, outer, inner, A]() mutable {
            if (!x.requires_grad()) return;
            y.ensure_grad();
            x.ensure_grad();
            const S* g = y.grad().data();
            S* xg = x.grad().data();
            for (int64_t o = 0; o < outer; ++o)
                for (int64_t a = 0; a < A; ++a)
                    for (int64_t i = 0; i < inner; ++i)
                        xg[(o * A + a) * inner + i] += g[o * inner + i];
        });
    }
    return y;
}

template <class S>
TensorT<S> reduce_mean_axis(TensorT<S> x, int axis) {
    return mul_scalar(reduce_sum_axis(x, axis), 1.0 / double(x.dim(axis)));
}

template <class S>
TensorT<S> cumsum_exclusive(TensorT<S> x) {
    ADK_CHECK(x.ndim() >= 1, "cumsum_exclusive: scalar input");
    int64_t D = x.dim(x.ndim() - 1);
    int64_t rows = x.size() / D;
    auto y = TensorT<S>::zeros(x.shape());
    const S* xd = x.data();
    S* yd = y.data();
    for (int64_t r = 0; r < rows; ++r) {
        S acc = 0;
        for (int64_t i = 0; i < D; ++i) {
            yd[r * D + i] = acc;
            acc += xd[r * D + i];
        }
    }
    if (should_record<S>({&x})) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([x, y, rows, D]() mutable {
            if (!x.requires_grad()) return;
            y.ensure_grad();
            x.ensure_grad();
            const S* g = y.grad().data();
            S* xg = x.grad().data();
            for (int64_t r = 0; r < rows; ++r) {
                S acc = 0;
                for (int64_t i = D - 1; i >= 0; --i) {
                    xg[r * D + i] += acc;
                    acc += g[r * D + i];
                }
            }
        });
    }
    return y;
}

template <class S>
TensorT<S> gather_rows(TensorT<S> table, const std::vector<int>& idx) {
    ADK_CHECK(table.ndim() == 2, "gather_rows: table must be 2D, got ", shape_str(table.shape()));
    int R = table.dim(0), D = table.dim(1);
    for (int i : idx) ADK_CHECK(i >= 0 && i < R, "gather_rows: index ", i, " out of [0,", R, ")");
    auto y = TensorT<S>::zeros({int(idx.size()), D});
    const S* td = table.data();
    S* yd = y.data();
    for (size_t m = 0; m < idx.size(); ++m)
        std::copy(td + int64_t(idx[m]) * D, td + (int64_t(idx[m]) + 1) * D, yd + int64_t(m) * D);
    if (should_record<S>({&table})) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([table, y, idx, D]() mutable {
            if (!table.requires_grad()) return;
            y.ensure_grad();
            table.ensure_grad();
            const S* g = y.grad().data();
            S* tg = table.grad().data();
            for (size_t m = 0; m < idx.size(); ++m)
                for (int d = 0; d < D; ++d) tg[int64_t(idx[m]) * D + d] += g[int64_t(m) * D + d];
        });
    }
    return y;
}

template <class S>
TensorT<S> scale_rows(TensorT<S> x, TensorT<S> s) {
    ADK_CHECK(x.ndim() >= 1, "scale_rows: scalar input");
    Shape rows_shape(x.shape().begin(), x.shape().end() - 1);
    ADK_CHECK(s.shape() == rows_shape, "scale_rows: scale shape ", shape_str(s.shape()),
              " must equal ", shape_str(rows_shape));
    int64_t C = x.dim(x.ndim() - 1);
    int64_t rows = x.size() / C;
    auto y = TensorT<S>::zeros(x.shape());
    const S* xd = x.data();
    const S* sd = s.data();
    S* yd = y.data();
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t c = 0; c < C; ++c) yd[r * C + c] = xd[r * C + c] * sd[r];
    if (should_record<S>({&x, &s})) {
        y.set_requires_grad(true);
        TapeT<S>::instance().record([x, s, y, rows, C]() mutable {
            y.ensure_grad();
            const S* g = y.grad().data();
            const S* xd = x.data();
            const S* sd = s.data();
            if (x.requires_grad()) {
                x.ensure_grad();
                S* xg = x.grad().data();
                for (int64_t r = 0; r < rows; ++r)
                    for (int64_t c = 0; c < C; ++c) xg[r * C + c] += g[r * C + c] * sd[r];
            }
            if (s.requires_grad()) {
                s.ensure_grad();
                S* sg = s.grad().data();
                for (int64_t r = 0; r < rows; ++r) {
                    S acc = 0;
                    for (int64_t c = 0; c < C; ++c) acc += g[r * C + c] * xd[r * C + c];
                    sg[r] += acc;
                }
            }
        });
    }
    return y;
}

#define ADK_INSTANTIATE_ELEMENTWISE(S)                                                   \
    template TensorT<S> add<S>(TensorT<S>, TensorT<S>);                    \
    template TensorT<S> sub<S>(TensorT<S>, TensorT<S>);                    \
    template TensorT<S> mul<S>(TensorT<S>, TensorT<S>);                    \
    template TensorT<S> div<S>(TensorT<S>, TensorT<S>);                    \
    template TensorT<S> neg<S>(TensorT<S>);                                       \
    template TensorT<S> exp<S>(TensorT<S>);                                       \
    template TensorT<S> log<S>(TensorT<S>);                                       \
    template TensorT<S> sqrt<S>(TensorT<S>);                                      \
    template TensorT<S> sin<S>(TensorT<S>);                                       \
    template TensorT<S> cos<S>(TensorT<S>);                                       \
    template TensorT<S> sigmoid<S>(TensorT<S>);                                   \
    template TensorT<S> softplus<S>(TensorT<S>);                                  \
    template TensorT<S> silu<S>(TensorT<S>);                                      \
    template TensorT<S> relu<S>(TensorT<S>);                                      \
    template TensorT<S> clamp<S>(TensorT<S>, double, double);                     \
    template TensorT<S> mul_scalar<S>(TensorT<S>, double);                        \
    template TensorT<S> add_scalar<S>(TensorT<S>, double);                        \
    template TensorT<S> square<S>(TensorT<S>);                                    \
    template TensorT<S> reshape<S>(TensorT<S>, Shape);                            \
    template TensorT<S> permute<S>(TensorT<S>, const std::vector<int>&);          \
    template TensorT<S> concat<S>(const std::vector<TensorT<S>>&, int);                  \
    template TensorT<S> slice<S>(TensorT<S>, int, int, int);                      \
    template TensorT<S> reduce_sum<S>(TensorT<S>);                                \
    template TensorT<S> reduce_mean<S>(TensorT<S>);                               \
    template TensorT<S> reduce_sum_axis<S>(TensorT<S>, int);                      \
    template TensorT<S> reduce_mean_axis<S>(TensorT<S>, int);                     \
    template TensorT<S> cumsum_exclusive<S>(TensorT<S>);                          \
    template TensorT<S> gather_rows<S>(TensorT<S>, const std::vector<int>&);      \
    template TensorT<S> scale_rows<S>(TensorT<S>, TensorT<S>);

ADK_INSTANTIATE_ELEMENTWISE(float)
ADK_INSTANTIATE_ELEMENTWISE(double)

}  // namespace adk
