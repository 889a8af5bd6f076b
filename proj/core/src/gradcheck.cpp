#include "adk/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace adk {

namespace {

double eval_weighted(const GradFn& op, const std::vector<DTensor>& inputs,
                     const std::vector<double>& w) {
    NoGrad ng;
    DTensor y = op(inputs);
    double acc = 0;
    const double* yd = y.data();
    for (int64_t i = 0; i < y.size(); ++i) acc += w[size_t(i)] * yd[i];
    return acc;
}

}  // namespace

GradCheckResult gradcheck(const GradFn& op, std::vector<DTensor> inputs, double tol,
                          uint64_t seed, double h) {
    GradCheckResult res;
    Rng wrng(Rng::mix(seed, 0x77eeddcc));
    for (int attempt = 0; attempt <= 5; ++attempt) {
        res.retries = attempt;
        // analytic pass
        std::vector<DTensor> live;
        live.reserve(inputs.size());
        for (auto& in : inputs) {
            auto t = in.clone_detached();
            t.set_requires_grad(true);
            live.push_back(t);
        }
        TapeT<double>::instance().clear();
        DTensor y = op(live);
        std::vector<double> w(size_t(y.size()));
        for (auto& v : w) v = wrng.normal();
        auto wt = DTensor::from(y.shape(), w);
        DTensor loss = reduce_sum(mul(y, wt));
        backward(loss);

        double max_err = 0;
        bool all_finite = true;
        for (size_t ii = 0; ii < live.size(); ++ii) {
            auto& t = live[ii];
            if (!t.has_grad()) t.ensure_grad();
            std::vector<DTensor> probe;
            for (auto& p : live) probe.push_back(p.clone_detached());
            for (int64_t j = 0; j < t.size(); ++j) {
                const double x0 = probe[ii].data()[j];
                probe[ii].data()[j] = x0 + h;
                const double fp = eval_weighted(op, probe, w);
                probe[ii].data()[j] = x0 - h;
                const double fm = eval_weighted(op, probe, w);
                probe[ii].data()[j] = x0;
                const double fd = (fp - fm) / (2 * h);
                const double ad = t.grad()[size_t(j)];
                if (!std::isfinite(ad) || !std::isfinite(fd)) all_finite = false;
                const double err = std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
                max_err = std::max(max_err, err);
            }
        }
        res.max_rel_err = max_err;
        if (all_finite && max_err < tol) {
            res.pass = true;
            return res;
        }
        // Non-smooth point (or unlucky conditioning): jitter and retry.
        Rng jrng(Rng::mix(seed, 0x1234u + uint64_t(attempt)));
        for (auto& in : inputs) {
            double* d = in.data();
            for (int64_t j = 0; j < in.size(); ++j) d[j] += 0.05 * jrng.normal();
        }
        res.note = "resampled after non-smooth or failing point";
    }
    res.pass = false;
    return res;
}

namespace {

DTensor randn_in(Shape s, uint64_t seed, double scale = 1.0, double offset = 0.0) {
    Rng rng(seed);
    auto t = DTensor::randn(std::move(s), rng, scale);
    if (offset != 0.0)
        for (int64_t i = 0; i < t.size(); ++i) t.data()[i] += offset;
    return t;
}

DTensor positive_in(Shape s, uint64_t seed, double lo = 0.2, double hi = 2.0) {
    Rng rng(seed);
    return DTensor::uniform(std::move(s), rng, lo, hi);
}

}  // namespace

std::vector<OpCase> builtin_op_cases() {
    std::vector<OpCase> cases;
    auto add_case = [&](std::string name, GradFn fn,
                        std::function<std::vector<DTensor>(uint64_t)> mk) {
        cases.push_back({std::move(name), std::move(fn), std::move(mk)});
    };

    add_case("add", [](const std::vector<DTensor>& in) { return add(in[0], in[1]); },
             [](uint64_t s) {
                 return std::vector<DTensor>{randn_in({3, 4}, s), randn_in({4}, s + 1)};
             });
    add_case("sub", [](const std::vector<DTensor>& in) { return sub(in[0], in[1]); },
             [](uint64_t s) {
                 return std::vector<DTensor>{randn_in({3, 4}, s), randn_in({3, 4}, s + 1)};
             });
    add_case("mul", [](const std::vector<DTensor>& in) { return mul(in[0], in[1]); },
             [](uint64_t s) {
                 return std::vector<DTensor>{randn_in({2, 3, 2}, s), randn_in({3, 2}, s + 1)};
             });
    add_case("div", [](const std::vector<DTensor>& in) { return div(in[0], in[1]); },
             [](uint64_t s) {
                 return std::vector<DTensor>{randn_in({3, 3}, s), positive_in({3, 3}, s + 1)};
             });
    add_case("neg", [](const std::vector<DTensor>& in) { return neg(in[0]); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({5}, s)}; });
    add_case("exp", [](const std::vector<DTensor>& in) { return exp(in[0]); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({4}, s)}; });
    add_case("log", [](const std::vector<DTensor>& in) { return log(in[0]); },
             [](uint64_t s) { return std::vector<DTensor>{positive_in({4}, s)}; });
    add_case("sqrt", [](const std::vector<DTensor>& in) { return sqrt(in[0]); },
             [](uint64_t s) { return std::vector<DTensor>{positive_in({4}, s)}; });
    add_case("sin", [](const std::vector<DTensor>& in) { return sin(in[0]); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({6}, s)}; });
    add_case("cos", [](const std::vector<DTensor>& in) { return cos(in[0]); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({6}, s)}; });
    add_case("sigmoid", [](const std::vector<DTensor>& in) { return sigmoid(in[0]); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({6}, s, 2.0)}; });
    add_case("softplus", [](const std::vector<DTensor>& in) { return softplus(in[0]); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({6}, s, 2.0)}; });
    add_case("silu", [](const std::vector<DTensor>& in) { return silu(in[0]); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({6}, s, 2.0)}; });
    add_case("relu", [](const std::vector<DTensor>& in) { return relu(in[0]); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({6}, s)}; });
    add_case("clamp",
             [](const std::vector<DTensor>& in) { return clamp(in[0], -0.8, 0.8); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({8}, s)}; });
    add_case("mul_scalar",
             [](const std::vector<DTensor>& in) { return mul_scalar(in[0], 1.7); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({5}, s)}; });
    add_case("add_scalar",
             [](const std::vector<DTensor>& in) { return add_scalar(in[0], -0.3); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({5}, s)}; });
    add_case("square", [](const std::vector<DTensor>& in) { return square(in[0]); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({5}, s)}; });
    add_case("reshape",
             [](const std::vector<DTensor>& in) { return reshape(in[0], {6}); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({2, 3}, s)}; });
    add_case("permute",
             [](const std::vector<DTensor>& in) { return permute(in[0], {2, 0, 1}); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({2, 3, 4}, s)}; });
    add_case("concat",
             [](const std::vector<DTensor>& in) {
                 return concat(std::vector<DTensor>{in[0], in[1]}, 1);
             },
             [](uint64_t s) {
                 return std::vector<DTensor>{randn_in({2, 3}, s), randn_in({2, 2}, s + 1)};
             });
    add_case("slice",
             [](const std::vector<DTensor>& in) { return slice(in[0], 1, 1, 2); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({3, 4}, s)}; });
    add_case("matmul",
             [](const std::vector<DTensor>& in) { return matmul(in[0], in[1]); },
             [](uint64_t s) {
                 return std::vector<DTensor>{randn_in({2, 3}, s), randn_in({3, 2}, s + 1)};
             });
    add_case("matmul_batched",
             [](const std::vector<DTensor>& in) { return matmul(in[0], in[1]); },
             [](uint64_t s) {
                 return std::vector<DTensor>{randn_in({2, 2, 3}, s), randn_in({2, 3, 2}, s + 1)};
             });
    add_case("conv2d",
             [](const std::vector<DTensor>& in) { return conv2d(in[0], in[1], in[2], 1, 1); },
             [](uint64_t s) {
                 return std::vector<DTensor>{randn_in({2, 5, 5}, s), randn_in({3, 2, 3, 3}, s + 1),
                                             randn_in({3}, s + 2)};
             });
    add_case("conv2d_stride2",
             [](const std::vector<DTensor>& in) { return conv2d(in[0], in[1], in[2], 2, 1); },
             [](uint64_t s) {
                 return std::vector<DTensor>{randn_in({2, 6, 6}, s), randn_in({3, 2, 3, 3}, s + 1),
                                             randn_in({3}, s + 2)};
             });
    add_case("conv3d",
             [](const std::vector<DTensor>& in) { return conv3d(in[0], in[1], in[2], 1); },
             [](uint64_t s) {
                 return std::vector<DTensor>{randn_in({2, 4, 4, 4}, s),
                                             randn_in({2, 2, 3, 3, 3}, s + 1),
                                             randn_in({2}, s + 2)};
             });
    add_case("softmax", [](const std::vector<DTensor>& in) { return softmax(in[0]); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({3, 5}, s, 2.0)}; });
    add_case("layer_norm",
             [](const std::vector<DTensor>& in) { return layer_norm(in[0], in[1], in[2]); },
             [](uint64_t s) {
                 return std::vector<DTensor>{randn_in({3, 6}, s), positive_in({6}, s + 1),
                                             randn_in({6}, s + 2)};
             });
    add_case("group_norm",
             [](const std::vector<DTensor>& in) { return group_norm(in[0], 2, in[1], in[2]); },
             [](uint64_t s) {
                 return std::vector<DTensor>{randn_in({4, 3, 3}, s), positive_in({4}, s + 1),
                                             randn_in({4}, s + 2)};
             });
    add_case("add_channel_bias",
             [](const std::vector<DTensor>& in) { return add_channel_bias(in[0], in[1]); },
             [](uint64_t s) {
                 return std::vector<DTensor>{randn_in({3, 2, 2}, s), randn_in({3}, s + 1)};
             });
    add_case("interpolate_bilinear",
             [](const std::vector<DTensor>& in) {
                 auto pts = DTensor::from({4, 2}, {0.3, 0.7, 1.2, 1.9, 2.4, 0.1, 1.0, 1.0});
                 return interpolate_bilinear(in[0], pts);
             },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({2, 4, 4}, s)}; });
    add_case("interpolate_trilinear",
             [](const std::vector<DTensor>& in) {
                 auto pts = DTensor::from({3, 3},
                                          {0.4, 0.6, 1.1, 1.5, 1.5, 1.5, 2.2, 0.3, 1.8});
                 return interpolate_trilinear(in[0], pts);
             },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({2, 4, 4, 4}, s)}; });
    add_case("splat_trilinear",
             [](const std::vector<DTensor>& in) {
                 auto pts = DTensor::from({3, 3},
                                          {0.4, 0.6, 1.1, 1.5, 1.5, 1.5, 2.2, 0.3, 1.8});
                 return splat_trilinear(in[0], pts, 3, 3, 3);
             },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({3, 2}, s)}; });
    add_case("resize_bilinear",
             [](const std::vector<DTensor>& in) { return resize_bilinear(in[0], 6, 6); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({2, 3, 3}, s)}; });
    add_case("avg_pool2d",
             [](const std::vector<DTensor>& in) { return avg_pool2d(in[0], 2); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({2, 4, 4}, s)}; });
    add_case("reduce_sum", [](const std::vector<DTensor>& in) { return reduce_sum(in[0]); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({3, 4}, s)}; });
    add_case("reduce_mean", [](const std::vector<DTensor>& in) { return reduce_mean(in[0]); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({3, 4}, s)}; });
    add_case("reduce_sum_axis",
             [](const std::vector<DTensor>& in) { return reduce_sum_axis(in[0], 1); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({2, 3, 4}, s)}; });
    add_case("reduce_mean_axis",
             [](const std::vector<DTensor>& in) { return reduce_mean_axis(in[0], 0); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({3, 4}, s)}; });
    add_case("cumsum_exclusive",
             [](const std::vector<DTensor>& in) { return cumsum_exclusive(in[0]); },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({2, 6}, s)}; });
    add_case("gather_rows",
             [](const std::vector<DTensor>& in) {
                 return gather_rows(in[0], {1, 0, 2, 1});
             },
             [](uint64_t s) { return std::vector<DTensor>{randn_in({3, 4}, s)}; });
    add_case("scale_rows",
             [](const std::vector<DTensor>& in) { return scale_rows(in[0], in[1]); },
             [](uint64_t s) {
                 return std::vector<DTensor>{randn_in({3, 4}, s), randn_in({3}, s + 1)};
             });
    return cases;
}

}  // namespace adk
