#include <doctest.h>

#include <cmath>

#include "adk/gradcheck.hpp"
#include "adk/metrics.hpp"
#include "adk/nerf.hpp"

using namespace adk;

namespace {

Ray make_ray(Vec3 o, Vec3 d, double tn, double tf) {
    Ray r;
    r.o = o;
    r.d = d.normalized();
    r.tn = tn;
    r.tf = tf;
    return r;
}

struct NerfFixture {
    BodyTemplate tmpl = make_body_template(256);
    BodyState ref_state;
    BodyState tgt_state;
    Camera ref_cam = ring_camera(0, 8, 2.5, {0, 1, 0}, 32, 32, 50.0);
    ParamStoreT<double> store{42};
    NerfConfig cfg;
    HumanNerfT<double> nerf;

    NerfFixture() : nerf((init_cfg(), store), cfg, "nerf.") {
        std::vector<double> beta(size_t(tmpl.K), 1.0);
        std::vector<Vec3> rest(size_t(tmpl.K));
        ref_state = pose_body(tmpl, beta, rest);
        auto theta = rest;
        theta[1] = {0.2, 0.0, 0.3};
        theta[3] = {0.0, 0.4, 0.0};
        tgt_state = pose_body(tmpl, beta, theta);
    }
    ParamStoreT<double>& init_cfg() {
        cfg.grid_res = 8;
        cfg.hidden = 32;
        cfg.hidden_layers = 2;
        return store;
    }
};

}  // namespace

TEST_CASE("homogeneous slab matches the analytic transmittance") {
    // sigma = 2/m over 1 m: alpha = 1 - e^-2
    const double expect = 1.0 - std::exp(-2.0);
    auto decode = [](const Vec3&, const Vec3&) {
        return std::pair<double, std::vector<double>>{2.0, {0.7, 0.2, 0.1}};
    };
    Ray ray = make_ray({0, 0, 0}, {0, 0, 1}, 1.0, 2.0);
    auto [feat, alpha] = volume_render_ray(ray, 128, decode, 3);
    CHECK(std::abs(alpha - expect) < 1e-3);
    // constant feature c: output = alpha * c
    CHECK(feat[0] == doctest::Approx(alpha * 0.7).epsilon(1e-9));

    SUBCASE("zero density renders background") {
        auto clear = [](const Vec3&, const Vec3&) {
            return std::pair<double, std::vector<double>>{0.0, {1.0, 1.0, 1.0}};
        };
        auto [f2, a2] = volume_render_ray(ray, 32, clear, 3);
        CHECK(a2 == 0.0);
        CHECK(f2[0] == 0.0);
    }

    SUBCASE("opaque first sample returns the surface feature") {
        auto wall = [](const Vec3&, const Vec3&) {
            return std::pair<double, std::vector<double>>{1e9, {0.3, 0.6, 0.9}};
        };
        auto [f3, a3] = volume_render_ray(ray, 32, wall, 3);
        CHECK(a3 == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(f3[2] == doctest::Approx(0.9).epsilon(1e-9));
    }

    SUBCASE("empty interval gives zeros") {
        Ray none = make_ray({0, 0, 0}, {0, 0, 1}, 0, 0);
        auto [f4, a4] = volume_render_ray(none, 32, decode, 3);
        CHECK(a4 == 0.0);
        CHECK(f4[1] == 0.0);
    }
}

TEST_CASE("slab quadrature error is monotone as samples double") {
    // inhomogeneous density so the quadrature is not trivially exact
    auto decode = [](const Vec3& p, const Vec3&) {
        const double s = 2.0 + 1.5 * std::sin(6.0 * p.z);
        return std::pair<double, std::vector<double>>{s, {1.0}};
    };
    // reference via very fine quadrature
    Ray ray = make_ray({0, 0, 0}, {0, 0, 1}, 0.5, 1.5);
    auto [fr, ar] = volume_render_ray(ray, 1 << 15, decode, 1);
    double prev_err = 1e9;
    for (int n = 8; n <= 128; n *= 2) {
        auto [f, a] = volume_render_ray(ray, n, decode, 1);
        const double err = std::abs(a - ar);
        CHECK(err <= prev_err + 1e-12);
        prev_err = err;
    }
}

TEST_CASE("tensor compositing agrees with the scalar reference") {
    Rng rng(5);
    const int R = 4, N = 16, C = 3;
    auto sigma = DTensor::uniform({R, N}, rng, 0.0, 3.0);
    auto feats = DTensor::uniform({R, N, C}, rng, 0.0, 1.0);
    auto deltas = DTensor::full({R, N}, 1.0 / N);
    auto [pix, acc] = composite_rays(sigma, feats, deltas);
    for (int r = 0; r < R; ++r) {
        double t = 1.0, asum = 0.0, f0 = 0.0;
        for (int i = 0; i < N; ++i) {
            const double a = 1.0 - std::exp(-sigma.data()[r * N + i] / N);
            const double w = t * a;
            f0 += w * feats.data()[(r * N + i) * C];
            asum += w;
            t *= 1.0 - a;
        }
        CHECK(pix.data()[r * C] == doctest::Approx(f0).epsilon(1e-9));
        CHECK(acc.data()[r] == doctest::Approx(asum).epsilon(1e-9));
        CHECK(acc.data()[r] <= 1.0 + 1e-12);
        CHECK(acc.data()[r] >= 0.0);
    }
}

TEST_CASE("zero-initialized head gives softplus(0) density and 0.5 rgb") {
    NerfFixture fx;
    auto pe_p = positional_encoding<double>({{0.1, 1.0, 0.0}}, fx.cfg.pe_pos);
    auto pe_d = positional_encoding<double>({{0.0, 0.0, 1.0}}, fx.cfg.pe_dir);
    auto pf = DTensor::zeros({1, fx.cfg.grid_ch});
    auto xf = DTensor::zeros({1, fx.cfg.img_feat_ch + 1});
    auto [sigma, feats] = nerf_decode(fx.nerf, pe_p, pe_d, pf, xf);
    CHECK(sigma.data()[0] == doctest::Approx(std::log(2.0) /*softplus(0)*/).epsilon(1e-6));
    CHECK(sigma.data()[0] == doctest::Approx(0.6931).epsilon(1e-3));
    for (int c = 0; c < 3; ++c) CHECK(feats.data()[c] == doctest::Approx(0.5));
}

TEST_CASE("positional encoding dimensions") {
    auto pe = positional_encoding<double>({{0.5, -0.25, 1.0}, {0, 0, 0}}, 6);
    CHECK(pe.shape() == Shape{2, 3 + 6 * 6});
    CHECK(pe.data()[0] == 0.5);
    // sin component of octave 0: sin(pi * 0.5) = 1
    CHECK(pe.data()[3] == doctest::Approx(1.0));
}

TEST_CASE("feature volume build and queries") {
    NerfFixture fx;
    Rng rng(3);
    auto ref_img = DTensor::uniform({3, 32, 32}, rng, 0, 1);
    auto feat_map = fx.nerf.encode_reference(ref_img);
    auto vol = build_point_features(fx.nerf, feat_map, fx.ref_cam, fx.ref_state);
    CHECK(vol.grid.shape() == Shape{fx.cfg.grid_ch, 8, 8, 8});
    for (int64_t i = 0; i < vol.grid.size(); ++i) CHECK(std::isfinite(vol.grid.data()[i]));
    // bbox encloses all canonical vertices with margin
    for (const auto& v : fx.ref_state.canonical.vertices) {
        CHECK(v.x > vol.bbox.lo.x);
        CHECK(v.y < vol.bbox.hi.y + 1e-12);
    }

    SUBCASE("queries outside the bbox are zero") {
        auto out = query_point_features(vol, {{10.0, 10.0, 10.0}});
        for (int64_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == 0.0);
    }

    SUBCASE("constant reference image gives constant pre-conv splat") {
        auto const_map = DTensor::full({fx.cfg.img_feat_ch, 32, 32}, 0.37);
        // splat directly (bypassing convolution): every occupied cell holds
        // the constant
        const int V = fx.ref_state.canonical.V;
        auto pts = DTensor::zeros({V, 2});
        for (int v = 0; v < V; ++v) {
            auto pr = fx.ref_cam.project(fx.ref_state.posed_vertices[size_t(v)]);
            pts.data()[v * 2] = pr.u - 0.5;
            pts.data()[v * 2 + 1] = pr.v - 0.5;
        }
        auto feats = interpolate_bilinear(const_map, pts);
        auto vox = DTensor::zeros({V, 3});
        const Vec3 span = vol.bbox.hi - vol.bbox.lo;
        for (int v = 0; v < V; ++v) {
            const Vec3& p = fx.ref_state.canonical.vertices[size_t(v)];
            vox.data()[v * 3 + 0] = (p.x - vol.bbox.lo.x) / span.x * 7;
            vox.data()[v * 3 + 1] = (p.y - vol.bbox.lo.y) / span.y * 7;
            vox.data()[v * 3 + 2] = (p.z - vol.bbox.lo.z) / span.z * 7;
        }
        auto grid = splat_trilinear(feats, vox, 8, 8, 8);
        int occupied = 0;
        for (int64_t i = 0; i < 8 * 8 * 8; ++i) {
            if (grid.data()[i] != 0.0) {
                ++occupied;
                CHECK(grid.data()[i] == doctest::Approx(0.37).epsilon(1e-6));
            }
        }
        CHECK(occupied > 20);
    }
}

TEST_CASE("pixel-aligned features honor visibility") {
    NerfFixture fx;
    auto feat_map = DTensor::full({fx.cfg.img_feat_ch, 32, 32}, 0.25);

    SUBCASE("rest-pose template vertex samples its own projection") {
        const Vec3 v = fx.ref_state.canonical.vertices[10];
        auto out = query_pixel_aligned(feat_map, fx.ref_cam, fx.ref_state, {v}, {10});
        CHECK(out.shape() == Shape{1, fx.cfg.img_feat_ch + 1});
        CHECK(out.data()[0] == doctest::Approx(0.25).epsilon(1e-6));
        CHECK(out.data()[fx.cfg.img_feat_ch] == 0.0);  // visible
    }

    SUBCASE("point behind the reference camera is zeroed and flagged") {
        // A point far behind the camera: skinning at rest keeps it there.
        const Vec3 behind = fx.ref_cam.origin_world() + fx.ref_cam.forward_world() * -2.0;
        auto out = query_pixel_aligned(feat_map, fx.ref_cam, fx.ref_state, {behind}, {0});
        for (int c = 0; c < fx.cfg.img_feat_ch; ++c) CHECK(out.data()[c] == 0.0);
        CHECK(out.data()[fx.cfg.img_feat_ch] == 1.0);
    }
}

TEST_CASE("nerf_loss composes its three terms") {
    Rng rng(11);
    auto rgb = DTensor::uniform({3, 8, 8}, rng, 0, 1);
    auto target = DTensor::uniform({3, 8, 8}, rng, 0, 1);
    auto alpha = DTensor::uniform({1, 8, 8}, rng, 0.05, 0.95);
    auto mask = DTensor::zeros({1, 8, 8});
    for (int64_t i = 0; i < mask.size(); ++i) mask.data()[i] = (i % 3 == 0) ? 1.0 : 0.0;

    SUBCASE("perfect render saturates to near zero") {
        auto rgbm = mul(target, reshape(mask, {8, 8}));
        auto loss = nerf_loss(rgbm, mask, target, mask);
        CHECK(loss.item() <= 1.2e-3);  // BCE at clamped saturation
    }

    SUBCASE("alpha one-half against full mask costs ln 2 per pixel") {
        auto full = DTensor::full({1, 8, 8}, 1.0);
        auto half = DTensor::full({1, 8, 8}, 0.5);
        auto tgt = mul(rgb, DTensor::full({8, 8}, 1.0));
        auto loss = nerf_loss(rgb, half, rgb, full);
        // mse = 0, ssim term 0, bce = ln 2
        CHECK(loss.item() == doctest::Approx(std::log(2.0)).epsilon(1e-4));
        (void)tgt;
    }

    SUBCASE("total equals independently recomputed parts") {
        auto loss = nerf_loss(rgb, alpha, target, mask);
        auto mt = mul(target, reshape(mask, {8, 8}));
        const double m = mse(rgb, mt).item();
        const double s = 0.1 * (1.0 - ssim_tensor<double>(rgb, mt).item());
        double bce = 0;
        for (int64_t i = 0; i < alpha.size(); ++i) {
            const double a = std::clamp(alpha.data()[i], 1e-4, 1 - 1e-4);
            const double mk = mask.data()[i];
            bce += -(mk * std::log(a) + (1 - mk) * std::log(1 - a));
        }
        bce /= double(alpha.size());
        CHECK(loss.item() == doctest::Approx(m + s + bce).epsilon(1e-9));
    }

    SUBCASE("mask outside [0,1] errors") {
        auto bad = DTensor::full({1, 8, 8}, 1.5);
        CHECK_THROWS_AS(nerf_loss(rgb, alpha, target, bad), Error);
    }
}

TEST_CASE("end-to-end nerf gradcheck on a small ray batch") {
    NerfFixture fx;
    Rng rng(9);
    auto ref_img = DTensor::uniform({3, 32, 32}, rng, 0, 1);

    // 8 rays toward the torso from the front
    std::vector<Ray> rays;
    const Box3 bounds = fx.tgt_state.posed_bounds();
    for (int i = 0; i < 8; ++i) {
        const double u = 12 + (2 * i) % 16;
        const double v = 10 + (i * 3) % 12;
        rays.push_back(cast_ray(fx.ref_cam, u, v, bounds));
    }

    // the checked function re-runs the whole pipeline from the raw params
    GradFn f = [&](const std::vector<DTensor>& in) {
        HumanNerfT<double> nerf = fx.nerf;
        nerf.mlp_w[0] = in[0];
        nerf.vox_w2 = in[1];
        nerf.enc_w2 = in[2];
        auto feat_map = nerf.encode_reference(ref_img);
        auto vol = build_point_features(nerf, feat_map, fx.ref_cam, fx.ref_state);
        auto rendered = render_rays(nerf, vol, feat_map, fx.ref_cam, fx.ref_state, fx.tgt_state,
                                    rays, 4, nullptr);
        auto rgb = reshape(slice(rendered.feats, 1, 0, 3), {3, 2, 4});
        // plain differentiable reduction over render outputs
        return add(reduce_mean(square(rgb)), reduce_mean(rendered.alpha));
    };
    std::vector<DTensor> inputs = {fx.nerf.mlp_w[0].clone_detached(),
                                   fx.nerf.vox_w2.clone_detached(),
                                   fx.nerf.enc_w2.clone_detached()};
    // keep the FD loop tractable: perturb a subset by shrinking tensors is
    // not possible, so use the small fixture dims (32x33 + ...)
    auto res = gradcheck(f, inputs, 1e-3, 3);
    INFO("rel err ", res.max_rel_err);
    CHECK(res.pass);
}
