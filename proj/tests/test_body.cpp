#include <doctest.h>

#include <cmath>

#include "adk/body.hpp"

using namespace adk;

namespace {

std::vector<double> ones_beta(int k) { return std::vector<double>(size_t(k), 1.0); }
std::vector<Vec3> zero_theta(int k) { return std::vector<Vec3>(size_t(k)); }

}  // namespace

TEST_CASE("rest pose gives identity transforms and exact vertices") {
    auto tmpl = make_body_template(256);
    auto st = pose_body(tmpl, ones_beta(tmpl.K), zero_theta(tmpl.K));
    for (int k = 0; k < tmpl.K; ++k) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(st.xf.G[size_t(k)].at(i, j) == doctest::Approx(i == j ? 1 : 0).epsilon(1e-12));
        CHECK(st.xf.b[size_t(k)].norm() == doctest::Approx(0.0));
    }
    int mismatches = 0;  // exact up to f32 rounding
    for (int v = 0; v < tmpl.V; ++v) {
        const Vec3& a = st.posed_vertices[size_t(v)];
        const Vec3& b = tmpl.vertices[size_t(v)];
        if (float(a.x) != float(b.x) || float(a.y) != float(b.y) || float(a.z) != float(b.z))
            ++mismatches;
    }
    CHECK(mismatches == 0);
}

TEST_CASE("whole-body root rotation is rigid") {
    auto tmpl = make_body_template(256);
    const Vec3 aa{0.0, 0.7, 0.0};
    auto theta = zero_theta(tmpl.K);
    theta[0] = aa;
    auto st = pose_body(tmpl, ones_beta(tmpl.K), theta);
    const Mat3 R = Mat3::axis_angle(aa);
    for (int k = 0; k < tmpl.K; ++k)
        for (int i = 0; i < 9; ++i)
            CHECK(st.xf.G[size_t(k)].m[size_t(i)] == doctest::Approx(R.m[size_t(i)]).epsilon(1e-12));
    // Rigid equivariance: posed vertices equal R applied about the root joint.
    const Vec3 root = tmpl.rest_joints[0];
    double max_err = 0;
    for (int v = 0; v < tmpl.V; ++v) {
        const Vec3 expect = R * (tmpl.vertices[size_t(v)] - root) + root;
        max_err = std::max(max_err, (st.posed_vertices[size_t(v)] - expect).norm());
    }
    CHECK(max_err < 1e-5);
}

TEST_CASE("single joint rotation matches hand arithmetic on the sub-chain") {
    auto tmpl = make_body_template(128);
    // rotate the spine (joint 1, child of root) by 90 degrees about z
    auto theta = zero_theta(tmpl.K);
    theta[1] = {0, 0, M_PI / 2};
    auto xf = compute_joint_transforms(tmpl, ones_beta(tmpl.K), theta);
    // head joint (2, child of spine) position: rotate its rest offset about
    // the spine joint by 90 deg around z.
    const Vec3 spine = tmpl.rest_joints[1];
    const Vec3 head = tmpl.rest_joints[2];
    const Vec3 off = head - spine;
    const Vec3 expect = spine + Vec3{-off.y, off.x, off.z};
    const Vec3 got = xf.G[2] * head + xf.b[2];
    CHECK((got - expect).norm() < 1e-12);
    // G_k stays orthonormal with det +1
    for (int k = 0; k < tmpl.K; ++k) {
        CHECK(xf.G[size_t(k)].det() == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("lbs_forward blends rigid maps") {
    auto tmpl = make_body_template(128);
    auto theta = zero_theta(tmpl.K);
    theta[1] = {0.3, 0.2, -0.4};
    theta[0] = {0, 0.5, 0};
    auto xf = compute_joint_transforms(tmpl, ones_beta(tmpl.K), theta);
    const Vec3 p{0.05, 1.1, 0.02};

    // one-hot: exactly the rigid image
    std::vector<double> w(size_t(tmpl.K), 0.0);
    w[1] = 1.0;
    const Vec3 rigid = xf.G[1] * p + xf.b[1];
    CHECK((lbs_forward(p, w.data(), xf) - rigid).norm() == doctest::Approx(0.0));

    // 50/50 blend equals the mean of the two rigid images
    w.assign(size_t(tmpl.K), 0.0);
    w[0] = 0.5;
    w[1] = 0.5;
    const Vec3 rigid0 = xf.G[0] * p + xf.b[0];
    const Vec3 blended = (rigid0 + rigid) * 0.5;
    CHECK((lbs_forward(p, w.data(), xf) - blended).norm() < 1e-12);
}

TEST_CASE("lbs_inverse round trips") {
    auto tmpl = make_body_template(512);
    Rng rng(17);
    auto theta = zero_theta(tmpl.K);
    for (int k = 0; k < tmpl.K; ++k)
        theta[size_t(k)] = Vec3{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)} *
                           (55.0 * M_PI / 180.0 / std::sqrt(3.0));
    auto st = pose_body(tmpl, ones_beta(tmpl.K), theta);

    SUBCASE("rest pose is the identity") {
        auto rest = pose_body(tmpl, ones_beta(tmpl.K), zero_theta(tmpl.K));
        const Vec3 p{0.2, 1.0, 0.1};
        CHECK((lbs_inverse(p, rest) - p).norm() < 1e-12);
    }

    SUBCASE("one-hot weights round trip tightly") {
        // Snap every blend row to its dominant joint; inverse skinning is then
        // an exact rigid inverse.
        BodyState hot = st;
        for (int v = 0; v < tmpl.V; ++v) {
            double* w = hot.canonical.blend_weights.data() + size_t(v) * size_t(tmpl.K);
            int arg = 0;
            for (int k = 1; k < tmpl.K; ++k)
                if (w[k] > w[arg]) arg = k;
            for (int k = 0; k < tmpl.K; ++k) w[k] = (k == arg) ? 1.0 : 0.0;
        }
        for (int v = 0; v < hot.canonical.V; ++v)
            hot.posed_vertices[size_t(v)] = lbs_forward(
                hot.canonical.vertices[size_t(v)],
                hot.canonical.blend_weights.data() + size_t(v) * size_t(tmpl.K), hot.xf);
        double max_err = 0;
        for (int v = 0; v < tmpl.V; v += 3) {
            const Vec3 posed = hot.posed_vertices[size_t(v)];
            int nv = 0;
            const Vec3 canon = lbs_inverse(posed, hot, &nv);
            const Vec3 fwd = lbs_forward(
                canon, hot.canonical.blend_weights.data() + size_t(nv) * size_t(tmpl.K), hot.xf);
            max_err = std::max(max_err, (fwd - posed).norm());
        }
        CHECK(max_err < 1e-6);
    }

    SUBCASE("blended surface points round trip within a centimeter") {
        double max_err = 0;
        for (int v = 0; v < tmpl.V; v += 7) {
            const Vec3 posed = st.posed_vertices[size_t(v)];
            int nv = 0;
            const Vec3 canon = lbs_inverse(posed, st, &nv);
            const Vec3 fwd = lbs_forward(
                canon, st.canonical.blend_weights.data() + size_t(nv) * size_t(tmpl.K), st.xf);
            max_err = std::max(max_err, (fwd - posed).norm());
        }
        CHECK(max_err < 1e-2);
    }
}

TEST_CASE("blend weight rows sum to one") {
    auto tmpl = make_body_template(512);
    for (int v = 0; v < tmpl.V; ++v) {
        double s = 0;
        for (int k = 0; k < tmpl.K; ++k) s += tmpl.blend_weights[size_t(v) * size_t(tmpl.K) + size_t(k)];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("beta scales bones and keeps rest identity") {
    auto tmpl = make_body_template(256);
    std::vector<double> beta(size_t(tmpl.K), 1.0);
    beta[5] = beta[6] = 1.3;  // longer legs
    auto st = pose_body(tmpl, beta, zero_theta(tmpl.K));
    // legs reach lower than the unit template
    double min_y_scaled = 1e30, min_y_unit = 1e30;
    for (const auto& v : st.canonical.vertices) min_y_scaled = std::min(min_y_scaled, v.y);
    for (const auto& v : tmpl.vertices) min_y_unit = std::min(min_y_unit, v.y);
    CHECK(min_y_scaled < min_y_unit - 0.05);
    // still identity at rest
    for (int v = 0; v < st.canonical.V; ++v)
        CHECK((st.posed_vertices[size_t(v)] - st.canonical.vertices[size_t(v)]).norm() < 1e-12);
}

TEST_CASE("ray-capsule silhouette radius matches asin(r/d)") {
    Capsule sphere{{0, 0, 0}, {0, 0, 0}, 0.3};
    const Vec3 o{0, 0, 3.0};
    // cast rays with increasing angle off-axis; boundary of hits should sit
    // at asin(r/d)
    const double expect = std::asin(0.3 / 3.0);
    double last_hit = 0, first_miss = M_PI / 4;
    for (int i = 0; i < 2000; ++i) {
        const double a = (i / 2000.0) * 0.25;
        const Vec3 d = Vec3{std::sin(a), 0, -std::cos(a)};
        const bool hit = intersect_capsule(o, d, sphere).has_value();
        if (hit) last_hit = a;
        if (!hit && a < first_miss) first_miss = a;
    }
    CHECK(last_hit <= expect + 1e-9);
    CHECK(first_miss >= expect - 1e-3);
}

TEST_CASE("normal image: viewer-facing surface maps to blue, background to zero") {
    auto tmpl = make_body_template(256);
    auto st = pose_body(tmpl, ones_beta(tmpl.K), zero_theta(tmpl.K));
    Camera cam = ring_camera(0, 8, 2.5, {0, 1.0, 0}, 64, 64, 50.0);
    auto img = render_pose_normals(st, cam);
    // pixel at image center looks at the torso head-on
    const int64_t plane = 64 * 64;
    const int64_t center = 32 * 64 + 32;
    CHECK(img.data()[2 * plane + center] > 0.95);  // z (toward viewer) ~ 1
    CHECK(img.data()[0 * plane + center] == doctest::Approx(0.5).epsilon(0.15));
    // corner pixel misses the body
    CHECK(img.data()[0] == 0.0f);
    CHECK(img.data()[1 * plane] == 0.0f);
    CHECK(img.data()[2 * plane] == 0.0f);
}

TEST_CASE("pose sequence file round trip") {
    auto frames = std::vector<std::vector<Vec3>>{
        {{0.1, 0.2, 0.3}, {0, 0, 0}},
        {{-0.5, 0.25, 0}, {1, 2, 3}},
    };
    save_pose_sequence("/tmp/adk_pose_test.txt", frames);
    auto back = load_pose_sequence("/tmp/adk_pose_test.txt", 2);
    REQUIRE(back.size() == 2);
    CHECK(back[1][1].z == 3.0);
    CHECK(back[0][0].x == 0.1);
}
