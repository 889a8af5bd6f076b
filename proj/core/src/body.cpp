#include "adk/body.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace adk {

void BodyTemplate::validate() const {
    ADK_CHECK(K > 0 && int(rest_joints.size()) == K && int(parent.size()) == K &&
                  int(capsules.size()) == K,
              "body template: inconsistent joint arrays");
    ADK_CHECK(parent[0] == 0, "body template: joint 0 must be the root");
    for (int k = 1; k < K; ++k)
        ADK_CHECK(parent[size_t(k)] >= 0 && parent[size_t(k)] < k,
                  "body template: parent graph must be a tree in topological order, joint ", k,
                  " has parent ", parent[size_t(k)]);
    ADK_CHECK(V > 0 && int(vertices.size()) == V && int(blend_weights.size()) == int64_t(V) * K,
              "body template: inconsistent vertex arrays");
    for (int v = 0; v < V; ++v) {
        double s = 0;
        for (int k = 0; k < K; ++k) {
            const double w = blend_weights[size_t(v) * size_t(K) + size_t(k)];
            ADK_CHECK(w >= 0, "body template: negative blend weight at vertex ", v);
            s += w;
        }
        ADK_CHECK(std::abs(s - 1.0) < 1e-6, "body template: blend row ", v, " sums to ", s);
    }
}

namespace {

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = ab.dot(ab);
    double s = len2 > 1e-18 ? (p - a).dot(ab) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    return (p - (a + ab * s)).norm();
}

// Deterministic area-weighted sampling over capsule surfaces using a golden
// ratio lattice per capsule.
void sample_capsule_vertices(const std::vector<Capsule>& capsules, int total,
                             std::vector<Vec3>& verts, std::vector<int>& bones) {
    const double golden = 0.6180339887498949;
    std::vector<double> area(capsules.size());
    double area_sum = 0;
    for (size_t i = 0; i < capsules.size(); ++i) {
        const auto& c = capsules[i];
        const double L = (c.p1 - c.p0).norm();
        area[i] = 2 * M_PI * c.radius * L + 4 * M_PI * c.radius * c.radius;
        area_sum += area[i];
    }
    verts.clear();
    bones.clear();
    for (size_t i = 0; i < capsules.size(); ++i) {
        const auto& c = capsules[i];
        int n = std::max(6, int(std::lround(double(total) * area[i] / area_sum)));
        const Vec3 axis = c.p1 - c.p0;
        const double L = axis.norm();
        Vec3 az = L > 1e-12 ? axis * (1.0 / L) : Vec3{0, 1, 0};
        Vec3 helper = std::abs(az.y) < 0.9 ? Vec3{0, 1, 0} : Vec3{1, 0, 0};
        const Vec3 ax = az.cross(helper).normalized();
        const Vec3 ay = az.cross(ax).normalized();
        // Unwrap the capsule as a sphere of radius r stretched along the axis:
        // u in [0,1] runs pole-to-pole, phi spins around the axis.
        for (int j = 0; j < n; ++j) {
            const double u = (j + 0.5) / n;
            const double phi = 2 * M_PI * std::fmod(double(j) * golden, 1.0);
            // Map u to polar angle over the composite profile.
            const double tpolar = u * M_PI;
            const double ca = std::cos(tpolar), sa = std::sin(tpolar);
            // Axis position: lower cap for ca<...; treat profile as sphere
            // around segment point s in [0,1].
            const double s = std::clamp((1.0 - ca) * 0.5 * (L + 2 * c.radius) - c.radius, 0.0, L);
            const Vec3 center = c.p0 + az * s;
            // Blend the normal direction: pure radial on the cylinder part,
            // tilted on the caps.
            Vec3 ndir;
            const double axial = (1.0 - ca) * 0.5 * (L + 2 * c.radius) - c.radius;
            if (axial < 0) {
                const double t = std::max(-1.0, axial / c.radius);
                const double rr = std::sqrt(std::max(0.0, 1.0 - t * t));
                ndir = ax * (rr * std::cos(phi)) + ay * (rr * std::sin(phi)) + az * t;
            } else if (axial > L) {
                const double t = std::min(1.0, (axial - L) / c.radius);
                const double rr = std::sqrt(std::max(0.0, 1.0 - t * t));
                ndir = ax * (rr * std::cos(phi)) + ay * (rr * std::sin(phi)) + az * t;
            } else {
                ndir = ax * std::cos(phi) + ay * std::sin(phi);
            }
            verts.push_back(center + ndir * c.radius);
            bones.push_back(int(i));
        }
    }
}

// Softmax over the two nearest bones with temperature 0.1 m.
void compute_blend_weights(const std::vector<Vec3>& verts, const std::vector<Capsule>& capsules,
                           std::vector<double>& weights) {
    const double temp = 0.1;
    const int K = int(capsules.size());
    weights.assign(verts.size() * size_t(K), 0.0);
    for (size_t v = 0; v < verts.size(); ++v) {
        int best = 0, second = 1;
        double bd = 1e30, sd = 1e30;
        for (int k = 0; k < K; ++k) {
            const double d = point_segment_distance(verts[v], capsules[size_t(k)].p0,
                                                    capsules[size_t(k)].p1) -
                             capsules[size_t(k)].radius;
            if (d < bd) {
                second = best;
                sd = bd;
                best = k;
                bd = d;
            } else if (d < sd) {
                second = k;
                sd = d;
            }
        }
        const double e0 = std::exp(-bd / temp);
        const double e1 = std::exp(-sd / temp);
        const double w0 = e0 / (e0 + e1);
        weights[v * size_t(K) + size_t(best)] = w0;
        weights[v * size_t(K) + size_t(second)] = 1.0 - w0;  // rows sum to exactly 1
    }
}

}  // namespace

BodyTemplate make_body_template(int vertex_count) {
    BodyTemplate t;
    t.K = 8;
    t.rest_joints = {
        {0.00, 0.90, 0.00},   // 0 root / pelvis
        {0.00, 1.20, 0.00},   // 1 spine
        {0.00, 1.45, 0.00},   // 2 head
        {-0.18, 1.38, 0.00},  // 3 left upper arm
        {0.18, 1.38, 0.00},   // 4 right upper arm
        {-0.09, 0.85, 0.00},  // 5 left thigh
        {0.09, 0.85, 0.00},   // 6 right thigh
        {0.00, 0.98, -0.12},  // 7 free tail bone
    };
    t.parent = {0, 0, 1, 1, 1, 0, 0, 0};
    t.capsules = {
        {{0.00, 0.88, 0.00}, {0.00, 1.04, 0.00}, 0.130},    // pelvis
        {{0.00, 1.08, 0.00}, {0.00, 1.38, 0.00}, 0.120},    // torso
        {{0.00, 1.50, 0.00}, {0.00, 1.60, 0.00}, 0.095},    // head
        {{-0.21, 1.36, 0.00}, {-0.36, 1.05, 0.00}, 0.050},  // left arm
        {{0.21, 1.36, 0.00}, {0.36, 1.05, 0.00}, 0.050},    // right arm
        {{-0.09, 0.82, 0.00}, {-0.11, 0.38, 0.00}, 0.068},  // left leg
        {{0.09, 0.82, 0.00}, {0.11, 0.38, 0.00}, 0.068},    // right leg
        {{0.00, 0.99, -0.15}, {0.00, 1.06, -0.36}, 0.045},  // tail
    };
    sample_capsule_vertices(t.capsules, vertex_count, t.vertices, t.vertex_bone);
    t.V = int(t.vertices.size());
    compute_blend_weights(t.vertices, t.capsules, t.blend_weights);
    t.validate();
    return t;
}

BodyTemplate scale_template(const BodyTemplate& tmpl, const std::vector<double>& beta) {
    ADK_CHECK(int(beta.size()) == tmpl.K, "scale_template: beta size ", beta.size(), " vs K=",
              tmpl.K);
    for (double b : beta) ADK_CHECK(b > 0, "scale_template: beta must be positive, got ", b);
    BodyTemplate out = tmpl;
    // Joint offsets scale by the bone leading into the joint.
    for (int k = 0; k < tmpl.K; ++k) {
        const int p = tmpl.parent[size_t(k)];
        if (k == 0) {
            out.rest_joints[0] = tmpl.rest_joints[0];
        } else {
            out.rest_joints[size_t(k)] =
                out.rest_joints[size_t(p)] +
                (tmpl.rest_joints[size_t(k)] - tmpl.rest_joints[size_t(p)]) * beta[size_t(k)];
        }
        const Vec3 j_old = tmpl.rest_joints[size_t(k)];
        const Vec3 j_new = out.rest_joints[size_t(k)];
        out.capsules[size_t(k)].p0 = j_new + (tmpl.capsules[size_t(k)].p0 - j_old) * beta[size_t(k)];
        out.capsules[size_t(k)].p1 = j_new + (tmpl.capsules[size_t(k)].p1 - j_old) * beta[size_t(k)];
        out.capsules[size_t(k)].radius = tmpl.capsules[size_t(k)].radius * beta[size_t(k)];
    }
    sample_capsule_vertices(out.capsules, tmpl.V, out.vertices, out.vertex_bone);
    out.V = int(out.vertices.size());
    compute_blend_weights(out.vertices, out.capsules, out.blend_weights);
    return out;
}

JointTransforms compute_joint_transforms(const BodyTemplate& tmpl,
                                         const std::vector<double>& beta,
                                         const std::vector<Vec3>& theta) {
    ADK_CHECK(int(theta.size()) == tmpl.K, "compute_joint_transforms: theta size ",
              theta.size(), " vs K=", tmpl.K);
    for (const auto& a : theta)
        ADK_CHECK(std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z),
                  "compute_joint_transforms: non-finite theta");
    const BodyTemplate scaled =
        std::all_of(beta.begin(), beta.end(), [](double b) { return b == 1.0; })
            ? tmpl
            : scale_template(tmpl, beta);
    JointTransforms xf;
    xf.G.resize(size_t(tmpl.K));
    xf.b.resize(size_t(tmpl.K));
    for (int k = 0; k < tmpl.K; ++k) {
        const Mat3 Rk = Mat3::axis_angle(theta[size_t(k)]);
        const Vec3 jk = scaled.rest_joints[size_t(k)];
        if (k == 0) {
            xf.G[0] = Rk;
            xf.b[0] = jk - Rk * jk;  // rotate about the root joint
        } else {
            const int p = tmpl.parent[size_t(k)];
            xf.G[size_t(k)] = xf.G[size_t(p)] * Rk;
            // Joint k stays attached to its parent's image.
            xf.b[size_t(k)] =
                xf.G[size_t(p)] * jk + xf.b[size_t(p)] - xf.G[size_t(k)] * jk;
        }
    }
    return xf;
}

BodyState pose_body(const BodyTemplate& tmpl, const std::vector<double>& beta,
                    const std::vector<Vec3>& theta) {
    BodyState st;
    st.canonical = std::all_of(beta.begin(), beta.end(), [](double b) { return b == 1.0; })
                       ? tmpl
                       : scale_template(tmpl, beta);
    st.beta = beta;
    st.theta = theta;
    st.xf = compute_joint_transforms(st.canonical, std::vector<double>(size_t(tmpl.K), 1.0),
                                     theta);
    st.posed_vertices.resize(size_t(st.canonical.V));
    for (int v = 0; v < st.canonical.V; ++v)
        st.posed_vertices[size_t(v)] =
            lbs_forward(st.canonical.vertices[size_t(v)],
                        st.canonical.blend_weights.data() + size_t(v) * size_t(tmpl.K), st.xf);
    st.posed_capsules.resize(size_t(tmpl.K));
    for (int k = 0; k < tmpl.K; ++k) {
        const auto& c = st.canonical.capsules[size_t(k)];
        st.posed_capsules[size_t(k)].p0 = st.xf.G[size_t(k)] * c.p0 + st.xf.b[size_t(k)];
        st.posed_capsules[size_t(k)].p1 = st.xf.G[size_t(k)] * c.p1 + st.xf.b[size_t(k)];
        st.posed_capsules[size_t(k)].radius = c.radius;
    }
    return st;
}

Box3 BodyState::posed_bounds(double pad) const {
    Box3 b;
    for (const auto& c : posed_capsules) {
        const Vec3 r{c.radius, c.radius, c.radius};
        b.expand(c.p0 - r);
        b.expand(c.p0 + r);
        b.expand(c.p1 - r);
        b.expand(c.p1 + r);
    }
    return b.padded(pad);
}

Box3 BodyState::canonical_bounds(double pad) const {
    Box3 b;
    for (const auto& v : canonical.vertices) b.expand(v);
    return b.padded(pad);
}

Vec3 lbs_forward(const Vec3& p_c, const double* weights, const JointTransforms& xf) {
    Vec3 out{0, 0, 0};
    for (size_t k = 0; k < xf.G.size(); ++k) {
        const double w = weights[k];
        if (w == 0.0) continue;
        out += (xf.G[k] * p_c + xf.b[k]) * w;
    }
    return out;
}

InverseSkin lbs_inverse_ex(const Vec3& p_tgt, const BodyState& state) {
    const int V = state.canonical.V;
    const int K = state.canonical.K;
    int best = 0;
    double bd = 1e30;
    for (int v = 0; v < V; ++v) {
        const Vec3 dv = state.posed_vertices[size_t(v)] - p_tgt;
        const double d = dv.dot(dv);
        if (d < bd) {
            bd = d;
            best = v;
        }
    }
    const double* w = state.canonical.blend_weights.data() + size_t(best) * size_t(K);
    Mat3 A;
    A.m.fill(0.0);
    Vec3 bsum{0, 0, 0};
    for (int k = 0; k < K; ++k) {
        if (w[k] == 0.0) continue;
        A = A + state.xf.G[size_t(k)] * w[k];
        bsum += state.xf.b[size_t(k)] * w[k];
    }
    ADK_CHECK(std::abs(A.det()) >= 1e-8,
              "lbs_inverse: degenerate blend (opposing rotations), |det A| < 1e-8");
    InverseSkin out;
    out.A_inv = A.inverse();
    out.p_c = out.A_inv * (p_tgt - bsum);
    out.vertex = best;
    return out;
}

Vec3 lbs_inverse(const Vec3& p_tgt, const BodyState& state, int* nearest_vertex) {
    const InverseSkin inv = lbs_inverse_ex(p_tgt, state);
    if (nearest_vertex) *nearest_vertex = inv.vertex;
    return inv.p_c;
}

std::optional<CapsuleHit> intersect_capsule(const Vec3& o, const Vec3& d, const Capsule& c,
                                            double t_min) {
    const Vec3 axis = c.p1 - c.p0;
    const double L = axis.norm();
    std::optional<CapsuleHit> best;
    auto consider_sphere = [&](const Vec3& center, double s_at) {
        const Vec3 oc = o - center;
        const double b = oc.dot(d);
        const double cc = oc.dot(oc) - c.radius * c.radius;
        const double disc = b * b - cc;
        if (disc < 0) return;
        const double t = -b - std::sqrt(disc);
        if (t < t_min) return;
        if (!best || t < best->t) {
            const Vec3 hit = o + d * t;
            best = CapsuleHit{t, (hit - center) * (1.0 / c.radius), -1, s_at};
        }
    };
    if (L < 1e-12) {
        consider_sphere(c.p0, 0.0);
        return best;
    }
    const Vec3 az = axis * (1.0 / L);
    // Infinite cylinder: |(p - p0) - ((p - p0).az)az| = r
    const Vec3 oc = o - c.p0;
    const Vec3 dperp = d - az * d.dot(az);
    const Vec3 operp = oc - az * oc.dot(az);
    const double a = dperp.dot(dperp);
    const double b = operp.dot(dperp);
    const double cc = operp.dot(operp) - c.radius * c.radius;
    if (a > 1e-14) {
        const double disc = b * b - a * cc;
        if (disc >= 0) {
            const double t = (-b - std::sqrt(disc)) / a;
            if (t >= t_min) {
                const Vec3 hit = o + d * t;
                const double s = (hit - c.p0).dot(az);
                if (s >= 0 && s <= L) {
                    const Vec3 on_axis = c.p0 + az * s;
                    best = CapsuleHit{t, (hit - on_axis) * (1.0 / c.radius), -1, s / L};
                }
            }
        }
    }
    consider_sphere(c.p0, 0.0);
    consider_sphere(c.p1, 1.0);
    return best;
}

std::optional<CapsuleHit> intersect_body(const Vec3& o, const Vec3& d,
                                         const std::vector<Capsule>& capsules, double t_min) {
    std::optional<CapsuleHit> best;
    for (size_t k = 0; k < capsules.size(); ++k) {
        auto h = intersect_capsule(o, d, capsules[k], t_min);
        if (h && (!best || h->t < best->t)) {
            h->bone = int(k);
            best = h;
        }
    }
    return best;
}

Tensor render_pose_normals(const BodyState& state, const Camera& cam) {
    cam.validate();
    const int H = cam.height, W = cam.width;
    auto out = Tensor::zeros({3, H, W});
    const Vec3 o = cam.origin_world();
    const Mat3 rt = cam.R.transposed();
    float* data = out.data();
    const int64_t plane = int64_t(H) * W;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const Vec3 dir =
                (rt * Vec3{(x + 0.5 - cam.cx) / cam.fx, (y + 0.5 - cam.cy) / cam.fy, 1.0})
                    .normalized();
            auto hit = intersect_body(o, dir, state.posed_capsules);
            if (!hit) continue;
            // View-space normal with the component toward the viewer positive.
            const Vec3 n = hit->normal;
            const Vec3 n_view{n.dot({cam.R.m[0], cam.R.m[1], cam.R.m[2]}),
                              n.dot({cam.R.m[3], cam.R.m[4], cam.R.m[5]}),
                              -n.dot({cam.R.m[6], cam.R.m[7], cam.R.m[8]})};
            const int64_t p = int64_t(y) * W + x;
            data[0 * plane + p] = float((n_view.x + 1.0) * 0.5);
            data[1 * plane + p] = float((n_view.y + 1.0) * 0.5);
            data[2 * plane + p] = float((n_view.z + 1.0) * 0.5);
        }
    return out;
}

void save_pose_sequence(const std::string& path, const std::vector<std::vector<Vec3>>& frames) {
    std::ofstream f(path);
    ADK_CHECK(bool(f), "save_pose_sequence: cannot open ", path);
    f << "# frame_index then K*3 axis-angle values per line\n";
    f << std::setprecision(17);
    for (size_t i = 0; i < frames.size(); ++i) {
        f << i;
        for (const auto& a : frames[i]) f << ' ' << a.x << ' ' << a.y << ' ' << a.z;
        f << '\n';
    }
}

std::vector<std::vector<Vec3>> load_pose_sequence(const std::string& path, int K) {
    std::ifstream f(path);
    ADK_CHECK(bool(f), "load_pose_sequence: cannot open ", path);
    std::string header;
    std::getline(f, header);
    std::vector<std::vector<Vec3>> frames;
    int idx;
    while (f >> idx) {
        std::vector<Vec3> theta(static_cast<size_t>(K));
        for (int k = 0; k < K; ++k) f >> theta[size_t(k)].x >> theta[size_t(k)].y >> theta[size_t(k)].z;
        ADK_CHECK(bool(f), "load_pose_sequence: malformed record ", idx, " in ", path);
        frames.push_back(std::move(theta));
    }
    return frames;
}

}  // namespace adk
