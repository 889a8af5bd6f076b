#pragma once

#include <optional>
#include <string>
#include <vector>

#include "adk/camera.hpp"
#include "adk/geom3.hpp"

namespace adk {

// Capsule (swept sphere) from p0 to p1. p0 == p1 degenerates to a sphere.
struct Capsule {
    Vec3 p0, p1;
    double radius = 0;
};

// Articulated capsule figure with SMPL-style skinning math: K joints in a
// tree, one capsule per bone, V surface vertices with row-stochastic blend
// weights. Joint k's capsule hangs off joint k; bone scale beta_k scales the
// offset of joint k from its parent plus its capsule geometry.
struct BodyTemplate {
    int K = 0;
    int V = 0;
    std::vector<Vec3> rest_joints;        // K
    std::vector<int> parent;              // K, parent[0] == 0
    std::vector<Capsule> capsules;        // K, in rest space
    std::vector<Vec3> vertices;           // V, sampled on capsule surfaces
    std::vector<int> vertex_bone;         // V, capsule each vertex came from
    std::vector<double> blend_weights;    // V*K row-major, rows sum to 1

    void validate() const;
};

// Default 8-joint figure: root, spine, head, two upper arms, two thighs and a
// free tail bone that breaks front/back symmetry.
BodyTemplate make_body_template(int vertex_count = 512);

// Applies per-bone scales to joints, capsules, vertices and recomputes blend
// weights. beta = 1 returns an identical template.
BodyTemplate scale_template(const BodyTemplate& tmpl, const std::vector<double>& beta);

struct JointTransforms {
    std::vector<Mat3> G;  // K rotations, orthonormal det +1
    std::vector<Vec3> b;  // K translations
};

// Composes per-joint axis-angle rotations along the parent chain. (G_k, b_k)
// rigidly maps rest-space points attached to joint k into posed space.
JointTransforms compute_joint_transforms(const BodyTemplate& tmpl,
                                         const std::vector<double>& beta,
                                         const std::vector<Vec3>& theta);

// Posed body: the beta-scaled template defines the canonical space.
struct BodyState {
    BodyTemplate canonical;  // beta applied
    std::vector<double> beta;
    std::vector<Vec3> theta;
    JointTransforms xf;
    std::vector<Vec3> posed_vertices;
    std::vector<Capsule> posed_capsules;

    Box3 posed_bounds(double pad = 0.1) const;
    Box3 canonical_bounds(double pad = 0.05) const;
};

BodyState pose_body(const BodyTemplate& tmpl, const std::vector<double>& beta,
                    const std::vector<Vec3>& theta);

// p_tgt = sum_k w_k (G_k p_c + b_k)
Vec3 lbs_forward(const Vec3& p_c, const double* weights, const JointTransforms& xf);

// Inverse skinning via the blend weights of the nearest posed vertex:
// p_c = A^{-1}(p_tgt - sum w_k b_k), A = sum w_k G_k. Degenerate blends
// (|det A| < 1e-8) raise an error. Also returns the vertex index used.
Vec3 lbs_inverse(const Vec3& p_tgt, const BodyState& state, int* nearest_vertex = nullptr);

// Inverse skinning with the blended inverse matrix exposed, for transforming
// directions into the canonical frame alongside positions.
struct InverseSkin {
    Vec3 p_c;
    Mat3 A_inv;
    int vertex = 0;
};
InverseSkin lbs_inverse_ex(const Vec3& p_tgt, const BodyState& state);

// Nearest ray-capsule intersection over the posed body.
struct CapsuleHit {
    double t = 0;
    Vec3 normal;  // unit, world space
    int bone = -1;
    double axis_s = 0;  // hit parameter along the capsule axis in [0,1]
};
std::optional<CapsuleHit> intersect_capsule(const Vec3& o, const Vec3& d, const Capsule& c,
                                            double t_min = 1e-6);
std::optional<CapsuleHit> intersect_body(const Vec3& o, const Vec3& d,
                                         const std::vector<Capsule>& capsules,
                                         double t_min = 1e-6);

// Analytic normal image for pose guidance: camera-space normals mapped by
// (n+1)/2 into RGB with the component toward the viewer in the blue channel;
// background pixels are zero. Returns a [3,H,W] tensor in [0,1].
Tensor render_pose_normals(const BodyState& state, const Camera& cam);

// Pose sequence file: one header line, then one record per line:
// frame index followed by K*3 axis-angle floats.
void save_pose_sequence(const std::string& path, const std::vector<std::vector<Vec3>>& frames);
std::vector<std::vector<Vec3>> load_pose_sequence(const std::string& path, int K);

}  // namespace adk
