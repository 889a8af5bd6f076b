#pragma once

#include <utility>
#include <vector>

#include "adk/body.hpp"
#include "adk/camera.hpp"
#include "adk/ops.hpp"
#include "adk/params.hpp"

namespace adk {

struct NerfConfig {
    int grid_res = 16;   // canonical feature grid resolution per axis
    int grid_ch = 16;    // feature channels in the grid
    int img_feat_ch = 16;  // reference 2D feature channels
    int out_ch = 8;      // rendered feature channels; first 3 are RGB
    int pe_pos = 6;      // frequency octaves for positions
    int pe_dir = 4;      // frequency octaves for directions
    int hidden = 128;
    int hidden_layers = 4;
    int n_samples = 32;  // default quadrature samples per ray
    double bbox_margin = 0.05;
};

inline int pe_dim(int octaves) { return 3 + 6 * octaves; }

// gamma(p): identity plus sin/cos at frequencies pi * 2^l.
template <class S>
TensorT<S> positional_encoding(const std::vector<Vec3>& pts, int octaves);

// Canonical-space radiance field conditioned on one reference image.
// Point-level features: reference CNN features splatted at template vertices
// into a dense grid and refined by two 3^3 convolutions. Pixel-aligned
// features: canonical points skinned into the reference pose, projected and
// sampled from the same CNN map, with an out-of-frame flag channel.
template <class S>
struct HumanNerfT {
    NerfConfig cfg;
    TensorT<S> enc_w1, enc_b1, enc_w2, enc_b2;
    TensorT<S> vox_w1, vox_b1, vox_w2, vox_b2;
    std::vector<TensorT<S>> mlp_w, mlp_b;  // hidden layers then the head

    HumanNerfT() = default;
    HumanNerfT(ParamStoreT<S>& store, const NerfConfig& cfg, const std::string& prefix);

    int mlp_in_dim() const {
        return pe_dim(cfg.pe_pos) + pe_dim(cfg.pe_dir) + cfg.grid_ch + cfg.img_feat_ch + 1;
    }

    // [3,H,W] image -> [C,H,W] feature map
    TensorT<S> encode_reference(TensorT<S> ref_image) const;
};

template <class S>
struct FeatureVolumeT {
    TensorT<S> grid;  // [C,R,R,R]
    Box3 bbox;        // canonical bounds the grid spans
};

template <class S>
FeatureVolumeT<S> build_point_features(const HumanNerfT<S>& nerf, TensorT<S> ref_feat_map,
                                       const Camera& ref_cam, const BodyState& ref_state);

// Trilinear lookup at canonical points; outside the bbox -> zero vector.
template <class S>
TensorT<S> query_point_features(const FeatureVolumeT<S>& vol, const std::vector<Vec3>& x_c);

// [M, img_feat_ch + 1]; the last column flags out-of-frame / behind-camera.
// vert_idx supplies each point's canonical correspondence (nearest vertex).
template <class S>
TensorT<S> query_pixel_aligned(TensorT<S> ref_feat_map, const Camera& ref_cam,
                               const BodyState& ref_state, const std::vector<Vec3>& x_c,
                               const std::vector<int>& vert_idx);

// sigma >= 0 via softplus; feature channels 0..2 squashed to [0,1].
// Inputs are [M, *] feature blocks; returns (sigma [M], feats [M,out_ch]).
template <class S>
std::pair<TensorT<S>, TensorT<S>> nerf_decode(const HumanNerfT<S>& nerf, TensorT<S> pe_pos,
                                              TensorT<S> pe_dir, TensorT<S> point_feat,
                                              TensorT<S> pixel_feat);

// Alpha compositing: alpha_i = 1 - exp(-sigma_i delta_i), T_i = prod(1-alpha_j),
// weights w_i = T_i alpha_i. Returns (sum w_i c_i [R,C], sum w_i [R]).
template <class S>
std::pair<TensorT<S>, TensorT<S>> composite_rays(TensorT<S> sigma, TensorT<S> feats,
                                                 TensorT<S> deltas);

// Midpoint (or stratified) sample positions over [tn, tf]; each sample owns a
// segment of width (tf-tn)/n so the quadrature telescopes exactly.
std::vector<double> sample_ray_ts(const Ray& ray, int n, Rng* stratified);

// Scalar single-ray reference path for oracles and tests. The decode closure
// maps (position, direction) to (sigma, features).
template <class F>
std::pair<std::vector<double>, double> volume_render_ray(const Ray& ray, int n_samples,
                                                         F&& decode, int feat_dim,
                                                         Rng* stratified = nullptr) {
    std::vector<double> feat(size_t(feat_dim), 0.0);
    if (ray.empty()) return {feat, 0.0};
    const auto ts = sample_ray_ts(ray, n_samples, stratified);
    const double delta = (ray.tf - ray.tn) / n_samples;
    double transmittance = 1.0, alpha_acc = 0.0;
    for (double t : ts) {
        auto [sigma, c] = decode(ray.o + ray.d * t, ray.d);
        const double a = 1.0 - std::exp(-sigma * delta);
        const double w = transmittance * a;
        for (int i = 0; i < feat_dim; ++i) feat[size_t(i)] += w * c[size_t(i)];
        alpha_acc += w;
        transmittance *= 1.0 - a;
    }
    return {feat, alpha_acc};
}

template <class S>
struct NerfRender {
    TensorT<S> feats;  // [R, out_ch]
    TensorT<S> alpha;  // [R]
};

// Differentiable render of a ray batch in the target pose. Empty rays come
// back as exact zeros.
template <class S>
NerfRender<S> render_rays(const HumanNerfT<S>& nerf, const FeatureVolumeT<S>& vol,
                          TensorT<S> ref_feat_map, const Camera& ref_cam,
                          const BodyState& ref_state, const BodyState& tgt_state,
                          const std::vector<Ray>& rays, int n_samples, Rng* stratified);

// MSE against the masked target + 0.1 (1 - SSIM) + BCE(alpha, mask) with
// alpha clamped to [1e-4, 1-1e-4]. rgb/target are [3,h,w]; alpha/mask [1,h,w].
template <class S>
TensorT<S> nerf_loss(TensorT<S> rgb, TensorT<S> alpha, TensorT<S> target, TensorT<S> mask);

// Full-image conditioning render at the given target camera.
// Returns ([out_ch,H,W] features, [1,H,W] alpha).
template <class S>
std::pair<TensorT<S>, TensorT<S>> render_image(const HumanNerfT<S>& nerf,
                                               const FeatureVolumeT<S>& vol,
                                               TensorT<S> ref_feat_map, const Camera& ref_cam,
                                               const BodyState& ref_state,
                                               const BodyState& tgt_state, const Camera& tgt_cam,
                                               int n_samples, Rng* stratified);

}  // namespace adk
