#include "adk/nerf.hpp"

#include "adk/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace adk {

template <class S>
TensorT<S> positional_encoding(const std::vector<Vec3>& pts, int octaves) {
    const int M = int(pts.size());
    const int D = pe_dim(octaves);
    auto out = TensorT<S>::zeros({M, D});
    S* d = out.data();
    for (int m = 0; m < M; ++m) {
        const double c[3] = {pts[size_t(m)].x, pts[size_t(m)].y, pts[size_t(m)].z};
        S* row = d + int64_t(m) * D;
        row[0] = S(c[0]);
        row[1] = S(c[1]);
        row[2] = S(c[2]);
        int off = 3;
        double freq = M_PI;
        for (int l = 0; l < octaves; ++l, freq *= 2.0)
            for (int i = 0; i < 3; ++i) {
                row[off++] = S(std::sin(freq * c[i]));
                row[off++] = S(std::cos(freq * c[i]));
            }
    }
    return out;
}

template <class S>
HumanNerfT<S>::HumanNerfT(ParamStoreT<S>& store, const NerfConfig& config,
                          const std::string& prefix)
    : cfg(config) {
    const int C = cfg.img_feat_ch;
    enc_w1 = store.he(prefix + "enc.w1", {C, 3, 3, 3}, 3 * 9);
    enc_b1 = store.zeros(prefix + "enc.b1", {C});
    enc_w2 = store.he(prefix + "enc.w2", {C, C, 3, 3}, C * 9);
    enc_b2 = store.zeros(prefix + "enc.b2", {C});
    const int G = cfg.grid_ch;
    ADK_CHECK(G == C, "nerf: grid channels must match image feature channels");
    vox_w1 = store.he(prefix + "vox.w1", {G, G, 3, 3, 3}, G * 27);
    vox_b1 = store.zeros(prefix + "vox.b1", {G});
    vox_w2 = store.he(prefix + "vox.w2", {G, G, 3, 3, 3}, G * 27);
    vox_b2 = store.zeros(prefix + "vox.b2", {G});
    int in = mlp_in_dim();
    for (int l = 0; l < cfg.hidden_layers; ++l) {
        mlp_w.push_back(store.he(prefix + "mlp.w" + std::to_string(l), {in, cfg.hidden}, in));
        mlp_b.push_back(store.zeros(prefix + "mlp.b" + std::to_string(l), {cfg.hidden}));
        in = cfg.hidden;
    }
    // zero-init head: sigma starts at softplus(0), RGB at 0.5
    mlp_w.push_back(store.zeros(prefix + "mlp.head_w", {in, 1 + cfg.out_ch}));
    mlp_b.push_back(store.zeros(prefix + "mlp.head_b", {1 + cfg.out_ch}));
}

template <class S>
TensorT<S> HumanNerfT<S>::encode_reference(TensorT<S> ref_image) const {
    auto h = silu(conv2d(ref_image, enc_w1, enc_b1, 1, 1));
    return conv2d(h, enc_w2, enc_b2, 1, 1);
}

namespace {

// Voxel coordinates for canonical points; points outside the bbox get a far
// sentinel so trilinear lookup returns exact zeros.
template <class S>
TensorT<S> voxel_coords(const std::vector<Vec3>& pts, const Box3& bbox, int res,
                        bool sentinel_outside) {
    auto out = TensorT<S>::zeros({int(pts.size()), 3});
    const Vec3 span = bbox.hi - bbox.lo;
    S* d = out.data();
    for (size_t m = 0; m < pts.size(); ++m) {
        const Vec3& p = pts[m];
        if (sentinel_outside && !bbox.contains(p)) {
            d[m * 3 + 0] = d[m * 3 + 1] = d[m * 3 + 2] = S(-1e6);
            continue;
        }
        d[m * 3 + 0] = S((p.x - bbox.lo.x) / span.x * (res - 1));
        d[m * 3 + 1] = S((p.y - bbox.lo.y) / span.y * (res - 1));
        d[m * 3 + 2] = S((p.z - bbox.lo.z) / span.z * (res - 1));
    }
    return out;
}

}  // namespace

template <class S>
FeatureVolumeT<S> build_point_features(const HumanNerfT<S>& nerf, TensorT<S> ref_feat_map,
                                       const Camera& ref_cam, const BodyState& ref_state) {
    const int V = ref_state.canonical.V;
    const int H = ref_cam.height, W = ref_cam.width;
    auto pts = TensorT<S>::zeros({V, 2});
    int inside = 0;
    for (int v = 0; v < V; ++v) {
        const auto pr = ref_cam.project(ref_state.posed_vertices[size_t(v)]);
        const bool ok = pr.depth > 0.05 && pr.u >= 0 && pr.u < W && pr.v >= 0 && pr.v < H;
        if (ok) ++inside;
        // pixel center convention: continuous coords - 0.5
        pts.data()[v * 2 + 0] = S(ok ? pr.u - 0.5 : -1e6);
        pts.data()[v * 2 + 1] = S(ok ? pr.v - 0.5 : -1e6);
    }
    ADK_CHECK(inside * 2 >= V, "build_point_features: reference camera/body mismatch (only ",
              inside, " of ", V, " vertices project inside the image)");

    auto vert_feats = interpolate_bilinear(ref_feat_map, pts);
    FeatureVolumeT<S> vol;
    vol.bbox = ref_state.canonical_bounds(nerf.cfg.bbox_margin);
    const int R = nerf.cfg.grid_res;
    auto vox_pts = voxel_coords<S>(ref_state.canonical.vertices, vol.bbox, R, false);
    auto grid = splat_trilinear(vert_feats, vox_pts, R, R, R);
    grid = conv3d(silu(conv3d(grid, nerf.vox_w1, nerf.vox_b1, 1)), nerf.vox_w2, nerf.vox_b2, 1);
    vol.grid = grid;
    return vol;
}

template <class S>
TensorT<S> query_point_features(const FeatureVolumeT<S>& vol, const std::vector<Vec3>& x_c) {
    const int R = vol.grid.dim(1);
    auto coords = voxel_coords<S>(x_c, vol.bbox, R, true);
    return interpolate_trilinear(vol.grid, coords);
}

template <class S>
TensorT<S> query_pixel_aligned(TensorT<S> ref_feat_map, const Camera& ref_cam,
                               const BodyState& ref_state, const std::vector<Vec3>& x_c,
                               const std::vector<int>& vert_idx) {
    ADK_CHECK(x_c.size() == vert_idx.size(), "query_pixel_aligned: ", x_c.size(), " points vs ",
              vert_idx.size(), " vertex indices");
    const int M = int(x_c.size());
    const int K = ref_state.canonical.K;
    const int H = ref_cam.height, W = ref_cam.width;
    auto pts = TensorT<S>::zeros({M, 2});
    auto valid = TensorT<S>::zeros({M});
    auto flag = TensorT<S>::zeros({M, 1});
    for (int m = 0; m < M; ++m) {
        const double* w =
            ref_state.canonical.blend_weights.data() + size_t(vert_idx[size_t(m)]) * size_t(K);
        const Vec3 p_ref = lbs_forward(x_c[size_t(m)], w, ref_state.xf);
        const auto pr = ref_cam.project(p_ref);
        const bool ok = pr.depth > 0.05 && pr.u >= 0 && pr.u < W && pr.v >= 0 && pr.v < H;
        pts.data()[m * 2 + 0] = S(ok ? pr.u - 0.5 : -1e6);
        pts.data()[m * 2 + 1] = S(ok ? pr.v - 0.5 : -1e6);
        valid.data()[m] = ok ? S(1) : S(0);
        flag.data()[m] = ok ? S(0) : S(1);
    }
    auto sampled = scale_rows(interpolate_bilinear(ref_feat_map, pts), valid);
    return concat(std::vector<TensorT<S>>{sampled, flag}, 1);
}

template <class S>
std::pair<TensorT<S>, TensorT<S>> nerf_decode(const HumanNerfT<S>& nerf, TensorT<S> pe_pos,
                                              TensorT<S> pe_dir, TensorT<S> point_feat,
                                              TensorT<S> pixel_feat) {
    auto h = concat(std::vector<TensorT<S>>{pe_pos, pe_dir, point_feat, pixel_feat}, 1);
    ADK_CHECK(h.dim(1) == nerf.mlp_in_dim(), "nerf_decode: input dim ", h.dim(1), " vs expected ",
              nerf.mlp_in_dim());
    const int L = int(nerf.mlp_w.size());
    for (int l = 0; l < L - 1; ++l)
        h = silu(add(matmul(h, nerf.mlp_w[size_t(l)]), nerf.mlp_b[size_t(l)]));
    auto head = add(matmul(h, nerf.mlp_w[size_t(L - 1)]), nerf.mlp_b[size_t(L - 1)]);
    auto sigma = reshape(softplus(slice(head, 1, 0, 1)), {head.dim(0)});
    auto rgb = sigmoid(slice(head, 1, 1, 3));
    auto rest = slice(head, 1, 4, nerf.cfg.out_ch - 3);
    auto feats = concat(std::vector<TensorT<S>>{rgb, rest}, 1);
    return {sigma, feats};
}

template <class S>
std::pair<TensorT<S>, TensorT<S>> composite_rays(TensorT<S> sigma, TensorT<S> feats,
                                                 TensorT<S> deltas) {
    ADK_CHECK(sigma.ndim() == 2 && deltas.shape() == sigma.shape() && feats.ndim() == 3 &&
                  feats.dim(0) == sigma.dim(0) && feats.dim(1) == sigma.dim(1),
              "composite_rays: sigma ", shape_str(sigma.shape()), ", feats ",
              shape_str(feats.shape()), ", deltas ", shape_str(deltas.shape()));
    auto optical = mul(sigma, deltas);                       // sigma_i * delta_i
    auto transmittance = exp(neg(cumsum_exclusive(optical)));  // T_i
    auto alpha = sub(TensorT<S>::full(optical.shape(), S(1)), exp(neg(optical)));
    auto weights = mul(transmittance, alpha);  // [R,N]
    auto pix = reduce_sum_axis(scale_rows(feats, weights), 1);
    auto acc = reduce_sum_axis(weights, 1);
    return {pix, acc};
}

std::vector<double> sample_ray_ts(const Ray& ray, int n, Rng* stratified) {
    std::vector<double> ts(static_cast<size_t>(n));
    const double seg = (ray.tf - ray.tn) / n;
    for (int i = 0; i < n; ++i) {
        const double u = stratified ? stratified->uniform() : 0.5;
        ts[size_t(i)] = ray.tn + (i + u) * seg;
    }
    return ts;
}

template <class S>
NerfRender<S> render_rays(const HumanNerfT<S>& nerf, const FeatureVolumeT<S>& vol,
                          TensorT<S> ref_feat_map, const Camera& ref_cam,
                          const BodyState& ref_state, const BodyState& tgt_state,
                          const std::vector<Ray>& rays, int n_samples, Rng* stratified) {
    const int R = int(rays.size());
    std::vector<int> valid_ids;
    for (int r = 0; r < R; ++r)
        if (!rays[size_t(r)].empty()) valid_ids.push_back(r);
    const int Rv = int(valid_ids.size());
    NerfRender<S> out;
    if (Rv == 0) {
        out.feats = TensorT<S>::zeros({R, nerf.cfg.out_ch});
        out.alpha = TensorT<S>::zeros({R});
        return out;
    }

    const int M = Rv * n_samples;
    std::vector<Vec3> xs_c(static_cast<size_t>(M));
    std::vector<Vec3> dirs_c(static_cast<size_t>(M));
    std::vector<int> verts(static_cast<size_t>(M));
    auto deltas = TensorT<S>::zeros({Rv, n_samples});
    for (int i = 0; i < Rv; ++i) {
        const Ray& ray = rays[size_t(valid_ids[size_t(i)])];
        const auto ts = sample_ray_ts(ray, n_samples, stratified);
        const double seg = (ray.tf - ray.tn) / n_samples;
        for (int j = 0; j < n_samples; ++j) {
            const Vec3 p = ray.o + ray.d * ts[size_t(j)];
            const InverseSkin inv = lbs_inverse_ex(p, tgt_state);
            const int m = i * n_samples + j;
            xs_c[size_t(m)] = inv.p_c;
            dirs_c[size_t(m)] = (inv.A_inv * ray.d).normalized();
            verts[size_t(m)] = inv.vertex;
            deltas.data()[m] = S(seg);
        }
    }

    auto pe_p = positional_encoding<S>(xs_c, nerf.cfg.pe_pos);
    auto pe_d = positional_encoding<S>(dirs_c, nerf.cfg.pe_dir);
    auto point_feat = query_point_features(vol, xs_c);
    auto pixel_feat = query_pixel_aligned(ref_feat_map, ref_cam, ref_state, xs_c, verts);
    auto [sigma_flat, feats_flat] = nerf_decode(nerf, pe_p, pe_d, point_feat, pixel_feat);
    auto sigma = reshape(sigma_flat, {Rv, n_samples});
    auto feats = reshape(feats_flat, {Rv, n_samples, nerf.cfg.out_ch});
    auto [pix, acc] = composite_rays(sigma, feats, deltas);

    if (Rv == R) {
        out.feats = pix;
        out.alpha = acc;
        return out;
    }
    // Reassemble with exact zeros for empty rays.
    auto zero_feats = TensorT<S>::zeros({R - Rv, nerf.cfg.out_ch});
    auto zero_alpha = TensorT<S>::zeros({R - Rv, 1});
    std::vector<int> order(static_cast<size_t>(R));
    {
        int zi = Rv;
        std::vector<int> pos_of(size_t(R), -1);
        for (int i = 0; i < Rv; ++i) pos_of[size_t(valid_ids[size_t(i)])] = i;
        for (int r = 0; r < R; ++r) order[size_t(r)] = pos_of[size_t(r)] >= 0 ? pos_of[size_t(r)] : zi++;
    }
    out.feats = gather_rows(concat(std::vector<TensorT<S>>{pix, zero_feats}, 0), order);
    auto acc2 = reshape(acc, {Rv, 1});
    out.alpha =
        reshape(gather_rows(concat(std::vector<TensorT<S>>{acc2, zero_alpha}, 0), order), {R});
    return out;
}

template <class S>
TensorT<S> nerf_loss(TensorT<S> rgb, TensorT<S> alpha, TensorT<S> target, TensorT<S> mask) {
    ADK_CHECK(rgb.shape() == target.shape(), "nerf_loss: rgb ", shape_str(rgb.shape()),
              " vs target ", shape_str(target.shape()));
    ADK_CHECK(alpha.shape() == mask.shape(), "nerf_loss: alpha ", shape_str(alpha.shape()),
              " vs mask ", shape_str(mask.shape()));
    for (int64_t i = 0; i < mask.size(); ++i)
        ADK_CHECK(mask.data()[i] >= S(0) && mask.data()[i] <= S(1),
                  "nerf_loss: mask value outside [0,1]");
    auto mask_hw = reshape(mask, {mask.dim(1), mask.dim(2)});  // broadcasts over channels
    auto masked_target = mul(target, mask_hw);
    auto mse_term = mse(rgb, masked_target);
    auto ssim_term = mul_scalar(add_scalar(neg(ssim_tensor(rgb, masked_target)), 1.0), 0.1);
    auto a = clamp(alpha, 1e-4, 1.0 - 1e-4);
    auto bce = neg(reduce_mean(add(mul(mask, log(a)),
                                   mul(add_scalar(neg(mask), 1.0),
                                       log(add_scalar(neg(a), 1.0))))));
    return add(add(mse_term, ssim_term), bce);
}

template <class S>
std::pair<TensorT<S>, TensorT<S>> render_image(const HumanNerfT<S>& nerf,
                                               const FeatureVolumeT<S>& vol,
                                               TensorT<S> ref_feat_map, const Camera& ref_cam,
                                               const BodyState& ref_state,
                                               const BodyState& tgt_state, const Camera& tgt_cam,
                                               int n_samples, Rng* stratified) {
    const auto rays = cast_rays(tgt_cam, tgt_state.posed_bounds());
    auto rendered = render_rays(nerf, vol, ref_feat_map, ref_cam, ref_state, tgt_state, rays,
                                n_samples, stratified);
    const int H = tgt_cam.height, W = tgt_cam.width;
    auto feats = permute(reshape(rendered.feats, {H, W, nerf.cfg.out_ch}), {2, 0, 1});
    auto alpha = reshape(rendered.alpha, {1, H, W});
    return {feats, alpha};
}

#define ADK_INSTANTIATE_NERF(S)                                                                  \
    template TensorT<S> positional_encoding<S>(const std::vector<Vec3>&, int);                   \
    template struct HumanNerfT<S>;                                                              \
    template FeatureVolumeT<S> build_point_features<S>(const HumanNerfT<S>&, TensorT<S>,         \
                                                       const Camera&, const BodyState&);         \
    template TensorT<S> query_point_features<S>(const FeatureVolumeT<S>&,                        \
                                                const std::vector<Vec3>&);                       \
    template TensorT<S> query_pixel_aligned<S>(TensorT<S>, const Camera&, const BodyState&,      \
                                               const std::vector<Vec3>&,                         \
                                               const std::vector<int>&);                         \
    template std::pair<TensorT<S>, TensorT<S>> nerf_decode<S>(const HumanNerfT<S>&, TensorT<S>,  \
                                                              TensorT<S>, TensorT<S>,            \
                                                              TensorT<S>);                       \
    template std::pair<TensorT<S>, TensorT<S>> composite_rays<S>(TensorT<S>, TensorT<S>,         \
                                                                 TensorT<S>);                    \
    template NerfRender<S> render_rays<S>(const HumanNerfT<S>&, const FeatureVolumeT<S>&,        \
                                          TensorT<S>, const Camera&, const BodyState&,           \
                                          const BodyState&, const std::vector<Ray>&, int, Rng*); \
    template TensorT<S> nerf_loss<S>(TensorT<S>, TensorT<S>, TensorT<S>, TensorT<S>);          \
    template std::pair<TensorT<S>, TensorT<S>> render_image<S>(                                 \
        const HumanNerfT<S>&, const FeatureVolumeT<S>&, TensorT<S>, const Camera&,              \
        const BodyState&, const BodyState&, const Camera&, int, Rng*);

ADK_INSTANTIATE_NERF(float)
ADK_INSTANTIATE_NERF(double)

}  // namespace adk
