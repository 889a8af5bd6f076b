#include "adk/nets.hpp"

#include <cmath>

namespace adk {

// ---- layer builders ---------------------------------------------------------

template <class S>
Conv2dL<S> make_conv(ParamStoreT<S>& st, const std::string& name, int cin, int cout, int k,
                     int stride, int pad, bool zero_init) {
    Conv2dL<S> c;
    c.stride = stride;
    c.pad = pad;
    c.w = zero_init ? st.zeros(name + ".w", {cout, cin, k, k})
                    : st.he(name + ".w", {cout, cin, k, k}, int64_t(cin) * k * k);
    c.b = st.zeros(name + ".b", {cout});
    return c;
}

template <class S>
LinearL<S> make_linear(ParamStoreT<S>& st, const std::string& name, int in, int out,
                       bool zero_init) {
    LinearL<S> l;
    l.w = zero_init ? st.zeros(name + ".w", {in, out}) : st.he(name + ".w", {in, out}, in);
    l.b = st.zeros(name + ".b", {out});
    return l;
}

template <class S>
GroupNormL<S> make_gnorm(ParamStoreT<S>& st, const std::string& name, int ch, int groups) {
    GroupNormL<S> n;
    n.groups = groups;
    n.g = st.constant(name + ".g", {ch}, 1.0);
    n.b = st.zeros(name + ".b", {ch});
    return n;
}

template <class S>
LayerNormL<S> make_lnorm(ParamStoreT<S>& st, const std::string& name, int dim) {
    LayerNormL<S> n;
    n.g = st.constant(name + ".g", {dim}, 1.0);
    n.b = st.zeros(name + ".b", {dim});
    return n;
}

// ---- attention --------------------------------------------------------------

namespace {

template <class S>
TensorT<S> split_heads(TensorT<S> x, int heads) {
    // [B,T,C] -> [B*heads, T, C/heads]
    const int B = x.dim(0), T = x.dim(1), C = x.dim(2);
    auto y = permute(reshape(x, {B, T, heads, C / heads}), {0, 2, 1, 3});
    return reshape(y, {B * heads, T, C / heads});
}

template <class S>
TensorT<S> merge_heads(TensorT<S> x, int heads) {
    const int BH = x.dim(0), T = x.dim(1), dh = x.dim(2);
    auto y = permute(reshape(x, {BH / heads, heads, T, dh}), {0, 2, 1, 3});
    return reshape(y, {BH / heads, T, heads * dh});
}

}  // namespace

template <class S>
TensorT<S> attend(TensorT<S> q, TensorT<S> k, TensorT<S> v, int heads, TensorT<S> mask) {
    ADK_CHECK(q.ndim() == 3 && k.ndim() == 3 && v.ndim() == 3, "attend: tokens must be 3D");
    ADK_CHECK(q.dim(2) == k.dim(2) && k.shape() == v.shape(), "attend: q ",
              shape_str(q.shape()), " k ", shape_str(k.shape()), " v ", shape_str(v.shape()));
    ADK_CHECK(q.dim(2) % heads == 0, "attend: dim ", q.dim(2), " not divisible by ", heads,
              " heads");
    const int dh = q.dim(2) / heads;
    auto qh = split_heads(q, heads);
    auto kh = split_heads(k, heads);
    auto vh = split_heads(v, heads);
    auto logits = mul_scalar(matmul(qh, permute(kh, {0, 2, 1})), 1.0 / std::sqrt(double(dh)));
    if (mask.defined()) logits = add(logits, mask);
    auto att = softmax(logits);
    return merge_heads(matmul(att, vh), heads);
}

// ---- blocks -----------------------------------------------------------------

template <class S>
TensorT<S> ResBlock<S>::fwd(TensorT<S> x, TensorT<S> temb) const {
    auto h = c1.fwd(silu(n1.fwd(x)));
    if (has_temb && temb.defined()) {
        auto shift = temb_proj.fwd(reshape(temb, {1, int(temb.size())}));
        h = add_channel_bias(h, reshape(shift, {shift.dim(1)}));
    }
    h = c2.fwd(silu(n2.fwd(h)));
    return add(h, has_skip ? skip.fwd(x) : x);
}

template <class S>
ResBlock<S> make_resblock(ParamStoreT<S>& st, const std::string& name, int cin, int cout,
                          int groups, int temb_dim) {
    ResBlock<S> r;
    r.n1 = make_gnorm(st, name + ".n1", cin, groups);
    r.c1 = make_conv(st, name + ".c1", cin, cout, 3, 1, 1);
    r.n2 = make_gnorm(st, name + ".n2", cout, groups);
    r.c2 = make_conv(st, name + ".c2", cout, cout, 3, 1, 1);
    r.has_temb = temb_dim > 0;
    if (r.has_temb) r.temb_proj = make_linear(st, name + ".temb", temb_dim, cout);
    r.has_skip = cin != cout;
    if (r.has_skip) r.skip = make_conv(st, name + ".skip", cin, cout, 1, 1, 0);
    return r;
}

namespace {

template <class S>
TensorT<S> map_to_tokens(TensorT<S> x) {  // [F,C,H,W] -> [F,T,C]
    const int F = x.dim(0), C = x.dim(1), T = x.dim(2) * x.dim(3);
    return permute(reshape(x, {F, C, T}), {0, 2, 1});
}

template <class S>
TensorT<S> tokens_to_map(TensorT<S> t, int H, int W) {  // [F,T,C] -> [F,C,H,W]
    const int F = t.dim(0), C = t.dim(2);
    return reshape(permute(t, {0, 2, 1}), {F, C, H, W});
}

}  // namespace

template <class S>
TensorT<S> view_temporal_attention(const TransBlock<S>& blk, TensorT<S> x, int class_id) {
    ADK_CHECK(blk.window >= 1, "view_temporal_attention: window must be >= 1, got ", blk.window);
    ADK_CHECK(x.ndim() == 3, "view_temporal_attention: tokens must be [F,T,C]");
    const int F = x.dim(0);
    auto y = permute(x, {1, 0, 2});  // [T,F,C]
    auto cls = reshape(gather_rows(blk.vt_class, {class_id}), {blk.ch});
    auto n = blk.ln_v.fwd(add(y, cls));
    TensorT<S> mask;
    const int reach = blk.window / 2;
    mask = TensorT<S>::zeros({F, F});
    for (int i = 0; i < F; ++i)
        for (int j = 0; j < F; ++j)
            if (std::abs(i - j) > reach) mask.data()[i * F + j] = S(-1e9);
    auto att = attend(blk.vq.fwd(n), blk.vk.fwd(n), blk.vv.fwd(n), blk.heads, mask);
    auto out = permute(blk.vo.fwd(att), {1, 0, 2});  // back to [F,T,C]
    return add(x, out);
}

template <class S>
TensorT<S> TransBlock<S>::fwd(TensorT<S> x, TensorT<S> ref_tokens, TensorT<S> summary,
                              int class_id, bool use_vt) const {
    const int F = x.dim(0), H = x.dim(2), W = x.dim(3);
    ADK_CHECK(x.dim(1) == ch, "trans block: channels ", x.dim(1), " vs ", ch);
    if (ref_tokens.defined())
        ADK_CHECK(ref_tokens.ndim() == 2 && ref_tokens.dim(1) == ch,
                  "trans block: reference tokens ", shape_str(ref_tokens.shape()),
                  " do not match block channels ", ch, " (resolution mismatch)");
    auto tokens = map_to_tokens(x);  // [F,T,C]
    std::vector<TensorT<S>> frames;
    for (int f = 0; f < F; ++f) {
        auto xf = slice(tokens, 0, f, 1);  // [1,T,C]
        auto normed = ln_s.fwd(xf);
        auto kv_in = normed;
        if (ref_tokens.defined()) {
            auto nref = reshape(ln_s.fwd(ref_tokens), {1, ref_tokens.dim(0), ch});
            kv_in = concat(std::vector<TensorT<S>>{normed, nref}, 1);
        }
        auto att = attend(sq.fwd(normed), sk.fwd(kv_in), sv.fwd(kv_in), heads, TensorT<S>());
        xf = add(xf, so.fwd(att));
        if (has_cross && summary.defined()) {
            auto qn = ln_c.fwd(xf);
            auto kt = reshape(ck.fwd(summary), {1, 1, ch});
            auto vt = reshape(cv.fwd(summary), {1, 1, ch});
            auto catt = attend(cq.fwd(qn), kt, vt, heads, TensorT<S>());
            xf = add(xf, co.fwd(catt));
        }
        frames.push_back(xf);
    }
    auto out = F == 1 ? frames[0] : concat(frames, 0);
    if (has_vt && use_vt) out = view_temporal_attention(*this, out, class_id);
    return tokens_to_map(out, H, W);
}

template <class S>
TransBlock<S> make_transblock(ParamStoreT<S>& st, const std::string& name, int ch, int head_dim,
                              int window, int summary_dim, bool with_cross, bool with_vt) {
    TransBlock<S> b;
    b.ch = ch;
    b.heads = std::max(1, ch / head_dim);
    b.window = window;
    b.ln_s = make_lnorm(st, name + ".ln_s", ch);
    b.sq = make_linear(st, name + ".sq", ch, ch);
    b.sk = make_linear(st, name + ".sk", ch, ch);
    b.sv = make_linear(st, name + ".sv", ch, ch);
    b.so = make_linear(st, name + ".so", ch, ch);
    b.has_cross = with_cross;
    if (with_cross) {
        b.ln_c = make_lnorm(st, name + ".ln_c", ch);
        b.cq = make_linear(st, name + ".cq", ch, ch);
        b.ck = make_linear(st, name + ".ck", summary_dim, ch);
        b.cv = make_linear(st, name + ".cv", summary_dim, ch);
        b.co = make_linear(st, name + ".co", ch, ch);
    }
    b.has_vt = with_vt;
    if (with_vt) {
        b.ln_v = make_lnorm(st, name + ".vt.ln", ch);
        b.vt_class = st.randn(name + ".vt.class", {2, ch}, 0.02);
        b.vq = make_linear(st, name + ".vt.q", ch, ch);
        b.vk = make_linear(st, name + ".vt.k", ch, ch);
        b.vv = make_linear(st, name + ".vt.v", ch, ch);
        b.vo = make_linear(st, name + ".vt.o", ch, ch, /*zero_init=*/true);
    }
    return b;
}

// ---- UNet -------------------------------------------------------------------

template <class S>
TensorT<S> UNetT<S>::time_embedding(int t, int class_id) const {
    const int D = cfg.temb_dim;
    const int half = D / 2;
    auto pe = TensorT<S>::zeros({1, D});
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * double(i) / double(half - 1));
        pe.data()[i] = S(std::sin(t * freq));
        pe.data()[half + i] = S(std::cos(t * freq));
    }
    auto h = temb2.fwd(silu(temb1.fwd(pe)));  // [1,D]
    if (class_emb.defined()) h = add(h, gather_rows(class_emb, {class_id}));
    return reshape(h, {D});
}

template <class S>
TensorT<S> UNetT<S>::fwd(TensorT<S> z, int t, int class_id, const Features* ref,
                         TensorT<S> summary, bool use_vt, Features* capture) const {
    ADK_CHECK(z.ndim() == 4 && z.dim(1) == cfg.latent_ch && z.dim(2) == cfg.latent_res &&
                  z.dim(3) == cfg.latent_res,
              "unet: latent ", shape_str(z.shape()), " does not match config [F,", cfg.latent_ch,
              ",", cfg.latent_res, ",", cfg.latent_res, "]");
    if (ref)
        ADK_CHECK(int(ref->tokens.size()) == kAttentionSites,
                  "unet: reference pyramid has ", ref->tokens.size(), " levels, want ",
                  kAttentionSites);
    auto temb = time_embedding(t, class_id);
    auto ref_at = [&](int site) { return ref ? ref->tokens[size_t(site)] : TensorT<S>(); };
    auto cap = [&](int site, TensorT<S> h) {
        if (capture) capture->tokens[size_t(site)] = reshape(map_to_tokens(h), {h.dim(2) * h.dim(3), h.dim(1)});
    };

    auto h = conv_in.fwd(z);
    auto h0 = r0.fwd(h, temb);
    auto h1 = r1.fwd(down1.fwd(h0), temb);
    cap(0, h1);
    h1 = t1.fwd(h1, ref_at(0), summary, class_id, use_vt);
    auto h2 = r2.fwd(down2.fwd(h1), temb);
    cap(1, h2);
    h2 = t2.fwd(h2, ref_at(1), summary, class_id, use_vt);
    auto m = m1.fwd(h2, temb);
    cap(2, m);
    m = m2.fwd(tm.fwd(m, ref_at(2), summary, class_id, use_vt), temb);
    if (capture) {
        // pooled bottleneck: mean over frames and spatial positions per channel
        auto pooled = reduce_mean_axis(reduce_mean_axis(reshape(m, {m.dim(0), m.dim(1), m.dim(2) * m.dim(3)}), 2), 0);
        capture->bottleneck_pooled = reshape(pooled, {1, m.dim(1)});
    }
    auto u = u2.fwd(concat(std::vector<TensorT<S>>{m, h2}, 1), temb);
    cap(3, u);
    u = tu2.fwd(u, ref_at(3), summary, class_id, use_vt);
    u = upc2.fwd(resize_bilinear(u, cfg.latent_res / 2, cfg.latent_res / 2));
    u = u1.fwd(concat(std::vector<TensorT<S>>{u, h1}, 1), temb);
    cap(4, u);
    u = tu1.fwd(u, ref_at(4), summary, class_id, use_vt);
    u = upc1.fwd(resize_bilinear(u, cfg.latent_res, cfg.latent_res));
    u = u0.fwd(concat(std::vector<TensorT<S>>{u, h0}, 1), temb);
    return out_c.fwd(silu(out_n.fwd(u)));
}

template <class S>
UNetT<S> make_unet(ParamStoreT<S>& st, const std::string& prefix, const ModelConfig& cfg,
                   bool reference_variant) {
    UNetT<S> u;
    u.cfg = cfg;
    u.is_reference = reference_variant;
    const int c0 = cfg.ch(0), c1 = cfg.ch(1), c2 = cfg.ch(2);
    const int g = cfg.gn_groups, td = cfg.temb_dim;
    const bool cross = !reference_variant;
    const bool vt = !reference_variant;
    u.temb1 = make_linear(st, prefix + "temb1", td, td);
    u.temb2 = make_linear(st, prefix + "temb2", td, td);
    if (!reference_variant) u.class_emb = st.randn(prefix + "class_emb", {2, td}, 0.02);
    u.conv_in = make_conv(st, prefix + "conv_in", cfg.latent_ch, c0, 3, 1, 1);
    u.r0 = make_resblock(st, prefix + "r0", c0, c0, g, td);
    u.down1 = make_conv(st, prefix + "down1", c0, c1, 3, 2, 1);
    u.r1 = make_resblock(st, prefix + "r1", c1, c1, g, td);
    u.t1 = make_transblock(st, prefix + "t1", c1, cfg.head_dim, cfg.vt_window, cfg.summary_dim,
                           cross, vt);
    u.down2 = make_conv(st, prefix + "down2", c1, c2, 3, 2, 1);
    u.r2 = make_resblock(st, prefix + "r2", c2, c2, g, td);
    u.t2 = make_transblock(st, prefix + "t2", c2, cfg.head_dim, cfg.vt_window, cfg.summary_dim,
                           cross, vt);
    u.m1 = make_resblock(st, prefix + "m1", c2, c2, g, td);
    u.tm = make_transblock(st, prefix + "tm", c2, cfg.head_dim, cfg.vt_window, cfg.summary_dim,
                           cross, vt);
    u.m2 = make_resblock(st, prefix + "m2", c2, c2, g, td);
    u.u2 = make_resblock(st, prefix + "u2", 2 * c2, c2, g, td);
    u.tu2 = make_transblock(st, prefix + "tu2", c2, cfg.head_dim, cfg.vt_window, cfg.summary_dim,
                            cross, vt);
    u.upc2 = make_conv(st, prefix + "upc2", c2, c1, 3, 1, 1);
    u.u1 = make_resblock(st, prefix + "u1", 2 * c1, c1, g, td);
    u.tu1 = make_transblock(st, prefix + "tu1", c1, cfg.head_dim, cfg.vt_window, cfg.summary_dim,
                            cross, vt);
    u.upc1 = make_conv(st, prefix + "upc1", c1, c0, 3, 1, 1);
    u.u0 = make_resblock(st, prefix + "u0", 2 * c0, c0, g, td);
    u.out_n = make_gnorm(st, prefix + "out_n", c0, g);
    u.out_c = make_conv(st, prefix + "out_c", c0, cfg.latent_ch, 3, 1, 1);
    return u;
}

template <class S>
PoseEncoderT<S> make_pose_encoder(ParamStoreT<S>& st, const std::string& prefix, int in_ch,
                                  int latent_ch) {
    PoseEncoderT<S> p;
    p.c1 = make_conv(st, prefix + "c1", in_ch, 16, 3, 1, 1);
    p.c2 = make_conv(st, prefix + "c2", 16, 32, 3, 2, 1);
    p.c3 = make_conv(st, prefix + "c3", 32, 32, 3, 2, 1);
    p.c4 = make_conv(st, prefix + "c4", 32, latent_ch, 3, 1, 1, /*zero_init=*/true);
    return p;
}

// ---- VAE --------------------------------------------------------------------

template <class S>
std::pair<TensorT<S>, TensorT<S>> VaeT<S>::encode_stats(TensorT<S> img) const {
    ADK_CHECK(img.ndim() == 3 || img.ndim() == 4, "vae encode: image must be [3,H,W] or "
              "[N,3,H,W], got ", shape_str(img.shape()));
    const int H = img.dim(img.ndim() - 2), W = img.dim(img.ndim() - 1);
    ADK_CHECK(H % 4 == 0 && W % 4 == 0, "vae encode: resolution ", H, "x", W,
              " not divisible by 4");
    auto h = e_in.fwd(img);
    h = e_r0.fwd(h, TensorT<S>());
    h = e_r1.fwd(e_d1.fwd(h), TensorT<S>());
    h = e_r2.fwd(e_d2.fwd(h), TensorT<S>());
    auto stats = e_out.fwd(silu(e_n.fwd(h)));
    const int ch_axis = stats.ndim() - 3;
    const int lc = stats.dim(ch_axis) / 2;
    return {slice(stats, ch_axis, 0, lc), slice(stats, ch_axis, lc, lc)};
}

template <class S>
TensorT<S> VaeT<S>::decode(TensorT<S> z) const {
    ADK_CHECK(z.ndim() == 3 || z.ndim() == 4, "vae decode: latent must be [4,h,w] or [N,4,h,w]");
    const int h0 = z.dim(z.ndim() - 2), w0 = z.dim(z.ndim() - 1);
    auto h = d_in.fwd(z);
    h = d_r2.fwd(h, TensorT<S>());
    h = d_u2.fwd(resize_bilinear(h, h0 * 2, w0 * 2));
    h = d_r1.fwd(h, TensorT<S>());
    h = d_u1.fwd(resize_bilinear(h, h0 * 4, w0 * 4));
    h = d_r0.fwd(h, TensorT<S>());
    return sigmoid(d_out.fwd(silu(d_n.fwd(h))));
}

template <class S>
VaeT<S> make_vae(ParamStoreT<S>& st, const std::string& prefix, const ModelConfig& cfg) {
    VaeT<S> v;
    const int b = cfg.vae_base, b2 = (cfg.vae_base * 4) / 3, b3 = cfg.vae_base * 2;
    const int g = 8;
    v.e_in = make_conv(st, prefix + "e_in", 3, b, 3, 1, 1);
    v.e_r0 = make_resblock(st, prefix + "e_r0", b, b, g, 0);
    v.e_d1 = make_conv(st, prefix + "e_d1", b, b2, 3, 2, 1);
    v.e_r1 = make_resblock(st, prefix + "e_r1", b2, b2, g, 0);
    v.e_d2 = make_conv(st, prefix + "e_d2", b2, b3, 3, 2, 1);
    v.e_r2 = make_resblock(st, prefix + "e_r2", b3, b3, g, 0);
    v.e_n = make_gnorm(st, prefix + "e_n", b3, g);
    v.e_out = make_conv(st, prefix + "e_out", b3, 2 * cfg.latent_ch, 3, 1, 1);
    v.d_in = make_conv(st, prefix + "d_in", cfg.latent_ch, b3, 3, 1, 1);
    v.d_r2 = make_resblock(st, prefix + "d_r2", b3, b3, g, 0);
    v.d_u2 = make_conv(st, prefix + "d_u2", b3, b2, 3, 1, 1);
    v.d_r1 = make_resblock(st, prefix + "d_r1", b2, b2, g, 0);
    v.d_u1 = make_conv(st, prefix + "d_u1", b2, b, 3, 1, 1);
    v.d_r0 = make_resblock(st, prefix + "d_r0", b, b, g, 0);
    v.d_n = make_gnorm(st, prefix + "d_n", b, g);
    v.d_out = make_conv(st, prefix + "d_out", b, 3, 3, 1, 1);
    return v;
}

// ---- pipeline ---------------------------------------------------------------

template <class S>
PipelineT<S>::PipelineT(uint64_t seed, const ModelConfig& mc, const NerfConfig& nc)
    : cfg(mc), ncfg(nc), store(seed) {
    vae = make_vae(store, "vae.", cfg);
    unet = make_unet(store, "unet.", cfg, false);
    refnet = make_unet(store, "refnet.", cfg, true);
    pose_enc = make_pose_encoder<S>(store, "pose.", cfg.pose_in_ch, cfg.latent_ch);
    plucker_proj = make_conv(store, "plucker.proj", 6, cfg.latent_ch, 1, 1, 0,
                             /*zero_init=*/true);
    summary_head = make_linear(store, "summary.head", cfg.ch(2), cfg.summary_dim);
    nerf = HumanNerfT<S>(store, ncfg, "nerf.");
}

template <class S>
typename UNetT<S>::Features PipelineT<S>::reference_features(TensorT<S> ref_latent) const {
    typename UNetT<S>::Features feats;
    feats.tokens.resize(UNetT<S>::kAttentionSites);
    auto z = ref_latent.ndim() == 3
                 ? reshape(ref_latent, {1, ref_latent.dim(0), ref_latent.dim(1), ref_latent.dim(2)})
                 : ref_latent;
    refnet.fwd(z, 0, 0, nullptr, TensorT<S>(), false, &feats);
    return feats;
}

template <class S>
TensorT<S> PipelineT<S>::summarize(const typename UNetT<S>::Features& feats) const {
    return summary_head.fwd(feats.bottleneck_pooled);  // [1, summary_dim]
}

template <class S>
TensorT<S> PipelineT<S>::denoise(TensorT<S> z_t, int t, const ConditionBundleT<S>& bundle,
                                 bool use_vt) const {
    ADK_CHECK(bundle.guidance.shape() == z_t.shape(), "denoise: guidance ",
              shape_str(bundle.guidance.shape()), " vs latent ", shape_str(z_t.shape()));
    ADK_CHECK(bundle.plucker.shape() == z_t.shape(), "denoise: plucker latent ",
              shape_str(bundle.plucker.shape()), " vs latent ", shape_str(z_t.shape()));
    auto x = add(add(z_t, bundle.guidance), bundle.plucker);
    return unet.fwd(x, t, bundle.task_class, &bundle.ref_features, bundle.summary, use_vt,
                    nullptr);
}

template <class S>
void PipelineT<S>::copy_unet_to_refnet() {
    auto& params = store.params();
    for (auto& [name, tensor] : params) {
        if (name.rfind("refnet.", 0) != 0) continue;
        const std::string src_name = "unet." + name.substr(7);
        auto it = params.find(src_name);
        if (it == params.end()) continue;
        if (it->second.shape() != tensor.shape()) continue;
        for (int64_t i = 0; i < tensor.size(); ++i) tensor.data()[i] = it->second.data()[i];
    }
}

// ---- instantiation ----------------------------------------------------------

#define ADK_INSTANTIATE_NETS(S)                                                                \
    template Conv2dL<S> make_conv<S>(ParamStoreT<S>&, const std::string&, int, int, int, int, \
                                     int, bool);                                              \
    template LinearL<S> make_linear<S>(ParamStoreT<S>&, const std::string&, int, int, bool);  \
    template GroupNormL<S> make_gnorm<S>(ParamStoreT<S>&, const std::string&, int, int);      \
    template LayerNormL<S> make_lnorm<S>(ParamStoreT<S>&, const std::string&, int);           \
    template TensorT<S> attend<S>(TensorT<S>, TensorT<S>, TensorT<S>, int, TensorT<S>);       \
    template struct ResBlock<S>;                                                              \
    template ResBlock<S> make_resblock<S>(ParamStoreT<S>&, const std::string&, int, int, int, \
                                          int);                                               \
    template struct TransBlock<S>;                                                            \
    template TransBlock<S> make_transblock<S>(ParamStoreT<S>&, const std::string&, int, int,  \
                                              int, int, bool, bool);                          \
    template TensorT<S> view_temporal_attention<S>(const TransBlock<S>&, TensorT<S>, int);    \
    template struct UNetT<S>;                                                                 \
    template UNetT<S> make_unet<S>(ParamStoreT<S>&, const std::string&, const ModelConfig&,   \
                                   bool);                                                     \
    template struct PoseEncoderT<S>;                                                          \
    template PoseEncoderT<S> make_pose_encoder<S>(ParamStoreT<S>&, const std::string&, int,   \
                                                  int);                                       \
    template struct VaeT<S>;                                                                  \
    template VaeT<S> make_vae<S>(ParamStoreT<S>&, const std::string&, const ModelConfig&);    \
    template struct PipelineT<S>;

ADK_INSTANTIATE_NETS(float)
ADK_INSTANTIATE_NETS(double)

}  // namespace adk
