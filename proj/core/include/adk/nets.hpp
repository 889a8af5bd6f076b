#pragma once

#include <utility>
#include <vector>

#include "adk/nerf.hpp"
#include "adk/ops.hpp"
#include "adk/params.hpp"

namespace adk {

struct ModelConfig {
    int latent_ch = 4;
    int latent_res = 16;
    int image_res = 64;
    int base_ch = 32;
    std::vector<int> mults = {1, 2, 4};
    int head_dim = 16;
    int gn_groups = 8;
    int vt_window = 3;
    int temb_dim = 128;
    int summary_dim = 64;
    int vae_base = 24;
    int pose_in_ch = 11;  // 3 normal channels + rendered NeRF features

    int ch(int level) const { return base_ch * mults[size_t(level)]; }
};

// ---- layer primitives ------------------------------------------------------

template <class S>
struct Conv2dL {
    TensorT<S> w, b;
    int stride = 1, pad = 1;
    TensorT<S> fwd(TensorT<S> x) const { return conv2d(x, w, b, stride, pad); }
};

template <class S>
struct LinearL {
    TensorT<S> w, b;  // w is [in, out]
    TensorT<S> fwd(TensorT<S> x) const { return add(matmul(x, w), b); }
};

template <class S>
struct GroupNormL {
    TensorT<S> g, b;
    int groups = 8;
    TensorT<S> fwd(TensorT<S> x) const { return group_norm(x, groups, g, b); }
};

template <class S>
struct LayerNormL {
    TensorT<S> g, b;
    TensorT<S> fwd(TensorT<S> x) const { return layer_norm(x, g, b); }
};

template <class S>
Conv2dL<S> make_conv(ParamStoreT<S>& st, const std::string& name, int cin, int cout, int k,
                     int stride, int pad, bool zero_init = false);
template <class S>
LinearL<S> make_linear(ParamStoreT<S>& st, const std::string& name, int in, int out,
                       bool zero_init = false);
template <class S>
GroupNormL<S> make_gnorm(ParamStoreT<S>& st, const std::string& name, int ch, int groups);
template <class S>
LayerNormL<S> make_lnorm(ParamStoreT<S>& st, const std::string& name, int dim);

// Multi-head attention over token batches: q [B,Tq,C], k/v [B,Tk,C];
// optional additive mask [Tq,Tk]. Softmax rows over keys.
template <class S>
TensorT<S> attend(TensorT<S> q, TensorT<S> k, TensorT<S> v, int heads, TensorT<S> mask);

// ---- blocks ----------------------------------------------------------------

template <class S>
struct ResBlock {
    GroupNormL<S> n1, n2;
    Conv2dL<S> c1, c2;
    LinearL<S> temb_proj;  // undefined tensors when the block is time-free
    Conv2dL<S> skip;
    bool has_skip = false;
    bool has_temb = false;

    TensorT<S> fwd(TensorT<S> x, TensorT<S> temb) const;
};

template <class S>
ResBlock<S> make_resblock(ParamStoreT<S>& st, const std::string& name, int cin, int cout,
                          int groups, int temb_dim /* 0 = none */);

// Spatial attention (self-attention over the frame's tokens concatenated with
// reference tokens), cross-attention against the reference summary embedding,
// and the unified view/temporal attention across frames with a class
// embedding and a zero-initialized output projection.
template <class S>
struct TransBlock {
    int ch = 0, heads = 1, window = 3;
    LayerNormL<S> ln_s;
    LinearL<S> sq, sk, sv, so;
    bool has_cross = false;
    LayerNormL<S> ln_c;
    LinearL<S> cq, ck, cv, co;
    bool has_vt = false;
    LayerNormL<S> ln_v;
    TensorT<S> vt_class;  // [2, ch]
    LinearL<S> vq, vk, vv, vo;  // vo zero-initialized

    // x: [F,C,H,W]; ref_tokens: [Tr,C] or undefined; summary: [1,summary_dim]
    TensorT<S> fwd(TensorT<S> x, TensorT<S> ref_tokens, TensorT<S> summary, int class_id,
                   bool use_vt) const;
};

template <class S>
TransBlock<S> make_transblock(ParamStoreT<S>& st, const std::string& name, int ch, int head_dim,
                              int window, int summary_dim, bool with_cross, bool with_vt);

// Windowed view/temporal attention standalone (exposed for tests): tokens
// attend across the frame axis within |i-j| <= window/2.
template <class S>
TensorT<S> view_temporal_attention(const TransBlock<S>& blk, TensorT<S> x, int class_id);

// ---- denoising UNet --------------------------------------------------------

// Down/mid/up trunk at latent resolution 16 -> 8 -> 4 with attention at the
// two lower resolutions and the middle block. The reference variant runs
// plain self-attention, captures its pre-attention token maps (the feature
// pyramid) and the pooled bottleneck.
template <class S>
struct UNetT {
    ModelConfig cfg;
    bool is_reference = false;

    LinearL<S> temb1, temb2;
    TensorT<S> class_emb;  // [2, temb_dim], main UNet only
    Conv2dL<S> conv_in;
    ResBlock<S> r0;
    Conv2dL<S> down1;
    ResBlock<S> r1;
    TransBlock<S> t1;
    Conv2dL<S> down2;
    ResBlock<S> r2;
    TransBlock<S> t2;
    ResBlock<S> m1;
    TransBlock<S> tm;
    ResBlock<S> m2;
    ResBlock<S> u2;
    TransBlock<S> tu2;
    Conv2dL<S> upc2;
    ResBlock<S> u1;
    TransBlock<S> tu1;
    Conv2dL<S> upc1;
    ResBlock<S> u0;
    GroupNormL<S> out_n;
    Conv2dL<S> out_c;

    static constexpr int kAttentionSites = 5;  // t1, t2, tm, tu2, tu1

    struct Features {
        std::vector<TensorT<S>> tokens;  // per attention site, [T,C]
        TensorT<S> bottleneck_pooled;    // [1, ch(2)]
    };

    // z: [F,latent_ch,h,w]. ref == nullptr runs unconditional self-attention.
    TensorT<S> fwd(TensorT<S> z, int t, int class_id, const Features* ref, TensorT<S> summary,
                   bool use_vt, Features* capture) const;

    TensorT<S> time_embedding(int t, int class_id) const;
};

template <class S>
UNetT<S> make_unet(ParamStoreT<S>& st, const std::string& prefix, const ModelConfig& cfg,
                   bool reference_variant);

// ---- pose encoder / plucker projection / summary head -----------------------

// Four convolutions mapping image-resolution guidance (normals + NeRF render)
// to the latent grid; the final layer starts at zero.
template <class S>
struct PoseEncoderT {
    Conv2dL<S> c1, c2, c3, c4;
    TensorT<S> fwd(TensorT<S> x) const {
        return c4.fwd(silu(c3.fwd(silu(c2.fwd(silu(c1.fwd(x)))))));
    }
};

template <class S>
PoseEncoderT<S> make_pose_encoder(ParamStoreT<S>& st, const std::string& prefix, int in_ch,
                                  int latent_ch);

// ---- VAE --------------------------------------------------------------------

// Factor-4 convolutional autoencoder; the encoder's mean is the latent
// (deterministic variant), log-variance only feeds the KL regularizer.
template <class S>
struct VaeT {
    Conv2dL<S> e_in;
    ResBlock<S> e_r0;
    Conv2dL<S> e_d1;
    ResBlock<S> e_r1;
    Conv2dL<S> e_d2;
    ResBlock<S> e_r2;
    GroupNormL<S> e_n;
    Conv2dL<S> e_out;
    Conv2dL<S> d_in;
    ResBlock<S> d_r2;
    Conv2dL<S> d_u2;
    ResBlock<S> d_r1;
    Conv2dL<S> d_u1;
    ResBlock<S> d_r0;
    GroupNormL<S> d_n;
    Conv2dL<S> d_out;

    // image [.,3,H,W] -> (mu, logvar) each [.,4,H/4,W/4]
    std::pair<TensorT<S>, TensorT<S>> encode_stats(TensorT<S> img) const;
    TensorT<S> encode(TensorT<S> img) const { return encode_stats(img).first; }
    TensorT<S> decode(TensorT<S> z) const;
};

template <class S>
VaeT<S> make_vae(ParamStoreT<S>& st, const std::string& prefix, const ModelConfig& cfg);

// ---- the full conditioned pipeline ------------------------------------------

template <class S>
struct ConditionBundleT {
    typename UNetT<S>::Features ref_features;
    TensorT<S> summary;   // [1, summary_dim]
    TensorT<S> guidance;  // [F, latent_ch, h, w], zeros when the path is off
    TensorT<S> plucker;   // [F, latent_ch, h, w]
    int task_class = 0;   // 0 novel view, 1 novel pose
};

template <class S>
struct PipelineT {
    ModelConfig cfg;
    NerfConfig ncfg;
    ParamStoreT<S> store;
    VaeT<S> vae;
    UNetT<S> unet;
    UNetT<S> refnet;
    PoseEncoderT<S> pose_enc;
    Conv2dL<S> plucker_proj;  // 1x1, 6 -> latent_ch, zero-initialized
    LinearL<S> summary_head;  // bottleneck channels -> summary_dim
    HumanNerfT<S> nerf;

    PipelineT(uint64_t seed, const ModelConfig& mc, const NerfConfig& nc);

    // ReferenceNet pass over the encoded reference latent (t = 0).
    typename UNetT<S>::Features reference_features(TensorT<S> ref_latent) const;
    TensorT<S> summarize(const typename UNetT<S>::Features& feats) const;

    // eps prediction with all conditioning applied.
    TensorT<S> denoise(TensorT<S> z_t, int t, const ConditionBundleT<S>& bundle,
                       bool use_vt) const;

    // Copies every refnet parameter from its unet counterpart (used when
    // seeding conditional training from an unconditional prior).
    void copy_unet_to_refnet();
};

using Pipeline = PipelineT<float>;

}  // namespace adk
