#pragma once

#include <string>
#include <vector>

#include "adk/metrics.hpp"
#include "adk/ops.hpp"

namespace adk {

// Forward-process schedule. alpha_bar is the running product of alpha; the
// image-loss weight w_t = alpha_bar_t decays with t, vanishing exactly where
// the one-step clean-latent estimate degrades.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> alpha, alpha_bar, w;

    // Linear beta ramp (classic DDPM): beta from beta0 to beta1 over T steps.
    static NoiseSchedule linear(int T = 1000, double beta0 = 1e-4, double beta1 = 0.02);

    double a(int t) const {  // alpha_t, t in [1,T]
        ADK_CHECK(t >= 1 && t <= T, "schedule: step ", t, " outside [1,", T, "]");
        return alpha[size_t(t - 1)];
    }
    double abar(int t) const {
        ADK_CHECK(t >= 1 && t <= T, "schedule: step ", t, " outside [1,", T, "]");
        return alpha_bar[size_t(t - 1)];
    }
    double wt(int t) const {
        ADK_CHECK(t >= 1 && t <= T, "schedule: step ", t, " outside [1,", T, "]");
        return w[size_t(t - 1)];
    }

    // Audit table: one "t alpha alpha_bar w" row per step.
    void dump(const std::string& path) const;
};

struct LossWeights {
    double lambda1 = 0.1;  // image-space term
    double lambda2 = 1.0;  // NeRF term
};

// One forward step (Eq. of the diffusion chain):
// z_t = sqrt(alpha_t) z_{t-1} + sqrt(1-alpha_t) eps
template <class S>
TensorT<S> diffuse_step(TensorT<S> z_prev, double alpha_t, TensorT<S> eps);

// Closed-form marginal: z_t = sqrt(abar_t) z_0 + sqrt(1-abar_t) eps
template <class S>
TensorT<S> diffuse_marginal(TensorT<S> z0, const NoiseSchedule& ns, int t, TensorT<S> eps);

// Plain MSE between predicted and true noise.
template <class S>
TensorT<S> loss_diff_latent(TensorT<S> eps_pred, TensorT<S> eps);

// One-step clean-latent estimate
// z~0 = z_0 + sqrt(1-abar)/sqrt(abar) (eps - eps_pred). When abar_t < 1e-6
// the denominator is clamped and *clamped is set.
template <class S>
TensorT<S> z0_tilde(TensorT<S> z_t, const NoiseSchedule& ns, int t, TensorT<S> eps,
                    TensorT<S> eps_pred, bool* clamped = nullptr);

// w_t [ MSE(decoded, target) + 0.2 (1 - SSIM) ]
template <class S>
TensorT<S> loss_diff_img(TensorT<S> decoded, TensorT<S> target, const NoiseSchedule& ns, int t);

// latent + lambda1 * img + lambda2 * nerf; aborts on a non-finite term,
// naming it.
template <class S>
TensorT<S> total_loss(TensorT<S> latent_term, TensorT<S> img_term, TensorT<S> nerf_term,
                      const LossWeights& lw);

// Ancestral DDPM sampling over an evenly strided subset of the schedule.
// model(z_t, t) predicts the noise. Deterministic for a fixed seed.
template <class S, class ModelFn>
TensorT<S> ddpm_sample(ModelFn&& model, Shape shape, const NoiseSchedule& ns, int steps,
                       uint64_t seed) {
    ADK_CHECK(steps >= 1 && steps <= ns.T, "ddpm_sample: steps ", steps, " outside [1,", ns.T,
              "]");
    NoGrad ng;
    Rng rng(Rng::mix(seed, 0xddbb55u));
    auto z = TensorT<S>::randn(shape, rng);
    // strided step ladder T = t_K > ... > t_1
    std::vector<int> ladder;
    for (int k = 0; k < steps; ++k) {
        int t = int(std::lround(double(ns.T) * (steps - k) / steps));
        ladder.push_back(std::max(1, t));
    }
    for (size_t k = 0; k < ladder.size(); ++k) {
        const int t = ladder[k];
        const int s = (k + 1 < ladder.size()) ? ladder[k + 1] : 0;  // next (smaller) step
        TensorT<S> eps_pred = model(z, t);
        ADK_CHECK(eps_pred.shape() == z.shape(), "ddpm_sample: model output ",
                  shape_str(eps_pred.shape()), " vs latent ", shape_str(z.shape()));
        for (int64_t i = 0; i < eps_pred.size(); ++i)
            ADK_CHECK(std::isfinite(double(eps_pred.data()[i])),
                      "ddpm_sample: model output NaN at step t=", t);
        const double ab_t = ns.abar(t);
        const double ab_s = s >= 1 ? ns.abar(s) : 1.0;
        // posterior q(z_s | z_t, z0_hat) for the strided chain
        const double a_ts = ab_t / ab_s;
        auto z0_hat = mul_scalar(sub(z, mul_scalar(eps_pred, std::sqrt(1.0 - ab_t))),
                                 1.0 / std::sqrt(ab_t));
        const double denom = 1.0 - ab_t;
        const double mean_z_coef = std::sqrt(a_ts) * (1.0 - ab_s) / denom;
        const double mean_z0_coef = std::sqrt(ab_s) * (1.0 - a_ts) / denom;
        auto mean = add(mul_scalar(z, mean_z_coef), mul_scalar(z0_hat, mean_z0_coef));
        if (s >= 1) {
            const double var = (1.0 - a_ts) * (1.0 - ab_s) / denom;
            auto noise = TensorT<S>::randn(shape, rng);
            z = add(mean, mul_scalar(noise, std::sqrt(std::max(0.0, var))));
        } else {
            z = mean;  // final step is deterministic
        }
    }
    return z;
}

}  // namespace adk
