#include "adk/diffusion.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

namespace adk {

NoiseSchedule NoiseSchedule::linear(int T, double beta0, double beta1) {
    ADK_CHECK(T >= 1, "schedule: T must be positive");
    ADK_CHECK(beta0 > 0 && beta1 < 1 && beta0 <= beta1, "schedule: bad beta range [", beta0, ",",
              beta1, "]");
    NoiseSchedule ns;
    ns.T = T;
    ns.alpha.resize(size_t(T));
    ns.alpha_bar.resize(size_t(T));
    ns.w.resize(size_t(T));
    double prod = 1.0;
    for (int t = 0; t < T; ++t) {
        const double beta = T == 1 ? beta0 : beta0 + (beta1 - beta0) * double(t) / double(T - 1);
        ns.alpha[size_t(t)] = 1.0 - beta;
        prod *= ns.alpha[size_t(t)];
        ns.alpha_bar[size_t(t)] = prod;
        ns.w[size_t(t)] = prod;  // decays with t
    }
    return ns;
}

void NoiseSchedule::dump(const std::string& path) const {
    std::ofstream f(path);
    ADK_CHECK(bool(f), "schedule dump: cannot open ", path);
    f << "# t alpha alpha_bar w\n" << std::setprecision(12);
    for (int t = 1; t <= T; ++t)
        f << t << ' ' << a(t) << ' ' << abar(t) << ' ' << wt(t) << '\n';
}

template <class S>
TensorT<S> diffuse_step(TensorT<S> z_prev, double alpha_t, TensorT<S> eps) {
    ADK_CHECK(alpha_t > 0 && alpha_t < 1, "diffuse_step: alpha_t must be in (0,1), got ",
              alpha_t);
    ADK_CHECK(eps.shape() == z_prev.shape(), "diffuse_step: eps ", shape_str(eps.shape()),
              " vs z ", shape_str(z_prev.shape()));
    return add(mul_scalar(z_prev, std::sqrt(alpha_t)), mul_scalar(eps, std::sqrt(1.0 - alpha_t)));
}

template <class S>
TensorT<S> diffuse_marginal(TensorT<S> z0, const NoiseSchedule& ns, int t, TensorT<S> eps) {
    ADK_CHECK(t >= 1 && t <= ns.T, "diffuse_marginal: t=", t, " outside [1,", ns.T, "]");
    ADK_CHECK(eps.shape() == z0.shape(), "diffuse_marginal: eps ", shape_str(eps.shape()),
              " vs z0 ", shape_str(z0.shape()));
    const double ab = ns.abar(t);
    return add(mul_scalar(z0, std::sqrt(ab)), mul_scalar(eps, std::sqrt(1.0 - ab)));
}

template <class S>
TensorT<S> loss_diff_latent(TensorT<S> eps_pred, TensorT<S> eps) {
    ADK_CHECK(eps_pred.shape() == eps.shape(), "loss_diff_latent: ",
              shape_str(eps_pred.shape()), " vs ", shape_str(eps.shape()));
    return mse(eps_pred, eps);
}

template <class S>
TensorT<S> z0_tilde(TensorT<S> z_t, const NoiseSchedule& ns, int t, TensorT<S> eps,
                    TensorT<S> eps_pred, bool* clamped) {
    ADK_CHECK(t >= 1 && t <= ns.T, "z0_tilde: t=", t, " outside [1,", ns.T, "]");
    double ab = ns.abar(t);
    if (clamped) *clamped = false;
    if (ab < 1e-6) {
        ab = 1e-6;
        if (clamped) *clamped = true;
    }
    const double ratio = std::sqrt(1.0 - ab) / std::sqrt(ab);
    // z0 recovered from (z_t, eps), then the prediction-gap correction
    auto z0 = mul_scalar(sub(z_t, mul_scalar(eps, std::sqrt(1.0 - ab))), 1.0 / std::sqrt(ab));
    return add(z0, mul_scalar(sub(eps, eps_pred), ratio));
}

template <class S>
TensorT<S> loss_diff_img(TensorT<S> decoded, TensorT<S> target, const NoiseSchedule& ns, int t) {
    ADK_CHECK(decoded.shape() == target.shape(), "loss_diff_img: decoded ",
              shape_str(decoded.shape()), " vs target ", shape_str(target.shape()));
    auto mse_term = mse(decoded, target);
    auto ssim_term = mul_scalar(add_scalar(neg(ssim_tensor(decoded, target)), 1.0), 0.2);
    return mul_scalar(add(mse_term, ssim_term), ns.wt(t));
}

template <class S>
TensorT<S> total_loss(TensorT<S> latent_term, TensorT<S> img_term, TensorT<S> nerf_term,
                      const LossWeights& lw) {
    const char* names[3] = {"diff-latent", "diff-img", "nerf"};
    const TensorT<S>* terms[3] = {&latent_term, &img_term, &nerf_term};
    for (int i = 0; i < 3; ++i) {
        ADK_CHECK(terms[i]->size() == 1, "total_loss: ", names[i], " term is not scalar");
        ADK_CHECK(std::isfinite(double(terms[i]->data()[0])), "total_loss: ", names[i],
                  " term is not finite");
    }
    return add(latent_term,
               add(mul_scalar(img_term, lw.lambda1), mul_scalar(nerf_term, lw.lambda2)));
}

#define ADK_INSTANTIATE_DIFFUSION(S)                                                          \
    template TensorT<S> diffuse_step<S>(TensorT<S>, double, TensorT<S>);                      \
    template TensorT<S> diffuse_marginal<S>(TensorT<S>, const NoiseSchedule&, int,            \
                                            TensorT<S>);                                      \
    template TensorT<S> loss_diff_latent<S>(TensorT<S>, TensorT<S>);                          \
    template TensorT<S> z0_tilde<S>(TensorT<S>, const NoiseSchedule&, int, TensorT<S>,        \
                                    TensorT<S>, bool*);                                       \
    template TensorT<S> loss_diff_img<S>(TensorT<S>, TensorT<S>, const NoiseSchedule&, int);  \
    template TensorT<S> total_loss<S>(TensorT<S>, TensorT<S>, TensorT<S>, const LossWeights&);

ADK_INSTANTIATE_DIFFUSION(float)
ADK_INSTANTIATE_DIFFUSION(double)

}  // namespace adk
