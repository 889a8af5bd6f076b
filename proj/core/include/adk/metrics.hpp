#pragma once

#include <string>
#include <vector>

#include "adk/ops.hpp"

namespace adk {

// PSNR on unit dynamic range: 10*log10(1/MSE). A zero-MSE pair reports the
// 99 dB cap with the exact-match flag set.
struct PsnrResult {
    double db = 0;
    bool exact = false;
};
PsnrResult psnr(const Tensor& x, const Tensor& y);

// Differentiable SSIM. Grayscale by channel mean, 7x7 Gaussian window with
// sigma 1.5, C1=0.01^2, C2=0.03^2, mean over valid windows (no padding).
// Inputs are [C,H,W] on unit dynamic range.
template <class S>
TensorT<S> ssim_tensor(TensorT<S> x, TensorT<S> y);

// Scalar convenience wrapper (no taping).
double ssim(const Tensor& x, const Tensor& y);

struct MetricReport {
    std::vector<double> psnr_db, ssim_val, l1;
    std::vector<bool> psnr_exact;
    double mean_psnr = 0, mean_ssim = 0, mean_l1 = 0;
};

// Per-frame PSNR/SSIM/L1 plus means. When masks are given, L1 is restricted
// to mask pixels.
MetricReport evaluate_set(const std::vector<Tensor>& pred, const std::vector<Tensor>& gt,
                          const std::vector<Tensor>* masks = nullptr);

// Writes <prefix>.txt (aligned table) and <prefix>.kv (key=value lines).
void write_report(const std::string& prefix, const MetricReport& report);

}  // namespace adk
