#include "adk/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

namespace adk {

PsnrResult psnr(const Tensor& x, const Tensor& y) {
    ADK_CHECK(x.shape() == y.shape(), "psnr: shapes ", shape_str(x.shape()), " vs ",
              shape_str(y.shape()));
    double acc = 0;
    for (int64_t i = 0; i < x.size(); ++i) {
        const double d = double(x.data()[i]) - double(y.data()[i]);
        acc += d * d;
    }
    const double mse = acc / double(x.size());
    if (mse == 0.0) return {99.0, true};
    return {10.0 * std::log10(1.0 / mse), false};
}

namespace {

template <class S>
TensorT<S> gaussian_window7() {
    const double sigma = 1.5;
    double k[7];
    double sum = 0;
    for (int i = 0; i < 7; ++i) {
        const double d = i - 3;
        k[i] = std::exp(-d * d / (2 * sigma * sigma));
        sum += k[i];
    }
    std::vector<S> w(49);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) w[size_t(i * 7 + j)] = S(k[i] * k[j] / (sum * sum));
    return TensorT<S>::from({1, 1, 7, 7}, std::move(w));
}

template <class S>
TensorT<S> to_gray(TensorT<S> img) {
    // channel mean -> [1,1,H,W]
    const int H = img.dim(1), W = img.dim(2);
    auto g = reduce_mean_axis(img, 0);
    return reshape(g, {1, 1, H, W});
}

}  // namespace

template <class S>
TensorT<S> ssim_tensor(TensorT<S> x, TensorT<S> y) {
    ADK_CHECK(x.shape() == y.shape(), "ssim: shapes ", shape_str(x.shape()), " vs ",
              shape_str(y.shape()));
    ADK_CHECK(x.ndim() == 3, "ssim: expected [C,H,W], got ", shape_str(x.shape()));
    ADK_CHECK(x.dim(1) >= 7 && x.dim(2) >= 7, "ssim: image ", shape_str(x.shape()),
              " smaller than the 7x7 window");
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    auto win = gaussian_window7<S>();
    auto gx = to_gray(x);
    auto gy = to_gray(y);
    auto mu_x = conv2d(gx, win, TensorT<S>(), 1, 0);
    auto mu_y = conv2d(gy, win, TensorT<S>(), 1, 0);
    auto mu_xx = mul(mu_x, mu_x);
    auto mu_yy = mul(mu_y, mu_y);
    auto mu_xy = mul(mu_x, mu_y);
    auto sigma_x = sub(conv2d(mul(gx, gx), win, TensorT<S>(), 1, 0), mu_xx);
    auto sigma_y = sub(conv2d(mul(gy, gy), win, TensorT<S>(), 1, 0), mu_yy);
    auto sigma_xy = sub(conv2d(mul(gx, gy), win, TensorT<S>(), 1, 0), mu_xy);
    auto num = mul(add_scalar(mul_scalar(mu_xy, 2.0), c1), add_scalar(mul_scalar(sigma_xy, 2.0), c2));
    auto den = mul(add_scalar(add(mu_xx, mu_yy), c1), add_scalar(add(sigma_x, sigma_y), c2));
    return reduce_mean(div(num, den));
}

template TensorT<float> ssim_tensor<float>(TensorT<float>, TensorT<float>);
template TensorT<double> ssim_tensor<double>(TensorT<double>, TensorT<double>);

double ssim(const Tensor& x, const Tensor& y) {
    NoGrad ng;
    return ssim_tensor<double>(x.cast<double>(), y.cast<double>()).item();
}

MetricReport evaluate_set(const std::vector<Tensor>& pred, const std::vector<Tensor>& gt,
                          const std::vector<Tensor>* masks) {
    ADK_CHECK(pred.size() == gt.size(), "evaluate_set: ", pred.size(), " predictions vs ",
              gt.size(), " references");
    ADK_CHECK(!pred.empty(), "evaluate_set: empty input");
    if (masks) ADK_CHECK(masks->size() == pred.size(), "evaluate_set: mask count mismatch");
    MetricReport r;
    for (size_t i = 0; i < pred.size(); ++i) {
        auto p = psnr(pred[i], gt[i]);
        r.psnr_db.push_back(p.db);
        r.psnr_exact.push_back(p.exact);
        r.ssim_val.push_back(ssim(pred[i], gt[i]));
        double l1 = 0;
        if (masks) {
            const Tensor& m = (*masks)[i];
            ADK_CHECK(m.ndim() == 3 && m.dim(1) == pred[i].dim(1) && m.dim(2) == pred[i].dim(2),
                      "evaluate_set: mask shape ", shape_str(m.shape()));
            const int64_t plane = int64_t(pred[i].dim(1)) * pred[i].dim(2);
            double wsum = 0;
            for (int c = 0; c < pred[i].dim(0); ++c)
                for (int64_t px = 0; px < plane; ++px) {
                    const double w = m.data()[px];
                    l1 += w * std::abs(double(pred[i].data()[c * plane + px]) -
                                       double(gt[i].data()[c * plane + px]));
                    wsum += w;
                }
            l1 = wsum > 0 ? l1 / wsum : 0.0;
        } else {
            for (int64_t j = 0; j < pred[i].size(); ++j)
                l1 += std::abs(double(pred[i].data()[j]) - double(gt[i].data()[j]));
            l1 /= double(pred[i].size());
        }
        r.l1.push_back(l1);
    }
    for (size_t i = 0; i < pred.size(); ++i) {
        r.mean_psnr += r.psnr_db[i];
        r.mean_ssim += r.ssim_val[i];
        r.mean_l1 += r.l1[i];
    }
    r.mean_psnr /= double(pred.size());
    r.mean_ssim /= double(pred.size());
    r.mean_l1 /= double(pred.size());
    return r;
}

void write_report(const std::string& prefix, const MetricReport& report) {
    {
        std::ofstream f(prefix + ".txt");
        ADK_CHECK(bool(f), "write_report: cannot open ", prefix, ".txt");
        f << std::fixed << std::setprecision(4);
        f << std::setw(6) << "frame" << std::setw(12) << "psnr_db" << std::setw(10) << "ssim"
          << std::setw(12) << "l1" << '\n';
        for (size_t i = 0; i < report.psnr_db.size(); ++i)
            f << std::setw(6) << i << std::setw(12) << report.psnr_db[i] << std::setw(10)
              << report.ssim_val[i] << std::setw(12) << report.l1[i]
              << (report.psnr_exact[i] ? "  exact" : "") << '\n';
        f << std::setw(6) << "mean" << std::setw(12) << report.mean_psnr << std::setw(10)
          << report.mean_ssim << std::setw(12) << report.mean_l1 << '\n';
        f << "# LPIPS/FVD omitted: they require pretrained perception networks\n";
    }
    std::ofstream kv(prefix + ".kv");
    ADK_CHECK(bool(kv), "write_report: cannot open ", prefix, ".kv");
    kv << std::setprecision(10);
    kv << "frames=" << report.psnr_db.size() << '\n';
    kv << "mean_psnr=" << report.mean_psnr << '\n';
    kv << "mean_ssim=" << report.mean_ssim << '\n';
    kv << "mean_l1=" << report.mean_l1 << '\n';
    for (size_t i = 0; i < report.psnr_db.size(); ++i) {
        kv << "psnr_" << i << '=' << report.psnr_db[i] << '\n';
        kv << "ssim_" << i << '=' << report.ssim_val[i] << '\n';
        kv << "l1_" << i << '=' << report.l1[i] << '\n';
    }
}

}  // namespace adk
