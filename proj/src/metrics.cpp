#include "lld/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace F = torch::nn::functional;

namespace lld {

double psnr(const torch::Tensor& a, const torch::Tensor& b, double max_val, double cap) {
    if (a.sizes() != b.sizes()) {
        throw std::invalid_argument("psnr: shape mismatch " + c10::str(a.sizes()) + " vs " + c10::str(b.sizes()));
    }
    const double mse = (a.to(torch::kFloat64) - b.to(torch::kFloat64)).pow(2).mean().item<double>();
    if (mse == 0.0) {
        return cap;
    }
    return std::min(cap, 10.0 * std::log10(max_val * max_val / mse));
}

torch::Tensor rgb_to_luma(const torch::Tensor& image) {
    if (image.dim() != 3 || image.size(0) != 3) {
        throw std::invalid_argument("rgb_to_luma: expected [3, H, W]");
    }
    auto img = image.to(torch::kFloat64);
    return 0.299 * img[0] + 0.587 * img[1] + 0.114 * img[2];
}

namespace {

torch::Tensor as_gray(const torch::Tensor& image) {
    if (image.dim() == 2) {
        return image.to(torch::kFloat64);
    }
    return rgb_to_luma(image);
}

torch::Tensor gaussian_window(int64_t size, double sigma) {
    auto opts = torch::TensorOptions().dtype(torch::kFloat64);
    auto coords = torch::arange(size, opts) - static_cast<double>(size - 1) / 2.0;
    auto g = torch::exp(-coords.pow(2) / (2.0 * sigma * sigma));
    return g / g.sum();
}

// Separable valid-mode filtering of a [H, W] image.
torch::Tensor filter_valid(const torch::Tensor& img, const torch::Tensor& g) {
    const auto k = g.size(0);
    auto x = img.view({1, 1, img.size(0), img.size(1)});
    x = F::conv2d(x, g.view({1, 1, k, 1}));
    x = F::conv2d(x, g.view({1, 1, 1, k}));
    return x.squeeze(0).squeeze(0);
}

}  // namespace

double ssim(const torch::Tensor& a, const torch::Tensor& b, const SsimOptions& options) {
    if (a.sizes() != b.sizes()) {
        throw std::invalid_argument("ssim: shape mismatch " + c10::str(a.sizes()) + " vs " + c10::str(b.sizes()));
    }
    auto x = as_gray(a);
    auto y = as_gray(b);
    if (x.size(0) < options.window || x.size(1) < options.window) {
        throw std::invalid_argument("ssim: image smaller than the " + std::to_string(options.window) + "x" +
                                    std::to_string(options.window) + " window");
    }
    const auto g = gaussian_window(options.window, options.sigma);
    const double c1 = std::pow(options.k1 * options.data_range, 2);
    const double c2 = std::pow(options.k2 * options.data_range, 2);
    auto mu_x = filter_valid(x, g);
    auto mu_y = filter_valid(y, g);
    auto var_x = filter_valid(x * x, g) - mu_x * mu_x;
    auto var_y = filter_valid(y * y, g) - mu_y * mu_y;
    auto cov = filter_valid(x * y, g) - mu_x * mu_y;
    auto num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2);
    auto den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2);
    return (num / den).mean().item<double>();
}

void MetricsReport::add(MetricsRow row) {
    rows.push_back(std::move(row));
    double sp = 0.0;
    double ss = 0.0;
    for (const auto& r : rows) {
        sp += r.psnr;
        ss += r.ssim;
    }
    mean_psnr = sp / static_cast<double>(rows.size());
    mean_ssim = ss / static_cast<double>(rows.size());
}

std::string MetricsReport::to_csv() const {
    std::ostringstream out;
    out << "id,psnr,ssim\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f", r.psnr, r.ssim);
        out << r.id << ',' << buf << '\n';
    }
    std::snprintf(buf, sizeof buf, "%.6f,%.6f", mean_psnr, mean_ssim);
    out << "mean," << buf << '\n';
    return out.str();
}

std::string MetricsReport::summary() const {
    char buf[128];
    std::snprintf(buf, sizeof buf, "images: %zu\nmean PSNR: %.4f dB\nmean SSIM: %.6f\n", rows.size(), mean_psnr,
                  mean_ssim);
    return buf;
}

}  // namespace lld
