#pragma once

#include <string>
#include <vector>

#include <torch/torch.h>

namespace lld {

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(max_val^2 / MSE); `cap` when the images are identical.
double psnr(const torch::Tensor& a, const torch::Tensor& b, double max_val = 1.0, double cap = kPsnrCap);

/// BT.601 luma of a [3, H, W] image → [H, W].
torch::Tensor rgb_to_luma(const torch::Tensor& image);

struct SsimOptions {
    int64_t window = 11;
    double sigma = 1.5;
    double data_range = 1.0;
    double k1 = 0.01;
    double k2 = 0.03;
};

/// Mean SSIM over all fully contained 11x11 Gaussian windows of the luma
/// channel. Accepts [3, H, W] color or [H, W] gray images.
double ssim(const torch::Tensor& a, const torch::Tensor& b, const SsimOptions& options = {});

struct MetricsRow {
    std::string id;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct MetricsReport {
    std::vector<MetricsRow> rows;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;

    size_t count() const { return rows.size(); }
    void add(MetricsRow row);
    std::string to_csv() const;
    std::string summary() const;
};

}  // namespace lld
