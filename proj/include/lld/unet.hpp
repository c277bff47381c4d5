#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <torch/torch.h>

namespace lld {

inline constexpr int kNumScales = 4;

/// Largest divisor of `channels` that is <= 8; used as the GroupNorm group count.
int64_t group_count(int64_t channels);

/// Channel widths of the four resolution levels: (w, 2w, 4w, 8w).
std::array<int64_t, kNumScales> level_widths(int64_t base_width);

/// Sinusoidal embedding of integer timesteps: [sin(t f_k), cos(t f_k)] with
/// f_k = 10000^(-k/half). t: [B] → [B, dim].
torch::Tensor sinusoidal_embedding(const torch::Tensor& t, int64_t dim);

struct BackboneConfig {
    int64_t in_channels = 3;
    int64_t out_channels = 3;
    int64_t base_width = 32;
    /// Extra channels concatenated into each decoder level (finest first).
    std::array<int64_t, kNumScales> rep_channels{};
    bool time_conditioned = false;
    bool attention = true;
};

class ResBlockImpl : public torch::nn::Module {
public:
    ResBlockImpl(int64_t in_channels, int64_t out_channels, int64_t time_dim);

    torch::Tensor forward(const torch::Tensor& x, const std::optional<torch::Tensor>& temb);

private:
    torch::nn::GroupNorm norm1_{nullptr};
    torch::nn::Conv2d conv1_{nullptr};
    torch::nn::Linear time_proj_{nullptr};
    torch::nn::GroupNorm norm2_{nullptr};
    torch::nn::Conv2d conv2_{nullptr};
    torch::nn::Conv2d skip_{nullptr};
};
TORCH_MODULE(ResBlock);

/// Single-head spatial self-attention with a residual connection.
class AttentionBlockImpl : public torch::nn::Module {
public:
    explicit AttentionBlockImpl(int64_t channels);

    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::nn::GroupNorm norm_{nullptr};
    torch::nn::Conv2d qkv_{nullptr};
    torch::nn::Conv2d out_{nullptr};
};
TORCH_MODULE(AttentionBlock);

/// Four-level U-Net whose decoder levels accept externally supplied feature
/// maps by channel concatenation. Shared by the generator and the denoiser.
class UNetImpl : public torch::nn::Module {
public:
    explicit UNetImpl(const BackboneConfig& config);

    /// x: [B, in_channels, H, W]; reps: kNumScales maps at (H, H/2, H/4, H/8);
    /// t: [B] timesteps, required iff the backbone is time conditioned.
    torch::Tensor forward(const torch::Tensor& x, const std::vector<torch::Tensor>& reps,
                          const std::optional<torch::Tensor>& t = std::nullopt);

    const BackboneConfig& config() const { return config_; }
    torch::nn::Conv2d& output_head() { return out_conv_; }

private:
    BackboneConfig config_;
    int64_t time_sinusoid_dim_ = 0;
    torch::nn::Linear time_fc1_{nullptr};
    torch::nn::Linear time_fc2_{nullptr};
    torch::nn::Conv2d head_{nullptr};
    torch::nn::ModuleList enc_;
    torch::nn::ModuleList down_;
    ResBlock mid_{nullptr};
    AttentionBlock attn_{nullptr};
    torch::nn::ModuleList dec_;
    torch::nn::ModuleList up_;
    torch::nn::GroupNorm out_norm_{nullptr};
    torch::nn::Conv2d out_conv_{nullptr};
};
TORCH_MODULE(UNet);


/// Zero weight and bias of a convolution.
void zero_init(torch::nn::Conv2d& conv);

/// Checks that reps match the decoder contract for an input of spatial size (h, w).
void check_reps(const std::vector<torch::Tensor>& reps, int64_t batch, int64_t h, int64_t w,
                const std::array<int64_t, kNumScales>& channels);

}  // namespace lld
