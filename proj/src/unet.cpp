#include "lld/unet.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace F = torch::nn::functional;

namespace lld {

namespace {

torch::nn::Conv2d conv3x3(int64_t in, int64_t out, int64_t stride = 1) {
    return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
}

torch::nn::Conv2d conv1x1(int64_t in, int64_t out) {
    return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 1));
}

torch::nn::GroupNorm group_norm(int64_t channels) {
    return torch::nn::GroupNorm(torch::nn::GroupNormOptions(group_count(channels), channels));
}

}  // namespace

int64_t group_count(int64_t channels) {
    for (int64_t g = std::min<int64_t>(8, channels); g > 1; --g) {
        if (channels % g == 0) {
            return g;
        }
    }
    return 1;
}

std::array<int64_t, kNumScales> level_widths(int64_t base_width) {
    return {base_width, 2 * base_width, 4 * base_width, 8 * base_width};
}

torch::Tensor sinusoidal_embedding(const torch::Tensor& t, int64_t dim) {
    if (dim < 2 || dim % 2 != 0) {
        throw std::invalid_argument("sinusoidal_embedding: dim must be even and >= 2");
    }
    const int64_t half = dim / 2;
    auto opts = torch::TensorOptions().dtype(torch::kFloat64);
    auto freqs = torch::exp(-std::log(10000.0) * torch::arange(half, opts) / static_cast<double>(half));
    auto args = t.to(torch::kFloat64).unsqueeze(1) * freqs.unsqueeze(0);
    return torch::cat({torch::sin(args), torch::cos(args)}, 1);
}

ResBlockImpl::ResBlockImpl(int64_t in_channels, int64_t out_channels, int64_t time_dim) {
    norm1_ = register_module("norm1", group_norm(in_channels));
    conv1_ = register_module("conv1", conv3x3(in_channels, out_channels));
    if (time_dim > 0) {
        time_proj_ = register_module("time_proj", torch::nn::Linear(time_dim, out_channels));
    }
    norm2_ = register_module("norm2", group_norm(out_channels));
    conv2_ = register_module("conv2", conv3x3(out_channels, out_channels));
    if (in_channels != out_channels) {
        skip_ = register_module("skip", conv1x1(in_channels, out_channels));
    }
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x, const std::optional<torch::Tensor>& temb) {
    auto h = conv1_->forward(F::silu(norm1_->forward(x)));
    if (time_proj_) {
        if (!temb) {
            throw std::invalid_argument("ResBlock: time embedding required");
        }
        h = h + time_proj_->forward(*temb).unsqueeze(-1).unsqueeze(-1);
    }
    h = conv2_->forward(F::silu(norm2_->forward(h)));
    return h + (skip_ ? skip_->forward(x) : x);
}

AttentionBlockImpl::AttentionBlockImpl(int64_t channels) {
    norm_ = register_module("norm", group_norm(channels));
    qkv_ = register_module("qkv", conv1x1(channels, 3 * channels));
    out_ = register_module("out", conv1x1(channels, channels));
}

torch::Tensor AttentionBlockImpl::forward(const torch::Tensor& x) {
    const auto b = x.size(0);
    const auto c = x.size(1);
    const auto n = x.size(2) * x.size(3);
    auto qkv = qkv_->forward(norm_->forward(x)).reshape({b, 3, c, n});
    auto q = qkv.select(1, 0);
    auto k = qkv.select(1, 1);
    auto v = qkv.select(1, 2);
    auto weights = torch::softmax(torch::matmul(q.transpose(1, 2), k) / std::sqrt(static_cast<double>(c)), -1);
    auto h = torch::matmul(v, weights.transpose(1, 2)).reshape(x.sizes());
    return x + out_->forward(h);
}

UNetImpl::UNetImpl(const BackboneConfig& config) : config_(config) {
    if (config.base_width < 1) {
        throw std::invalid_argument("UNet: base_width must be positive");
    }
    const auto widths = level_widths(config.base_width);
    int64_t time_dim = 0;
    if (config.time_conditioned) {
        time_sinusoid_dim_ = std::max<int64_t>(8, 2 * ((config.base_width + 1) / 2));
        time_dim = 4 * config.base_width;
        time_fc1_ = register_module("time_fc1", torch::nn::Linear(time_sinusoid_dim_, time_dim));
        time_fc2_ = register_module("time_fc2", torch::nn::Linear(time_dim, time_dim));
    }
    head_ = register_module("head", conv3x3(config.in_channels, widths[0]));
    for (int l = 0; l < kNumScales; ++l) {
        enc_->push_back(ResBlock(widths[l], widths[l], time_dim));
        if (l + 1 < kNumScales) {
            down_->push_back(conv3x3(widths[l], widths[l + 1], 2));
        }
    }
    register_module("enc", enc_);
    register_module("down", down_);
    mid_ = register_module("mid", ResBlock(widths[3], widths[3], time_dim));
    if (config.attention) {
        attn_ = register_module("attn", AttentionBlock(widths[3]));
    }
    for (int l = 0; l < kNumScales; ++l) {
        dec_->push_back(ResBlock(2 * widths[l] + config.rep_channels[l], widths[l], time_dim));
        if (l + 1 < kNumScales) {
            up_->push_back(conv3x3(widths[l + 1], widths[l]));
        }
    }
    register_module("dec", dec_);
    register_module("up", up_);
    out_norm_ = register_module("out_norm", group_norm(widths[0]));
    out_conv_ = register_module("out_conv", conv3x3(widths[0], config.out_channels));
}

torch::Tensor UNetImpl::forward(const torch::Tensor& x, const std::vector<torch::Tensor>& reps,
                                const std::optional<torch::Tensor>& t) {
    if (x.dim() != 4 || x.size(1) != config_.in_channels) {
        throw std::invalid_argument("UNet: expected input [B, " + std::to_string(config_.in_channels) +
                                    ", H, W]");
    }
    if (x.size(2) % 8 != 0 || x.size(3) % 8 != 0) {
        throw std::invalid_argument("UNet: spatial size must be divisible by 8");
    }
    check_reps(reps, x.size(0), x.size(2), x.size(3), config_.rep_channels);

    std::optional<torch::Tensor> temb;
    if (config_.time_conditioned) {
        if (!t || t->dim() != 1 || t->size(0) != x.size(0)) {
            throw std::invalid_argument("UNet: need one timestep per batch item");
        }
        auto s = sinusoidal_embedding(*t, time_sinusoid_dim_).to(x.scalar_type());
        temb = time_fc2_->forward(F::silu(time_fc1_->forward(s)));
    }

    std::vector<torch::Tensor> skips;
    auto h = head_->forward(x);
    for (int l = 0; l < kNumScales; ++l) {
        h = enc_[l]->as<ResBlock>()->forward(h, temb);
        skips.push_back(h);
        if (l + 1 < kNumScales) {
            h = down_[l]->as<torch::nn::Conv2d>()->forward(h);
        }
    }
    h = mid_->forward(h, temb);
    if (attn_) {
        h = attn_->forward(h);
    }
    for (int l = kNumScales - 1; l >= 0; --l) {
        h = dec_[l]->as<ResBlock>()->forward(torch::cat({h, skips[l], reps[l]}, 1), temb);
        if (l > 0) {
            h = F::interpolate(h, F::InterpolateFuncOptions()
                                      .scale_factor(std::vector<double>{2.0, 2.0})
                                      .mode(torch::kNearest));
            h = up_[l - 1]->as<torch::nn::Conv2d>()->forward(h);
        }
    }
    return out_conv_->forward(F::silu(out_norm_->forward(h)));
}

void zero_init(torch::nn::Conv2d& conv) {
    torch::NoGradGuard no_grad;
    conv->weight.zero_();
    if (conv->bias.defined()) {
        conv->bias.zero_();
    }
}

void check_reps(const std::vector<torch::Tensor>& reps, int64_t batch, int64_t h, int64_t w,
                const std::array<int64_t, kNumScales>& channels) {
    if (reps.size() != static_cast<size_t>(kNumScales)) {
        throw std::invalid_argument("degradation representation must hold " +
                                    std::to_string(kNumScales) + " maps, got " +
                                    std::to_string(reps.size()));
    }
    for (int l = 0; l < kNumScales; ++l) {
        const auto& r = reps[l];
        const int64_t sh = h >> l;
        const int64_t sw = w >> l;
        if (r.dim() != 4 || r.size(0) != batch || r.size(1) != channels[l] || r.size(2) != sh ||
            r.size(3) != sw) {
            throw std::invalid_argument("degradation map " + std::to_string(l) + " has shape " +
                                        c10::str(r.sizes()) + ", expected [" + std::to_string(batch) +
                                        ", " + std::to_string(channels[l]) + ", " +
                                        std::to_string(sh) + ", " + std::to_string(sw) + "]");
        }
    }
}

}  // namespace lld
