#pragma once

#include <array>
#include <vector>

#include <torch/torch.h>

#include "lld/unet.hpp"

namespace lld {

/// Multi-scale degradation features E(y), finest scale first. Map l has spatial
/// size (H / 2^l, W / 2^l).
struct DegradationRepresentation {
    std::vector<torch::Tensor> maps;

    DegradationRepresentation detached() const;
};

/// Channels each encoder projection emits: (w/2, w, 2w, 4w), at least 1.
std::array<int64_t, kNumScales> representation_channels(int64_t base_width);

/// Four stride-2 convolution stages (w, 2w, 4w, 8w channels, SiLU after each).
/// Stage l's output is projected by a 1x1 convolution and nearest-upsampled x2
/// to the resolution of decoder level l.
class DegradationEncoderImpl : public torch::nn::Module {
public:
    explicit DegradationEncoderImpl(int64_t base_width);

    DegradationRepresentation forward(const torch::Tensor& y);

    int64_t base_width() const { return base_width_; }
    const std::array<int64_t, kNumScales>& channels() const { return channels_; }

    bool frozen() const { return frozen_; }
    void set_frozen();

private:
    int64_t base_width_;
    std::array<int64_t, kNumScales> channels_;
    std::vector<torch::nn::Conv2d> stages_;
    std::vector<torch::nn::Conv2d> projections_;
    bool frozen_ = false;
};
TORCH_MODULE(DegradationEncoder);

DegradationRepresentation encode_degradation(const torch::Tensor& y, DegradationEncoder& encoder);

/// Marks every encoder parameter non-trainable. Idempotent.
DegradationEncoder& freeze(DegradationEncoder& encoder);

}  // namespace lld
