#pragma once

#include <torch/torch.h>

#include "lld/encoder.hpp"
#include "lld/unet.hpp"

namespace lld {

/// Degradation generation network: the shared U-Net backbone without time
/// conditioning, followed by a sigmoid. Maps a normal-light image and E(y) to a
/// synthesized low-light image.
class DGNetImpl : public torch::nn::Module {
public:
    DGNetImpl(int64_t base_width, bool attention);

    torch::Tensor forward(const torch::Tensor& x, const DegradationRepresentation& rep);

    UNet& backbone() { return unet_; }

private:
    UNet unet_{nullptr};
};
TORCH_MODULE(DGNet);

torch::Tensor generate_low_light(const torch::Tensor& x, const DegradationRepresentation& rep, DGNet& net);

/// Mean absolute difference over all elements.
torch::Tensor l1_loss(const torch::Tensor& a, const torch::Tensor& b);

}  // namespace lld
