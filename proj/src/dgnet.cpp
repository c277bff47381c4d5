#include "lld/dgnet.hpp"

#include <stdexcept>

namespace lld {

DGNetImpl::DGNetImpl(int64_t base_width, bool attention) {
    BackboneConfig cfg;
    cfg.in_channels = 3;
    cfg.out_channels = 3;
    cfg.base_width = base_width;
    cfg.rep_channels = representation_channels(base_width);
    cfg.time_conditioned = false;
    cfg.attention = attention;
    unet_ = register_module("unet", UNet(cfg));
}

torch::Tensor DGNetImpl::forward(const torch::Tensor& x, const DegradationRepresentation& rep) {
    return torch::sigmoid(unet_->forward(x, rep.maps));
}

torch::Tensor generate_low_light(const torch::Tensor& x, const DegradationRepresentation& rep, DGNet& net) {
    if (rep.maps.empty() || x.dim() != 4 || rep.maps[0].size(2) != x.size(2) ||
        rep.maps[0].size(3) != x.size(3)) {
        throw std::invalid_argument("generate_low_light: image does not match the representation's base scale");
    }
    return net->forward(x, rep);
}

torch::Tensor l1_loss(const torch::Tensor& a, const torch::Tensor& b) {
    if (a.sizes() != b.sizes()) {
        throw std::invalid_argument("l1_loss: shape mismatch " + c10::str(a.sizes()) + " vs " +
                                    c10::str(b.sizes()));
    }
    return (a - b).abs().mean();
}

}  // namespace lld
