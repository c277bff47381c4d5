#include "lld/encoder.hpp"

#include <stdexcept>
#include <string>

namespace F = torch::nn::functional;

namespace lld {

DegradationRepresentation DegradationRepresentation::detached() const {
    DegradationRepresentation out;
    out.maps.reserve(maps.size());
    for (const auto& m : maps) {
        out.maps.push_back(m.detach());
    }
    return out;
}

std::array<int64_t, kNumScales> representation_channels(int64_t base_width) {
    const auto widths = level_widths(base_width);
    std::array<int64_t, kNumScales> out{};
    for (int l = 0; l < kNumScales; ++l) {
        out[l] = std::max<int64_t>(1, widths[l] / 2);
    }
    return out;
}

DegradationEncoderImpl::DegradationEncoderImpl(int64_t base_width)
    : base_width_(base_width), channels_(representation_channels(base_width)) {
    if (base_width < 1) {
        throw std::invalid_argument("encoder: base_width must be positive");
    }
    const auto widths = level_widths(base_width);
    int64_t in = 3;
    for (int l = 0; l < kNumScales; ++l) {
        const auto name = std::to_string(l + 1);
        stages_.push_back(register_module(
            "stage" + name,
            torch::nn::Conv2d(torch::nn::Conv2dOptions(in, widths[l], 3).stride(2).padding(1))));
        projections_.push_back(register_module(
            "proj" + name, torch::nn::Conv2d(torch::nn::Conv2dOptions(widths[l], channels_[l], 1))));
        in = widths[l];
    }
}

DegradationRepresentation DegradationEncoderImpl::forward(const torch::Tensor& y) {
    if (y.dim() != 4 || y.size(1) != 3) {
        throw std::invalid_argument("encoder: expected [B, 3, H, W] input");
    }
    if (y.size(2) % 8 != 0 || y.size(3) % 8 != 0) {
        throw std::invalid_argument("encoder: spatial size " + std::to_string(y.size(2)) + "x" +
                                    std::to_string(y.size(3)) + " is not divisible by 8");
    }
    DegradationRepresentation rep;
    auto h = y;
    for (int l = 0; l < kNumScales; ++l) {
        h = F::silu(stages_[l]->forward(h));
        auto p = projections_[l]->forward(h);
        // The coarsest stage sits at H/16; upsampling restores H/2^l exactly.
        rep.maps.push_back(F::interpolate(p, F::InterpolateFuncOptions()
                                                 .size(std::vector<int64_t>{y.size(2) >> l, y.size(3) >> l})
                                                 .mode(torch::kNearest)));
    }
    return rep;
}

void DegradationEncoderImpl::set_frozen() {
    for (auto& p : parameters()) {
        p.set_requires_grad(false);
    }
    frozen_ = true;
}

DegradationRepresentation encode_degradation(const torch::Tensor& y, DegradationEncoder& encoder) {
    for (const auto& p : encoder->parameters()) {
        if (!torch::isfinite(p).all().item<bool>()) {
            throw std::invalid_argument("encoder: non-finite parameter");
        }
    }
    return encoder->forward(y);
}

DegradationEncoder& freeze(DegradationEncoder& encoder) {
    for (const auto& p : encoder->parameters()) {
        if (!torch::isfinite(p).all().item<bool>()) {
            throw std::invalid_argument("freeze: non-finite parameter");
        }
    }
    encoder->set_frozen();
    return encoder;
}

}  // namespace lld
