#include "lld/color_map.hpp"

#include <stdexcept>

namespace lld {

torch::Tensor compute_color_map(const torch::Tensor& y, double epsilon) {
    if (y.dim() != 3 && y.dim() != 4) {
        throw std::invalid_argument("compute_color_map: expected [3,H,W] or [B,3,H,W]");
    }
    if (y.size(-3) != 3) {
        throw std::invalid_argument("compute_color_map: expected 3 channels, got " +
                                    std::to_string(y.size(-3)));
    }
    if (!(epsilon > 0.0)) {
        throw std::invalid_argument("compute_color_map: epsilon must be positive");
    }
    if (y.numel() > 0 && y.min().item<double>() < 0.0) {
        throw std::invalid_argument("compute_color_map: negative input values");
    }
    return y / (y.sum(-3, /*keepdim=*/true) + epsilon);
}

}  // namespace lld
