#pragma once

#include <torch/torch.h>

namespace lld {

/// Default regularizer for the per-pixel normalization.
inline constexpr double kColorMapEpsilon = 1e-6;

/// Illumination-invariant chromaticity map: every pixel's channels divided by
/// their sum (plus epsilon). Accepts [3,H,W] or [B,3,H,W]; all-black pixels map
/// to zeros.
torch::Tensor compute_color_map(const torch::Tensor& y, double epsilon = kColorMapEpsilon);

}  // namespace lld
