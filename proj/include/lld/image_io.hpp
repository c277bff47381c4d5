#pragma once

#include <filesystem>

#include <torch/torch.h>

namespace lld {

/// Reads an 8-bit PNG as a float32 [3, H, W] tensor in [0, 1]. Gray and
/// alpha inputs are converted to RGB.
torch::Tensor read_png(const std::filesystem::path& path);

/// Writes a [3, H, W] tensor as 8-bit RGB PNG, v = round(255 * clamp(x, 0, 1)).
void write_png(const std::filesystem::path& path, const torch::Tensor& image);

/// round(255 x) / 255, the value a PNG round trip yields.
torch::Tensor quantize8(const torch::Tensor& image);

}  // namespace lld
