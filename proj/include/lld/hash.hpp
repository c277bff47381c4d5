#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include <torch/torch.h>

namespace lld {

inline constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

uint64_t fnv1a64(std::span<const std::byte> bytes, uint64_t h = kFnvOffset);
uint64_t fnv1a64(std::string_view text, uint64_t h = kFnvOffset);

/// Hash of the raw bytes of every parameter, visited in registration order
/// together with its name.
uint64_t hash_parameters(const torch::nn::Module& module);

uint64_t hash_tensor(const torch::Tensor& t, uint64_t h = kFnvOffset);

std::string hex64(uint64_t v);

}  // namespace lld
