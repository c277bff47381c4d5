#pragma once

#include <cstdint>
#include <string_view>

#include <torch/torch.h>

namespace lld {

uint64_t splitmix64(uint64_t x);

/// Seed of a named random stream, optionally specialised per index (iteration,
/// batch item). Streams with different names are statistically independent.
uint64_t derive_seed(uint64_t root, std::string_view stream, uint64_t index = 0);

torch::Generator make_generator(uint64_t seed);

}  // namespace lld
