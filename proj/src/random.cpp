#include "lld/random.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include "lld/hash.hpp"

namespace lld {

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t root, std::string_view stream, uint64_t index) {
    return splitmix64(splitmix64(root ^ fnv1a64(stream)) + index);
}

torch::Generator make_generator(uint64_t seed) {
    return at::make_generator<at::CPUGeneratorImpl>(seed);
}

}  // namespace lld
