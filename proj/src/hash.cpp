#include "lld/hash.hpp"

#include <cstdio>

namespace lld {

uint64_t fnv1a64(std::span<const std::byte> bytes, uint64_t h) {
    for (auto b : bytes) {
        h ^= static_cast<uint64_t>(b);
        h *= 0x100000001b3ULL;
    }
    return h;
}

uint64_t fnv1a64(std::string_view text, uint64_t h) {
    return fnv1a64(std::as_bytes(std::span(text.data(), text.size())), h);
}

uint64_t hash_tensor(const torch::Tensor& t, uint64_t h) {
    auto c = t.detach().cpu().contiguous();
    const auto* p = static_cast<const std::byte*>(c.data_ptr());
    return fnv1a64(std::span(p, c.nbytes()), h);
}

uint64_t hash_parameters(const torch::nn::Module& module) {
    uint64_t h = kFnvOffset;
    for (const auto& item : module.named_parameters()) {
        h = fnv1a64(item.key(), h);
        h = hash_tensor(item.value(), h);
    }
    return h;
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace lld
