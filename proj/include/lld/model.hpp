#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "lld/denoiser.hpp"
#include "lld/dgnet.hpp"
#include "lld/encoder.hpp"

namespace lld {

struct ModelConfig {
    int64_t base_width = 32;
    bool attention = true;

    bool operator==(const ModelConfig&) const = default;
};

using NamedTensors = std::vector<std::pair<std::string, torch::Tensor>>;

/// The three trainable networks. Parameter names are prefixed with
/// "encoder.", "dgnet." and "denoiser.".
struct Networks {
    ModelConfig config;
    DegradationEncoder encoder{nullptr};
    DGNet dgnet{nullptr};
    Denoiser denoiser{nullptr};

    /// Kaiming fan-in init from `seed`; the generator and denoiser output heads
    /// start at zero unless `zero_heads` is false.
    static Networks create(const ModelConfig& config, uint64_t seed, bool zero_heads = true);

    NamedTensors named_parameters() const;
    void to(torch::ScalarType dtype);
    torch::ScalarType dtype() const;
};

/// Fresh denoiser with the architecture of `config`, parameters copied from `src`.
Denoiser clone_denoiser(const ModelConfig& config, Denoiser& src);

/// Kaiming init drawing from an explicit generator.
void kaiming_init(torch::nn::Module& module, torch::Generator& gen);

NamedTensors prefixed(const std::string& prefix, const torch::nn::Module& module);

/// Copies values by name into the module's parameters; every parameter must be present.
void assign_parameters(torch::nn::Module& module, const std::string& prefix,
                       const std::vector<std::pair<std::string, torch::Tensor>>& values);

}  // namespace lld
