#include "lld/model.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "lld/random.hpp"

namespace lld {

namespace {

void init_weight(torch::Tensor& w, torch::Generator& gen) {
    const auto fan_in = w.numel() / w.size(0);
    w.normal_(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)), gen);
}

}  // namespace

void kaiming_init(torch::nn::Module& module, torch::Generator& gen) {
    torch::NoGradGuard no_grad;
    for (auto& m : module.modules(/*include_self=*/true)) {
        if (auto* conv = m->as<torch::nn::Conv2d>()) {
            init_weight(conv->weight, gen);
            if (conv->bias.defined()) {
                conv->bias.zero_();
            }
        } else if (auto* lin = m->as<torch::nn::Linear>()) {
            init_weight(lin->weight, gen);
            if (lin->bias.defined()) {
                lin->bias.zero_();
            }
        }
    }
}

Networks Networks::create(const ModelConfig& config, uint64_t seed, bool zero_heads) {
    Networks n;
    n.config = config;
    n.encoder = DegradationEncoder(config.base_width);
    n.dgnet = DGNet(config.base_width, config.attention);
    n.denoiser = Denoiser(config.base_width, config.attention);
    auto g_enc = make_generator(derive_seed(seed, "init.encoder"));
    auto g_dg = make_generator(derive_seed(seed, "init.dgnet"));
    auto g_den = make_generator(derive_seed(seed, "init.denoiser"));
    kaiming_init(*n.encoder, g_enc);
    kaiming_init(*n.dgnet, g_dg);
    kaiming_init(*n.denoiser, g_den);
    if (zero_heads) {
        zero_init(n.dgnet->backbone()->output_head());
        zero_init(n.denoiser->backbone()->output_head());
    }
    return n;
}

NamedTensors prefixed(const std::string& prefix, const torch::nn::Module& module) {
    NamedTensors out;
    for (const auto& item : module.named_parameters()) {
        out.emplace_back(prefix + item.key(), item.value());
    }
    return out;
}

NamedTensors Networks::named_parameters() const {
    auto out = prefixed("encoder.", *encoder);
    for (auto& p : prefixed("dgnet.", *dgnet)) {
        out.push_back(std::move(p));
    }
    for (auto& p : prefixed("denoiser.", *denoiser)) {
        out.push_back(std::move(p));
    }
    return out;
}

void Networks::to(torch::ScalarType dtype) {
    encoder->to(dtype);
    dgnet->to(dtype);
    denoiser->to(dtype);
}

torch::ScalarType Networks::dtype() const {
    return denoiser->parameters().front().scalar_type();
}

Denoiser clone_denoiser(const ModelConfig& config, Denoiser& src) {
    Denoiser copy(config.base_width, config.attention);
    copy->to(src->parameters().front().scalar_type());
    torch::NoGradGuard no_grad;
    auto dst = copy->parameters();
    auto from = src->parameters();
    for (size_t i = 0; i < dst.size(); ++i) {
        dst[i].copy_(from[i]);
    }
    for (auto& p : dst) {
        p.set_requires_grad(false);
    }
    return copy;
}

void assign_parameters(torch::nn::Module& module, const std::string& prefix,
                       const std::vector<std::pair<std::string, torch::Tensor>>& values) {
    std::map<std::string, torch::Tensor> lookup(values.begin(), values.end());
    torch::NoGradGuard no_grad;
    for (auto& item : module.named_parameters()) {
        const auto key = prefix + item.key();
        auto it = lookup.find(key);
        if (it == lookup.end()) {
            throw std::runtime_error("missing parameter '" + key + "'");
        }
        if (it->second.sizes() != item.value().sizes()) {
            throw std::runtime_error("parameter '" + key + "' has shape " + c10::str(it->second.sizes()) +
                                     ", expected " + c10::str(item.value().sizes()));
        }
        item.value().copy_(it->second);
    }
}

}  // namespace lld
