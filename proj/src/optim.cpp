#include "lld/optim.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace lld {

Adam::Adam(NamedTensors params, AdamOptions options) : params_(std::move(params)), options_(options) {
    for (const auto& [name, p] : params_) {
        if (!p.requires_grad()) {
            throw std::invalid_argument("Adam: parameter '" + name + "' is not trainable");
        }
        m_.push_back(torch::zeros_like(p));
        v_.push_back(torch::zeros_like(p));
    }
}

void Adam::zero_grad() {
    for (auto& [name, p] : params_) {
        if (p.grad().defined()) {
            p.mutable_grad().zero_();
        }
    }
}

double Adam::clip_grad_norm(double max_norm) {
    double total = 0.0;
    for (const auto& [name, p] : params_) {
        if (p.grad().defined()) {
            total += p.grad().to(torch::kFloat64).pow(2).sum().item<double>();
        }
    }
    const double norm = std::sqrt(total);
    if (max_norm > 0.0 && norm > max_norm) {
        const double scale = max_norm / (norm + 1e-12);
        for (auto& [name, p] : params_) {
            if (p.grad().defined()) {
                p.mutable_grad().mul_(scale);
            }
        }
    }
    return norm;
}

void Adam::step(double lr) {
    torch::NoGradGuard no_grad;
    ++steps_;
    const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
    for (size_t i = 0; i < params_.size(); ++i) {
        auto& p = params_[i].second;
        if (!p.grad().defined()) {
            continue;
        }
        const auto& g = p.grad();
        m_[i].mul_(options_.beta1).add_(g, 1.0 - options_.beta1);
        v_[i].mul_(options_.beta2).addcmul_(g, g, 1.0 - options_.beta2);
        auto denom = (v_[i] / bc2).sqrt_().add_(options_.eps);
        p.addcdiv_(m_[i], denom, -lr / bc1);
    }
}

NamedTensors Adam::state() const {
    NamedTensors out;
    for (size_t i = 0; i < params_.size(); ++i) {
        out.emplace_back("adam.m." + params_[i].first, m_[i]);
        out.emplace_back("adam.v." + params_[i].first, v_[i]);
    }
    return out;
}

void Adam::load_state(const NamedTensors& state, int64_t steps) {
    std::map<std::string, torch::Tensor> lookup(state.begin(), state.end());
    torch::NoGradGuard no_grad;
    for (size_t i = 0; i < params_.size(); ++i) {
        for (auto* slot : {&m_[i], &v_[i]}) {
            const auto key = std::string(slot == &m_[i] ? "adam.m." : "adam.v.") + params_[i].first;
            auto it = lookup.find(key);
            if (it == lookup.end()) {
                throw std::runtime_error("optimizer state is missing '" + key + "'");
            }
            if (it->second.sizes() != slot->sizes()) {
                throw std::runtime_error("optimizer state '" + key + "' has the wrong shape");
            }
            slot->copy_(it->second);
        }
    }
    steps_ = steps;
}

}  // namespace lld
