#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "lld/model.hpp"

namespace lld {

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam over a fixed, named parameter list. Moments are addressable by
/// parameter name so they can be checkpointed.
class Adam {
public:
    Adam(NamedTensors params, AdamOptions options);

    void zero_grad();
    /// One update with learning rate `lr`; parameters without a gradient are skipped.
    void step(double lr);

    /// Rescales gradients so their global L2 norm is at most max_norm. Returns
    /// the norm before clipping.
    double clip_grad_norm(double max_norm);

    int64_t steps() const { return steps_; }
    const NamedTensors& params() const { return params_; }

    /// "adam.m.<name>" and "adam.v.<name>" entries.
    NamedTensors state() const;
    void load_state(const NamedTensors& state, int64_t steps);

private:
    NamedTensors params_;
    AdamOptions options_;
    std::vector<torch::Tensor> m_;
    std::vector<torch::Tensor> v_;
    int64_t steps_ = 0;
};

}  // namespace lld
