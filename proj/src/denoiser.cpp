#include "lld/denoiser.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lld/random.hpp"

namespace lld {

DenoiserImpl::DenoiserImpl(int64_t base_width, bool attention) {
    BackboneConfig cfg;
    cfg.in_channels = kDenoiserInputChannels;
    cfg.out_channels = 3;
    cfg.base_width = base_width;
    cfg.rep_channels = representation_channels(base_width);
    cfg.time_conditioned = true;
    cfg.attention = attention;
    unet_ = register_module("unet", UNet(cfg));
}

torch::Tensor DenoiserImpl::forward(const torch::Tensor& x_t, const torch::Tensor& y,
                                    const DegradationRepresentation& rep, const torch::Tensor& cmap,
                                    const torch::Tensor& t) {
    if (x_t.sizes() != y.sizes() || x_t.sizes() != cmap.sizes()) {
        throw std::invalid_argument("denoiser: x_t, y and C(y) must share a shape, got " +
                                    c10::str(x_t.sizes()) + ", " + c10::str(y.sizes()) + ", " +
                                    c10::str(cmap.sizes()));
    }
    return unet_->forward(torch::cat({x_t, y, cmap}, 1), rep.maps, t);
}

torch::Tensor predict_noise(const torch::Tensor& x_t, const torch::Tensor& y,
                            const DegradationRepresentation& rep, const torch::Tensor& cmap, int64_t t,
                            const NoiseSchedule& schedule, Denoiser& net) {
    if (t < 1 || t > schedule.T()) {
        throw std::out_of_range("predict_noise: timestep " + std::to_string(t) + " outside [1, " +
                                std::to_string(schedule.T()) + "]");
    }
    auto ts = torch::full({x_t.size(0)}, t, torch::kLong);
    return net->forward(x_t, y, rep, cmap, ts);
}

torch::Tensor predict_x0(const torch::Tensor& x_t, const torch::Tensor& e, double abar_t) {
    if (!(abar_t > 0.0) || abar_t > 1.0) {
        throw std::invalid_argument("alpha_bar_t must lie in (0, 1]");
    }
    if (x_t.sizes() != e.sizes()) {
        throw std::invalid_argument("x_t and noise estimate shapes differ");
    }
    return (x_t - std::sqrt(1.0 - abar_t) * e) / std::sqrt(abar_t);
}

torch::Tensor ddim_step(const torch::Tensor& x_t, const torch::Tensor& e, double abar_t, double abar_prev) {
    if (!(abar_prev > 0.0) || abar_prev > 1.0) {
        throw std::invalid_argument("alpha_bar_prev must lie in (0, 1]");
    }
    auto x0 = predict_x0(x_t, e, abar_t);
    return std::sqrt(abar_prev) * x0 + std::sqrt(1.0 - abar_prev) * e;
}

torch::Tensor ddim_sample(const torch::Tensor& x_T, const NoiseSchedule& schedule, const StepSequence& steps,
                          const NoisePredictor& predictor, const SampleOptions& options) {
    if (steps[0] > schedule.T()) {
        throw std::invalid_argument("step sequence exceeds the schedule horizon");
    }
    torch::NoGradGuard no_grad;
    const double lo = options.centered ? -1.0 : 0.0;
    auto x = x_T;
    for (size_t i = 0; i < steps.size(); ++i) {
        const int64_t t = steps[i];
        const double abar_t = schedule.alpha_bar(t);
        const double abar_prev = schedule.alpha_bar(steps.previous(i));
        auto e = predictor(x, t);
        if (options.clip_denoised) {
            auto x0 = predict_x0(x, e, abar_t).clamp(lo, 1.0);
            x = std::sqrt(abar_prev) * x0 + std::sqrt(1.0 - abar_prev) * e;
        } else {
            x = ddim_step(x, e, abar_t, abar_prev);
        }
    }
    if (options.centered) {
        x = (x + 1.0) / 2.0;
    }
    return x.clamp(0.0, 1.0);
}

torch::Tensor initial_noise(at::IntArrayRef shape, uint64_t seed, torch::ScalarType dtype) {
    if (shape.empty()) {
        throw std::invalid_argument("initial_noise: empty shape");
    }
    std::vector<torch::Tensor> items;
    std::vector<int64_t> item_shape(shape.begin() + 1, shape.end());
    for (int64_t i = 0; i < shape[0]; ++i) {
        auto gen = make_generator(derive_seed(seed, "sample", static_cast<uint64_t>(i)));
        items.push_back(torch::randn(item_shape, gen, torch::TensorOptions().dtype(dtype)));
    }
    return torch::stack(items);
}

torch::Tensor sample(const torch::Tensor& y, const DegradationRepresentation& rep, const torch::Tensor& cmap,
                     const NoiseSchedule& schedule, const StepSequence& steps, Denoiser& net, uint64_t seed,
                     const SampleOptions& options) {
    if (y.dim() != 4) {
        throw std::invalid_argument("sample: expected a [B, 3, H, W] batch");
    }
    auto x_T = initial_noise(y.sizes(), seed, y.scalar_type());
    auto predictor = [&](const torch::Tensor& x_t, int64_t t) {
        return predict_noise(x_t, y, rep, cmap, t, schedule, net);
    };
    return ddim_sample(x_T, schedule, steps, predictor, options);
}

}  // namespace lld
