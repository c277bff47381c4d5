#pragma once

#include <cstdint>
#include <functional>

#include <torch/torch.h>

#include "lld/encoder.hpp"
#include "lld/schedule.hpp"
#include "lld/unet.hpp"

namespace lld {

/// Input channels of the denoiser head: (x_t, y, C(y)).
inline constexpr int64_t kDenoiserInputChannels = 9;

/// Conditional noise predictor: the time-conditioned U-Net backbone over the
/// channel concatenation (x_t, y, C(y)), with E(y) fed to every decoder level.
class DenoiserImpl : public torch::nn::Module {
public:
    DenoiserImpl(int64_t base_width, bool attention);

    /// t: [B] integer timesteps in [1, T].
    torch::Tensor forward(const torch::Tensor& x_t, const torch::Tensor& y,
                          const DegradationRepresentation& rep, const torch::Tensor& cmap,
                          const torch::Tensor& t);

    UNet& backbone() { return unet_; }

private:
    UNet unet_{nullptr};
};
TORCH_MODULE(Denoiser);

/// e_t = eps_theta(x_t, y, E(y), C(y), t) for a batch that shares timestep t.
torch::Tensor predict_noise(const torch::Tensor& x_t, const torch::Tensor& y,
                            const DegradationRepresentation& rep, const torch::Tensor& cmap, int64_t t,
                            const NoiseSchedule& schedule, Denoiser& net);

/// Deterministic implicit update:
///   x_prev = sqrt(abar_prev) * (x_t - sqrt(1 - abar_t) * e) / sqrt(abar_t) + sqrt(1 - abar_prev) * e
torch::Tensor ddim_step(const torch::Tensor& x_t, const torch::Tensor& e, double abar_t, double abar_prev);

/// Clean-image estimate (x_t - sqrt(1 - abar_t) * e) / sqrt(abar_t).
torch::Tensor predict_x0(const torch::Tensor& x_t, const torch::Tensor& e, double abar_t);

struct SampleOptions {
    /// Clamp the per-step clean-image estimate to [0, 1] before re-noising.
    /// The iterate x_t itself is never clamped.
    bool clip_denoised = true;
    /// The diffusion runs on 2x - 1 in [-1, 1]; the result is mapped back to [0, 1].
    bool centered = false;
};

using NoisePredictor = std::function<torch::Tensor(const torch::Tensor& x_t, int64_t t)>;

/// Runs the implicit sampler from a given x_T down `steps`, using alpha_bar(0) = 1
/// after the last step. Returns the final iterate clamped to [0, 1].
torch::Tensor ddim_sample(const torch::Tensor& x_T, const NoiseSchedule& schedule, const StepSequence& steps,
                          const NoisePredictor& predictor, const SampleOptions& options = {});

/// Standard normal starting noise; batch item i is drawn from its own stream
/// derived from (seed, i), so an image's result does not depend on its batch.
torch::Tensor initial_noise(at::IntArrayRef shape, uint64_t seed, torch::ScalarType dtype = torch::kFloat32);

/// Degradation-conditioned sampling of an enhanced image for a batch of low-light inputs.
torch::Tensor sample(const torch::Tensor& y, const DegradationRepresentation& rep, const torch::Tensor& cmap,
                     const NoiseSchedule& schedule, const StepSequence& steps, Denoiser& net, uint64_t seed,
                     const SampleOptions& options = {});

}  // namespace lld
