#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "lld/data.hpp"
#include "lld/model.hpp"
#include "lld/optim.hpp"
#include "lld/schedule.hpp"

namespace lld {

struct TrainConfig {
    double alpha = 0.1;
    int64_t batch_size = 8;
    int64_t patch_size = 128;
    int64_t stage1_iters = 2000;
    int64_t stage2_iters = 500;
    double lr0 = 1e-3;
    std::vector<int64_t> lr_milestones{1000, 10000, 600000};
    double lr_factor = 0.5;
    double ema_decay = 0.999;
    /// Use min(ema_decay, (1 + n) / (10 + n)) at global iteration n.
    bool ema_warmup = true;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    /// Global gradient-norm clip; 0 disables it.
    double grad_clip = 0.0;
    uint64_t seed = 0;
    /// Ablation switches: without the generator, stage 1 optimizes L_diff only;
    /// without the color map, its input channels are fed zeros.
    bool use_dgnet = true;
    bool use_color_map = true;
    bool hflip = false;
    /// Diffuse 2x - 1 instead of x.
    bool center_data = true;
    /// Write a checkpoint every n iterations through the hook; 0 disables.
    int64_t checkpoint_every = 0;

    void validate() const;
};

struct LossRecord {
    int64_t iteration = 0;  // global iteration count after the step
    int stage = 1;
    double lr = 0.0;
    double l_diff = 0.0;
    double l1 = 0.0;
    double l_total = 0.0;
};

/// Everything a run needs to continue: networks, denoiser EMA, optimizer moments
/// and counters.
struct TrainState {
    Networks nets;
    ScheduleConfig schedule;
    Denoiser ema{nullptr};
    int stage = 1;
    int64_t iteration = 0;
    int64_t stage_start = 0;
    int64_t adam_steps = 0;
    NamedTensors adam_state;
    /// Whether the denoiser was trained with C(y) (false: zero channels).
    bool use_color_map = true;
    /// Whether the denoiser was trained on 2x - 1.
    bool center_data = true;

    static TrainState initialize(const ModelConfig& model, const ScheduleConfig& schedule, uint64_t seed,
                                 torch::ScalarType dtype = torch::kFloat32);
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Timesteps and Gaussian noise for one diffusion-loss evaluation.
struct NoiseDraw {
    torch::Tensor t;    // [B] int64 in [1, T]
    torch::Tensor eps;  // same shape as the clean batch
};

NoiseDraw draw_noise(at::IntArrayRef shape, int64_t T, torch::Generator& timestep_gen,
                     torch::Generator& noise_gen, torch::ScalarType dtype);

/// L_diff = mean ||eps_theta(x_t, y, E(y), C(y), t) - eps||^2 for a given draw.
torch::Tensor diffusion_loss(const torch::Tensor& x0, const torch::Tensor& y, const DegradationRepresentation& rep,
                             const torch::Tensor& cmap, Denoiser& denoiser, const NoiseSchedule& schedule,
                             const NoiseDraw& draw);

/// Convenience overload that encodes y and draws (t, eps) from `gen`.
torch::Tensor diffusion_loss(const torch::Tensor& x0, const torch::Tensor& y, DegradationEncoder& encoder,
                             Denoiser& denoiser, const NoiseSchedule& schedule, torch::Generator& gen);

/// L_total = l_diff + alpha * l1.
torch::Tensor joint_loss(const torch::Tensor& l_diff, const torch::Tensor& l1, double alpha);
double joint_loss(double l_diff, double l1, double alpha);

/// lr0 * factor^(number of milestones <= iteration).
double lr_at(int64_t iteration, const TrainConfig& config);

/// shadow <- decay * shadow + (1 - decay) * current, element-wise.
void ema_update(torch::Tensor& shadow, const torch::Tensor& current, double decay);
void ema_update(torch::nn::Module& shadow, const torch::nn::Module& current, double decay);

double ema_decay_at(int64_t iteration, const TrainConfig& config);

struct TrainHooks {
    std::function<void(const LossRecord&)> on_step;
    std::function<void(const TrainState&)> on_checkpoint;
};

/// Joint learning: encoder, generator and denoiser minimize L_diff + alpha * L1.
/// Starts from `state` (fresh or a stage-1 checkpoint) and runs until
/// config.stage1_iters iterations are done.
TrainState train_stage1(const TrainConfig& config, TrainState state, const std::vector<PairedSample>& dataset,
                        const TrainHooks& hooks = {});

/// Encoder frozen, generator excluded; only the denoiser (and its EMA) learns
/// from L_diff. Accepts a finished stage-1 state or a partial stage-2 state.
TrainState train_stage2(const TrainConfig& config, TrainState state, const std::vector<PairedSample>& dataset,
                        const TrainHooks& hooks = {});

/// One paired training batch for global iteration `iteration`, drawn from the
/// "data" stream of config.seed.
std::pair<torch::Tensor, torch::Tensor> make_batch(const std::vector<PairedSample>& dataset,
                                                   const TrainConfig& config, int64_t iteration,
                                                   torch::ScalarType dtype);

/// Loss-log row in the CSV layout iteration,lr,l_diff,l1,l_total.
std::string to_csv_row(const LossRecord& record);
inline constexpr const char* kLossCsvHeader = "iteration,lr,l_diff,l1,l_total";

}  // namespace lld
