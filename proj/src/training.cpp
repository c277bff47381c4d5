#include "lld/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "lld/color_map.hpp"
#include "lld/dgnet.hpp"
#include "lld/random.hpp"

namespace lld {

void TrainConfig::validate() const {
    if (!(alpha >= 0.0)) {
        throw std::invalid_argument("train config: alpha must be >= 0");
    }
    if (batch_size < 1) {
        throw std::invalid_argument("train config: batch_size must be >= 1");
    }
    if (patch_size < 8 || patch_size % 8 != 0) {
        throw std::invalid_argument("train config: patch_size must be a positive multiple of 8");
    }
    if (stage1_iters < 0 || stage2_iters < 0) {
        throw std::invalid_argument("train config: iteration counts must be >= 0");
    }
    if (!(lr0 > 0.0) || !(lr_factor > 0.0)) {
        throw std::invalid_argument("train config: lr0 and lr_factor must be positive");
    }
    for (size_t i = 1; i < lr_milestones.size(); ++i) {
        if (lr_milestones[i] <= lr_milestones[i - 1]) {
            throw std::invalid_argument("train config: lr_milestones must be strictly increasing");
        }
    }
    if (!(ema_decay > 0.0 && ema_decay < 1.0)) {
        throw std::invalid_argument("train config: ema_decay must lie in (0, 1)");
    }
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw std::invalid_argument("train config: Adam betas must lie in [0, 1)");
    }
    if (grad_clip < 0.0) {
        throw std::invalid_argument("train config: grad_clip must be >= 0");
    }
    if (checkpoint_every < 0) {
        throw std::invalid_argument("train config: checkpoint_every must be >= 0");
    }
}

TrainState TrainState::initialize(const ModelConfig& model, const ScheduleConfig& schedule, uint64_t seed,
                                  torch::ScalarType dtype) {
    NoiseSchedule{schedule};  // validates
    TrainState s;
    s.nets = Networks::create(model, derive_seed(seed, "init"));
    s.nets.to(dtype);
    s.schedule = schedule;
    s.ema = clone_denoiser(model, s.nets.denoiser);
    return s;
}

NoiseDraw draw_noise(at::IntArrayRef shape, int64_t T, torch::Generator& timestep_gen,
                     torch::Generator& noise_gen, torch::ScalarType dtype) {
    NoiseDraw d;
    d.t = torch::randint(1, T + 1, {shape[0]}, timestep_gen, torch::TensorOptions().dtype(torch::kLong));
    d.eps = torch::randn(shape, noise_gen, torch::TensorOptions().dtype(dtype));
    return d;
}

torch::Tensor diffusion_loss(const torch::Tensor& x0, const torch::Tensor& y, const DegradationRepresentation& rep,
                             const torch::Tensor& cmap, Denoiser& denoiser, const NoiseSchedule& schedule,
                             const NoiseDraw& draw) {
    if (x0.dim() != 4 || x0.size(0) == 0) {
        throw std::invalid_argument("diffusion_loss: expected a nonempty [B, 3, H, W] batch");
    }
    if (x0.sizes() != y.sizes() || x0.sizes() != draw.eps.sizes()) {
        throw std::invalid_argument("diffusion_loss: x0, y and eps must share a shape");
    }
    auto x_t = forward_diffuse(x0, draw.t, draw.eps, schedule);
    auto e = denoiser->forward(x_t, y, rep, cmap, draw.t);
    return (e - draw.eps).pow(2).mean();
}

torch::Tensor diffusion_loss(const torch::Tensor& x0, const torch::Tensor& y, DegradationEncoder& encoder,
                             Denoiser& denoiser, const NoiseSchedule& schedule, torch::Generator& gen) {
    auto draw = draw_noise(x0.sizes(), schedule.T(), gen, gen, x0.scalar_type());
    auto rep = encoder->forward(y);
    return diffusion_loss(x0, y, rep, compute_color_map(y), denoiser, schedule, draw);
}

torch::Tensor joint_loss(const torch::Tensor& l_diff, const torch::Tensor& l1, double alpha) {
    return l_diff + alpha * l1;
}

double joint_loss(double l_diff, double l1, double alpha) {
    return l_diff + alpha * l1;
}

double lr_at(int64_t iteration, const TrainConfig& config) {
    const auto passed = std::count_if(config.lr_milestones.begin(), config.lr_milestones.end(),
                                      [&](int64_t m) { return m <= iteration; });
    return config.lr0 * std::pow(config.lr_factor, static_cast<double>(passed));
}

void ema_update(torch::Tensor& shadow, const torch::Tensor& current, double decay) {
    if (shadow.sizes() != current.sizes()) {
        throw std::invalid_argument("ema_update: shape mismatch");
    }
    if (!(decay > 0.0 && decay < 1.0)) {
        throw std::invalid_argument("ema_update: decay must lie in (0, 1)");
    }
    torch::NoGradGuard no_grad;
    shadow.mul_(decay).add_(current.detach(), 1.0 - decay);
}

void ema_update(torch::nn::Module& shadow, const torch::nn::Module& current, double decay) {
    auto dst = shadow.parameters();
    auto src = current.parameters();
    if (dst.size() != src.size()) {
        throw std::invalid_argument("ema_update: parameter lists differ");
    }
    for (size_t i = 0; i < dst.size(); ++i) {
        ema_update(dst[i], src[i], decay);
    }
}

double ema_decay_at(int64_t iteration, const TrainConfig& config) {
    if (!config.ema_warmup) {
        return config.ema_decay;
    }
    const double n = static_cast<double>(iteration);
    return std::min(config.ema_decay, (1.0 + n) / (10.0 + n));
}

std::pair<torch::Tensor, torch::Tensor> make_batch(const std::vector<PairedSample>& dataset,
                                                   const TrainConfig& config, int64_t iteration,
                                                   torch::ScalarType dtype) {
    if (dataset.empty()) {
        throw std::invalid_argument("training dataset is empty");
    }
    std::mt19937_64 rng(derive_seed(config.seed, "data", static_cast<uint64_t>(iteration)));
    std::uniform_int_distribution<size_t> pick(0, dataset.size() - 1);
    std::bernoulli_distribution coin(0.5);
    std::vector<torch::Tensor> highs;
    std::vector<torch::Tensor> lows;
    for (int64_t b = 0; b < config.batch_size; ++b) {
        auto patch = sample_patch(dataset[pick(rng)], config.patch_size, rng);
        if (config.hflip && coin(rng)) {
            patch.low = patch.low.flip({2});
            patch.high = patch.high.flip({2});
        }
        highs.push_back(patch.high);
        lows.push_back(patch.low);
    }
    return {torch::stack(highs).to(dtype), torch::stack(lows).to(dtype)};
}

std::string to_csv_row(const LossRecord& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%lld,%.9g,%.9g,%.9g,%.9g", static_cast<long long>(r.iteration), r.lr, r.l_diff,
                  r.l1, r.l_total);
    return buf;
}

namespace {

NamedTensors trainable_parameters(TrainState& state, int stage, const TrainConfig& config) {
    NamedTensors params;
    if (stage == 1) {
        params = prefixed("encoder.", *state.nets.encoder);
        if (config.use_dgnet) {
            for (auto& p : prefixed("dgnet.", *state.nets.dgnet)) {
                params.push_back(std::move(p));
            }
        }
    }
    for (auto& p : prefixed("denoiser.", *state.nets.denoiser)) {
        params.push_back(std::move(p));
    }
    return params;
}

void check_finite(double value, const char* what, const TrainState& state, const LossRecord& rec) {
    if (!std::isfinite(value)) {
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "non-finite %s at stage %d iteration %lld (lr=%g, l_diff=%g, l1=%g, l_total=%g)", what,
                      state.stage, static_cast<long long>(state.iteration), rec.lr, rec.l_diff, rec.l1,
                      rec.l_total);
        throw TrainingError(buf);
    }
}

TrainState run_stage(const TrainConfig& config, TrainState state, const std::vector<PairedSample>& dataset,
                     const TrainHooks& hooks, int64_t end_iteration) {
    if (dataset.empty()) {
        throw std::invalid_argument("training dataset is empty");
    }
    const NoiseSchedule schedule(state.schedule);
    const auto dtype = state.nets.dtype();
    const int stage = state.stage;
    if (stage == 2 && (state.use_color_map != config.use_color_map || state.center_data != config.center_data)) {
        throw std::invalid_argument("stage 2 must keep the stage-1 color-map and centering settings");
    }
    state.use_color_map = config.use_color_map;
    state.center_data = config.center_data;

    Adam adam(trainable_parameters(state, stage, config),
              AdamOptions{config.adam_beta1, config.adam_beta2, config.adam_eps});
    if (state.adam_steps > 0) {
        adam.load_state(state.adam_state, state.adam_steps);
    }
    auto sync_optimizer = [&] {
        state.adam_state = adam.state();
        state.adam_steps = adam.steps();
    };

    while (state.iteration < end_iteration) {
        const auto it = static_cast<uint64_t>(state.iteration);
        auto [x, y] = make_batch(dataset, config, state.iteration, dtype);
        auto t_gen = make_generator(derive_seed(config.seed, "timestep", it));
        auto n_gen = make_generator(derive_seed(config.seed, "noise", it));
        const auto draw = draw_noise(x.sizes(), schedule.T(), t_gen, n_gen, dtype);

        DegradationRepresentation rep;
        if (stage == 1) {
            rep = state.nets.encoder->forward(y);
        } else {
            torch::NoGradGuard no_grad;
            rep = state.nets.encoder->forward(y);
        }
        auto cmap = config.use_color_map ? compute_color_map(y) : torch::zeros_like(y);
        auto x0 = config.center_data ? 2.0 * x - 1.0 : x;
        auto l_diff = diffusion_loss(x0, y, rep, cmap, state.nets.denoiser, schedule, draw);
        auto total = l_diff;
        torch::Tensor l1;
        if (stage == 1 && config.use_dgnet) {
            l1 = lld::l1_loss(generate_low_light(x, rep, state.nets.dgnet), y);
            total = joint_loss(l_diff, l1, config.alpha);
        }

        LossRecord rec;
        rec.stage = stage;
        rec.lr = lr_at(state.iteration, config);
        rec.l_diff = l_diff.item<double>();
        rec.l1 = l1.defined() ? l1.item<double>() : 0.0;
        rec.l_total = total.item<double>();
        check_finite(rec.l_total, "loss", state, rec);

        adam.zero_grad();
        total.backward();
        const double gnorm = adam.clip_grad_norm(config.grad_clip);
        check_finite(gnorm, "gradient norm", state, rec);
        adam.step(rec.lr);
        ema_update(*state.ema, *state.nets.denoiser, ema_decay_at(state.iteration, config));
        ++state.iteration;
        rec.iteration = state.iteration;

        if (hooks.on_step) {
            hooks.on_step(rec);
        }
        if (config.checkpoint_every > 0 && state.iteration % config.checkpoint_every == 0 && hooks.on_checkpoint) {
            sync_optimizer();
            hooks.on_checkpoint(state);
        }
    }
    sync_optimizer();
    return state;
}

}  // namespace

TrainState train_stage1(const TrainConfig& config, TrainState state, const std::vector<PairedSample>& dataset,
                        const TrainHooks& hooks) {
    config.validate();
    if (state.stage != 1) {
        throw std::invalid_argument("train_stage1: cannot continue joint learning from a stage-2 checkpoint");
    }
    if (dataset.empty()) {
        throw std::invalid_argument("train_stage1: training dataset is empty");
    }
    return run_stage(config, std::move(state), dataset, hooks, config.stage1_iters);
}

TrainState train_stage2(const TrainConfig& config, TrainState state, const std::vector<PairedSample>& dataset,
                        const TrainHooks& hooks) {
    config.validate();
    if (dataset.empty()) {
        throw std::invalid_argument("train_stage2: training dataset is empty");
    }
    if (state.stage == 1) {
        // Entering stage 2: new objective, so optimizer moments restart.
        state.stage = 2;
        state.stage_start = state.iteration;
        state.adam_steps = 0;
        state.adam_state.clear();
    }
    freeze(state.nets.encoder);
    for (auto& p : state.nets.dgnet->parameters()) {
        p.set_requires_grad(false);
    }
    const int64_t end = state.stage_start + config.stage2_iters;
    return run_stage(config, std::move(state), dataset, hooks, end);
}

}  // namespace lld
