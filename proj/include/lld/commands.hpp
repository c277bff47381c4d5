#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include <torch/torch.h>

#include "lld/data.hpp"
#include "lld/denoiser.hpp"
#include "lld/training.hpp"

namespace lld {

/// Bad invocation or missing inputs; maps to exit code 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Runs `body`, printing any error to `err` and mapping it to an exit code.
int run_command(const std::function<void()>& body, std::ostream& err);

/// Applies LLD_NUM_THREADS when set.
void apply_thread_environment();

// In-process pipelines.

struct EnhanceOptions {
    int64_t steps = 30;
    uint64_t seed = 0;
    bool use_ema = true;
    /// Clamp the per-step clean estimate; the value range and C(y) usage come
    /// from the checkpoint.
    bool clip_denoised = true;
};

/// Enhances a [3, H, W] low-light image. Inputs whose sides are not multiples
/// of 8 are replicate-padded around the center and cropped back afterwards.
torch::Tensor enhance_image(TrainState& state, const torch::Tensor& low, const EnhanceOptions& options);

/// Batched variant for [B, 3, H, W] inputs with sides divisible by 8.
torch::Tensor enhance_batch(TrainState& state, const torch::Tensor& low, const EnhanceOptions& options);

/// y' = DGNET(x, E(y)) for [3, H, W] images.
torch::Tensor degrade_image(TrainState& state, const torch::Tensor& high, const torch::Tensor& low);

// Command-line entry points. Each throws on failure and writes a manifest
// describing how to reproduce its outputs.

struct TrainArgs {
    std::filesystem::path config;
    int stage = 1;
    std::optional<std::filesystem::path> resume;
};
void cmd_train(const TrainArgs& args, std::ostream& log);

struct EnhanceArgs {
    std::filesystem::path checkpoint;
    std::filesystem::path input_dir;
    std::filesystem::path output_dir;
    int64_t steps = 30;
    uint64_t seed = 0;
    bool use_ema = true;
    bool clip_denoised = true;
    bool dump_color_map = false;
};
void cmd_enhance(const EnhanceArgs& args, std::ostream& log);

struct EvalArgs {
    std::filesystem::path pred_dir;
    std::filesystem::path gt_dir;
    std::filesystem::path output_dir;
};
void cmd_eval(const EvalArgs& args, std::ostream& log);

struct DegradeArgs {
    std::filesystem::path checkpoint;
    std::filesystem::path input_dir;  // paired dataset root
    std::filesystem::path output_dir;
};
void cmd_degrade(const DegradeArgs& args, std::ostream& log);

struct MakeSynthArgs {
    std::optional<std::filesystem::path> clean_dir;
    int64_t procedural_count = 0;
    int64_t procedural_size = 64;
    uint64_t procedural_seed = 0;
    std::filesystem::path out_root;
    DegradationSpec spec;
};
void cmd_make_synth(const MakeSynthArgs& args, std::ostream& log);

}  // namespace lld
