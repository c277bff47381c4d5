#pragma once

#include <cstdint>
#include <vector>

#include <torch/torch.h>

namespace lld {

/// Parameters that fully determine a linear noise schedule. Stored verbatim
/// in checkpoint headers.
struct ScheduleConfig {
    int64_t T = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;

    bool operator==(const ScheduleConfig&) const = default;
};

/// Linear-beta diffusion schedule. Timesteps are 1-based: index t in [1, T]
/// refers to element t-1 of each table. alpha_bar(0) is defined as exactly 1.
class NoiseSchedule {
public:
    explicit NoiseSchedule(const ScheduleConfig& config);

    int64_t T() const { return config_.T; }
    const ScheduleConfig& config() const { return config_; }

    double beta(int64_t t) const;
    double alpha(int64_t t) const;
    double alpha_bar(int64_t t) const;

    const std::vector<double>& betas() const { return betas_; }
    const std::vector<double>& alphas() const { return alphas_; }
    const std::vector<double>& alpha_bars() const { return alpha_bars_; }

private:
    void check_t(int64_t t, bool allow_zero) const;

    ScheduleConfig config_;
    std::vector<double> betas_;
    std::vector<double> alphas_;
    std::vector<double> alpha_bars_;
};

NoiseSchedule build_schedule(int64_t T, double beta_start, double beta_end);

/// x_t = sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps. No clamping.
torch::Tensor forward_diffuse(const torch::Tensor& x0, int64_t t, const torch::Tensor& eps,
                              const NoiseSchedule& schedule);

/// Per-sample variant for batched training: t holds one timestep per batch item.
torch::Tensor forward_diffuse(const torch::Tensor& x0, const torch::Tensor& t,
                              const torch::Tensor& eps, const NoiseSchedule& schedule);

/// Strictly decreasing subset of [1, T] used by the implicit sampler.
class StepSequence {
public:
    explicit StepSequence(std::vector<int64_t> steps);

    const std::vector<int64_t>& steps() const { return steps_; }
    size_t size() const { return steps_.size(); }
    int64_t operator[](size_t i) const { return steps_[i]; }
    /// Timestep that follows step i, 0 after the last one.
    int64_t previous(size_t i) const { return i + 1 < steps_.size() ? steps_[i + 1] : 0; }

    auto begin() const { return steps_.begin(); }
    auto end() const { return steps_.end(); }

private:
    std::vector<int64_t> steps_;
};

/// n timesteps from round(linspace(T, 1, n)); n == 1 yields [T].
StepSequence select_substeps(int64_t T, int64_t n);

}  // namespace lld
