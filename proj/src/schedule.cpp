#include "lld/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lld {

NoiseSchedule::NoiseSchedule(const ScheduleConfig& config) : config_(config) {
    if (config.T < 1) {
        throw std::invalid_argument("noise schedule: T must be >= 1, got " + std::to_string(config.T));
    }
    if (!(config.beta_start > 0.0) || !(config.beta_end < 1.0) || config.beta_start > config.beta_end) {
        throw std::invalid_argument("noise schedule: require 0 < beta_start <= beta_end < 1");
    }
    const auto n = static_cast<size_t>(config.T);
    betas_.resize(n);
    alphas_.resize(n);
    alpha_bars_.resize(n);
    double prod = 1.0;
    for (size_t i = 0; i < n; ++i) {
        const double frac = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        betas_[i] = config.beta_start + (config.beta_end - config.beta_start) * frac;
        alphas_[i] = 1.0 - betas_[i];
        prod *= alphas_[i];
        alpha_bars_[i] = prod;
    }
}

void NoiseSchedule::check_t(int64_t t, bool allow_zero) const {
    if (t < (allow_zero ? 0 : 1) || t > config_.T) {
        throw std::out_of_range("timestep " + std::to_string(t) + " outside [1, " +
                                std::to_string(config_.T) + "]");
    }
}

double NoiseSchedule::beta(int64_t t) const {
    check_t(t, false);
    return betas_[static_cast<size_t>(t - 1)];
}

double NoiseSchedule::alpha(int64_t t) const {
    check_t(t, false);
    return alphas_[static_cast<size_t>(t - 1)];
}

double NoiseSchedule::alpha_bar(int64_t t) const {
    check_t(t, true);
    return t == 0 ? 1.0 : alpha_bars_[static_cast<size_t>(t - 1)];
}

NoiseSchedule build_schedule(int64_t T, double beta_start, double beta_end) {
    return NoiseSchedule(ScheduleConfig{T, beta_start, beta_end});
}

torch::Tensor forward_diffuse(const torch::Tensor& x0, int64_t t, const torch::Tensor& eps,
                              const NoiseSchedule& schedule) {
    if (x0.sizes() != eps.sizes()) {
        throw std::invalid_argument("forward_diffuse: x0 and eps shapes differ");
    }
    const double abar = schedule.alpha_bar(t);
    if (t == 0) {
        throw std::out_of_range("forward_diffuse: timestep 0 is not a diffusion step");
    }
    return std::sqrt(abar) * x0 + std::sqrt(1.0 - abar) * eps;
}

torch::Tensor forward_diffuse(const torch::Tensor& x0, const torch::Tensor& t,
                              const torch::Tensor& eps, const NoiseSchedule& schedule) {
    if (x0.sizes() != eps.sizes()) {
        throw std::invalid_argument("forward_diffuse: x0 and eps shapes differ");
    }
    if (t.dim() != 1 || x0.dim() < 1 || t.size(0) != x0.size(0)) {
        throw std::invalid_argument("forward_diffuse: need one timestep per batch item");
    }
    auto ts = t.to(torch::kLong).contiguous();
    std::vector<double> sa(static_cast<size_t>(ts.size(0)));
    std::vector<double> sb(sa.size());
    auto acc = ts.accessor<int64_t, 1>();
    for (int64_t i = 0; i < ts.size(0); ++i) {
        if (acc[i] < 1) {
            throw std::out_of_range("forward_diffuse: timestep must be >= 1");
        }
        const double abar = schedule.alpha_bar(acc[i]);
        sa[static_cast<size_t>(i)] = std::sqrt(abar);
        sb[static_cast<size_t>(i)] = std::sqrt(1.0 - abar);
    }
    std::vector<int64_t> bshape(static_cast<size_t>(x0.dim()), 1);
    bshape[0] = x0.size(0);
    auto opts = torch::TensorOptions().dtype(torch::kFloat64);
    auto a = torch::tensor(sa, opts).to(x0.scalar_type()).view(bshape);
    auto b = torch::tensor(sb, opts).to(x0.scalar_type()).view(bshape);
    return a * x0 + b * eps;
}

StepSequence::StepSequence(std::vector<int64_t> steps) : steps_(std::move(steps)) {
    if (steps_.empty()) {
        throw std::invalid_argument("step sequence must be nonempty");
    }
    for (size_t i = 0; i < steps_.size(); ++i) {
        if (steps_[i] < 1) {
            throw std::invalid_argument("step sequence entries must be >= 1");
        }
        if (i > 0 && steps_[i] >= steps_[i - 1]) {
            throw std::invalid_argument("step sequence must be strictly decreasing");
        }
    }
}

StepSequence select_substeps(int64_t T, int64_t n) {
    if (n < 1 || n > T) {
        throw std::invalid_argument("select_substeps: need 1 <= n <= T (T=" + std::to_string(T) +
                                    ", n=" + std::to_string(n) + ")");
    }
    if (n == 1) {
        return StepSequence({T});
    }
    std::vector<int64_t> steps;
    steps.reserve(static_cast<size_t>(n));
    const double span = static_cast<double>(T - 1);
    for (int64_t i = 0; i < n; ++i) {
        const double v = static_cast<double>(T) - span * static_cast<double>(i) / static_cast<double>(n - 1);
        const auto s = static_cast<int64_t>(std::llround(v));
        if (steps.empty() || s < steps.back()) {
            steps.push_back(s);
        }
    }
    return StepSequence(std::move(steps));
}

}  // namespace lld
