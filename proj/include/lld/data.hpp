#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace lld {

/// A low-light / normal-light pair of [3, H, W] float images.
struct PairedSample {
    torch::Tensor low;
    torch::Tensor high;
    std::string id;
};

/// Known degradation family y = clamp(gain * x^gamma + n), n ~ N(0, noise_sigma^2).
struct DegradationSpec {
    double gamma = 1.0;
    double gain = 1.0;
    double noise_sigma = 0.0;
    uint64_t seed = 0;

    void validate() const;
    bool operator==(const DegradationSpec&) const = default;
};

/// Reads root/low/<id>.png and root/high/<id>.png; result sorted by id.
std::vector<PairedSample> load_paired_dataset(const std::filesystem::path& root);

/// Writes root/{low,high}/<id>.png.
void save_paired_dataset(const std::filesystem::path& root, const std::vector<PairedSample>& samples);

/// Same uniformly drawn size x size window from both images.
PairedSample sample_patch(const PairedSample& pair, int64_t size, std::mt19937_64& rng);

torch::Tensor synth_degrade(const torch::Tensor& x, const DegradationSpec& spec);

/// Deterministic procedural scenes (gradients, discs, boxes, soft texture) in
/// roughly [0.1, 0.95], used as clean images for synthetic datasets.
std::vector<torch::Tensor> generate_clean_images(int64_t count, int64_t size, uint64_t seed);

/// Pairs each clean image with its synthetic degradation. Image i uses the
/// noise stream derive_seed(spec.seed, "synth", i).
std::vector<PairedSample> make_synthetic_pairs(const std::vector<torch::Tensor>& clean,
                                               const std::vector<std::string>& ids,
                                               const DegradationSpec& spec);

/// Sorted *.png stems in a directory.
std::vector<std::string> list_png_ids(const std::filesystem::path& dir);

std::string to_json(const DegradationSpec& spec);
DegradationSpec degradation_spec_from_json(const std::string& text);

/// Stacks images into [B, 3, H, W].
torch::Tensor stack_images(const std::vector<torch::Tensor>& images);

}  // namespace lld
