#include "lld/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "lld/image_io.hpp"
#include "lld/random.hpp"

namespace fs = std::filesystem;

namespace lld {

void DegradationSpec::validate() const {
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("degradation spec: gamma must be > 0");
    }
    if (!(gain > 0.0) || gain > 1.0) {
        throw std::invalid_argument("degradation spec: gain must lie in (0, 1]");
    }
    if (!(noise_sigma >= 0.0)) {
        throw std::invalid_argument("degradation spec: noise_sigma must be >= 0");
    }
}

std::vector<std::string> list_png_ids(const fs::path& dir) {
    std::vector<std::string> ids;
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("not a directory: " + dir.string());
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            ids.push_back(entry.path().stem().string());
        }
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<PairedSample> load_paired_dataset(const fs::path& root) {
    const auto low_ids = list_png_ids(root / "low");
    const auto high_ids = list_png_ids(root / "high");
    const std::set<std::string> highs(high_ids.begin(), high_ids.end());
    const std::set<std::string> lows(low_ids.begin(), low_ids.end());
    for (const auto& id : low_ids) {
        if (!highs.count(id)) {
            throw std::runtime_error("dataset " + root.string() + ": low/" + id + ".png has no high/" + id +
                                     ".png counterpart (id \"" + id + "\")");
        }
    }
    for (const auto& id : high_ids) {
        if (!lows.count(id)) {
            throw std::runtime_error("dataset " + root.string() + ": high/" + id + ".png has no low/" + id +
                                     ".png counterpart (id \"" + id + "\")");
        }
    }
    std::vector<PairedSample> out;
    for (const auto& id : low_ids) {
        PairedSample s{read_png(root / "low" / (id + ".png")), read_png(root / "high" / (id + ".png")), id};
        if (s.low.sizes() != s.high.sizes()) {
            throw std::runtime_error("dataset pair \"" + id + "\": size mismatch " + c10::str(s.low.sizes()) +
                                     " vs " + c10::str(s.high.sizes()));
        }
        out.push_back(std::move(s));
    }
    return out;
}

void save_paired_dataset(const fs::path& root, const std::vector<PairedSample>& samples) {
    fs::create_directories(root / "low");
    fs::create_directories(root / "high");
    for (const auto& s : samples) {
        write_png(root / "low" / (s.id + ".png"), s.low);
        write_png(root / "high" / (s.id + ".png"), s.high);
    }
}

PairedSample sample_patch(const PairedSample& pair, int64_t size, std::mt19937_64& rng) {
    const auto h = pair.low.size(1);
    const auto w = pair.low.size(2);
    if (size < 1 || size > std::min(h, w)) {
        throw std::invalid_argument("sample_patch: patch size " + std::to_string(size) +
                                    " exceeds image size " + std::to_string(h) + "x" + std::to_string(w));
    }
    if (size % 8 != 0) {
        throw std::invalid_argument("sample_patch: patch size must be divisible by 8");
    }
    std::uniform_int_distribution<int64_t> row(0, h - size);
    std::uniform_int_distribution<int64_t> col(0, w - size);
    const auto r = row(rng);
    const auto c = col(rng);
    auto crop = [&](const torch::Tensor& img) {
        return img.slice(1, r, r + size).slice(2, c, c + size);
    };
    return PairedSample{crop(pair.low), crop(pair.high), pair.id};
}

torch::Tensor synth_degrade(const torch::Tensor& x, const DegradationSpec& spec) {
    spec.validate();
    auto y = spec.gain * x.clamp_min(0.0).pow(spec.gamma);
    if (spec.noise_sigma > 0.0) {
        auto gen = make_generator(spec.seed);
        y = y + spec.noise_sigma * torch::randn(x.sizes(), gen, torch::TensorOptions().dtype(x.scalar_type()));
    }
    return y.clamp(0.0, 1.0);
}

std::vector<torch::Tensor> generate_clean_images(int64_t count, int64_t size, uint64_t seed) {
    auto gen = make_generator(derive_seed(seed, "clean"));
    auto opts = torch::TensorOptions().dtype(torch::kFloat32);
    auto uniform = [&](std::vector<int64_t> shape) { return torch::rand(shape, gen, opts); };
    auto grid = torch::linspace(0.0, 1.0, size, opts);
    auto yy = grid.view({size, 1}).expand({size, size});
    auto xx = grid.view({1, size}).expand({size, size});

    std::vector<torch::Tensor> images;
    for (int64_t i = 0; i < count; ++i) {
        auto c0 = (uniform({3}) * 0.6 + 0.3).view({3, 1, 1});
        auto c1 = (uniform({3}) * 0.6 + 0.3).view({3, 1, 1});
        const double angle = uniform({1}).item<double>() * 2.0 * M_PI;
        auto s = ((std::cos(angle) * xx + std::sin(angle) * yy + 1.0) / 2.0).unsqueeze(0);
        auto img = c0 * (1.0 - s) + c1 * s;
        for (int k = 0; k < 3; ++k) {
            auto p = uniform({3});
            const double cx = p[0].item<double>();
            const double cy = p[1].item<double>();
            const double r = 0.1 + 0.2 * p[2].item<double>();
            auto col = (uniform({3}) * 0.7 + 0.25).view({3, 1, 1});
            auto mask = ((xx - cx).pow(2) + (yy - cy).pow(2) < r * r).to(torch::kFloat32).unsqueeze(0);
            img = img * (1.0 - mask) + col * mask;
        }
        images.push_back(img.clamp(0.0, 1.0).contiguous());
    }
    return images;
}

std::vector<PairedSample> make_synthetic_pairs(const std::vector<torch::Tensor>& clean,
                                               const std::vector<std::string>& ids,
                                               const DegradationSpec& spec) {
    if (clean.size() != ids.size()) {
        throw std::invalid_argument("make_synthetic_pairs: one id per image required");
    }
    std::vector<PairedSample> out;
    for (size_t i = 0; i < clean.size(); ++i) {
        auto item = spec;
        item.seed = derive_seed(spec.seed, "synth", i);
        out.push_back(PairedSample{synth_degrade(clean[i], item), clean[i], ids[i]});
    }
    return out;
}

std::string to_json(const DegradationSpec& spec) {
    nlohmann::json j = {{"gamma", spec.gamma},
                        {"gain", spec.gain},
                        {"noise_sigma", spec.noise_sigma},
                        {"seed", spec.seed}};
    return j.dump(2);
}

DegradationSpec degradation_spec_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    DegradationSpec spec;
    spec.gamma = j.at("gamma").get<double>();
    spec.gain = j.at("gain").get<double>();
    spec.noise_sigma = j.at("noise_sigma").get<double>();
    spec.seed = j.at("seed").get<uint64_t>();
    spec.validate();
    return spec;
}

torch::Tensor stack_images(const std::vector<torch::Tensor>& images) {
    if (images.empty()) {
        throw std::invalid_argument("stack_images: empty batch");
    }
    return torch::stack(images);
}

}  // namespace lld
