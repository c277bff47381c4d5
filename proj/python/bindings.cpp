#include <iostream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lld/checkpoint.hpp"
#include "lld/color_map.hpp"
#include "lld/commands.hpp"
#include "lld/data.hpp"
#include "lld/denoiser.hpp"
#include "lld/metrics.hpp"
#include "lld/schedule.hpp"

namespace py = pybind11;
using namespace lld;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

torch::Tensor to_tensor(const Array& a) {
    std::vector<int64_t> shape(a.shape(), a.shape() + a.ndim());
    return torch::from_blob(const_cast<double*>(a.data()), shape, torch::kFloat64).clone();
}

Array to_array(const torch::Tensor& t) {
    auto c = t.detach().to(torch::kFloat64).contiguous();
    std::vector<py::ssize_t> shape(c.sizes().begin(), c.sizes().end());
    Array out(shape);
    std::memcpy(out.mutable_data(), c.data_ptr<double>(), sizeof(double) * static_cast<size_t>(c.numel()));
    return out;
}

std::vector<double> as_vector(const std::vector<double>& v) { return v; }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Degradation-aware diffusion for low-light enhancement.";

    py::class_<NoiseSchedule>(m, "NoiseSchedule")
        .def(py::init([](int64_t T, double beta_start, double beta_end) {
                 return build_schedule(T, beta_start, beta_end);
             }),
             py::arg("T") = 1000, py::arg("beta_start") = 1e-4, py::arg("beta_end") = 0.02)
        .def_property_readonly("T", &NoiseSchedule::T)
        .def_property_readonly("betas", [](const NoiseSchedule& s) { return as_vector(s.betas()); })
        .def_property_readonly("alphas", [](const NoiseSchedule& s) { return as_vector(s.alphas()); })
        .def_property_readonly("alpha_bars", [](const NoiseSchedule& s) { return as_vector(s.alpha_bars()); })
        .def("beta", &NoiseSchedule::beta, py::arg("t"))
        .def("alpha", &NoiseSchedule::alpha, py::arg("t"))
        .def("alpha_bar", &NoiseSchedule::alpha_bar, py::arg("t"));

    m.def(
        "forward_diffuse",
        [](const Array& x0, int64_t t, const Array& eps, const NoiseSchedule& s) {
            return to_array(forward_diffuse(to_tensor(x0), t, to_tensor(eps), s));
        },
        py::arg("x0"), py::arg("t"), py::arg("eps"), py::arg("schedule"));

    m.def(
        "select_substeps", [](int64_t T, int64_t n) { return select_substeps(T, n).steps(); }, py::arg("T"),
        py::arg("n"));

    m.def(
        "ddim_step",
        [](const Array& x_t, const Array& e, double abar_t, double abar_prev) {
            return to_array(ddim_step(to_tensor(x_t), to_tensor(e), abar_t, abar_prev));
        },
        py::arg("x_t"), py::arg("e"), py::arg("abar_t"), py::arg("abar_prev"));

    m.def(
        "color_map", [](const Array& y, double eps) { return to_array(compute_color_map(to_tensor(y), eps)); },
        py::arg("y"), py::arg("epsilon") = kColorMapEpsilon,
        "Per-pixel channel normalization of a [3, H, W] or [B, 3, H, W] image.");

    m.def(
        "psnr", [](const Array& a, const Array& b) { return psnr(to_tensor(a), to_tensor(b)); }, py::arg("a"),
        py::arg("b"));
    m.def(
        "ssim", [](const Array& a, const Array& b) { return ssim(to_tensor(a), to_tensor(b)); }, py::arg("a"),
        py::arg("b"), "Luma SSIM, 11x11 Gaussian window, valid region.");

    m.def(
        "synth_degrade",
        [](const Array& x, double gamma, double gain, double sigma, uint64_t seed) {
            return to_array(synth_degrade(to_tensor(x), DegradationSpec{gamma, gain, sigma, seed}));
        },
        py::arg("x"), py::arg("gamma"), py::arg("gain"), py::arg("noise_sigma"), py::arg("seed") = 0);

    m.def(
        "clean_images",
        [](int64_t count, int64_t size, uint64_t seed) {
            std::vector<Array> out;
            for (auto& t : generate_clean_images(count, size, seed)) out.push_back(to_array(t));
            return out;
        },
        py::arg("count"), py::arg("size"), py::arg("seed") = 0);

    py::class_<TrainState>(m, "Model")
        .def_static("load", &load_checkpoint, py::arg("path"))
        .def_readonly("stage", &TrainState::stage)
        .def_readonly("iteration", &TrainState::iteration)
        .def(
            "enhance",
            [](TrainState& s, const Array& low, int64_t steps, uint64_t seed, bool use_ema, bool clip) {
                auto y = to_tensor(low);
                torch::Tensor out;
                {
                    py::gil_scoped_release release;
                    out = enhance_image(s, y, EnhanceOptions{steps, seed, use_ema, clip});
                }
                return to_array(out);
            },
            py::arg("low"), py::arg("steps") = 30, py::arg("seed") = 0, py::arg("use_ema") = true,
            py::arg("clip_denoised") = true)
        .def(
            "degrade",
            [](TrainState& s, const Array& high, const Array& low) {
                return to_array(degrade_image(s, to_tensor(high), to_tensor(low)));
            },
            py::arg("high"), py::arg("low"));

    m.def(
        "train",
        [](const std::filesystem::path& config, int stage, std::optional<std::filesystem::path> resume) {
            py::gil_scoped_release release;
            cmd_train(TrainArgs{config, stage, resume}, std::cerr);
        },
        py::arg("config"), py::arg("stage"), py::arg("resume") = py::none());
    m.def(
        "make_synth",
        [](const std::filesystem::path& out, int64_t count, int64_t size, uint64_t scene_seed, double gamma,
           double gain, double sigma, uint64_t seed) {
            MakeSynthArgs a;
            a.procedural_count = count;
            a.procedural_size = size;
            a.procedural_seed = scene_seed;
            a.out_root = out;
            a.spec = DegradationSpec{gamma, gain, sigma, seed};
            cmd_make_synth(a, std::cerr);
        },
        py::arg("out"), py::arg("count"), py::arg("size") = 64, py::arg("scene_seed") = 0, py::arg("gamma") = 2.2,
        py::arg("gain") = 0.3, py::arg("noise_sigma") = 0.02, py::arg("seed") = 0);
    m.def(
        "evaluate",
        [](const std::filesystem::path& pred, const std::filesystem::path& gt, const std::filesystem::path& out) {
            cmd_eval(EvalArgs{pred, gt, out}, std::cerr);
        },
        py::arg("pred"), py::arg("gt"), py::arg("output"));
}
