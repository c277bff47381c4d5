#include "lld/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>

#include <json.hpp>

#include "lld/checkpoint.hpp"
#include "lld/color_map.hpp"
#include "lld/hash.hpp"
#include "lld/image_io.hpp"
#include "lld/metrics.hpp"
#include "lld/random.hpp"
#include "lld/run_config.hpp"

namespace fs = std::filesystem;
namespace F = torch::nn::functional;
using nlohmann::json;

namespace lld {

int run_command(const std::function<void()>& body, std::ostream& err) {
    try {
        body();
        return kExitOk;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const TrainingError& e) {
        err << "training aborted: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

void apply_thread_environment() {
    if (const char* n = std::getenv("LLD_NUM_THREADS"); n && *n) {
        const int threads = std::atoi(n);
        if (threads > 0) {
            torch::set_num_threads(threads);
        }
    }
}

namespace {

fs::path output_dir_or_env(const fs::path& given) {
    if (const char* out = std::getenv("LLD_OUTPUT_DIR"); out && *out) {
        return fs::path(out);
    }
    return given;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
}

void write_manifest(const fs::path& dir, const std::string& name, const json& body) {
    write_text(dir / name, body.dump(2) + "\n");
}

TrainState load_for_inference(const fs::path& checkpoint) {
    if (!fs::exists(checkpoint)) {
        throw UsageError("checkpoint not found: " + checkpoint.string());
    }
    return load_checkpoint(checkpoint);
}

json train_config_json(const TrainConfig& t) {
    return {{"alpha", t.alpha},
            {"batch_size", t.batch_size},
            {"patch_size", t.patch_size},
            {"stage1_iters", t.stage1_iters},
            {"stage2_iters", t.stage2_iters},
            {"lr0", t.lr0},
            {"lr_milestones", t.lr_milestones},
            {"lr_factor", t.lr_factor},
            {"ema_decay", t.ema_decay},
            {"ema_warmup", t.ema_warmup},
            {"adam_beta1", t.adam_beta1},
            {"adam_beta2", t.adam_beta2},
            {"grad_clip", t.grad_clip},
            {"seed", t.seed},
            {"use_dgnet", t.use_dgnet},
            {"use_color_map", t.use_color_map},
            {"center_data", t.center_data}};
}

}  // namespace

torch::Tensor enhance_batch(TrainState& state, const torch::Tensor& low, const EnhanceOptions& options) {
    torch::NoGradGuard no_grad;
    const NoiseSchedule schedule(state.schedule);
    const auto steps = select_substeps(schedule.T(), options.steps);
    auto y = low.to(state.nets.dtype());
    auto rep = state.nets.encoder->forward(y);
    auto cmap = state.use_color_map ? compute_color_map(y) : torch::zeros_like(y);
    auto& net = options.use_ema ? state.ema : state.nets.denoiser;
    SampleOptions sampling;
    sampling.clip_denoised = options.clip_denoised;
    sampling.centered = state.center_data;
    return sample(y, rep, cmap, schedule, steps, net, options.seed, sampling);
}

torch::Tensor enhance_image(TrainState& state, const torch::Tensor& low, const EnhanceOptions& options) {
    if (low.dim() != 3 || low.size(0) != 3) {
        throw std::invalid_argument("enhance_image: expected a [3, H, W] image");
    }
    const auto h = low.size(1);
    const auto w = low.size(2);
    const auto ph = (8 - h % 8) % 8;
    const auto pw = (8 - w % 8) % 8;
    auto y = low.unsqueeze(0);
    if (ph || pw) {
        y = F::pad(y, F::PadFuncOptions({pw / 2, pw - pw / 2, ph / 2, ph - ph / 2}).mode(torch::kReplicate));
    }
    auto out = enhance_batch(state, y, options).squeeze(0);
    return out.slice(1, ph / 2, ph / 2 + h).slice(2, pw / 2, pw / 2 + w).to(torch::kFloat32).contiguous();
}

torch::Tensor degrade_image(TrainState& state, const torch::Tensor& high, const torch::Tensor& low) {
    torch::NoGradGuard no_grad;
    auto x = high.unsqueeze(0).to(state.nets.dtype());
    auto y = low.unsqueeze(0).to(state.nets.dtype());
    auto rep = state.nets.encoder->forward(y);
    return generate_low_light(x, rep, state.nets.dgnet).squeeze(0).to(torch::kFloat32);
}

void cmd_train(const TrainArgs& args, std::ostream& log) {
    if (args.stage != 1 && args.stage != 2) {
        throw UsageError("--stage must be 1 or 2");
    }
    auto cfg = load_run_config(args.config);
    cfg.apply_environment();
    if (cfg.dataset_root.empty()) {
        throw ConfigError("dataset_root is required for training");
    }
    if (!fs::is_directory(cfg.dataset_root)) {
        throw UsageError("dataset_root does not exist: " + cfg.dataset_root.string());
    }

    std::optional<fs::path> input_ckpt = args.resume;
    if (args.stage == 2 && !input_ckpt) {
        input_ckpt = cfg.checkpoint_dir / "stage1.ckpt";
    }
    if (input_ckpt && !fs::exists(*input_ckpt)) {
        throw UsageError(std::string(args.stage == 2 ? "stage 2 requires a stage-1 checkpoint; " : "") +
                         "missing checkpoint: " + input_ckpt->string());
    }

    const auto dataset = load_paired_dataset(cfg.dataset_root);
    if (dataset.empty()) {
        throw UsageError("dataset " + cfg.dataset_root.string() + " contains no image pairs");
    }

    TrainState state = input_ckpt ? load_checkpoint(*input_ckpt)
                                  : TrainState::initialize(cfg.model, cfg.schedule, cfg.train.seed, cfg.dtype());
    if (input_ckpt && (state.nets.config != cfg.model || state.schedule != cfg.schedule)) {
        throw ConfigError("checkpoint architecture or schedule differs from the config");
    }
    if (args.stage == 1 && state.stage == 2) {
        throw UsageError("cannot resume stage 1 from a stage-2 checkpoint: " + input_ckpt->string());
    }

    fs::create_directories(cfg.checkpoint_dir);
    fs::create_directories(cfg.output_dir);
    const auto loss_path = cfg.output_dir / "loss.csv";
    const bool new_log = !fs::exists(loss_path) || fs::file_size(loss_path) == 0;
    std::ofstream loss_log(loss_path, std::ios::app);
    if (new_log) {
        loss_log << kLossCsvHeader << '\n';
    }

    const auto ckpt_path = cfg.checkpoint_dir / (args.stage == 1 ? "stage1.ckpt" : "stage2.ckpt");
    const json extra = {{"train", train_config_json(cfg.train)}};
    TrainHooks hooks;
    hooks.on_step = [&](const LossRecord& r) {
        loss_log << to_csv_row(r) << '\n';
        if (r.iteration % 100 == 0) {
            loss_log.flush();
            log << "stage " << r.stage << " iter " << r.iteration << " lr " << r.lr << " l_total " << r.l_total
                << '\n';
        }
    };
    hooks.on_checkpoint = [&](const TrainState& s) { save_checkpoint(ckpt_path, s, extra); };

    const auto start = std::chrono::steady_clock::now();
    state = args.stage == 1 ? train_stage1(cfg.train, std::move(state), dataset, hooks)
                            : train_stage2(cfg.train, std::move(state), dataset, hooks);
    loss_log.flush();
    save_checkpoint(ckpt_path, state, extra);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    write_manifest(cfg.output_dir, "train_stage" + std::to_string(args.stage) + "_manifest.json",
                   {{"command", "train"},
                    {"stage", args.stage},
                    {"config", to_text(cfg)},
                    {"resume", input_ckpt ? input_ckpt->string() : ""},
                    {"checkpoint", ckpt_path.string()},
                    {"checkpoint_hash", checkpoint_hash(ckpt_path)},
                    {"iteration", state.iteration},
                    {"seconds", seconds}});
    log << "wrote " << ckpt_path.string() << " at iteration " << state.iteration << '\n';
}

void cmd_enhance(const EnhanceArgs& args, std::ostream& log) {
    auto state = load_for_inference(args.checkpoint);
    const auto out_dir = output_dir_or_env(args.output_dir);
    const auto ids = list_png_ids(args.input_dir);
    if (args.steps < 1 || args.steps > state.schedule.T) {
        throw UsageError("--steps must lie in [1, " + std::to_string(state.schedule.T) + "]");
    }
    fs::create_directories(out_dir);

    EnhanceOptions opts;
    opts.steps = args.steps;
    opts.use_ema = args.use_ema;
    opts.clip_denoised = args.clip_denoised;

    json images = json::array();
    for (const auto& id : ids) {
        auto low = read_png(args.input_dir / (id + ".png"));
        opts.seed = derive_seed(args.seed, "enhance:" + id);
        write_png(out_dir / (id + ".png"), enhance_image(state, low, opts));
        if (args.dump_color_map) {
            write_png(out_dir / "color_maps" / (id + ".png"), compute_color_map(low));
        }
        images.push_back(id);
        log << "enhanced " << id << '\n';
    }
    write_manifest(out_dir, "manifest.json",
                   {{"command", "enhance"},
                    {"checkpoint", fs::absolute(args.checkpoint).string()},
                    {"checkpoint_hash", checkpoint_hash(args.checkpoint)},
                    {"input_dir", fs::absolute(args.input_dir).string()},
                    {"steps", args.steps},
                    {"seed", args.seed},
                    {"use_ema", args.use_ema},
                    {"clip_denoised", args.clip_denoised},
                    {"images", images}});
}

void cmd_eval(const EvalArgs& args, std::ostream& log) {
    const auto pred_ids = list_png_ids(args.pred_dir);
    const auto gt_ids = list_png_ids(args.gt_dir);
    const std::set<std::string> gts(gt_ids.begin(), gt_ids.end());
    const std::set<std::string> preds(pred_ids.begin(), pred_ids.end());
    for (const auto& id : pred_ids) {
        if (!gts.count(id)) {
            throw UsageError("prediction " + id + ".png has no ground truth in " + args.gt_dir.string());
        }
    }
    for (const auto& id : gt_ids) {
        if (!preds.count(id)) {
            throw UsageError("ground truth " + id + ".png has no prediction in " + args.pred_dir.string());
        }
    }
    MetricsReport report;
    for (const auto& id : pred_ids) {
        auto a = read_png(args.pred_dir / (id + ".png"));
        auto b = read_png(args.gt_dir / (id + ".png"));
        if (a.sizes() != b.sizes()) {
            throw UsageError("size mismatch for " + id + ".png");
        }
        report.add({id, psnr(a, b), ssim(a, b)});
    }
    const auto out_dir = output_dir_or_env(args.output_dir.empty() ? args.pred_dir : args.output_dir);
    write_text(out_dir / "metrics.csv", report.to_csv());
    write_text(out_dir / "metrics_summary.txt", report.summary());
    write_manifest(out_dir, "eval_manifest.json",
                   {{"command", "eval"},
                    {"pred_dir", fs::absolute(args.pred_dir).string()},
                    {"gt_dir", fs::absolute(args.gt_dir).string()},
                    {"count", report.count()},
                    {"mean_psnr", report.mean_psnr},
                    {"mean_ssim", report.mean_ssim}});
    log << report.summary();
}

void cmd_degrade(const DegradeArgs& args, std::ostream& log) {
    auto state = load_for_inference(args.checkpoint);
    const auto dataset = load_paired_dataset(args.input_dir);
    const auto out_dir = output_dir_or_env(args.output_dir);
    fs::create_directories(out_dir);
    double total_l1 = 0.0;
    json images = json::array();
    for (const auto& s : dataset) {
        auto generated = degrade_image(state, s.high, s.low);
        write_png(out_dir / (s.id + ".png"), generated);
        const double l1 = lld::l1_loss(generated, s.low).item<double>();
        total_l1 += l1;
        images.push_back({{"id", s.id}, {"l1", l1}});
    }
    const double mean_l1 = dataset.empty() ? 0.0 : total_l1 / static_cast<double>(dataset.size());
    write_manifest(out_dir, "manifest.json",
                   {{"command", "degrade"},
                    {"checkpoint", fs::absolute(args.checkpoint).string()},
                    {"checkpoint_hash", checkpoint_hash(args.checkpoint)},
                    {"input_dir", fs::absolute(args.input_dir).string()},
                    {"mean_l1", mean_l1},
                    {"images", images}});
    log << "generated " << dataset.size() << " images, mean L1 vs low-light inputs " << mean_l1 << '\n';
}

void cmd_make_synth(const MakeSynthArgs& args, std::ostream& log) {
    args.spec.validate();
    if (args.clean_dir.has_value() == (args.procedural_count > 0)) {
        throw UsageError("make-synth needs exactly one of a clean directory or --procedural N");
    }
    std::vector<torch::Tensor> clean;
    std::vector<std::string> ids;
    if (args.clean_dir) {
        ids = list_png_ids(*args.clean_dir);
        for (const auto& id : ids) {
            clean.push_back(read_png(*args.clean_dir / (id + ".png")));
        }
    } else {
        clean = generate_clean_images(args.procedural_count, args.procedural_size, args.procedural_seed);
        for (int64_t i = 0; i < args.procedural_count; ++i) {
            char buf[24];
            std::snprintf(buf, sizeof buf, "%04lld", static_cast<long long>(i));
            ids.emplace_back(buf);
        }
    }
    // Degrade the quantized clean image so low/ is an exact function of high/.
    for (auto& c : clean) {
        c = quantize8(c);
    }
    const auto pairs = make_synthetic_pairs(clean, ids, args.spec);
    save_paired_dataset(args.out_root, pairs);
    write_text(args.out_root / "spec.json", to_json(args.spec) + "\n");
    write_manifest(args.out_root, "manifest.json",
                   {{"command", "make-synth"},
                    {"clean_dir", args.clean_dir ? fs::absolute(*args.clean_dir).string() : ""},
                    {"procedural_count", args.procedural_count},
                    {"procedural_size", args.procedural_size},
                    {"procedural_seed", args.procedural_seed},
                    {"spec", json::parse(to_json(args.spec))},
                    {"ids", ids}});
    log << "wrote " << pairs.size() << " pairs to " << args.out_root.string() << '\n';
}

}  // namespace lld
