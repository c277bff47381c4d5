// lldiffusion: train, enhance, evaluate and synthesize low-light data.

#include <iostream>

#include <CLI11.hpp>

#include "lld/commands.hpp"

int main(int argc, char** argv) {
    using namespace lld;
    CLI::App app{"Low-light image enhancement with a degradation-aware diffusion model"};
    app.require_subcommand(1);

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Train stage 1 or stage 2");
    train_cmd->add_option("--config", train.config, "Run config file")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--stage", train.stage, "Training stage")->required()->check(CLI::IsMember({1, 2}));
    std::string resume;
    train_cmd->add_option("--resume", resume, "Checkpoint to continue from");

    EnhanceArgs enhance;
    auto* enhance_cmd = app.add_subcommand("enhance", "Enhance a directory of low-light PNGs");
    enhance_cmd->add_option("--checkpoint", enhance.checkpoint)->required();
    enhance_cmd->add_option("--input", enhance.input_dir)->required()->check(CLI::ExistingDirectory);
    enhance_cmd->add_option("--output", enhance.output_dir)->required();
    enhance_cmd->add_option("--steps", enhance.steps, "Sampling steps")->check(CLI::PositiveNumber);
    enhance_cmd->add_option("--seed", enhance.seed);
    bool raw_weights = false;
    bool no_clip = false;
    enhance_cmd->add_flag("--raw-weights", raw_weights, "Use the raw denoiser instead of its EMA");
    enhance_cmd->add_flag("--no-clip", no_clip, "Do not clamp the predicted clean image between steps");
    enhance_cmd->add_flag("--dump-color-map", enhance.dump_color_map);

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "PSNR / SSIM of predictions against references");
    eval_cmd->add_option("--pred", eval.pred_dir)->required()->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--gt", eval.gt_dir)->required()->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--output", eval.output_dir, "Defaults to the prediction directory");

    DegradeArgs degrade;
    auto* degrade_cmd = app.add_subcommand("degrade", "Run the degradation generator on a paired dataset");
    degrade_cmd->add_option("--checkpoint", degrade.checkpoint)->required();
    degrade_cmd->add_option("--input", degrade.input_dir, "Dataset root with low/ and high/")
        ->required()
        ->check(CLI::ExistingDirectory);
    degrade_cmd->add_option("--output", degrade.output_dir)->required();

    MakeSynthArgs synth;
    auto* synth_cmd = app.add_subcommand("make-synth", "Build a synthetic paired dataset");
    std::string clean_dir;
    synth_cmd->add_option("--clean", clean_dir, "Directory of clean PNGs")->check(CLI::ExistingDirectory);
    synth_cmd->add_option("--procedural", synth.procedural_count, "Generate N procedural clean images");
    synth_cmd->add_option("--size", synth.procedural_size, "Procedural image size");
    synth_cmd->add_option("--scene-seed", synth.procedural_seed);
    synth_cmd->add_option("--out", synth.out_root)->required();
    synth_cmd->add_option("--gamma", synth.spec.gamma);
    synth_cmd->add_option("--gain", synth.spec.gain);
    synth_cmd->add_option("--sigma", synth.spec.noise_sigma);
    synth_cmd->add_option("--seed", synth.spec.seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    apply_thread_environment();
    auto& log = std::cout;
    return run_command(
        [&] {
            if (*train_cmd) {
                if (!resume.empty()) {
                    train.resume = resume;
                }
                cmd_train(train, log);
            } else if (*enhance_cmd) {
                enhance.use_ema = !raw_weights;
                enhance.clip_denoised = !no_clip;
                cmd_enhance(enhance, log);
            } else if (*eval_cmd) {
                cmd_eval(eval, log);
            } else if (*degrade_cmd) {
                cmd_degrade(degrade, log);
            } else if (*synth_cmd) {
                if (!clean_dir.empty()) {
                    synth.clean_dir = clean_dir;
                }
                cmd_make_synth(synth, log);
            }
        },
        std::cerr);
}
