// Command-line front end. All real work lives in the library's run_*
// functions; this file only maps flags onto a RunConfig (a --config JSON
// file first, explicit flags on top) and turns thrown errors into the
// category-coded exit status.

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "gdepth/cli.hpp"
#include "gdepth/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"guided-diffusion stereo depth tools"};
    app.require_subcommand(1);

    std::string config_path, out_dir, mode, jacobian, prior, checkpoint, prior_mu;
    std::string left, right, calibration, pred, gt, layout, texture;
    uint64_t seed = 0;
    int ensemble = 0, steps = 0, width = 0, height = 0;
    int train_steps = 0, corpus_size = 0, repro_iters = 0;
    double lambda = 0.0, global_scale = 0.0, prior_sigma0 = 0.0;
    double d_min = 0.0, d_max = 0.0, baseline = 0.0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON run configuration; flags override it");
        cmd->add_option("--seed", seed, "base RNG seed");
        cmd->add_option("--out", out_dir, "output directory");
    };

    CLI::App* synth = app.add_subcommand("synth", "render a procedural stereo scene");
    add_common(synth);
    synth->add_option("--layout", layout, "fronto-plane | slanted-plane | sphere | heightfield");
    synth->add_option("--texture", texture, "checker | smooth-noise | dots");
    synth->add_option("--width", width, "image width in pixels");
    synth->add_option("--height", height, "image height in pixels");
    synth->add_option("--d-min", d_min, "nearest scene depth, meters");
    synth->add_option("--d-max", d_max, "farthest scene depth, meters");
    synth->add_option("--baseline", baseline, "stereo baseline, meters");

    CLI::App* train = app.add_subcommand("train-prior", "train the toy denoising prior");
    add_common(train);
    train->add_option("--train-steps", train_steps, "SGD iterations");
    train->add_option("--corpus-size", corpus_size, "number of training depth fields");
    train->add_option("--width", width, "training field width");
    train->add_option("--height", height, "training field height");
    train->add_option("--layout", layout, "scene family the corpus is drawn from");

    CLI::App* estimate = app.add_subcommand("estimate", "recover metric depth from a stereo pair");
    add_common(estimate);
    estimate->add_option("--left", left, "left image (PGM/PPM)");
    estimate->add_option("--right", right, "right image (PGM/PPM)");
    estimate->add_option("--calibration", calibration, "rig calibration text file");
    estimate->add_option("--mode", mode, "full | scale-shift-only | reprojection-only");
    estimate->add_option("--ensemble", ensemble, "number of trajectories to median");
    estimate->add_option("--lambda", lambda, "guidance strength");
    estimate->add_option("--global-scale", global_scale, "pin the global scale, skipping the sweep");
    estimate->add_option("--steps", steps, "reverse-diffusion steps per trajectory");
    estimate->add_option("--jacobian", jacobian, "full | first-order decoder jacobian");
    estimate->add_option("--prior", prior, "checkpoint | analytic");
    estimate->add_option("--checkpoint", checkpoint, "trained prior weights");
    estimate->add_option("--prior-mu", prior_mu, "relative-depth PFM for the analytic prior mean");
    estimate->add_option("--prior-sigma0", prior_sigma0, "analytic prior standard deviation");
    estimate->add_option("--repro-iters", repro_iters, "descent iterations (reprojection-only)");

    CLI::App* eval = app.add_subcommand("eval", "score a depth map against ground truth");
    add_common(eval);
    eval->add_option("--pred", pred, "predicted depth (PFM)");
    eval->add_option("--gt", gt, "ground-truth depth (PFM)");

    CLI11_PARSE(app, argc, argv);

    try {
        CLI::App* cmd = app.get_subcommands().front();
        gdepth::RunConfig cfg;
        if (cmd->count("--config")) cfg = gdepth::load_run_config(config_path);

        auto override_if = [&](const char* flag, auto& dst, const auto& src) {
            // Not every flag exists on every subcommand; absent ones are
            // simply not overrides.
            const CLI::Option* opt = cmd->get_option_no_throw(flag);
            if (opt != nullptr && opt->count() > 0) dst = src;
        };
        override_if("--seed", cfg.seed, seed);
        override_if("--out", cfg.out_dir, out_dir);
        override_if("--layout", cfg.layout, layout);
        override_if("--texture", cfg.texture, texture);
        override_if("--width", cfg.width, width);
        override_if("--height", cfg.height, height);
        override_if("--d-min", cfg.d_min, d_min);
        override_if("--d-max", cfg.d_max, d_max);
        override_if("--baseline", cfg.baseline, baseline);
        override_if("--train-steps", cfg.train_steps, train_steps);
        override_if("--corpus-size", cfg.corpus_size, corpus_size);
        override_if("--left", cfg.left_image, left);
        override_if("--right", cfg.right_image, right);
        override_if("--calibration", cfg.calibration, calibration);
        override_if("--mode", cfg.mode, mode);
        override_if("--ensemble", cfg.ensemble, ensemble);
        override_if("--lambda", cfg.lambda, lambda);
        override_if("--global-scale", cfg.global_scale, global_scale);
        override_if("--steps", cfg.steps, steps);
        override_if("--jacobian", cfg.jacobian_mode, jacobian);
        override_if("--prior", cfg.prior, prior);
        override_if("--checkpoint", cfg.checkpoint, checkpoint);
        override_if("--prior-mu", cfg.prior_mu, prior_mu);
        override_if("--prior-sigma0", cfg.prior_sigma0, prior_sigma0);
        override_if("--repro-iters", cfg.repro_iters, repro_iters);
        override_if("--pred", cfg.pred_depth, pred);
        override_if("--gt", cfg.gt_depth, gt);

        if (cmd == synth) {
            const gdepth::SynthArtifacts a = gdepth::run_synth(cfg);
            std::printf("left_image = %s\n", a.left_image.c_str());
            std::printf("right_image = %s\n", a.right_image.c_str());
            std::printf("calibration = %s\n", a.calibration.c_str());
            std::printf("gt_depth = %s\n", a.gt_depth.c_str());
            std::printf("gt_relative = %s\n", a.gt_relative.c_str());
        } else if (cmd == train) {
            const gdepth::TrainArtifacts a = gdepth::run_train_prior(cfg);
            std::printf("checkpoint = %s\n", a.checkpoint.c_str());
            std::printf("initial_val_loss = %.17g\n", a.initial_val_loss);
            std::printf("final_val_loss = %.17g\n", a.final_val_loss);
        } else if (cmd == estimate) {
            const gdepth::EstimateArtifacts a = gdepth::run_estimate(cfg);
            std::printf("depth = %s\n", a.depth.c_str());
            std::printf("global_scale = %.17g\n", a.global_scale);
            std::printf("members = %zu\n", a.member_depths.size());
        } else {
            const gdepth::EvalArtifacts a = gdepth::run_eval(cfg);
            std::printf("%s\n", gdepth::report_record(a.raw, "raw").c_str());
            std::printf("%s\n", gdepth::report_record(a.aligned, "aligned").c_str());
            std::printf("report = %s\n", a.report.c_str());
        }
    } catch (const gdepth::Error& e) {
        // One machine-parsable line: the what() string already starts with
        // the category name.
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: Internal: %s\n", e.what());
        return 1;
    }
    return 0;
}
