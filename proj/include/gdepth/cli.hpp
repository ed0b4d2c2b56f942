#pragma once

// Implementations of the `gdepth` subcommands. Each run_* function does the
// full work of one subcommand and returns the paths it wrote, so tests can
// drive the pipeline in-process instead of spawning binaries. Every knob
// lives in RunConfig, which round-trips through JSON; the binary loads
// --config first and layers explicit flags on top.

#include <cstdint>
#include <string>
#include <vector>

#include "gdepth/eval.hpp"
#include "gdepth/metric.hpp"

namespace gdepth {

struct RunConfig {
    // Reverse-diffusion sampler.
    int steps = 50;                      // DDIM iterations per trajectory
    double lambda = 1.0;                 // guidance strength
    std::string jacobian_mode = "full";  // "full" | "first-order"
    int ensemble = 10;                   // trajectories per estimate
    double warp_margin = 0.0;            // border excluded from the warp
    int schedule_steps = 1000;           // forward-process length T
    double beta_min = 1e-4;
    double beta_max = 2e-2;

    // Reprojection loss.
    double eta = 0.85;    // SSIM weight; L1 gets 1 - eta
    int ssim_window = 7;
    double ssim_c1 = 1e-4;
    double ssim_c2 = 9e-4;
    double gamma = 1e-2;  // scale/shift regularizer weight

    // Learned scale/shift.
    double param_lr = 1e-2;
    double s_raw_init = identity_scale_raw();
    double t_raw_init = -5.0;

    // Global scale sweep (skipped when global_scale > 0).
    double scale_min = 0.5;
    double scale_max = 100.0;
    int scale_steps = 24;
    double global_scale = 0.0;

    // Estimation mode: "full", "scale-shift-only" (no latent guidance), or
    // "reprojection-only" (no diffusion prior; direct descent on the depth
    // pixels initialized from an unguided prior sample).
    std::string mode = "full";
    int repro_iters = 50;     // reprojection-only descent iterations
    double repro_lr = 1e-2;

    // Depth prior: "checkpoint" loads a trained denoiser, "analytic" builds
    // a Gaussian prior around the relative-depth map read from prior_mu.
    std::string prior = "checkpoint";
    std::string checkpoint;
    std::string prior_mu;
    double prior_sigma0 = 0.25;

    // Scene synthesis.
    std::string layout = "heightfield";  // fronto-plane | slanted-plane | sphere | heightfield
    std::string texture = "smooth-noise";  // checker | smooth-noise | dots
    double d_min = 4.0;
    double d_max = 8.0;
    double baseline = 0.5;
    double fx = 96.0;
    double fy = 96.0;
    double cx = -1.0;  // negative: image center
    double cy = -1.0;
    int width = 64;
    int height = 64;

    // Prior training.
    int corpus_size = 256;
    int train_steps = 1500;
    int train_batch = 4;
    double train_lr = 5e-3;
    double train_momentum = 0.9;
    int hidden_channels = 24;
    int hidden_stages = 2;
    int val_fields = 16;

    // Inputs and outputs.
    std::string left_image;
    std::string right_image;
    std::string calibration;
    std::string pred_depth;  // eval input
    std::string gt_depth;    // eval reference
    std::string out_dir = ".";
    uint64_t seed = 0;
};

// JSON (de)serialization. Unknown keys are rejected so a typo cannot
// silently fall back to a default; missing keys keep their defaults.
std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text, const std::string& context);
RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& cfg);

// `gdepth synth`: renders one procedural stereo scene into out_dir.
struct SynthArtifacts {
    std::string left_image;
    std::string right_image;
    std::string calibration;
    std::string gt_depth;     // metric, PFM
    std::string gt_relative;  // normalized to (0, 1), PFM
};
SynthArtifacts run_synth(const RunConfig& cfg);

// `gdepth train-prior`: generates a relative-depth corpus, trains the toy
// denoiser on it, and writes the checkpoint.
struct TrainArtifacts {
    std::string checkpoint;
    double initial_val_loss = 0.0;
    double final_val_loss = 0.0;
};
TrainArtifacts run_train_prior(const RunConfig& cfg);

// `gdepth estimate`: metric depth from a calibrated pair. Runs the global
// scale sweep (unless pinned), then one guided trajectory per ensemble
// member, and writes the per-pixel median plus every member map and a text
// trajectory log per member.
struct EstimateArtifacts {
    std::string depth;  // median across members
    std::vector<std::string> member_depths;
    std::vector<std::string> trajectories;
    double global_scale = 0.0;  // g_s actually used
};
EstimateArtifacts run_estimate(const RunConfig& cfg);

// `gdepth eval`: scores a predicted depth map against ground truth, both
// as-is and after affine alignment, and writes a small text report.
struct EvalArtifacts {
    std::string report;
    MetricReport raw;
    MetricReport aligned;
};
EvalArtifacts run_eval(const RunConfig& cfg);

}  // namespace gdepth
