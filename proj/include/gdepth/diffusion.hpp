#pragma once

#include <cstdint>
#include <vector>

#include "gdepth/geometry.hpp"
#include "gdepth/grid.hpp"
#include "gdepth/metric.hpp"
#include "gdepth/photometric.hpp"
#include "gdepth/warp.hpp"

namespace gdepth {

// Discrete variance-preserving corruption: z_t = sqrt(abar_t) z_0 +
// sqrt(1 - abar_t) eps, with abar_t = prod_{i<=t}(1 - beta_i), abar_0 = 1.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> alpha_bar;  // indices 0..T, strictly decreasing, (0,1]
    std::vector<double> beta;       // indices 0..T, beta[0] = 0

    void validate() const;
};

NoiseSchedule linear_beta_schedule(int T = 1000, double beta_min = 1e-4, double beta_max = 2e-2);

// Descending, evenly spaced subsequence of 1..T used for DDIM sampling,
// e.g. T=1000, steps=50 -> {1000, 980, ..., 40, 20}; the step after the last
// entry targets t = 0.
std::vector<int> ddim_timesteps(const NoiseSchedule& schedule, int steps);

struct LatentState {
    Grid z;
    int t = 0;
    uint64_t rng_seed = 0;
};

// Noise-prediction (epsilon) convention throughout: the denoiser outputs an
// estimate of the corruption noise, the score being -eps/sqrt(1-abar).
class DenoiserModel {
  public:
    virtual ~DenoiserModel() = default;

    // eps_hat for the latent; `conditioning` may be null and models may
    // ignore it. Must be a pure function of its arguments.
    virtual Grid predict(const Grid& z_t, int t, const Image* conditioning,
                         const NoiseSchedule& schedule) const = 0;

    // Exact input-Jacobian product v^T d(eps_hat)/d(z_t), written to `out`.
    // Returns false when the model cannot provide it; guidance then uses the
    // first-order approximation instead.
    virtual bool eps_input_vjp(const Grid& z_t, int t, const Image* conditioning,
                               const NoiseSchedule& schedule, const Grid& v, Grid& out) const {
        (void)z_t; (void)t; (void)conditioning; (void)schedule; (void)v; (void)out;
        return false;
    }
};

// Differentiable latent -> relative-depth decoder slot. The default below is
// the identity (pixel-space diffusion) up to the affine range map; a learned
// decoder can be substituted without touching the guidance math.
class LatentDecoder {
  public:
    virtual ~LatentDecoder() = default;
    virtual Grid decode(const Grid& z0) const = 0;
    // grad_z0 += (d decode / d z0)^T grad_x0 (exact).
    virtual Grid decode_vjp(const Grid& z0, const Grid& grad_x0) const = 0;
};

// Affine [-1,1] -> [0,1] with a hard clamp into [kMinRelative, 1]. The lower
// bound is a hair above zero so the decoded field always satisfies the
// strict-positivity invariant of DepthMap; the clamp's subgradient is zero
// outside the open interval.
class IdentityDecoder final : public LatentDecoder {
  public:
    static constexpr double kMinRelative = 1e-12;
    Grid decode(const Grid& z0) const override;
    Grid decode_vjp(const Grid& z0, const Grid& grad_x0) const override;
};

const LatentDecoder& identity_decoder();

enum class JacobianMode { Full, FirstOrder };

struct GuidanceConfig {
    double lambda = 1.0;  // guidance strength; the measurement noise scale is absorbed here
    int steps = 50;       // DDIM step count
    JacobianMode jacobian_mode = JacobianMode::Full;
    int ensemble_size = 10;
    GeoLossConfig loss;
    ScaleShiftParams init_params;  // g_s pre-selected by the caller
    double warp_margin = 0.0;

    void validate() const;
};

// Everything one sampling step derives from the current latent; exposed so
// finite-difference tests can treat the loss as a function of z_t.
struct GuidanceEval {
    Grid eps;             // denoiser prediction
    Grid z0;              // Tweedie estimate of the clean latent
    DepthMap x0;          // decoded relative depth
    DepthMap metric;      // to_metric(x0, params)
    WarpResult rendered;  // backward_warp(pair, metric)
    LossValue loss;
    double grad_s = 0.0;  // d total / d s_raw (includes the regularizer)
    double grad_t = 0.0;
    Grid grad_z;          // d image-terms / d z_t per the configured jacobian mode
};

// zhat_0 = (z_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t).
Grid tweedie(const Grid& z_t, int t, const Grid& eps_hat, const NoiseSchedule& schedule);

GuidanceEval evaluate_guidance(const Grid& z_t, int t, const DenoiserModel& model,
                               const ViewPair& pair, const ScaleShiftParams& params,
                               const GuidanceConfig& cfg, const NoiseSchedule& schedule,
                               const LatentDecoder& decoder = identity_decoder());

struct StepRecord {
    int t = 0;       // timestep consumed by this update
    int t_next = 0;  // timestep produced
    double loss_total = 0.0;
    double ssim_term = 0.0;
    double l1_term = 0.0;
    double reg_term = 0.0;
    double s_raw = 0.0;  // parameter values after this step's single update
    double t_raw = 0.0;
};

struct GuidedStepResult {
    LatentState state;
    ScaleShiftParams params;
    StepRecord record;
    DepthMap relative;  // this step's decoded clean estimate
    DepthMap metric;    // to_metric(relative) at the pre-update params
};

// One iteration of the guided sampler: predict noise, Tweedie, decode,
// convert to metric, render, score, take exactly one gradient step on
// (s_raw, t_raw), then z_{t_next} = sqrt(abar_{t_next}) zhat_0 +
// sqrt(1 - abar_{t_next}) eps_hat - lambda * grad_z (the guidance term is
// subtracted after the deterministic DDIM expression; with lambda = 0 the
// subtraction is skipped entirely, keeping the update bitwise equal to an
// unguided DDIM step).
GuidedStepResult guided_step(const LatentState& state, int t_next, const DenoiserModel& model,
                             const ViewPair& pair, const ScaleShiftParams& params,
                             const GuidanceConfig& cfg, const NoiseSchedule& schedule,
                             const LatentDecoder& decoder = identity_decoder());

struct SampleResult {
    DepthMap relative;  // decoded x~_0 from the final iteration, in [0, 1]
    DepthMap metric;    // to_metric(relative) at that step's pre-update params
    std::vector<StepRecord> trajectory;  // exactly cfg.steps records
    uint64_t seed = 0;
};

// Full trajectory: z_T from the seeded normal source, guided_step down the
// DDIM subsequence, final target t = 0. Deterministic per (seed, inputs).
SampleResult sample_metric_depth(const ViewPair& pair, const DenoiserModel& model,
                                 const GuidanceConfig& cfg, const NoiseSchedule& schedule,
                                 uint64_t seed, const LatentDecoder& decoder = identity_decoder());

// Unguided draw from the prior alone: the same DDIM trajectory as
// sample_metric_depth at lambda = 0 and the same seed, but with no
// measurement pair, no scale/shift state and no loss evaluations, so it
// cannot fail on scale-degenerate configurations. Returns the decoded clean
// estimate from the final step.
DepthMap sample_prior_relative(const DenoiserModel& model, const NoiseSchedule& schedule,
                               int steps, int width, int height, uint64_t seed,
                               const Image* conditioning = nullptr,
                               const LatentDecoder& decoder = identity_decoder());

struct EnsembleResult {
    DepthMap depth;  // per-pixel median across members
    std::vector<SampleResult> members;
};

// Per-pixel median of the members' metric maps. A pixel is valid when at
// least one member produced it; an even count averages the two middle
// values.
DepthMap ensemble_median(const std::vector<SampleResult>& members);

EnsembleResult ensemble_estimate(const ViewPair& pair, const DenoiserModel& model,
                                 const GuidanceConfig& cfg, const NoiseSchedule& schedule,
                                 const std::vector<uint64_t>& seeds,
                                 const LatentDecoder& decoder = identity_decoder());

// Prior-free baseline: plain gradient descent on the relative depth pixels
// and the scale/shift parameters together, starting from the given relative
// map (typically an unguided prior draw). Uses cfg only for the loss
// configuration and the initial parameters; the trajectory records count
// iterations down through the `t` fields so the logs read like the
// sampler's.
SampleResult reprojection_descent(const ViewPair& pair, const DepthMap& init_relative,
                                  const GuidanceConfig& cfg, int iters, double pixel_lr,
                                  uint64_t seed);

}  // namespace gdepth
