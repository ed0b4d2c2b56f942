#include "gdepth/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "gdepth/kernels.hpp"
#include "gdepth/rng.hpp"

namespace gdepth {

void NoiseSchedule::validate() const {
    if (T < 1) throw InvalidArgumentError("noise schedule needs T >= 1");
    if (alpha_bar.size() != static_cast<size_t>(T) + 1 || beta.size() != static_cast<size_t>(T) + 1)
        throw InvalidArgumentError("noise schedule arrays must hold T+1 entries (index 0 is the clean state)");
    if (alpha_bar[0] != 1.0) throw InvalidArgumentError("alpha_bar[0] must be exactly 1");
    if (beta[0] != 0.0) throw InvalidArgumentError("beta[0] must be exactly 0");
    for (int t = 1; t <= T; ++t) {
        if (!(beta[t] > 0.0 && beta[t] < 1.0))
            throw InvalidArgumentError("beta must lie in (0, 1) for t >= 1");
        if (!(alpha_bar[t] > 0.0 && alpha_bar[t] < alpha_bar[t - 1]))
            throw InvalidArgumentError("alpha_bar must stay positive and strictly decreasing");
    }
}

NoiseSchedule linear_beta_schedule(int T, double beta_min, double beta_max) {
    if (T < 1) throw InvalidArgumentError("linear_beta_schedule needs T >= 1");
    if (!(beta_min > 0.0) || !(beta_max < 1.0) || beta_max < beta_min)
        throw InvalidArgumentError("linear_beta_schedule needs 0 < beta_min <= beta_max < 1");
    NoiseSchedule s;
    s.T = T;
    s.beta.assign(static_cast<size_t>(T) + 1, 0.0);
    s.alpha_bar.assign(static_cast<size_t>(T) + 1, 1.0);
    for (int t = 1; t <= T; ++t) {
        const double frac = (T == 1) ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(T - 1);
        s.beta[t] = beta_min + (beta_max - beta_min) * frac;
        s.alpha_bar[t] = s.alpha_bar[t - 1] * (1.0 - s.beta[t]);
    }
    return s;
}

std::vector<int> ddim_timesteps(const NoiseSchedule& schedule, int steps) {
    if (steps < 1 || steps > schedule.T)
        throw InvalidArgumentError("DDIM step count must lie in [1, T]");
    // t_k = k*T/steps for k = steps..1. Each decrement is at least
    // floor(T/steps) >= 1, so the sequence is strictly decreasing, and the
    // first entry is exactly T.
    std::vector<int> ts(static_cast<size_t>(steps));
    for (int k = steps; k >= 1; --k)
        ts[static_cast<size_t>(steps - k)] = static_cast<int>(static_cast<int64_t>(k) * schedule.T / steps);
    return ts;
}

Grid IdentityDecoder::decode(const Grid& z0) const {
    Grid x(z0.width, z0.height);
    kernels::affine(0.5, z0.data.data(), 0.5, x.data.data(), x.size());
    kernels::clamp(x.data.data(), kMinRelative, 1.0, x.data.data(), x.size());
    return x;
}

Grid IdentityDecoder::decode_vjp(const Grid& z0, const Grid& grad_x0) const {
    require_same_shape(z0, grad_x0, "decode_vjp");
    Grid g(z0.width, z0.height);
    for (size_t i = 0; i < g.size(); ++i) {
        // Zero subgradient where the clamp is active (bounds included).
        const double x = 0.5 * z0.data[i] + 0.5;
        g.data[i] = (x > kMinRelative && x < 1.0) ? 0.5 * grad_x0.data[i] : 0.0;
    }
    return g;
}

const LatentDecoder& identity_decoder() {
    static const IdentityDecoder decoder;
    return decoder;
}

void GuidanceConfig::validate() const {
    if (!std::isfinite(lambda) || lambda < 0.0)
        throw InvalidArgumentError("guidance strength must be finite and non-negative");
    if (steps < 1) throw InvalidArgumentError("sampler needs at least one step");
    if (ensemble_size < 1) throw InvalidArgumentError("ensemble size must be at least 1");
    if (!std::isfinite(warp_margin) || warp_margin < 0.0)
        throw InvalidArgumentError("warp margin must be finite and non-negative");
    loss.validate();
    init_params.validate();
}

Grid tweedie(const Grid& z_t, int t, const Grid& eps_hat, const NoiseSchedule& schedule) {
    require_same_shape(z_t, eps_hat, "tweedie");
    if (t < 0 || t > schedule.T) throw InvalidArgumentError("tweedie: timestep outside the schedule");
    // Coefficient form zhat0[i] = a*z[i] + b*eps[i] with a = 1/sqrt(abar),
    // b = -sqrt(1-abar)/sqrt(abar); kept in exactly this shape so unguided
    // trajectories are reproducible bit for bit.
    const double abar = schedule.alpha_bar[t];
    const double a = 1.0 / std::sqrt(abar);
    const double b = -std::sqrt(1.0 - abar) / std::sqrt(abar);
    Grid out(z_t.width, z_t.height);
    kernels::axpby(a, z_t.data.data(), b, eps_hat.data.data(), out.data.data(), out.size());
    return out;
}

GuidanceEval evaluate_guidance(const Grid& z_t, int t, const DenoiserModel& model,
                               const ViewPair& pair, const ScaleShiftParams& params,
                               const GuidanceConfig& cfg, const NoiseSchedule& schedule,
                               const LatentDecoder& decoder) {
    cfg.validate();
    params.validate();
    if (z_t.width != pair.left.width() || z_t.height != pair.left.height())
        throw DimensionMismatchError("evaluate_guidance: latent shape does not match the left view");

    Grid eps = model.predict(z_t, t, &pair.left_image, schedule);
    require_same_shape(z_t, eps, "denoiser prediction");
    Grid z0 = tweedie(z_t, t, eps, schedule);
    Grid x0_grid = decoder.decode(z0);
    DepthMap x0(x0_grid.width, x0_grid.height, x0_grid.data);
    DepthMap metric = to_metric(x0, params);
    WarpResult rendered = backward_warp(pair, metric, cfg.warp_margin);
    LossValue loss = geo_loss(pair.left_image, rendered, cfg.loss, params);

    // Collapse the per-sample image gradient against the warp's depth
    // jacobian to get dL/d(metric depth) per pixel; both factors are zero
    // wherever the rendering is invalid.
    const int ch = pair.left_image.channels();
    Grid dl_ddepth(z_t.width, z_t.height);
    for (size_t p = 0; p < dl_ddepth.size(); ++p) {
        double acc = 0.0;
        for (int c = 0; c < ch; ++c)
            acc += loss.grad_wrt_rendered[p * ch + c] * rendered.depth_jacobian[p * ch + c];
        dl_ddepth.data[p] = acc;
    }

    // depth = g_s*(softplus(s_raw)*x0 + softplus(t_raw)), so the raw-parameter
    // gradients pick up the sigmoid factors; the quadratic regularizer acts on
    // the raw values directly.
    const double grad_s = params.g_s * softplus_derivative(params.s_raw) *
                              kernels::dot(dl_ddepth.data.data(), x0_grid.data.data(), dl_ddepth.size()) +
                          2.0 * cfg.loss.gamma * params.s_raw;
    const double grad_t = params.g_s * softplus_derivative(params.t_raw) *
                              kernels::sum(dl_ddepth.data.data(), dl_ddepth.size()) +
                          2.0 * cfg.loss.gamma * params.t_raw;
    if (!std::isfinite(grad_s) || !std::isfinite(grad_t))
        throw NonFiniteGradientError("scale/shift gradient is not finite");

    // Latent gradient: dL/dx0 is a constant multiple of dL/d(depth), then the
    // decoder's exact VJP takes it back to the clean latent.
    Grid grad_x0(z_t.width, z_t.height);
    kernels::affine(params.g_s * params.scale(), dl_ddepth.data.data(), 0.0, grad_x0.data.data(),
                    grad_x0.size());
    Grid v = decoder.decode_vjp(z0, grad_x0);

    const double abar = schedule.alpha_bar[t];
    const double inv_sqrt_abar = 1.0 / std::sqrt(abar);
    Grid grad_z(z_t.width, z_t.height);
    bool have_full = false;
    if (cfg.jacobian_mode == JacobianMode::Full) {
        Grid jv(z_t.width, z_t.height);
        if (model.eps_input_vjp(z_t, t, &pair.left_image, schedule, v, jv)) {
            // d zhat0/d z_t = (I - sqrt(1-abar) d eps/d z_t) / sqrt(abar).
            kernels::axpby(inv_sqrt_abar, v.data.data(), -std::sqrt(1.0 - abar) * inv_sqrt_abar,
                           jv.data.data(), grad_z.data.data(), grad_z.size());
            have_full = true;
        }
    }
    if (!have_full) {
        // First-order mode treats eps_hat as locally constant in z_t.
        kernels::affine(inv_sqrt_abar, v.data.data(), 0.0, grad_z.data.data(), grad_z.size());
    }
    // Any non-finite element forces a non-finite sum, so one reduction checks
    // the whole field.
    if (!std::isfinite(kernels::sum(grad_z.data.data(), grad_z.size())))
        throw NonFiniteGradientError("latent gradient is not finite");

    return GuidanceEval{std::move(eps),    std::move(z0),   std::move(x0),
                        std::move(metric), std::move(rendered), std::move(loss),
                        grad_s,            grad_t,          std::move(grad_z)};
}

GuidedStepResult guided_step(const LatentState& state, int t_next, const DenoiserModel& model,
                             const ViewPair& pair, const ScaleShiftParams& params,
                             const GuidanceConfig& cfg, const NoiseSchedule& schedule,
                             const LatentDecoder& decoder) {
    if (t_next < 0 || t_next >= state.t)
        throw InvalidArgumentError("guided_step: t_next must lie in [0, t)");
    GuidanceEval eval = evaluate_guidance(state.z, state.t, model, pair, params, cfg, schedule, decoder);

    // Exactly one gradient step per sampler iteration, driven by the loss at
    // the pre-update parameters.
    ScaleShiftParams next_params = update_params(params, eval.grad_s, eval.grad_t);

    const double a = std::sqrt(schedule.alpha_bar[t_next]);
    const double b = std::sqrt(1.0 - schedule.alpha_bar[t_next]);
    Grid z_next(state.z.width, state.z.height);
    kernels::axpby(a, eval.z0.data.data(), b, eval.eps.data.data(), z_next.data.data(), z_next.size());
    if (cfg.lambda != 0.0) {
        // Guidance is subtracted after the deterministic DDIM expression;
        // skipping the call entirely at lambda == 0 keeps that path bitwise
        // identical to an unguided step.
        kernels::axpby(1.0, z_next.data.data(), -cfg.lambda, eval.grad_z.data.data(),
                       z_next.data.data(), z_next.size());
    }

    StepRecord rec;
    rec.t = state.t;
    rec.t_next = t_next;
    rec.loss_total = eval.loss.total;
    rec.ssim_term = eval.loss.ssim_term;
    rec.l1_term = eval.loss.l1_term;
    rec.reg_term = eval.loss.reg_term;
    rec.s_raw = next_params.s_raw;
    rec.t_raw = next_params.t_raw;

    return GuidedStepResult{LatentState{std::move(z_next), t_next, state.rng_seed}, next_params, rec,
                            std::move(eval.x0), std::move(eval.metric)};
}

SampleResult sample_metric_depth(const ViewPair& pair, const DenoiserModel& model,
                                 const GuidanceConfig& cfg, const NoiseSchedule& schedule,
                                 uint64_t seed, const LatentDecoder& decoder) {
    cfg.validate();
    schedule.validate();
    const int w = pair.left.width();
    const int h = pair.left.height();

    GaussianSource rng(seed);
    Grid z(w, h);
    rng.fill_normal(z.data.data(), z.size());
    LatentState state{std::move(z), schedule.T, seed};

    const std::vector<int> ts = ddim_timesteps(schedule, cfg.steps);
    ScaleShiftParams params = cfg.init_params;
    std::vector<StepRecord> trajectory;
    trajectory.reserve(ts.size());
    DepthMap relative(w, h, 0.5);  // overwritten by the first step
    DepthMap metric(w, h, 1.0);
    for (size_t k = 0; k < ts.size(); ++k) {
        const int t_next = (k + 1 < ts.size()) ? ts[k + 1] : 0;
        try {
            GuidedStepResult step =
                guided_step(state, t_next, model, pair, params, cfg, schedule, decoder);
            state = std::move(step.state);
            params = step.params;
            relative = std::move(step.relative);
            metric = std::move(step.metric);
            trajectory.push_back(step.record);
        } catch (const Error& e) {
            if (e.category() == ErrorCategory::NonFiniteLoss ||
                e.category() == ErrorCategory::NonFiniteGradient) {
                // Re-raise with trajectory coordinates so a blown-up run can
                // be located without a debugger.
                const std::string where = " (sampling step " + std::to_string(k) + ", t=" +
                                          std::to_string(ts[k]) + ", seed=" + std::to_string(seed) + ")";
                // what() already carries the category prefix; strip it so the
                // rebuilt error does not repeat it.
                std::string msg = e.what();
                const std::string prefix = std::string(error_category_name(e.category())) + ": ";
                if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
                if (e.category() == ErrorCategory::NonFiniteLoss)
                    throw NonFiniteLossError(msg + where);
                throw NonFiniteGradientError(msg + where);
            }
            throw;
        }
    }
    return SampleResult{std::move(relative), std::move(metric), std::move(trajectory), seed};
}

DepthMap sample_prior_relative(const DenoiserModel& model, const NoiseSchedule& schedule,
                               int steps, int width, int height, uint64_t seed,
                               const Image* conditioning, const LatentDecoder& decoder) {
    schedule.validate();
    if (width < 1 || height < 1)
        throw InvalidArgumentError("prior sample dimensions must be positive");

    GaussianSource rng(seed);
    Grid z(width, height);
    rng.fill_normal(z.data.data(), z.size());

    const std::vector<int> ts = ddim_timesteps(schedule, steps);
    Grid z0(width, height);
    for (size_t k = 0; k < ts.size(); ++k) {
        const int t = ts[k];
        const int t_next = (k + 1 < ts.size()) ? ts[k + 1] : 0;
        Grid eps = model.predict(z, t, conditioning, schedule);
        require_same_shape(z, eps, "denoiser prediction");
        z0 = tweedie(z, t, eps, schedule);
        const double a = std::sqrt(schedule.alpha_bar[t_next]);
        const double b = std::sqrt(1.0 - schedule.alpha_bar[t_next]);
        kernels::axpby(a, z0.data.data(), b, eps.data.data(), z.data.data(), z.size());
    }
    const Grid x0 = decoder.decode(z0);
    return DepthMap(x0.width, x0.height, x0.data);
}

DepthMap ensemble_median(const std::vector<SampleResult>& members) {
    if (members.empty()) throw InvalidArgumentError("ensemble median needs at least one member");
    const int w = members[0].metric.width();
    const int h = members[0].metric.height();
    std::vector<double> med(static_cast<size_t>(w) * h, 0.0);
    std::vector<uint8_t> valid(med.size(), 0);
    std::vector<double> vals;
    vals.reserve(members.size());
    for (size_t p = 0; p < med.size(); ++p) {
        vals.clear();
        for (const SampleResult& m : members)
            if (m.metric.valid_mask()[p]) vals.push_back(m.metric.data()[p]);
        if (vals.empty()) continue;  // no member produced this pixel
        std::sort(vals.begin(), vals.end());
        const size_t n = vals.size();
        med[p] = (n % 2 == 1) ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
        valid[p] = 1;
    }
    return DepthMap(w, h, std::move(med), std::move(valid));
}

EnsembleResult ensemble_estimate(const ViewPair& pair, const DenoiserModel& model,
                                 const GuidanceConfig& cfg, const NoiseSchedule& schedule,
                                 const std::vector<uint64_t>& seeds, const LatentDecoder& decoder) {
    if (seeds.empty()) throw InvalidArgumentError("ensemble needs at least one seed");
    std::vector<SampleResult> members;
    members.reserve(seeds.size());
    for (uint64_t seed : seeds)
        members.push_back(sample_metric_depth(pair, model, cfg, schedule, seed, decoder));
    DepthMap depth = ensemble_median(members);
    return EnsembleResult{std::move(depth), std::move(members)};
}

SampleResult reprojection_descent(const ViewPair& pair, const DepthMap& init_relative,
                                  const GuidanceConfig& cfg, int iters, double pixel_lr,
                                  uint64_t seed) {
    if (iters < 1) throw InvalidArgumentError("reprojection-only needs at least one iteration");
    const int w = init_relative.width();
    const int h = init_relative.height();
    const int ch = pair.left_image.channels();
    constexpr double kMinRelative = 1e-12;  // keeps every pixel a legal depth

    Grid r(w, h);
    r.data = init_relative.data();
    kernels::clamp(r.data.data(), kMinRelative, 1.0, r.data.data(), r.size());
    ScaleShiftParams params = cfg.init_params;
    std::vector<StepRecord> trajectory;
    trajectory.reserve(static_cast<size_t>(iters));

    for (int it = 0; it < iters; ++it) {
        const DepthMap rel(w, h, r.data);
        const DepthMap metric = to_metric(rel, params);
        const WarpResult rendered = backward_warp(pair, metric, cfg.warp_margin);
        const LossValue loss = geo_loss(pair.left_image, rendered, cfg.loss, params);
        if (!std::isfinite(loss.total))
            throw NonFiniteLossError("reprojection descent: loss is not finite (iteration " +
                                     std::to_string(it) + ", seed=" + std::to_string(seed) + ")");

        Grid dl_ddepth(w, h);
        for (size_t p = 0; p < dl_ddepth.size(); ++p) {
            double acc = 0.0;
            for (int c = 0; c < ch; ++c)
                acc += loss.grad_wrt_rendered[p * ch + c] * rendered.depth_jacobian[p * ch + c];
            dl_ddepth.data[p] = acc;
        }

        const double sum_d = kernels::sum(dl_ddepth.data.data(), dl_ddepth.size());
        const double dot_dr = kernels::dot(dl_ddepth.data.data(), r.data.data(), r.size());
        const double grad_s = params.g_s * softplus_derivative(params.s_raw) * dot_dr +
                              2.0 * cfg.loss.gamma * params.s_raw;
        const double grad_t = params.g_s * softplus_derivative(params.t_raw) * sum_d +
                              2.0 * cfg.loss.gamma * params.t_raw;
        if (!std::isfinite(grad_s) || !std::isfinite(grad_t) || !std::isfinite(sum_d))
            throw NonFiniteGradientError("reprojection descent: gradient is not finite (iteration " +
                                         std::to_string(it) + ", seed=" + std::to_string(seed) + ")");

        // Pixel step at the pre-update parameters, mirroring the sampler's
        // use of one loss evaluation per iteration for every update.
        const double pixel_rate = pixel_lr * params.g_s * params.scale();
        params = update_params(params, grad_s, grad_t);
        kernels::axpby(1.0, r.data.data(), -pixel_rate, dl_ddepth.data.data(), r.data.data(),
                       r.size());
        kernels::clamp(r.data.data(), kMinRelative, 1.0, r.data.data(), r.size());

        StepRecord rec;
        rec.t = iters - it;
        rec.t_next = iters - it - 1;
        rec.loss_total = loss.total;
        rec.ssim_term = loss.ssim_term;
        rec.l1_term = loss.l1_term;
        rec.reg_term = loss.reg_term;
        rec.s_raw = params.s_raw;
        rec.t_raw = params.t_raw;
        trajectory.push_back(rec);
    }

    DepthMap relative(w, h, r.data);
    DepthMap metric = to_metric(relative, params);
    return SampleResult{std::move(relative), std::move(metric), std::move(trajectory), seed};
}

}  // namespace gdepth
