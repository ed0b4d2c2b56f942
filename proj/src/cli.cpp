#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <set>
#include <utility>

#include "json.hpp"

#include "gdepth/cli.hpp"
#include "gdepth/diffusion.hpp"
#include "gdepth/errors.hpp"
#include "gdepth/io.hpp"
#include "gdepth/kernels.hpp"
#include "gdepth/photometric.hpp"
#include "gdepth/prior.hpp"
#include "gdepth/synth.hpp"
#include "gdepth/warp.hpp"

namespace gdepth {

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// One field list drives serialization in both directions, so a key cannot
// exist in one direction only.
template <typename Config, typename F>
void visit_config(Config& c, F&& f) {
    f("steps", c.steps);
    f("lambda", c.lambda);
    f("jacobian_mode", c.jacobian_mode);
    f("ensemble", c.ensemble);
    f("warp_margin", c.warp_margin);
    f("schedule_steps", c.schedule_steps);
    f("beta_min", c.beta_min);
    f("beta_max", c.beta_max);
    f("eta", c.eta);
    f("ssim_window", c.ssim_window);
    f("ssim_c1", c.ssim_c1);
    f("ssim_c2", c.ssim_c2);
    f("gamma", c.gamma);
    f("param_lr", c.param_lr);
    f("s_raw_init", c.s_raw_init);
    f("t_raw_init", c.t_raw_init);
    f("scale_min", c.scale_min);
    f("scale_max", c.scale_max);
    f("scale_steps", c.scale_steps);
    f("global_scale", c.global_scale);
    f("mode", c.mode);
    f("repro_iters", c.repro_iters);
    f("repro_lr", c.repro_lr);
    f("prior", c.prior);
    f("checkpoint", c.checkpoint);
    f("prior_mu", c.prior_mu);
    f("prior_sigma0", c.prior_sigma0);
    f("layout", c.layout);
    f("texture", c.texture);
    f("d_min", c.d_min);
    f("d_max", c.d_max);
    f("baseline", c.baseline);
    f("fx", c.fx);
    f("fy", c.fy);
    f("cx", c.cx);
    f("cy", c.cy);
    f("width", c.width);
    f("height", c.height);
    f("corpus_size", c.corpus_size);
    f("train_steps", c.train_steps);
    f("train_batch", c.train_batch);
    f("train_lr", c.train_lr);
    f("train_momentum", c.train_momentum);
    f("hidden_channels", c.hidden_channels);
    f("hidden_stages", c.hidden_stages);
    f("val_fields", c.val_fields);
    f("left_image", c.left_image);
    f("right_image", c.right_image);
    f("calibration", c.calibration);
    f("pred_depth", c.pred_depth);
    f("gt_depth", c.gt_depth);
    f("out_dir", c.out_dir);
    f("seed", c.seed);
}

SceneLayout parse_layout(const std::string& s) {
    if (s == "fronto-plane") return SceneLayout::FrontoPlane;
    if (s == "slanted-plane") return SceneLayout::SlantedPlane;
    if (s == "sphere") return SceneLayout::SphereOnPlane;
    if (s == "heightfield") return SceneLayout::Heightfield;
    throw InvalidArgumentError(
        "layout must be fronto-plane, slanted-plane, sphere or heightfield, got '" + s + "'");
}

SceneTexture parse_texture(const std::string& s) {
    if (s == "checker") return SceneTexture::Checker;
    if (s == "smooth-noise") return SceneTexture::SmoothNoise;
    if (s == "dots") return SceneTexture::Dots;
    throw InvalidArgumentError("texture must be checker, smooth-noise or dots, got '" + s + "'");
}

JacobianMode parse_jacobian(const std::string& s) {
    if (s == "full") return JacobianMode::Full;
    if (s == "first-order") return JacobianMode::FirstOrder;
    throw InvalidArgumentError("jacobian_mode must be full or first-order, got '" + s + "'");
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

SceneSpec scene_spec_from(const RunConfig& cfg) {
    SceneSpec spec;
    spec.layout = parse_layout(cfg.layout);
    spec.texture = parse_texture(cfg.texture);
    spec.d_min = cfg.d_min;
    spec.d_max = cfg.d_max;
    spec.baseline = cfg.baseline;
    spec.fx = cfg.fx;
    spec.fy = cfg.fy;
    spec.cx = cfg.cx;
    spec.cy = cfg.cy;
    spec.width = cfg.width;
    spec.height = cfg.height;
    spec.seed = cfg.seed;
    return spec;
}

GuidanceConfig guidance_from(const RunConfig& cfg) {
    GuidanceConfig gc;
    gc.lambda = cfg.lambda;
    gc.steps = cfg.steps;
    gc.jacobian_mode = parse_jacobian(cfg.jacobian_mode);
    gc.ensemble_size = cfg.ensemble;
    gc.loss.eta = cfg.eta;
    gc.loss.ssim_window = cfg.ssim_window;
    gc.loss.ssim_c1 = cfg.ssim_c1;
    gc.loss.ssim_c2 = cfg.ssim_c2;
    gc.loss.gamma = cfg.gamma;
    gc.init_params.s_raw = cfg.s_raw_init;
    gc.init_params.t_raw = cfg.t_raw_init;
    gc.init_params.lr = cfg.param_lr;
    gc.warp_margin = cfg.warp_margin;
    return gc;
}

ViewPair load_pair(const RunConfig& cfg) {
    if (cfg.left_image.empty()) throw MissingFieldError("estimate: left_image is required");
    if (cfg.right_image.empty()) throw MissingFieldError("estimate: right_image is required");
    if (cfg.calibration.empty()) throw MissingFieldError("estimate: calibration is required");
    Image left = read_image(cfg.left_image);
    Image right = read_image(cfg.right_image);
    CalibratedRig rig = read_calibration(cfg.calibration);
    if (rig.left.width() != left.width() || rig.left.height() != left.height())
        throw DimensionMismatchError("estimate: " + cfg.left_image + " does not match the calibrated left size");
    if (rig.right.width() != right.width() || rig.right.height() != right.height())
        throw DimensionMismatchError("estimate: " + cfg.right_image + " does not match the calibrated right size");
    return ViewPair(std::move(rig.left), std::move(rig.right), std::move(left), std::move(right));
}

std::unique_ptr<DenoiserModel> make_prior(const RunConfig& cfg, const ViewPair& pair) {
    if (cfg.prior == "checkpoint") {
        if (cfg.checkpoint.empty())
            throw MissingFieldError("estimate: checkpoint is required with prior=checkpoint");
        return std::make_unique<ToyDenoiser>(load_checkpoint(cfg.checkpoint));
    }
    if (cfg.prior == "analytic") {
        if (cfg.prior_mu.empty())
            throw MissingFieldError("estimate: prior_mu is required with prior=analytic");
        const DepthMap rel = read_pfm(cfg.prior_mu);
        if (rel.width() != pair.left.width() || rel.height() != pair.left.height())
            throw DimensionMismatchError("estimate: " + cfg.prior_mu + " does not match the left view size");
        Grid mu(rel.width(), rel.height());
        for (size_t i = 0; i < mu.size(); ++i) {
            // The stored map is relative depth; the prior mean lives in the
            // latent range. Invalid pixels get the uninformative midpoint.
            const double r =
                rel.valid_mask()[i] ? std::min(1.0, std::max(0.0, rel.data()[i])) : 0.5;
            mu.data[i] = 2.0 * r - 1.0;
        }
        return std::make_unique<AnalyticGaussianDenoiser>(std::move(mu), cfg.prior_sigma0);
    }
    throw InvalidArgumentError("estimate: prior must be checkpoint or analytic, got '" + cfg.prior +
                               "'");
}

// One text line per sampler step; '#' header lines carry run-wide values.
// `scale`/`shift` are the learned softplus outputs after that step's single
// parameter update (multiply by g_s for the metric mapping).
std::string trajectory_text(const SampleResult& s, double g_s, const std::string& mode) {
    std::string out = "# seed= " + std::to_string(s.seed) + "  g_s= " + num(g_s) + "  mode= " + mode + "\n";
    for (size_t k = 0; k < s.trajectory.size(); ++k) {
        const StepRecord& r = s.trajectory[k];
        out += "step= " + std::to_string(k) + "  from= " + std::to_string(r.t) +
               "  to= " + std::to_string(r.t_next) + "  loss= " + num(r.loss_total) +
               "  ssim= " + num(r.ssim_term) + "  l1= " + num(r.l1_term) +
               "  reg= " + num(r.reg_term) + "  scale= " + num(softplus(r.s_raw)) +
               "  shift= " + num(softplus(r.t_raw)) + "\n";
    }
    return out;
}

// Prior-free baseline: plain gradient descent on the relative depth pixels
// and the scale/shift parameters together, starting from an unguided prior
// sample. The trajectory records count iterations down in the `t` fields so
// the logs read like the sampler's.
SampleResult reprojection_descent(const ViewPair& pair, const DepthMap& init_relative,
                                  const GuidanceConfig& gc, int iters, double pixel_lr,
                                  uint64_t seed) {
    if (iters < 1) throw InvalidArgumentError("reprojection-only needs at least one iteration");
    const int w = init_relative.width();
    const int h = init_relative.height();
    const int ch = pair.left_image.channels();
    constexpr double kMinRelative = 1e-12;  // keeps every pixel a legal depth

    Grid r(w, h);
    r.data = init_relative.data();
    kernels::clamp(r.data.data(), kMinRelative, 1.0, r.data.data(), r.size());
    ScaleShiftParams params = gc.init_params;
    std::vector<StepRecord> trajectory;
    trajectory.reserve(static_cast<size_t>(iters));

    for (int it = 0; it < iters; ++it) {
        const DepthMap rel(w, h, r.data);
        const DepthMap metric = to_metric(rel, params);
        const WarpResult rendered = backward_warp(pair, metric, gc.warp_margin);
        const LossValue loss = geo_loss(pair.left_image, rendered, gc.loss, params);
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
                              2.0 * gc.loss.gamma * params.s_raw;
        const double grad_t = params.g_s * softplus_derivative(params.t_raw) * sum_d +
                              2.0 * gc.loss.gamma * params.t_raw;
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

}  // namespace

std::string run_config_to_json(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    visit_config(cfg, [&](const char* key, const auto& v) { j[key] = v; });
    return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text, const std::string& context) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedHeaderError(context + ": " + e.what());
    }
    if (!j.is_object()) throw MalformedHeaderError(context + ": config root must be a JSON object");

    RunConfig cfg;
    std::set<std::string> known;
    visit_config(cfg, [&](const char* key, auto& v) {
        known.insert(key);
        const auto it = j.find(key);
        if (it == j.end()) return;  // missing keys keep their defaults
        try {
            v = it->template get<std::decay_t<decltype(v)>>();
        } catch (const nlohmann::json::exception& e) {
            throw InvalidArgumentError(context + ": bad value for '" + std::string(key) +
                                       "': " + e.what());
        }
    });
    for (const auto& item : j.items()) {
        if (!known.count(item.key()))
            throw InvalidArgumentError(context + ": unknown config key '" + item.key() + "'");
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return run_config_from_json(read_file(path), path);
}

void save_run_config(const std::string& path, const RunConfig& cfg) {
    write_file_atomic(path, run_config_to_json(cfg));
}

SynthArtifacts run_synth(const RunConfig& cfg) {
    const SceneSpec spec = scene_spec_from(cfg);
    const SyntheticScene scene = generate_scene(spec);
    ensure_out_dir(cfg.out_dir);
    SynthArtifacts a;
    a.left_image = join(cfg.out_dir, "left.pgm");
    a.right_image = join(cfg.out_dir, "right.pgm");
    a.calibration = join(cfg.out_dir, "calibration.txt");
    a.gt_depth = join(cfg.out_dir, "gt_depth.pfm");
    a.gt_relative = join(cfg.out_dir, "gt_relative.pfm");
    write_image(a.left_image, scene.pair.left_image);
    write_image(a.right_image, scene.pair.right_image);
    write_calibration(a.calibration, scene.pair.left, scene.pair.right);
    write_pfm(a.gt_depth, scene.gt_depth_left);
    write_pfm(a.gt_relative, scene.gt_relative_left);
    return a;
}

TrainArtifacts run_train_prior(const RunConfig& cfg) {
    const SceneSpec spec = scene_spec_from(cfg);
    const std::vector<Grid> corpus = generate_corpus(cfg.corpus_size, spec, cfg.seed);
    const NoiseSchedule schedule =
        linear_beta_schedule(cfg.schedule_steps, cfg.beta_min, cfg.beta_max);
    TrainConfig tc;
    tc.steps = cfg.train_steps;
    tc.batch = cfg.train_batch;
    tc.lr = cfg.train_lr;
    tc.momentum = cfg.train_momentum;
    tc.hidden_channels = cfg.hidden_channels;
    tc.hidden_stages = cfg.hidden_stages;
    tc.val_fields = cfg.val_fields;
    TrainStats stats;
    const ToyDenoiser model = train_toy_denoiser(corpus, schedule, tc, cfg.seed, &stats);
    ensure_out_dir(cfg.out_dir);
    TrainArtifacts a;
    a.checkpoint = join(cfg.out_dir, "prior.ckpt");
    save_checkpoint(model, a.checkpoint);
    a.initial_val_loss = stats.initial_val_loss;
    a.final_val_loss = stats.final_val_loss;
    return a;
}

EstimateArtifacts run_estimate(const RunConfig& cfg) {
    if (cfg.mode != "full" && cfg.mode != "scale-shift-only" && cfg.mode != "reprojection-only")
        throw InvalidArgumentError(
            "estimate: mode must be full, scale-shift-only or reprojection-only, got '" + cfg.mode +
            "'");
    if (cfg.ensemble < 1) throw InvalidArgumentError("estimate: ensemble must be >= 1");

    const ViewPair pair = load_pair(cfg);
    const std::unique_ptr<DenoiserModel> model = make_prior(cfg, pair);
    const NoiseSchedule schedule =
        linear_beta_schedule(cfg.schedule_steps, cfg.beta_min, cfg.beta_max);
    GuidanceConfig gc = guidance_from(cfg);

    double g_s = cfg.global_scale;
    if (g_s <= 0.0) {
        // Probe draw seeded past the member range so members are independent
        // of whether the sweep ran. The probe is prior-only: at this point
        // no usable scale exists yet, so the stereo loss must not run.
        const DepthMap probe = sample_prior_relative(*model, schedule, cfg.steps,
                                                     pair.left.width(), pair.left.height(),
                                                     cfg.seed + static_cast<uint64_t>(cfg.ensemble),
                                                     &pair.left_image);
        g_s = global_scale_search(
            pair, probe, log_spaced_candidates(cfg.scale_min, cfg.scale_max, cfg.scale_steps),
            gc.loss);
    }
    gc.init_params.g_s = g_s;

    std::vector<SampleResult> members;
    DepthMap median(1, 1, 1.0);
    if (cfg.mode == "reprojection-only") {
        members.reserve(static_cast<size_t>(cfg.ensemble));
        for (int m = 0; m < cfg.ensemble; ++m) {
            const uint64_t seed = cfg.seed + static_cast<uint64_t>(m);
            const DepthMap init =
                sample_prior_relative(*model, schedule, cfg.steps, pair.left.width(),
                                      pair.left.height(), seed, &pair.left_image);
            members.push_back(
                reprojection_descent(pair, init, gc, cfg.repro_iters, cfg.repro_lr, seed));
        }
        median = ensemble_median(members);
    } else {
        GuidanceConfig run_gc = gc;
        if (cfg.mode == "scale-shift-only") run_gc.lambda = 0.0;  // parameters still learn
        std::vector<uint64_t> seeds;
        seeds.reserve(static_cast<size_t>(cfg.ensemble));
        for (int m = 0; m < cfg.ensemble; ++m) seeds.push_back(cfg.seed + static_cast<uint64_t>(m));
        EnsembleResult ens = ensemble_estimate(pair, *model, run_gc, schedule, seeds);
        members = std::move(ens.members);
        median = std::move(ens.depth);
    }

    ensure_out_dir(cfg.out_dir);
    EstimateArtifacts a;
    a.global_scale = g_s;
    a.depth = join(cfg.out_dir, "depth.pfm");
    write_pfm(a.depth, median);
    for (size_t m = 0; m < members.size(); ++m) {
        char name[32];
        std::snprintf(name, sizeof name, "member_%02zu.pfm", m);
        a.member_depths.push_back(join(cfg.out_dir, name));
        write_pfm(a.member_depths.back(), members[m].metric);
        std::snprintf(name, sizeof name, "trajectory_%02zu.txt", m);
        a.trajectories.push_back(join(cfg.out_dir, name));
        write_file_atomic(a.trajectories.back(), trajectory_text(members[m], g_s, cfg.mode));
    }
    return a;
}

EvalArtifacts run_eval(const RunConfig& cfg) {
    if (cfg.pred_depth.empty()) throw MissingFieldError("eval: pred_depth is required");
    if (cfg.gt_depth.empty()) throw MissingFieldError("eval: gt_depth is required");
    const DepthMap pred = read_pfm(cfg.pred_depth);
    const DepthMap gt = read_pfm(cfg.gt_depth);
    const MetricReport raw = evaluate(pred, gt, false);
    const MetricReport aligned = evaluate(pred, gt, true);

    ensure_out_dir(cfg.out_dir);
    std::string text = report_record(raw, "raw") + "\n" + report_record(aligned, "aligned") + "\n";
    text += "\n[raw]\n" + report_block(raw);
    text += "\n[aligned]\n" + report_block(aligned);
    const std::string path = join(cfg.out_dir, "report.txt");
    write_file_atomic(path, text);
    return EvalArtifacts{path, raw, aligned};
}

}  // namespace gdepth
