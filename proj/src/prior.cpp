#include "gdepth/prior.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <utility>

#include "gdepth/kernels.hpp"
#include "gdepth/rng.hpp"

namespace gdepth {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double silu(double x) { return x * sigmoid(x); }
double silu_derivative(double x) {
    const double s = sigmoid(x);
    return s * (1.0 + x * (1.0 - s));
}

void check_timestep(int t, const NoiseSchedule& schedule, const char* what) {
    if (t < 0 || t > schedule.T)
        throw InvalidArgumentError(std::string(what) + ": timestep outside the schedule");
}

}  // namespace

Grid analytic_predict(const Grid& z_t, int t, const NoiseSchedule& schedule, const Grid& mu,
                      double sigma0) {
    require_same_shape(z_t, mu, "analytic_predict");
    check_timestep(t, schedule, "analytic_predict");
    if (!std::isfinite(sigma0) || !(sigma0 > 0.0))
        throw InvalidArgumentError("analytic_predict: sigma0 must be positive and finite");

    const double abar = schedule.alpha_bar[t];
    Grid eps(z_t.width, z_t.height);
    if (1.0 - abar == 0.0) return eps;  // noiseless observation: eps_hat = 0

    const double sq = std::sqrt(abar);
    const double s2 = sigma0 * sigma0;
    const double denom = abar * s2 + (1.0 - abar);
    // Posterior mean m, then invert the corruption at m.
    Grid m(z_t.width, z_t.height);
    kernels::axpby(sq * s2 / denom, z_t.data.data(), (1.0 - abar) / denom, mu.data.data(),
                   m.data.data(), m.size());
    const double inv_sq_om = 1.0 / std::sqrt(1.0 - abar);
    kernels::axpby(inv_sq_om, z_t.data.data(), -sq * inv_sq_om, m.data.data(), eps.data.data(),
                   eps.size());
    return eps;
}

AnalyticGaussianDenoiser::AnalyticGaussianDenoiser(Grid mu, double sigma0)
    : mu_(std::move(mu)), sigma0_(sigma0) {
    if (!std::isfinite(sigma0_) || !(sigma0_ > 0.0))
        throw InvalidArgumentError("AnalyticGaussianDenoiser: sigma0 must be positive and finite");
    if (!std::isfinite(kernels::sum(mu_.data.data(), mu_.size())))
        throw InvalidArgumentError("AnalyticGaussianDenoiser: mu must be finite");
}

Grid AnalyticGaussianDenoiser::predict(const Grid& z_t, int t, const Image* conditioning,
                                       const NoiseSchedule& schedule) const {
    (void)conditioning;  // the closed-form prior is unconditional
    return analytic_predict(z_t, t, schedule, mu_, sigma0_);
}

bool AnalyticGaussianDenoiser::eps_input_vjp(const Grid& z_t, int t, const Image* conditioning,
                                             const NoiseSchedule& schedule, const Grid& v,
                                             Grid& out) const {
    (void)conditioning;
    require_same_shape(z_t, v, "eps_input_vjp");
    check_timestep(t, schedule, "eps_input_vjp");
    const double abar = schedule.alpha_bar[t];
    out = Grid(z_t.width, z_t.height);
    if (1.0 - abar == 0.0) return true;  // eps_hat is identically zero here
    // d eps_hat / d z_t is the constant diagonal (1 - sqrt(abar) k)/sqrt(1-abar)
    // with k = dm/dz_t = sqrt(abar) sigma0^2 / (abar sigma0^2 + 1 - abar).
    const double sq = std::sqrt(abar);
    const double s2 = sigma0_ * sigma0_;
    const double k = sq * s2 / (abar * s2 + (1.0 - abar));
    const double scale = (1.0 - sq * k) / std::sqrt(1.0 - abar);
    kernels::affine(scale, v.data.data(), 0.0, out.data.data(), out.size());
    return true;
}

namespace {

constexpr int kInputChannels = 3;

// Channel-major dense activation block.
struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int c, int h, int w)
        : channels(c), height(h), width(w), data(static_cast<size_t>(c) * h * w, 0.0) {}

    size_t plane() const { return static_cast<size_t>(height) * width; }
    double* chan(int c) { return data.data() + static_cast<size_t>(c) * plane(); }
    const double* chan(int c) const { return data.data() + static_cast<size_t>(c) * plane(); }
};

double layer_weight(const ConvLayer& L, int o, int i, int ky, int kx) {
    return L.weights[((static_cast<size_t>(o) * L.in_channels + i) * L.kernel_h + ky) * L.kernel_w +
                     kx];
}

// Zero-padded correlation. Each kernel tap contributes a shifted row segment,
// which maps directly onto an axpby over the overlap.
void conv_forward(const ConvLayer& L, const Tensor& in, Tensor& out) {
    const int H = in.height, W = in.width;
    const int ph = L.kernel_h / 2, pw = L.kernel_w / 2;
    for (int o = 0; o < L.out_channels; ++o) {
        double* oc = out.chan(o);
        std::fill(oc, oc + out.plane(), L.bias[o]);
        for (int i = 0; i < L.in_channels; ++i) {
            const double* ic = in.chan(i);
            for (int ky = 0; ky < L.kernel_h; ++ky) {
                const int dy = ky - ph;
                const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                for (int kx = 0; kx < L.kernel_w; ++kx) {
                    const int dx = kx - pw;
                    const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                    if (x1 <= x0 || y1 <= y0) continue;
                    const double w = layer_weight(L, o, i, ky, kx);
                    for (int y = y0; y < y1; ++y) {
                        double* orow = oc + static_cast<size_t>(y) * W + x0;
                        const double* irow = ic + static_cast<size_t>(y + dy) * W + (x0 + dx);
                        kernels::axpby(1.0, orow, w, irow, orow, static_cast<size_t>(x1 - x0));
                    }
                }
            }
        }
    }
}

// Transpose of conv_forward: scatter grad_out through the same taps.
// grad_in must arrive zero-initialized.
void conv_backward_data(const ConvLayer& L, const Tensor& grad_out, Tensor& grad_in) {
    const int H = grad_in.height, W = grad_in.width;
    const int ph = L.kernel_h / 2, pw = L.kernel_w / 2;
    for (int o = 0; o < L.out_channels; ++o) {
        const double* goc = grad_out.chan(o);
        for (int i = 0; i < L.in_channels; ++i) {
            double* gic = grad_in.chan(i);
            for (int ky = 0; ky < L.kernel_h; ++ky) {
                const int dy = ky - ph;
                const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                for (int kx = 0; kx < L.kernel_w; ++kx) {
                    const int dx = kx - pw;
                    const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                    if (x1 <= x0 || y1 <= y0) continue;
                    const double w = layer_weight(L, o, i, ky, kx);
                    for (int y = y0; y < y1; ++y) {
                        double* girow = gic + static_cast<size_t>(y + dy) * W + (x0 + dx);
                        const double* gorow = goc + static_cast<size_t>(y) * W + x0;
                        kernels::axpby(1.0, girow, w, gorow, girow, static_cast<size_t>(x1 - x0));
                    }
                }
            }
        }
    }
}

// Parameter gradients: each tap's gradient is the dot product of grad_out
// with the correspondingly shifted input window.
void conv_backward_params(const ConvLayer& L, const Tensor& in, const Tensor& grad_out,
                          std::vector<double>& gw, std::vector<double>& gb) {
    const int H = in.height, W = in.width;
    const int ph = L.kernel_h / 2, pw = L.kernel_w / 2;
    for (int o = 0; o < L.out_channels; ++o) {
        const double* goc = grad_out.chan(o);
        gb[o] += kernels::sum(goc, grad_out.plane());
        for (int i = 0; i < L.in_channels; ++i) {
            const double* ic = in.chan(i);
            for (int ky = 0; ky < L.kernel_h; ++ky) {
                const int dy = ky - ph;
                const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                for (int kx = 0; kx < L.kernel_w; ++kx) {
                    const int dx = kx - pw;
                    const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                    if (x1 <= x0 || y1 <= y0) continue;
                    double acc = 0.0;
                    for (int y = y0; y < y1; ++y) {
                        const double* gorow = goc + static_cast<size_t>(y) * W + x0;
                        const double* irow = ic + static_cast<size_t>(y + dy) * W + (x0 + dx);
                        acc += kernels::dot(gorow, irow, static_cast<size_t>(x1 - x0));
                    }
                    gw[((static_cast<size_t>(o) * L.in_channels + i) * L.kernel_h + ky) *
                           L.kernel_w +
                       kx] += acc;
                }
            }
        }
    }
}

// act[l] is the input of layer l; pre[l] its output before activation. The
// head is linear, so pre.back() is the network output.
struct ForwardCache {
    std::vector<Tensor> act;
    std::vector<Tensor> pre;
};

void run_forward(const std::vector<ConvLayer>& layers, Tensor input, ForwardCache& fc) {
    const size_t n_layers = layers.size();
    fc.act.clear();
    fc.pre.clear();
    fc.act.reserve(n_layers);
    fc.pre.reserve(n_layers);
    fc.act.push_back(std::move(input));
    for (size_t l = 0; l < n_layers; ++l) {
        Tensor out(layers[l].out_channels, fc.act[l].height, fc.act[l].width);
        conv_forward(layers[l], fc.act[l], out);
        fc.pre.push_back(std::move(out));
        if (l + 1 < n_layers) {
            const Tensor& p = fc.pre[l];
            Tensor a(p.channels, p.height, p.width);
            for (size_t j = 0; j < p.data.size(); ++j) a.data[j] = silu(p.data[j]);
            fc.act.push_back(std::move(a));
        }
    }
}

// Backpropagate grad (dLoss/d output) to the input tensor; parameter
// gradients accumulate into gw/gb when provided.
Tensor run_backward(const std::vector<ConvLayer>& layers, const ForwardCache& fc, Tensor grad,
                    std::vector<std::vector<double>>* gw, std::vector<std::vector<double>>* gb) {
    for (size_t l = layers.size(); l-- > 0;) {
        if (l + 1 < layers.size()) {
            // grad currently holds dLoss/d act(l+1); fold in the SiLU slope.
            const Tensor& p = fc.pre[l];
            for (size_t j = 0; j < grad.data.size(); ++j)
                grad.data[j] *= silu_derivative(p.data[j]);
        }
        if (gw != nullptr) conv_backward_params(layers[l], fc.act[l], grad, (*gw)[l], (*gb)[l]);
        Tensor grad_in(layers[l].in_channels, grad.height, grad.width);
        conv_backward_data(layers[l], grad, grad_in);
        grad = std::move(grad_in);
    }
    return grad;
}

Tensor build_input(const Grid& z_t, int t, const NoiseSchedule& schedule) {
    const double abar = schedule.alpha_bar[t];
    Tensor in(kInputChannels, z_t.height, z_t.width);
    std::copy(z_t.data.begin(), z_t.data.end(), in.chan(0));
    std::fill(in.chan(1), in.chan(1) + in.plane(), std::sqrt(abar));
    std::fill(in.chan(2), in.chan(2) + in.plane(), std::sqrt(1.0 - abar));
    return in;
}

}  // namespace

ToyDenoiser::ToyDenoiser(std::vector<ConvLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw InvalidArgumentError("ToyDenoiser: needs at least one layer");
    if (layers_.front().in_channels != kInputChannels)
        throw InvalidArgumentError("ToyDenoiser: first layer must take 3 input channels");
    if (layers_.back().out_channels != 1)
        throw InvalidArgumentError("ToyDenoiser: last layer must emit one channel");
    for (size_t l = 0; l < layers_.size(); ++l) {
        const ConvLayer& L = layers_[l];
        if (L.out_channels < 1 || L.in_channels < 1)
            throw InvalidArgumentError("ToyDenoiser: channel counts must be positive");
        if (L.kernel_h < 1 || L.kernel_w < 1 || L.kernel_h % 2 == 0 || L.kernel_w % 2 == 0)
            throw InvalidArgumentError("ToyDenoiser: kernels must have odd positive extents");
        if (L.weights.size() != L.weight_count() ||
            L.bias.size() != static_cast<size_t>(L.out_channels))
            throw InvalidArgumentError("ToyDenoiser: parameter buffers do not match the layer shape");
        if (l > 0 && L.in_channels != layers_[l - 1].out_channels)
            throw InvalidArgumentError("ToyDenoiser: layer channel chain is inconsistent");
        if (!std::isfinite(kernels::sum(L.weights.data(), L.weights.size())) ||
            !std::isfinite(kernels::sum(L.bias.data(), L.bias.size())))
            throw InvalidArgumentError("ToyDenoiser: parameters must be finite");
    }
}

ToyDenoiser ToyDenoiser::random(uint64_t seed, int hidden_channels, int hidden_stages) {
    if (hidden_channels < 1 || hidden_stages < 0)
        throw InvalidArgumentError("ToyDenoiser::random: bad architecture");
    GaussianSource rng(seed);
    auto make = [&rng](int out_c, int in_c) {
        ConvLayer L;
        L.out_channels = out_c;
        L.in_channels = in_c;
        L.kernel_h = 3;
        L.kernel_w = 3;
        L.weights.resize(L.weight_count());
        const double stddev = std::sqrt(2.0 / (in_c * 9.0));
        for (double& w : L.weights) w = stddev * rng.normal();
        L.bias.assign(static_cast<size_t>(out_c), 0.0);
        return L;
    };
    std::vector<ConvLayer> layers;
    layers.push_back(make(hidden_channels, kInputChannels));
    for (int s = 0; s < hidden_stages; ++s) layers.push_back(make(hidden_channels, hidden_channels));
    layers.push_back(make(1, hidden_channels));
    return ToyDenoiser(std::move(layers));
}

size_t ToyDenoiser::parameter_count() const {
    size_t n = 0;
    for (const ConvLayer& L : layers_) n += L.weight_count() + L.bias.size();
    return n;
}

Grid ToyDenoiser::predict(const Grid& z_t, int t, const Image* conditioning,
                          const NoiseSchedule& schedule) const {
    (void)conditioning;  // unconditional model
    check_timestep(t, schedule, "ToyDenoiser::predict");
    ForwardCache fc;
    run_forward(layers_, build_input(z_t, t, schedule), fc);
    Grid out(z_t.width, z_t.height);
    const Tensor& y = fc.pre.back();
    std::copy(y.data.begin(), y.data.end(), out.data.begin());
    return out;
}

bool ToyDenoiser::eps_input_vjp(const Grid& z_t, int t, const Image* conditioning,
                                const NoiseSchedule& schedule, const Grid& v, Grid& out) const {
    (void)conditioning;
    require_same_shape(z_t, v, "eps_input_vjp");
    check_timestep(t, schedule, "ToyDenoiser::eps_input_vjp");
    ForwardCache fc;
    run_forward(layers_, build_input(z_t, t, schedule), fc);
    Tensor grad(1, z_t.height, z_t.width);
    std::copy(v.data.begin(), v.data.end(), grad.chan(0));
    Tensor grad_in = run_backward(layers_, fc, std::move(grad), nullptr, nullptr);
    out = Grid(z_t.width, z_t.height);
    // Only the z_t channel of the input varies; the time planes are constants.
    std::copy(grad_in.chan(0), grad_in.chan(0) + grad_in.plane(), out.data.begin());
    return true;
}

void TrainConfig::validate() const {
    if (steps < 1 || batch < 1)
        throw InvalidArgumentError("training needs steps >= 1 and batch >= 1");
    if (!std::isfinite(lr) || !(lr > 0.0))
        throw InvalidArgumentError("learning rate must be positive and finite");
    if (!(momentum >= 0.0) || momentum >= 1.0)
        throw InvalidArgumentError("momentum must lie in [0, 1)");
    if (hidden_channels < 1 || hidden_stages < 0)
        throw InvalidArgumentError("bad toy-denoiser architecture");
    if (val_fields < 1) throw InvalidArgumentError("validation needs at least one field");
}

double denoising_val_loss(const DenoiserModel& model, const std::vector<Grid>& fields,
                          const NoiseSchedule& schedule, uint64_t seed) {
    if (fields.empty()) throw InvalidArgumentError("validation needs at least one field");
    GaussianSource rng(seed);
    double total = 0.0;
    for (const Grid& z0 : fields) {
        const int t = 1 + static_cast<int>(rng.uniform_index(static_cast<uint64_t>(schedule.T)));
        Grid eps(z0.width, z0.height);
        rng.fill_normal(eps.data.data(), eps.size());
        Grid z_t(z0.width, z0.height);
        kernels::axpby(std::sqrt(schedule.alpha_bar[t]), z0.data.data(),
                       std::sqrt(1.0 - schedule.alpha_bar[t]), eps.data.data(), z_t.data.data(),
                       z_t.size());
        const Grid pred = model.predict(z_t, t, nullptr, schedule);
        total += kernels::sq_diff_sum(pred.data.data(), eps.data.data(), pred.size()) /
                 static_cast<double>(pred.size());
    }
    return total / static_cast<double>(fields.size());
}

ToyDenoiser train_toy_denoiser(const std::vector<Grid>& corpus, const NoiseSchedule& schedule,
                               const TrainConfig& config, uint64_t seed, TrainStats* stats) {
    config.validate();
    schedule.validate();
    if (corpus.empty()) throw InvalidArgumentError("training corpus is empty");
    for (const Grid& f : corpus) {
        if (f.size() == 0) throw InvalidArgumentError("corpus fields must be non-empty");
        for (double v : f.data)
            if (!(v >= -1.0 && v <= 1.0))
                throw InvalidArgumentError("corpus fields must lie in the latent range [-1, 1]");
    }

    // The corpus tail doubles as the fixed validation set; training draws
    // come from the remainder when there is room.
    const size_t val_count = std::min<size_t>(static_cast<size_t>(config.val_fields), corpus.size());
    const size_t train_count = corpus.size() > val_count ? corpus.size() - val_count : corpus.size();
    const std::vector<Grid> val_set(corpus.end() - static_cast<ptrdiff_t>(val_count), corpus.end());
    const uint64_t val_seed = seed ^ 0x9e3779b97f4a7c15ULL;

    ToyDenoiser model = ToyDenoiser::random(seed, config.hidden_channels, config.hidden_stages);
    if (stats != nullptr) {
        stats->train_loss.clear();
        stats->initial_val_loss = denoising_val_loss(model, val_set, schedule, val_seed);
    }

    std::vector<ConvLayer>& layers = model.mutable_layers();
    std::vector<std::vector<double>> vel_w(layers.size()), vel_b(layers.size());
    std::vector<std::vector<double>> gw(layers.size()), gb(layers.size());
    for (size_t l = 0; l < layers.size(); ++l) {
        vel_w[l].assign(layers[l].weights.size(), 0.0);
        vel_b[l].assign(layers[l].bias.size(), 0.0);
        gw[l].assign(layers[l].weights.size(), 0.0);
        gb[l].assign(layers[l].bias.size(), 0.0);
    }

    GaussianSource rng(seed + 1);
    for (int step = 0; step < config.steps; ++step) {
        for (auto& g : gw) std::fill(g.begin(), g.end(), 0.0);
        for (auto& g : gb) std::fill(g.begin(), g.end(), 0.0);
        double batch_loss = 0.0;
        for (int b = 0; b < config.batch; ++b) {
            const Grid& z0 = corpus[rng.uniform_index(train_count)];
            const int t = 1 + static_cast<int>(rng.uniform_index(static_cast<uint64_t>(schedule.T)));
            Grid eps(z0.width, z0.height);
            rng.fill_normal(eps.data.data(), eps.size());
            Grid z_t(z0.width, z0.height);
            kernels::axpby(std::sqrt(schedule.alpha_bar[t]), z0.data.data(),
                           std::sqrt(1.0 - schedule.alpha_bar[t]), eps.data.data(),
                           z_t.data.data(), z_t.size());

            ForwardCache fc;
            run_forward(layers, build_input(z_t, t, schedule), fc);
            const Tensor& pred = fc.pre.back();
            const size_t n = pred.data.size();
            batch_loss +=
                kernels::sq_diff_sum(pred.data.data(), eps.data.data(), n) / static_cast<double>(n);

            // d(mean sq err)/d pred = 2(pred - eps)/n, averaged over the batch.
            const double c = 2.0 / (static_cast<double>(n) * config.batch);
            Tensor grad(1, z0.height, z0.width);
            kernels::axpby(c, pred.data.data(), -c, eps.data.data(), grad.data.data(), n);
            run_backward(layers, fc, std::move(grad), &gw, &gb);
        }
        batch_loss /= config.batch;
        if (!std::isfinite(batch_loss))
            throw DivergedTrainingError("loss became non-finite at step " + std::to_string(step));
        if (stats != nullptr) stats->train_loss.push_back(batch_loss);

        double param_probe = 0.0;
        for (size_t l = 0; l < layers.size(); ++l) {
            // v = momentum*v - lr*g; w += v.
            kernels::axpby(config.momentum, vel_w[l].data(), -config.lr, gw[l].data(),
                           vel_w[l].data(), vel_w[l].size());
            kernels::axpby(1.0, layers[l].weights.data(), 1.0, vel_w[l].data(),
                           layers[l].weights.data(), layers[l].weights.size());
            kernels::axpby(config.momentum, vel_b[l].data(), -config.lr, gb[l].data(),
                           vel_b[l].data(), vel_b[l].size());
            kernels::axpby(1.0, layers[l].bias.data(), 1.0, vel_b[l].data(),
                           layers[l].bias.data(), layers[l].bias.size());
            param_probe += kernels::sum(layers[l].weights.data(), layers[l].weights.size()) +
                           kernels::sum(layers[l].bias.data(), layers[l].bias.size());
        }
        if (!std::isfinite(param_probe))
            throw DivergedTrainingError("weights became non-finite at step " + std::to_string(step));
    }

    if (stats != nullptr) stats->final_val_loss = denoising_val_loss(model, val_set, schedule, val_seed);
    return model;
}

namespace {

constexpr char kCheckpointMagic[8] = {'G', 'D', 'P', 'R', 'I', 'O', 'R', '1'};

void put_u32(std::ofstream& f, uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    f.write(b, 4);
}

void put_f64(std::ofstream& f, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    f.write(b, 8);
}

uint32_t get_u32(std::ifstream& f, const std::string& path) {
    unsigned char b[4];
    if (!f.read(reinterpret_cast<char*>(b), 4))
        throw TruncatedDataError("checkpoint ends mid-field: " + path);
    return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
           static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

double get_f64(std::ifstream& f, const std::string& path) {
    unsigned char b[8];
    if (!f.read(reinterpret_cast<char*>(b), 8))
        throw TruncatedDataError("checkpoint ends mid-value: " + path);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

}  // namespace

void save_checkpoint(const ToyDenoiser& model, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open checkpoint for writing: " + path);
    f.write(kCheckpointMagic, sizeof kCheckpointMagic);
    const std::vector<ConvLayer>& layers = model.layers();
    put_u32(f, static_cast<uint32_t>(layers.size()));
    for (const ConvLayer& L : layers) {
        put_u32(f, static_cast<uint32_t>(L.out_channels));
        put_u32(f, static_cast<uint32_t>(L.in_channels));
        put_u32(f, static_cast<uint32_t>(L.kernel_h));
        put_u32(f, static_cast<uint32_t>(L.kernel_w));
    }
    for (const ConvLayer& L : layers) {
        for (double w : L.weights) put_f64(f, w);
        for (double b : L.bias) put_f64(f, b);
    }
    f.flush();
    if (!f) throw IoError("short write saving checkpoint: " + path);
}

ToyDenoiser load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    if (!f.read(magic, sizeof magic))
        throw TruncatedDataError("checkpoint shorter than its magic: " + path);
    if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
        throw MalformedHeaderError("not a GDPRIOR1 checkpoint: " + path);

    const uint32_t n_layers = get_u32(f, path);
    if (n_layers == 0 || n_layers > 1024)
        throw MalformedHeaderError("implausible layer count in checkpoint: " + path);
    std::vector<ConvLayer> layers(n_layers);
    for (ConvLayer& L : layers) {
        L.out_channels = static_cast<int>(get_u32(f, path));
        L.in_channels = static_cast<int>(get_u32(f, path));
        L.kernel_h = static_cast<int>(get_u32(f, path));
        L.kernel_w = static_cast<int>(get_u32(f, path));
        if (L.out_channels < 1 || L.in_channels < 1 || L.kernel_h < 1 || L.kernel_w < 1 ||
            L.weight_count() > (1u << 26))
            throw MalformedHeaderError("implausible layer shape in checkpoint: " + path);
    }
    for (ConvLayer& L : layers) {
        L.weights.resize(L.weight_count());
        for (double& w : L.weights) w = get_f64(f, path);
        L.bias.resize(static_cast<size_t>(L.out_channels));
        for (double& b : L.bias) b = get_f64(f, path);
    }
    // Trailing garbage means the file is not what it claims to be.
    char extra;
    if (f.read(&extra, 1)) throw MalformedHeaderError("trailing bytes after checkpoint: " + path);
    return ToyDenoiser(std::move(layers));
}

}  // namespace gdepth
