#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gdepth/diffusion.hpp"
#include "gdepth/grid.hpp"

namespace gdepth {

// Noise estimate for the conjugate-Gaussian prior z0 ~ N(mu, sigma0^2 I):
// the posterior mean of z0 given z_t = sqrt(abar) z0 + sqrt(1-abar) eps is
//   m = (sqrt(abar) sigma0^2 z_t + (1-abar) mu) / (abar sigma0^2 + 1 - abar)
// and eps_hat = (z_t - sqrt(abar) m) / sqrt(1-abar), with eps_hat = 0 at
// abar == 1 (noiseless observation).
Grid analytic_predict(const Grid& z_t, int t, const NoiseSchedule& schedule, const Grid& mu,
                      double sigma0);

// Closed-form denoiser used as the exactly-testable stand-in for a learned
// prior. Its input jacobian is a constant diagonal, so full-jacobian guidance
// through it is exact.
class AnalyticGaussianDenoiser final : public DenoiserModel {
  public:
    AnalyticGaussianDenoiser(Grid mu, double sigma0);

    const Grid& mu() const { return mu_; }
    double sigma0() const { return sigma0_; }

    Grid predict(const Grid& z_t, int t, const Image* conditioning,
                 const NoiseSchedule& schedule) const override;
    bool eps_input_vjp(const Grid& z_t, int t, const Image* conditioning,
                       const NoiseSchedule& schedule, const Grid& v, Grid& out) const override;

  private:
    Grid mu_;
    double sigma0_;
};

// One zero-padded correlation layer. Weights are stored
// [out][in][ky][kx] row-major, biases [out].
struct ConvLayer {
    int out_channels = 0;
    int in_channels = 0;
    int kernel_h = 0;
    int kernel_w = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    size_t weight_count() const {
        return static_cast<size_t>(out_channels) * in_channels * kernel_h * kernel_w;
    }
};

// Small convolutional noise predictor: a 3-channel input tensor
// [z_t, sqrt(abar) plane, sqrt(1-abar) plane] (the constant planes are the
// time embedding), SiLU between layers, linear head. The conditioning image
// is accepted per the DenoiserModel contract and ignored. eps_input_vjp is
// exact backpropagation to the z_t channel.
class ToyDenoiser final : public DenoiserModel {
  public:
    explicit ToyDenoiser(std::vector<ConvLayer> layers);

    // He-style seeded initialization of the standard stack:
    // 3 -> hidden (+SiLU), hidden_stages x hidden -> hidden (+SiLU),
    // hidden -> 1 (linear); all kernels 3x3.
    static ToyDenoiser random(uint64_t seed, int hidden_channels = 24, int hidden_stages = 2);

    const std::vector<ConvLayer>& layers() const { return layers_; }
    std::vector<ConvLayer>& mutable_layers() { return layers_; }
    size_t parameter_count() const;

    Grid predict(const Grid& z_t, int t, const Image* conditioning,
                 const NoiseSchedule& schedule) const override;
    bool eps_input_vjp(const Grid& z_t, int t, const Image* conditioning,
                       const NoiseSchedule& schedule, const Grid& v, Grid& out) const override;

  private:
    std::vector<ConvLayer> layers_;
};

struct TrainConfig {
    int steps = 3000;          // SGD iterations
    int batch = 8;             // fields per iteration
    double lr = 5e-3;
    double momentum = 0.9;
    int hidden_channels = 24;
    int hidden_stages = 2;
    int val_fields = 16;       // size of the fixed validation draw set

    void validate() const;
};

struct TrainStats {
    std::vector<double> train_loss;  // batch-mean loss per SGD step
    double initial_val_loss = 0.0;   // untrained weights on the fixed draws
    double final_val_loss = 0.0;
};

// Deterministic denoising regression loss E|eps_hat - eps|^2 over draws
// (field, t, eps) fixed by the seed; the yardstick train_toy_denoiser and
// the tests share.
double denoising_val_loss(const DenoiserModel& model, const std::vector<Grid>& fields,
                          const NoiseSchedule& schedule, uint64_t seed);

// Epsilon-prediction regression on the corpus: minimize
// E|model(sqrt(abar) z0 + sqrt(1-abar) eps, t) - eps|^2 with momentum SGD.
// Fields must lie in the latent range [-1, 1]. Throws DivergedTraining when
// the loss stops being finite.
ToyDenoiser train_toy_denoiser(const std::vector<Grid>& corpus, const NoiseSchedule& schedule,
                               const TrainConfig& config, uint64_t seed,
                               TrainStats* stats = nullptr);

// Flat binary checkpoint, magic "GDPRIOR1": u32 layer count, then per layer
// u32 out_c,in_c,kh,kw, then per layer the weights followed by the biases as
// little-endian float64. Round-trips bit-exactly.
void save_checkpoint(const ToyDenoiser& model, const std::string& path);
ToyDenoiser load_checkpoint(const std::string& path);

}  // namespace gdepth
