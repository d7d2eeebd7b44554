#pragma once

#include "freebloom/core/embedding.hpp"
#include "freebloom/core/random.hpp"
#include "freebloom/core/schedule.hpp"
#include "freebloom/core/tensor.hpp"
#include "freebloom/denoiser/predictor.hpp"
#include "freebloom/noise/latent_video.hpp"
#include "freebloom/scheduler/trajectory.hpp"

#include <span>
#include <vector>

namespace freebloom {

/// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
Tensor forward_diffuse(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& schedule);

struct PosteriorCoefficients {
    double x0_coef;
    double xt_coef;
    double variance;  // beta_tilde_t
};

/// Coefficients of q(x_{t-1} | x_t, x0); t in [2, T].
PosteriorCoefficients posterior_coefficients(int t, const NoiseSchedule& schedule);

struct Posterior {
    Tensor mean;
    double variance;
};

Posterior forward_posterior(const Tensor& x_t, const Tensor& x0, int t, const NoiseSchedule& schedule);

/// sigma_t = eta * sqrt((1 - abar_prev) / (1 - abar_t)) * sqrt(1 - abar_t / abar_prev).
double ddim_sigma(int t, int t_prev, double eta, const NoiseSchedule& schedule);

struct DdimStepResult {
    Tensor x_prev;
    Tensor predicted_x0;  // P_t
    Tensor direction;     // D_t
    double sigma = 0.0;
};

/// One reverse step t -> t_prev (t_prev may be 0). `noise` is required only
/// when sigma > 0.
DdimStepResult ddim_step(const Tensor& x_t, const Tensor& eps_hat, int t, int t_prev, double eta,
                         const Tensor* noise, const NoiseSchedule& schedule);

struct SamplerOptions {
    double eta = 0.0;
    AttentionMode mode = AttentionMode::context;
};

/// Denoises every frame of `initial` in lockstep along the grid (descending,
/// terminal step to t = 0 implicit). When `store` is non-null it must have been
/// constructed over grid + {0}; frame k of the video is recorded under
/// frame_ids[k] (or k when frame_ids is empty). Fresh noise for eta > 0 comes
/// from stream.substream(step).substream(frame index).
LatentVideo ddim_sample(const LatentVideo& initial, const NoisePredictor& predictor,
                        std::span<const Embedding> embeddings, const NoiseSchedule& schedule,
                        std::span<const int> grid, const SamplerOptions& options, const RandomStream& stream,
                        TrajectoryStore* store = nullptr, std::span<const std::size_t> frame_ids = {});

/// The grid with the terminal clean step appended, i.e. the trajectory timesteps.
std::vector<int> trajectory_timesteps(std::span<const int> grid);

inline constexpr int kDefaultInversionRefinements = 3;

/// Deterministic DDIM inversion: the eta = 0 update run from t = 0 up the grid.
/// Each step x_prev -> x_t starts from eps_hat(x_prev, t), then re-solves the
/// step `refinements` times with eps_hat at the current x_t estimate, so that
/// the sampler's step from x_t lands back on x_prev. Zero refinements is the
/// plain explicit inversion.
Tensor ddim_invert(const Tensor& x0, const NoisePredictor& predictor, const Embedding& embedding,
                   const NoiseSchedule& schedule, int steps, int refinements = kDefaultInversionRefinements);

} // namespace freebloom
