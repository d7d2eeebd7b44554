#pragma once

#include "freebloom/core/embedding.hpp"
#include "freebloom/core/random.hpp"
#include "freebloom/core/schedule.hpp"
#include "freebloom/denoiser/predictor.hpp"
#include "freebloom/noise/joint_noise.hpp"
#include "freebloom/noise/latent_video.hpp"
#include "freebloom/scheduler/trajectory.hpp"

#include <utility>

namespace freebloom {

/// Blend weight of the denoising path: m_low while t >= tau_star, m_high after.
struct MSchedule {
    int tau_star = 1;
    double m_low = 0.1;
    double m_high = 1.0;

    void validate() const;
};

double m_value(int t, const MSchedule& schedule);

/// k * e_prev + (1 - k) * e_next, not renormalized.
Embedding interpolate_embedding(const Embedding& e_prev, const Embedding& e_next, double k);

struct InterpolationRequest {
    std::size_t left = 0;   // frame ids in the trajectory store
    std::size_t right = 1;
    double k = 0.5;         // weight on the left (former) neighbour
    Embedding left_embedding;
    Embedding right_embedding;
    const TrajectoryStore* store = nullptr;
    // Joint-noise law of the run, so the new frame's initial latent joins it.
    const Tensor* unified_noise = nullptr;
    double lambda = 0.5;
    NoiseMode noise_mode = NoiseMode::trig;
    std::size_t depth = 0;
};

struct InterpolationResult {
    FrameTrajectory trajectory;  // over the store's timesteps
    Embedding embedding;

    const Tensor& final_latent() const { return trajectory.latents.back(); }
};

/// Initial latent of an interpolated frame: the run's unified component mixed
/// with a fresh independent draw keyed by (left, right, depth).
Tensor interpolation_initial_latent(const InterpolationRequest& req, const RandomStream& stream);

/// Dual-path denoising of an intermediate frame. At each step t -> t_prev:
///   contextual  = k * x_{t_prev}^{left} + (1 - k) * x_{t_prev}^{right}
///   candidate   = DDIM step of the frame's own latent under the interpolated embedding
///   x_{t_prev}  = (1 - m(t_prev)) * contextual + m(t_prev) * candidate
/// The denoising path uses per-frame self-attention.
InterpolationResult dual_path_denoise(const InterpolationRequest& req, const NoisePredictor& predictor,
                                      const NoiseSchedule& schedule, const MSchedule& m_schedule, double eta,
                                      const RandomStream& stream);

/// Adjacent pair (i, i+1) with the largest squared latent distance; ties go
/// to the smaller index.
std::pair<std::size_t, std::size_t> select_interpolation_pair(const LatentVideo& video);

} // namespace freebloom
