#include "freebloom/interpolation/interpolation.hpp"

#include "freebloom/core/error.hpp"
#include "freebloom/scheduler/ddim.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <string>

namespace freebloom {

namespace {

enum StreamLabel : std::uint64_t {
    kInitialLabel = 0x696e6974,  // "init"
    kStepLabel = 0x73746570,     // "step"
};

RandomStream request_stream(const InterpolationRequest& req, const RandomStream& stream) {
    return stream.substream(req.left).substream(req.right).substream(req.depth);
}

} // namespace

void MSchedule::validate() const {
    if (!(m_low >= 0.0 && m_low <= m_high && m_high <= 1.0)) {
        throw InvalidArgument("m schedule needs 0 <= m_low <= m_high <= 1");
    }
    if (tau_star < 0) {
        throw InvalidArgument("m schedule tau_star must be non-negative");
    }
}

double m_value(int t, const MSchedule& schedule) {
    return t >= schedule.tau_star ? schedule.m_low : schedule.m_high;
}

Embedding interpolate_embedding(const Embedding& e_prev, const Embedding& e_next, double k) {
    if (e_prev.dim() != e_next.dim()) {
        throw InvalidArgument("interpolate_embedding: dimension mismatch " + std::to_string(e_prev.dim()) + " vs " +
                              std::to_string(e_next.dim()));
    }
    Embedding out;
    out.values.resize(e_prev.dim());
    double sq = 0.0;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = k * e_prev.values[i] + (1.0 - k) * e_next.values[i];
        sq += out.values[i] * out.values[i];
    }
    if (sq == 0.0) {
        spdlog::warn("interpolated embedding is the zero vector (k={})", k);
    }
    return out;
}

Tensor interpolation_initial_latent(const InterpolationRequest& req, const RandomStream& stream) {
    if (req.unified_noise == nullptr) {
        throw StateError("interpolation needs the run's unified noise component");
    }
    return sample_extension_noise(*req.unified_noise, req.lambda, req.noise_mode,
                                  request_stream(req, stream).substream(kInitialLabel));
}

InterpolationResult dual_path_denoise(const InterpolationRequest& req, const NoisePredictor& predictor,
                                      const NoiseSchedule& schedule, const MSchedule& m_schedule, double eta,
                                      const RandomStream& stream) {
    if (req.store == nullptr) {
        throw StateError("interpolation needs a trajectory store");
    }
    if (!(req.k >= 0.0 && req.k <= 1.0)) {
        throw InvalidArgument("interpolation weight k must lie in [0, 1]");
    }
    m_schedule.validate();
    const TrajectoryStore& store = *req.store;
    const auto& timesteps = store.timesteps();
    for (std::size_t id : {req.left, req.right}) {
        if (!store.complete(id)) {
            throw StateError("neighbour frame " + std::to_string(id) + " lacks a complete trajectory");
        }
    }

    InterpolationResult result;
    result.embedding = interpolate_embedding(req.left_embedding, req.right_embedding, req.k);
    const std::span<const Embedding> embedding(&result.embedding, 1);
    const RandomStream step_stream = request_stream(req, stream).substream(kStepLabel);

    Tensor x = interpolation_initial_latent(req, stream);
    result.trajectory.latents.push_back(x);
    for (std::size_t step = 0; step + 1 < timesteps.size(); ++step) {
        const int t = timesteps[step];
        const int t_prev = timesteps[step + 1];

        const Tensor contextual = axpby(req.k, store.latent(req.left, t_prev), 1.0 - req.k,
                                        store.latent(req.right, t_prev));

        auto eps = predictor.predict(LatentVideo({x}), t, embedding, AttentionMode::self);
        Tensor z;
        if (eta > 0.0) {
            z = seeded_gaussian(step_stream.substream(step), x.shape());
        }
        const auto candidate = ddim_step(x, eps.front(), t, t_prev, eta, z.empty() ? nullptr : &z, schedule);

        const double m = m_value(t_prev, m_schedule);
        x = axpby(1.0 - m, contextual, m, candidate.x_prev);
        if (!x.all_finite()) {
            throw NumericDomainError("interpolated latent became non-finite at t=" + std::to_string(t_prev));
        }
        result.trajectory.eps.push_back(std::move(eps.front()));
        result.trajectory.latents.push_back(x);
    }
    return result;
}

std::pair<std::size_t, std::size_t> select_interpolation_pair(const LatentVideo& video) {
    if (video.frame_count() < 2) {
        throw InvalidArgument("need at least two frames to choose an interpolation pair");
    }
    std::size_t best = 0;
    double best_distance = -1.0;
    for (std::size_t i = 0; i + 1 < video.frame_count(); ++i) {
        const double d = squared_distance(video[i], video[i + 1]);
        if (d > best_distance) {
            best = i;
            best_distance = d;
        }
    }
    return {best, best + 1};
}

} // namespace freebloom
