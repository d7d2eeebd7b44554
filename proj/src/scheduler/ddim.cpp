#include "freebloom/scheduler/ddim.hpp"

#include "freebloom/core/error.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

namespace freebloom {

Tensor forward_diffuse(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& schedule) {
    if (t < 1 || t > schedule.steps()) {
        throw InvalidArgument("forward_diffuse: timestep " + std::to_string(t) + " out of range");
    }
    require_same_shape(x0, eps, "forward_diffuse");
    const double abar = schedule.alpha_bar(t);
    return axpby(std::sqrt(abar), x0, std::sqrt(1.0 - abar), eps);
}

PosteriorCoefficients posterior_coefficients(int t, const NoiseSchedule& schedule) {
    if (t < 2 || t > schedule.steps()) {
        throw InvalidArgument("forward_posterior: timestep " + std::to_string(t) + " outside [2, T]");
    }
    const double abar = schedule.alpha_bar(t);
    const double abar_prev = schedule.alpha_bar(t - 1);
    const double beta = schedule.beta(t);
    return {
        std::sqrt(abar_prev) * beta / (1.0 - abar),
        std::sqrt(schedule.alpha(t)) * (1.0 - abar_prev) / (1.0 - abar),
        (1.0 - abar_prev) / (1.0 - abar) * beta,
    };
}

Posterior forward_posterior(const Tensor& x_t, const Tensor& x0, int t, const NoiseSchedule& schedule) {
    require_same_shape(x_t, x0, "forward_posterior");
    const auto c = posterior_coefficients(t, schedule);
    return {axpby(c.x0_coef, x0, c.xt_coef, x_t), c.variance};
}

double ddim_sigma(int t, int t_prev, double eta, const NoiseSchedule& schedule) {
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw InvalidArgument("eta must lie in [0, 1]");
    }
    if (t_prev >= t || t_prev < 0) {
        throw InvalidArgument("ddim step needs 0 <= t_prev < t");
    }
    if (eta == 0.0) {
        return 0.0;
    }
    const double abar = schedule.alpha_bar(t);
    const double abar_prev = schedule.alpha_bar(t_prev);
    return eta * std::sqrt((1.0 - abar_prev) / (1.0 - abar)) * std::sqrt(1.0 - abar / abar_prev);
}

DdimStepResult ddim_step(const Tensor& x_t, const Tensor& eps_hat, int t, int t_prev, double eta,
                         const Tensor* noise, const NoiseSchedule& schedule) {
    require_same_shape(x_t, eps_hat, "ddim_step");
    const double sigma = ddim_sigma(t, t_prev, eta, schedule);
    const double abar = schedule.alpha_bar(t);
    const double abar_prev = schedule.alpha_bar(t_prev);
    const double direction_sq = 1.0 - abar_prev - sigma * sigma;
    // round-off tolerance at eta = 1
    if (direction_sq < -1e-12) {
        throw NumericDomainError("ddim_step: 1 - abar_prev - sigma^2 < 0 at t=" + std::to_string(t));
    }
    if (sigma > 0.0 && noise == nullptr) {
        throw InvalidArgument("ddim_step: sigma > 0 requires a noise tensor");
    }

    DdimStepResult r;
    r.sigma = sigma;
    r.predicted_x0 = scaled(axpby(1.0, x_t, -std::sqrt(1.0 - abar), eps_hat), 1.0 / std::sqrt(abar));
    r.direction = scaled(eps_hat, std::sqrt(std::max(direction_sq, 0.0)));
    r.x_prev = axpby(std::sqrt(abar_prev), r.predicted_x0, 1.0, r.direction);
    if (sigma > 0.0) {
        require_same_shape(x_t, *noise, "ddim_step noise");
        r.x_prev = axpby(1.0, r.x_prev, sigma, *noise);
    }
    if (!r.x_prev.all_finite()) {
        throw NumericDomainError("ddim_step produced non-finite latent at t=" + std::to_string(t));
    }
    return r;
}

std::vector<int> trajectory_timesteps(std::span<const int> grid) {
    std::vector<int> out(grid.begin(), grid.end());
    out.push_back(0);
    return out;
}

LatentVideo ddim_sample(const LatentVideo& initial, const NoisePredictor& predictor,
                        std::span<const Embedding> embeddings, const NoiseSchedule& schedule,
                        std::span<const int> grid, const SamplerOptions& options, const RandomStream& stream,
                        TrajectoryStore* store, std::span<const std::size_t> frame_ids) {
    if (grid.empty()) {
        throw InvalidArgument("ddim_sample: empty timestep grid");
    }
    const std::size_t frames = initial.frame_count();
    if (!frame_ids.empty() && frame_ids.size() != frames) {
        throw InvalidArgument("ddim_sample: frame id count does not match frame count");
    }
    auto id_of = [&](std::size_t i) { return frame_ids.empty() ? i : frame_ids[i]; };
    if (store != nullptr) {
        if (store->timesteps() != trajectory_timesteps(grid)) {
            throw StateError("ddim_sample: trajectory store grid does not match the sampling grid");
        }
        for (std::size_t i = 0; i < frames; ++i) {
            store->start_frame(id_of(i), initial[i]);
        }
    }

    std::vector<Tensor> current = initial.frames();
    std::vector<std::size_t> advanced(frames, 0);
    for (std::size_t step = 0; step < grid.size(); ++step) {
        const int t = grid[step];
        const int t_prev = step + 1 < grid.size() ? grid[step + 1] : 0;
        const auto eps = predictor.predict(LatentVideo(current), t, embeddings, options.mode);
        const RandomStream step_stream = stream.substream(step);
        for (std::size_t i = 0; i < frames; ++i) {
            Tensor z;
            if (options.eta > 0.0) {
                z = seeded_gaussian(step_stream.substream(i), current[i].shape());
            }
            auto r = ddim_step(current[i], eps[i], t, t_prev, options.eta, z.empty() ? nullptr : &z, schedule);
            if (store != nullptr) {
                store->append(id_of(i), eps[i], r.x_prev);
            }
            current[i] = std::move(r.x_prev);
            ++advanced[i];
        }
        // Lockstep: no frame may run ahead of another within a timestep.
        for (std::size_t i = 0; i < frames; ++i) {
            assert(advanced[i] == step + 1);
            if (advanced[i] != step + 1) {
                throw StateError("lockstep violated at t=" + std::to_string(t));
            }
        }
    }
    return LatentVideo(std::move(current));
}

Tensor ddim_invert(const Tensor& x0, const NoisePredictor& predictor, const Embedding& embedding,
                   const NoiseSchedule& schedule, int steps, int refinements) {
    if (steps < 2) {
        throw InvalidArgument("ddim_invert: steps must be >= 2");
    }
    if (refinements < 0) {
        throw InvalidArgument("ddim_invert: refinements must be non-negative");
    }
    const auto grid = inference_timesteps(schedule, steps);
    Tensor x = x0;
    const std::span<const Embedding> embeddings(&embedding, 1);
    int t_from = 0;
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
        const int t_to = *it;
        const double abar_from = schedule.alpha_bar(t_from);
        const double abar_to = schedule.alpha_bar(t_to);
        auto invert_with_eps_at = [&](const Tensor& probe) {
            const auto eps = predictor.predict(LatentVideo({probe}), t_to, embeddings, AttentionMode::self);
            const Tensor predicted_x0 =
                scaled(axpby(1.0, x, -std::sqrt(1.0 - abar_from), eps.front()), 1.0 / std::sqrt(abar_from));
            return axpby(std::sqrt(abar_to), predicted_x0, std::sqrt(1.0 - abar_to), eps.front());
        };
        Tensor next = invert_with_eps_at(x);
        for (int r = 0; r < refinements; ++r) {
            next = invert_with_eps_at(next);
        }
        if (!next.all_finite()) {
            throw NumericDomainError("ddim_invert: non-finite latent at t=" + std::to_string(t_to));
        }
        x = std::move(next);
        t_from = t_to;
    }
    return x;
}

} // namespace freebloom
