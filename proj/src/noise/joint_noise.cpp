#include "freebloom/noise/joint_noise.hpp"

#include "freebloom/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace freebloom {

namespace {

enum StreamLabel : std::uint64_t {
    kUnifiedLabel = 0x756e6966,      // "unif"
    kIndependentLabel = 0x696e6470,  // "indp"
};

void check_lambda(double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw InvalidArgument("lambda must lie in [0, 1], got " + std::to_string(lambda));
    }
}

std::size_t pair_count(std::size_t frames) { return frames * (frames - 1) / 2; }

} // namespace

std::string_view to_string(NoiseMode mode) noexcept {
    return mode == NoiseMode::trig ? "trig" : "linear-ablation";
}

NoiseMode parse_noise_mode(std::string_view text) {
    if (text == "trig") {
        return NoiseMode::trig;
    }
    if (text == "linear" || text == "linear-ablation") {
        return NoiseMode::linear_ablation;
    }
    throw InvalidArgument("unknown noise mode '" + std::string(text) + "' (expected trig|linear)");
}

void JointNoiseConfig::validate() const {
    if (frames < 1) {
        throw InvalidArgument("joint noise needs at least one frame");
    }
    if (frame_shape.empty() || shape_size(frame_shape) == 0) {
        throw InvalidArgument("joint noise frame shape must be non-empty");
    }
    check_lambda(lambda);
}

std::pair<double, double> mixing_weights(double lambda, NoiseMode mode) {
    check_lambda(lambda);
    if (mode == NoiseMode::linear_ablation) {
        return {1.0 - lambda, lambda};
    }
    // exact endpoints
    if (lambda == 0.0) {
        return {1.0, 0.0};
    }
    if (lambda == 1.0) {
        return {0.0, 1.0};
    }
    const double angle = std::numbers::pi * lambda / 2.0;
    return {std::cos(angle), std::sin(angle)};
}

JointNoise sample_initial_noise(const JointNoiseConfig& cfg, const RandomStream& stream) {
    cfg.validate();
    const auto [w_unified, w_independent] = mixing_weights(cfg.lambda, cfg.mode);
    Tensor unified = seeded_gaussian(stream.substream(kUnifiedLabel), cfg.frame_shape);
    const RandomStream independent = stream.substream(kIndependentLabel);

    std::vector<Tensor> frames;
    frames.reserve(cfg.frames);
    for (std::size_t i = 0; i < cfg.frames; ++i) {
        const Tensor delta = seeded_gaussian(independent.substream(i), cfg.frame_shape);
        frames.push_back(axpby(w_unified, unified, w_independent, delta));
    }
    return {LatentVideo(std::move(frames)), std::move(unified)};
}

Tensor sample_extension_noise(const Tensor& unified, double lambda, NoiseMode mode,
                              const RandomStream& stream) {
    const auto [w_unified, w_independent] = mixing_weights(lambda, mode);
    const Tensor delta = seeded_gaussian(stream, unified.shape());
    return axpby(w_unified, unified, w_independent, delta);
}

double theoretical_pair_covariance(double lambda, NoiseMode mode) {
    const auto [w_unified, w_independent] = mixing_weights(lambda, mode);
    (void)w_independent;
    return w_unified * w_unified;
}

double theoretical_marginal_variance(double lambda, NoiseMode mode) {
    const auto [w_unified, w_independent] = mixing_weights(lambda, mode);
    return w_unified * w_unified + w_independent * w_independent;
}

NoiseMomentAccumulator::NoiseMomentAccumulator(std::size_t frames, std::size_t n)
    : frames_(frames), n_(n), mean_(frames * n, 0.0), m2_(frames * n, 0.0),
      comoment_(pair_count(frames) * n, 0.0) {
    if (frames == 0 || n == 0) {
        throw InvalidArgument("noise accumulator needs frames >= 1 and n >= 1");
    }
}

void NoiseMomentAccumulator::add(const LatentVideo& sample) {
    if (sample.frame_count() != frames_ || shape_size(sample.frame_shape()) != n_) {
        throw InvalidArgument("noise sample shape does not match accumulator (" + std::to_string(frames_) +
                              " frames x " + std::to_string(n_) + ")");
    }
    ++count_;
    const double inv = 1.0 / static_cast<double>(count_);
    // delta_old = x - mean_{k-1}; after update, m2 += delta_old * (x - mean_k);
    // comoment_ij += delta_old_i * (x_j - mean_k_j).
    std::vector<double> delta_old(frames_ * n_);
    for (std::size_t f = 0; f < frames_; ++f) {
        const auto values = sample[f].values();
        for (std::size_t c = 0; c < n_; ++c) {
            const std::size_t idx = f * n_ + c;
            delta_old[idx] = values[c] - mean_[idx];
            mean_[idx] += delta_old[idx] * inv;
        }
    }
    std::size_t pair = 0;
    for (std::size_t i = 0; i < frames_; ++i) {
        const auto xi = sample[i].values();
        for (std::size_t c = 0; c < n_; ++c) {
            const std::size_t idx = i * n_ + c;
            m2_[idx] += delta_old[idx] * (xi[c] - mean_[idx]);
        }
        for (std::size_t j = i + 1; j < frames_; ++j, ++pair) {
            const auto xj = sample[j].values();
            for (std::size_t c = 0; c < n_; ++c) {
                comoment_[pair * n_ + c] += delta_old[i * n_ + c] * (xj[c] - mean_[j * n_ + c]);
            }
        }
    }
}

NoiseReport NoiseMomentAccumulator::report(double lambda, NoiseMode mode) const {
    if (count_ < 2) {
        throw InvalidArgument("noise report needs at least 2 samples");
    }
    NoiseReport r;
    r.mode = mode;
    r.lambda = lambda;
    r.frames = frames_;
    r.n = n_;
    r.samples = count_;
    r.theory_marginal_var = theoretical_marginal_variance(lambda, mode);
    r.theory_pair_cov = theoretical_pair_covariance(lambda, mode);

    const double denom = static_cast<double>(count_ - 1);
    const double coords = static_cast<double>(n_);
    double total_m2 = 0.0;
    for (std::size_t f = 0; f < frames_; ++f) {
        double mean_sum = 0.0;
        double var_sum = 0.0;
        for (std::size_t c = 0; c < n_; ++c) {
            mean_sum += mean_[f * n_ + c];
            var_sum += m2_[f * n_ + c] / denom;
            total_m2 += m2_[f * n_ + c];
        }
        r.marginal_mean.push_back(mean_sum / coords);
        r.marginal_var.push_back(var_sum / coords);
    }
    for (std::size_t p = 0; p < pair_count(frames_); ++p) {
        double cov_sum = 0.0;
        for (std::size_t c = 0; c < n_; ++c) {
            cov_sum += comoment_[p * n_ + c] / denom;
        }
        r.pair_cov.push_back(cov_sum / coords);
    }
    r.degenerate = total_m2 == 0.0;

    for (double m : r.marginal_mean) {
        r.max_abs_dev = std::max(r.max_abs_dev, std::abs(m));
    }
    for (double v : r.marginal_var) {
        r.max_abs_dev = std::max(r.max_abs_dev, std::abs(v - r.theory_marginal_var));
    }
    for (double c : r.pair_cov) {
        r.max_abs_dev = std::max(r.max_abs_dev, std::abs(c - r.theory_pair_cov));
    }
    return r;
}

NoiseReport empirical_noise_report(std::span<const LatentVideo> samples, double lambda, NoiseMode mode) {
    if (samples.size() < 2) {
        throw InvalidArgument("noise report needs at least 2 samples");
    }
    const auto& first = samples.front();
    NoiseMomentAccumulator acc(first.frame_count(), shape_size(first.frame_shape()));
    for (const auto& sample : samples) {
        if (sample.frame_count() != first.frame_count() || sample.frame_shape() != first.frame_shape()) {
            throw InvalidArgument("noise report samples have mismatched shapes");
        }
        acc.add(sample);
    }
    return acc.report(lambda, mode);
}

nlohmann::json NoiseReport::to_json() const {
    return {
        {"mode", std::string(to_string(mode))},
        {"lambda", lambda},
        {"f", frames},
        {"n", n},
        {"samples", samples},
        {"marginal_mean", marginal_mean},
        {"marginal_var", marginal_var},
        {"pair_cov", pair_cov},
        {"theory_marginal_var", theory_marginal_var},
        {"theory_pair_cov", theory_pair_cov},
        {"max_abs_dev", max_abs_dev},
        {"degenerate", degenerate},
    };
}

} // namespace freebloom
