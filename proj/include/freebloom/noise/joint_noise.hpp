#pragma once

#include "freebloom/core/random.hpp"
#include "freebloom/core/tensor.hpp"
#include "freebloom/noise/latent_video.hpp"

#include <json.hpp>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace freebloom {

enum class NoiseMode {
    trig,            // cos(pi*lambda/2) * unified + sin(pi*lambda/2) * independent
    linear_ablation, // (1 - lambda) * unified + lambda * independent
};

std::string_view to_string(NoiseMode mode) noexcept;
NoiseMode parse_noise_mode(std::string_view text);

struct JointNoiseConfig {
    std::size_t frames = 6;
    Shape frame_shape{1, 16, 16};
    double lambda = 0.5;
    NoiseMode mode = NoiseMode::trig;

    void validate() const;
};

struct JointNoise {
    LatentVideo video;
    Tensor unified;  // shared component, kept so later frames can join the same law
};

/// Weights (w_unified, w_independent) applied to the two noise components.
std::pair<double, double> mixing_weights(double lambda, NoiseMode mode);

JointNoise sample_initial_noise(const JointNoiseConfig& cfg, const RandomStream& stream);

/// One extra frame from the same joint law: fresh independent part, shared
/// unified part. Covariance with every existing frame stays cos^2(pi*lambda/2).
Tensor sample_extension_noise(const Tensor& unified, double lambda, NoiseMode mode,
                              const RandomStream& stream);

/// Per-coordinate covariance between two distinct frames.
double theoretical_pair_covariance(double lambda, NoiseMode mode);
/// Per-coordinate marginal variance of a single frame.
double theoretical_marginal_variance(double lambda, NoiseMode mode);

struct NoiseReport {
    NoiseMode mode = NoiseMode::trig;
    double lambda = 0.0;
    std::size_t frames = 0;
    std::size_t n = 0;  // coordinates per frame
    std::size_t samples = 0;
    std::vector<double> marginal_mean;  // per frame, pooled over coordinates
    std::vector<double> marginal_var;   // per frame, pooled over coordinates
    std::vector<double> pair_cov;       // per frame pair (i < j), row-major upper triangle
    double theory_marginal_var = 1.0;
    double theory_pair_cov = 0.0;
    double max_abs_dev = 0.0;
    bool degenerate = false;  // every sample identical: no variation observed

    nlohmann::json to_json() const;
};

/// Streaming unbiased moment estimator over joint-noise samples (Welford
/// co-moment updates, so identical samples give exactly zero variance).
class NoiseMomentAccumulator {
public:
    NoiseMomentAccumulator(std::size_t frames, std::size_t n);

    void add(const LatentVideo& sample);
    std::size_t count() const noexcept { return count_; }

    NoiseReport report(double lambda, NoiseMode mode) const;

private:
    std::size_t frames_;
    std::size_t n_;
    std::size_t count_ = 0;
    std::vector<double> mean_;      // frames * n
    std::vector<double> m2_;        // frames * n
    std::vector<double> comoment_;  // pairs * n
};

NoiseReport empirical_noise_report(std::span<const LatentVideo> samples, double lambda, NoiseMode mode);

} // namespace freebloom
