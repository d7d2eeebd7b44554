#pragma once

#include "freebloom/core/embedding.hpp"
#include "freebloom/core/math.hpp"
#include "freebloom/core/random.hpp"
#include "freebloom/core/schedule.hpp"
#include "freebloom/core/tensor.hpp"
#include "freebloom/denoiser/predictor.hpp"

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace freebloom {

/// Conditional Gaussian mixture p(x0 | e) = sum_k w_k N(A e + b_k, s_k^2 I).
/// A (latent_size x embed_dim) is regenerated from a_seed with i.i.d.
/// standard-normal entries.
struct MixtureSpec {
    std::vector<double> weights;
    std::uint64_t a_seed = 0;
    std::size_t embed_dim = 64;
    std::vector<std::vector<double>> offsets;  // b_k
    std::vector<double> stddevs;               // s_k

    std::size_t component_count() const noexcept { return weights.size(); }
    std::size_t latent_size() const;

    void validate() const;

    nlohmann::json to_json() const;
    static MixtureSpec from_json(const nlohmann::json& doc);
};

/// Three-component spec used by the pipeline when no spec file is given.
MixtureSpec default_mixture_spec(std::size_t latent_size, std::size_t embed_dim, std::uint64_t seed);

/// K = 1 spec: N(A e + offset, stddev^2 I).
MixtureSpec single_gaussian_spec(std::size_t latent_size, std::size_t embed_dim, std::uint64_t a_seed,
                                 std::vector<double> offset, double stddev);

/// A mixture with its mean map materialized; the diffused marginal at step t is
/// p_t(x | e) = sum_k w_k N(sqrt(abar_t) mu_k(e), v_k I), v_k = abar_t s_k^2 + 1 - abar_t.
class GaussianMixtureModel {
public:
    explicit GaussianMixtureModel(MixtureSpec spec);

    const MixtureSpec& spec() const noexcept { return spec_; }
    const Matrix& mean_map() const noexcept { return mean_map_; }

    std::vector<Vector> component_means(const Embedding& e) const;

    /// Posterior component probabilities of x under p_t, via log-sum-exp.
    std::vector<double> responsibilities(const Tensor& x, int t, const Embedding& e,
                                         const NoiseSchedule& schedule) const;

    /// eps_hat = sqrt(1 - abar_t) * sum_k r_k (x - sqrt(abar_t) mu_k) / v_k,
    /// i.e. -sqrt(1 - abar_t) times the score of p_t.
    Tensor eps(const Tensor& x, int t, const Embedding& e, const NoiseSchedule& schedule) const;

    /// Draws one clean sample x0 ~ p(x0 | e).
    Tensor sample(const Embedding& e, const Shape& shape, const RandomStream& stream) const;

private:
    MixtureSpec spec_;
    Matrix mean_map_;
};

Tensor analytic_mixture_eps(const Tensor& x, int t, const Embedding& e, const MixtureSpec& spec,
                            const NoiseSchedule& schedule);

/// Exact noise predictor for the mixture; attention mode is irrelevant.
class AnalyticMixturePredictor final : public NoisePredictor {
public:
    AnalyticMixturePredictor(MixtureSpec spec, NoiseSchedule schedule);

    std::vector<Tensor> predict(const LatentVideo& frames, int t, std::span<const Embedding> embeddings,
                                AttentionMode mode) const override;

    const GaussianMixtureModel& model() const noexcept { return model_; }

private:
    GaussianMixtureModel model_;
    NoiseSchedule schedule_;
};

} // namespace freebloom
