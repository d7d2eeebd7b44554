#pragma once

#include "freebloom/attention/attention.hpp"
#include "freebloom/core/math.hpp"
#include "freebloom/denoiser/predictor.hpp"

#include <cstdint>

namespace freebloom {

struct TinyDenoiserConfig {
    std::size_t channels = 1;
    std::size_t patch = 4;
    std::size_t model_dim = 32;
    std::size_t hidden_dim = 64;
    std::size_t embed_dim = 64;
    std::uint64_t weights_seed = 0;
    ShiftPolicy shift{};
};

/// Untrained single-block attention denoiser: patchify -> token projection
/// (+ sinusoidal timestep and positional embeddings) -> step-aware
/// self-attention -> cross-attention to the frame embedding -> MLP -> linear
/// read-out. Each sub-block is residual. Weights are a pure function of the
/// seed, so two instances with the same config are interchangeable.
class TinyAttentionDenoiser final : public NoisePredictor {
public:
    explicit TinyAttentionDenoiser(TinyDenoiserConfig config);

    std::vector<Tensor> predict(const LatentVideo& frames, int t, std::span<const Embedding> embeddings,
                                AttentionMode mode) const override;

    const TinyDenoiserConfig& config() const noexcept { return config_; }

private:
    struct Weights {
        Matrix token_in;   // patch_dim x D
        Vector token_bias; // D
        Matrix query, key, value, attn_out;        // D x D
        Matrix cross_query;                         // D x D
        Matrix cross_key, cross_value;              // E x D
        Matrix cross_out;                           // D x D
        Matrix mlp_in;     // D x H
        Vector mlp_bias;   // H
        Matrix mlp_out;    // H x D
        Matrix read_out;   // D x patch_dim
    };

    Matrix patchify(const Tensor& latent) const;
    Tensor unpatchify(const Matrix& patches, const Shape& shape) const;
    Matrix positional(std::size_t tokens) const;

    TinyDenoiserConfig config_;
    Weights weights_;
};

/// Sinusoidal timestep embedding of width dim (even).
Vector timestep_embedding(int t, std::size_t dim);

std::vector<Tensor> tiny_denoiser_predict(const LatentVideo& frames, int t, std::span<const Embedding> embeddings,
                                          int tau, std::uint64_t weights_seed);

} // namespace freebloom
