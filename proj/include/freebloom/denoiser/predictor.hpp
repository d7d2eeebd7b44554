#pragma once

#include "freebloom/core/embedding.hpp"
#include "freebloom/core/tensor.hpp"
#include "freebloom/noise/latent_video.hpp"

#include <span>
#include <vector>

namespace freebloom {

enum class AttentionMode {
    context,  // step-aware: cross-frame context for t >= tau, self below
    self,     // per-frame self-attention at every t
};

/// Noise prediction eps_hat(x_t, t, e) for every frame of a video at one
/// timestep. All frames of one timestep go through a single call so
/// cross-frame attention sees a consistent snapshot.
class NoisePredictor {
public:
    virtual ~NoisePredictor() = default;

    virtual std::vector<Tensor> predict(const LatentVideo& frames, int t, std::span<const Embedding> embeddings,
                                        AttentionMode mode) const = 0;
};

void check_predict_inputs(const LatentVideo& frames, std::span<const Embedding> embeddings);

} // namespace freebloom
