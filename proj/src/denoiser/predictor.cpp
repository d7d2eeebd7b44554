#include "freebloom/denoiser/predictor.hpp"

#include "freebloom/core/error.hpp"

namespace freebloom {

void check_predict_inputs(const LatentVideo& frames, std::span<const Embedding> embeddings) {
    if (frames.frame_count() == 0) {
        throw InvalidArgument("predict: no frames");
    }
    if (embeddings.size() != frames.frame_count()) {
        throw InvalidArgument("predict: " + std::to_string(embeddings.size()) + " embeddings for " +
                              std::to_string(frames.frame_count()) + " frames");
    }
}

} // namespace freebloom
