#include "freebloom/noise/latent_video.hpp"

#include "freebloom/core/error.hpp"

namespace freebloom {

LatentVideo::LatentVideo(std::vector<Tensor> frames) : frames_(std::move(frames)) {
    if (frames_.empty()) {
        throw InvalidArgument("latent video needs at least one frame");
    }
    for (const auto& frame : frames_) {
        if (frame.shape() != frames_.front().shape()) {
            throw InvalidArgument("latent video frames must share one shape");
        }
        if (!frame.all_finite()) {
            throw NumericDomainError("latent video frame contains non-finite values");
        }
    }
}

const Shape& LatentVideo::frame_shape() const {
    if (frames_.empty()) {
        throw StateError("empty latent video has no frame shape");
    }
    return frames_.front().shape();
}

} // namespace freebloom
