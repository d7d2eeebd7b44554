#pragma once

#include "freebloom/core/tensor.hpp"

#include <vector>

namespace freebloom {

/// Ordered frame latents sharing one shape.
class LatentVideo {
public:
    LatentVideo() = default;
    explicit LatentVideo(std::vector<Tensor> frames);

    std::size_t frame_count() const noexcept { return frames_.size(); }
    const Shape& frame_shape() const;

    const Tensor& operator[](std::size_t i) const { return frames_.at(i); }
    Tensor& operator[](std::size_t i) { return frames_.at(i); }

    const std::vector<Tensor>& frames() const noexcept { return frames_; }

    friend bool operator==(const LatentVideo&, const LatentVideo&) = default;

private:
    std::vector<Tensor> frames_;
};

} // namespace freebloom
