#pragma once

#include "freebloom/core/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace freebloom {

/// 8-bit grayscale raster, row-major.
struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

/// Channel 0 of a latent (C x H x W, H x W, or flat as 1 x n) min-max mapped to
/// [0, 255]. A constant channel maps to 128.
GrayImage latent_to_gray(const Tensor& latent);

GrayImage upscale_nearest(const GrayImage& image, std::size_t factor);

/// Frames placed left to right.
GrayImage side_by_side(std::span<const GrayImage> images);

void write_png(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_png(const std::filesystem::path& path);

/// Looping GIF89a with a 256-level gray palette; delay in hundredths of a second.
std::vector<std::uint8_t> encode_gif(std::span<const GrayImage> frames, int delay_cs = 10);
void write_gif(const std::filesystem::path& path, std::span<const GrayImage> frames, int delay_cs = 10);

} // namespace freebloom
