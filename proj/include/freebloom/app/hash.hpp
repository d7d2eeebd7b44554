#pragma once

#include "freebloom/core/tensor.hpp"

#include <span>
#include <string>
#include <string_view>

namespace freebloom {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_hex(std::string_view text);

/// SHA-256 over the shapes and little-endian float64 values of the tensors,
/// in the given order.
std::string latent_content_hash(std::span<const Tensor> latents);

} // namespace freebloom
