#include "freebloom/core/random.hpp"

#include "freebloom/core/error.hpp"

#include <cmath>
#include <numbers>

namespace freebloom {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// 53 random bits mapped to the open interval (0, 1).
constexpr double to_open_unit(std::uint64_t bits) noexcept {
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    return (static_cast<double>(bits >> 11) + 0.5) * kScale;
}

constexpr std::uint64_t join(std::uint32_t hi, std::uint32_t lo) noexcept {
    return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

} // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) noexcept {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

RandomStream RandomStream::substream(std::uint64_t label) const noexcept {
    return RandomStream(seed_, splitmix64(splitmix64(stream_id_) ^ splitmix64(label + 0x632BE59BD9B4E019ull)));
}

std::array<std::uint32_t, 4> RandomStream::block(std::uint64_t block_index) const noexcept {
    return philox4x32_10(
        {static_cast<std::uint32_t>(block_index), static_cast<std::uint32_t>(block_index >> 32),
         static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)},
        {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
}

// Each Philox block yields two 64-bit words, i.e. two uniforms; Box-Muller
// turns that pair into two normals, so draws 2j and 2j+1 share block j.
double RandomStream::uniform(std::uint64_t index) const noexcept {
    const auto w = block(index / 2);
    return index % 2 == 0 ? to_open_unit(join(w[0], w[1])) : to_open_unit(join(w[2], w[3]));
}

double RandomStream::gaussian(std::uint64_t index) const noexcept {
    const auto w = block(index / 2);
    const double u1 = to_open_unit(join(w[0], w[1]));
    const double u2 = to_open_unit(join(w[2], w[3]));
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return index % 2 == 0 ? r * std::cos(angle) : r * std::sin(angle);
}

void RandomStream::fill_uniform(std::span<double> out, std::uint64_t first) const noexcept {
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = uniform(first + i);
    }
}

void RandomStream::fill_gaussian(std::span<double> out, std::uint64_t first) const noexcept {
    std::size_t i = 0;
    if (first % 2 == 1 && !out.empty()) {
        out[i++] = gaussian(first);
    }
    for (; i + 1 < out.size(); i += 2) {
        const auto w = block((first + i) / 2);
        const double u1 = to_open_unit(join(w[0], w[1]));
        const double u2 = to_open_unit(join(w[2], w[3]));
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        out[i] = r * std::cos(angle);
        out[i + 1] = r * std::sin(angle);
    }
    if (i < out.size()) {
        out[i] = gaussian(first + i);
    }
}

Tensor seeded_gaussian(const RandomStream& stream, const Shape& shape) {
    if (shape.empty()) {
        throw InvalidArgument("seeded_gaussian: shape must be non-empty");
    }
    Tensor out(shape);
    stream.fill_gaussian(out.values());
    return out;
}

} // namespace freebloom
