#pragma once

#include "freebloom/core/tensor.hpp"

#include <array>
#include <cstdint>
#include <span>

namespace freebloom {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Exposed for known-answer testing.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// Counter-based random stream. A value type: the pair (seed, stream_id)
/// together with a draw index fully determines every number, so streams can
/// be copied, passed across threads and re-derived without shared state.
class RandomStream {
public:
    constexpr RandomStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
        : seed_(seed), stream_id_(stream_id) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    /// Domain-separated child stream, e.g. one per frame or per stage.
    RandomStream substream(std::uint64_t label) const noexcept;

    /// Uniform double in the open interval (0, 1) for a given draw index.
    double uniform(std::uint64_t index) const noexcept;
    /// Standard normal for a given draw index.
    double gaussian(std::uint64_t index) const noexcept;

    /// Fills `out` with draws [first, first + out.size()).
    void fill_uniform(std::span<double> out, std::uint64_t first = 0) const noexcept;
    void fill_gaussian(std::span<double> out, std::uint64_t first = 0) const noexcept;

    friend bool operator==(const RandomStream&, const RandomStream&) = default;

private:
    std::array<std::uint32_t, 4> block(std::uint64_t block_index) const noexcept;

    std::uint64_t seed_;
    std::uint64_t stream_id_;
};

/// i.i.d. standard-normal tensor; draw i of the stream lands at flat index i.
Tensor seeded_gaussian(const RandomStream& stream, const Shape& shape);

} // namespace freebloom
