#pragma once

#include <vector>

namespace freebloom {

/// Conditioning vector for one frame (a prompt embedding).
struct Embedding {
    std::vector<double> values;

    std::size_t dim() const noexcept { return values.size(); }

    friend bool operator==(const Embedding&, const Embedding&) = default;
};

} // namespace freebloom
