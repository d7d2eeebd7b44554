#include "freebloom/core/math.hpp"

#include "freebloom/core/error.hpp"

#include <algorithm>
#include <cmath>

namespace freebloom {

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) {
        throw InvalidArgument("softmax: empty input");
    }
    double peak = logits[0];
    for (double v : logits) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("softmax: non-finite input");
        }
        peak = std::max(peak, v);
    }
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - peak);
        total += out[i];
    }
    for (double& v : out) {
        v /= total;
    }
    return out;
}

void softmax_rows(Matrix& logits) {
    std::vector<double> row(static_cast<std::size_t>(logits.cols()));
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        for (Eigen::Index c = 0; c < logits.cols(); ++c) {
            row[static_cast<std::size_t>(c)] = logits(r, c);
        }
        const auto probs = softmax(row);
        for (Eigen::Index c = 0; c < logits.cols(); ++c) {
            logits(r, c) = probs[static_cast<std::size_t>(c)];
        }
    }
}

} // namespace freebloom
