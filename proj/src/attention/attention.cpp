#include "freebloom/attention/attention.hpp"

#include "freebloom/core/error.hpp"

#include <cmath>
#include <string>

namespace freebloom {

FrameFeatures project_features(const Matrix& tokens, const Matrix& w_q, const Matrix& w_k, const Matrix& w_v) {
    if (tokens.cols() != w_q.rows() || tokens.cols() != w_k.rows() || tokens.cols() != w_v.rows()) {
        throw InvalidArgument("project_features: token width does not match projection input size");
    }
    return {tokens * w_q, tokens * w_k, tokens * w_v};
}

Matrix attention_weights(const Matrix& q, const Matrix& k) {
    if (q.cols() != k.cols()) {
        throw InvalidArgument("attention: query width " + std::to_string(q.cols()) + " != key width " +
                              std::to_string(k.cols()));
    }
    if (q.cols() == 0 || k.rows() == 0) {
        throw InvalidArgument("attention: empty query or key set");
    }
    Matrix logits = (q * k.transpose()) / std::sqrt(static_cast<double>(q.cols()));
    softmax_rows(logits);
    return logits;
}

Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v) {
    if (k.rows() != v.rows()) {
        throw InvalidArgument("attention: key count " + std::to_string(k.rows()) + " != value count " +
                              std::to_string(v.rows()));
    }
    return attention_weights(q, k) * v;
}

Matrix stack_rows(std::initializer_list<const Matrix*> blocks) {
    if (blocks.size() == 0) {
        throw InvalidArgument("stack_rows: no blocks");
    }
    Eigen::Index rows = 0;
    const Eigen::Index cols = (*blocks.begin())->cols();
    for (const Matrix* block : blocks) {
        if (block->cols() != cols) {
            throw InvalidArgument("stack_rows: column mismatch");
        }
        rows += block->rows();
    }
    Matrix out(rows, cols);
    Eigen::Index offset = 0;
    for (const Matrix* block : blocks) {
        out.middleRows(offset, block->rows()) = *block;
        offset += block->rows();
    }
    return out;
}

namespace {

void check_frames(std::span<const FrameFeatures> frames) {
    if (frames.empty()) {
        throw InvalidArgument("step-aware attention: empty frame list");
    }
    const auto& first = frames.front();
    for (const auto& f : frames) {
        if (f.q.rows() != first.q.rows() || f.k.rows() != first.k.rows() || f.q.cols() != first.q.cols() ||
            f.k.cols() != first.k.cols() || f.v.cols() != first.v.cols()) {
            throw InvalidArgument("step-aware attention: frames must share token count and model width");
        }
    }
}

} // namespace

std::vector<Matrix> frame_self_attention(std::span<const FrameFeatures> frames) {
    check_frames(frames);
    std::vector<Matrix> out;
    out.reserve(frames.size());
    for (const auto& f : frames) {
        out.push_back(scaled_dot_attention(f.q, f.k, f.v));
    }
    return out;
}

std::vector<Matrix> step_aware_self_attention(std::span<const FrameFeatures> frames, int t,
                                              const ShiftPolicy& policy) {
    if (!policy.contextual(t)) {
        return frame_self_attention(frames);
    }
    check_frames(frames);
    const FrameFeatures& first = frames.front();
    std::vector<Matrix> out;
    out.reserve(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const FrameFeatures& former = frames[i == 0 ? 0 : i - 1];
        const FrameFeatures& current = frames[i];
        const Matrix keys = stack_rows({&first.k, &former.k, &current.k});
        const Matrix values = stack_rows({&first.v, &former.v, &current.v});
        out.push_back(scaled_dot_attention(current.q, keys, values));
    }
    return out;
}

} // namespace freebloom
