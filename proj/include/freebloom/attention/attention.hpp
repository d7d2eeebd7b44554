#pragma once

#include "freebloom/core/math.hpp"

#include <span>
#include <vector>

namespace freebloom {

/// Query/key/value projections of one frame's tokens (tokens x model_dim).
struct FrameFeatures {
    Matrix q;
    Matrix k;
    Matrix v;
};

FrameFeatures project_features(const Matrix& tokens, const Matrix& w_q, const Matrix& w_k, const Matrix& w_v);

/// Attention switches from contextual frames to the frame itself once the
/// denoising timestep drops below tau.
struct ShiftPolicy {
    int tau = 1;

    bool contextual(int t) const noexcept { return t >= tau; }
};

/// softmax(Q K^T / sqrt(d)) row by row; rows sum to one.
Matrix attention_weights(const Matrix& q, const Matrix& k);

/// softmax(Q K^T / sqrt(d)) V.
Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v);

/// Rows of the listed matrices stacked in order.
Matrix stack_rows(std::initializer_list<const Matrix*> blocks);

/// For t >= tau frame i attends over [K_0, K_{i-1}, K_i] / [V_0, V_{i-1}, V_i]
/// (frame 0 uses its own block three times); for t < tau each frame attends
/// only to itself. All frames' features must be projected before the call.
std::vector<Matrix> step_aware_self_attention(std::span<const FrameFeatures> frames, int t,
                                              const ShiftPolicy& policy);

/// Plain per-frame self-attention (the t < tau branch, applied unconditionally).
std::vector<Matrix> frame_self_attention(std::span<const FrameFeatures> frames);

} // namespace freebloom
