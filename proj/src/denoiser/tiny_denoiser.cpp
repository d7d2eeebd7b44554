#include "freebloom/denoiser/tiny_denoiser.hpp"

#include "freebloom/core/error.hpp"
#include "freebloom/core/random.hpp"

#include <cmath>

namespace freebloom {

namespace {

Matrix random_matrix(const RandomStream& root, std::uint64_t label, std::size_t rows, std::size_t cols) {
    const RandomStream stream = root.substream(label);
    const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                scale * stream.gaussian(r * cols + c);
        }
    }
    return m;
}

Vector random_vector(const RandomStream& root, std::uint64_t label, std::size_t size, double scale) {
    const RandomStream stream = root.substream(label);
    Vector v(static_cast<Eigen::Index>(size));
    for (std::size_t i = 0; i < size; ++i) {
        v(static_cast<Eigen::Index>(i)) = scale * stream.gaussian(i);
    }
    return v;
}

double gelu(double x) {
    return 0.5 * x * (1.0 + std::tanh(0.7978845608028654 * (x + 0.044715 * x * x * x)));
}

} // namespace

Vector timestep_embedding(int t, std::size_t dim) {
    if (dim == 0 || dim % 2 != 0) {
        throw InvalidArgument("timestep embedding width must be a positive even number");
    }
    const std::size_t half = dim / 2;
    Vector out(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
        out(static_cast<Eigen::Index>(2 * i)) = std::sin(t * freq);
        out(static_cast<Eigen::Index>(2 * i + 1)) = std::cos(t * freq);
    }
    return out;
}

TinyAttentionDenoiser::TinyAttentionDenoiser(TinyDenoiserConfig config) : config_(config) {
    if (config_.channels == 0 || config_.patch == 0 || config_.model_dim == 0 || config_.hidden_dim == 0 || config_.embed_dim == 0) {
        throw InvalidArgument("tiny denoiser dimensions must be positive");
    }
    if (config_.model_dim % 2 != 0) {
        throw InvalidArgument("tiny denoiser model_dim must be even");
    }
    if (config_.shift.tau < 1) {
        throw InvalidArgument("attention shift tau must be >= 1");
    }
    const RandomStream root(config_.weights_seed, 0x74696e79);  // "tiny"
    const std::size_t d = config_.model_dim;
    const std::size_t e = config_.embed_dim;
    const std::size_t h = config_.hidden_dim;
    const std::size_t patch_dim = config_.channels * config_.patch * config_.patch;
    weights_.token_in = random_matrix(root, 1, patch_dim, d);
    weights_.token_bias = random_vector(root, 2, d, 0.1);
    weights_.query = random_matrix(root, 3, d, d);
    weights_.key = random_matrix(root, 4, d, d);
    weights_.value = random_matrix(root, 5, d, d);
    weights_.attn_out = random_matrix(root, 6, d, d);
    weights_.cross_query = random_matrix(root, 7, d, d);
    weights_.cross_key = random_matrix(root, 8, e, d);
    weights_.cross_value = random_matrix(root, 9, e, d);
    weights_.cross_out = random_matrix(root, 10, d, d);
    weights_.mlp_in = random_matrix(root, 11, d, h);
    weights_.mlp_bias = random_vector(root, 12, h, 0.1);
    weights_.mlp_out = random_matrix(root, 13, h, d);
    weights_.read_out = random_matrix(root, 14, d, patch_dim) * 0.5;
}

Matrix TinyAttentionDenoiser::patchify(const Tensor& latent) const {
    const auto& shape = latent.shape();
    if (shape.size() != 3 || shape[0] != config_.channels) {
        throw InvalidArgument("tiny denoiser expects (" + std::to_string(config_.channels) +
                              ", h, w) latents, got " + shape_to_string(shape));
    }
    const std::size_t c = shape[0], h = shape[1], w = shape[2], p = config_.patch;
    if (h % p != 0 || w % p != 0) {
        throw InvalidArgument("frame shape " + shape_to_string(shape) + " not divisible by patch size " +
                              std::to_string(p));
    }
    const std::size_t rows = h / p, cols = w / p;
    Matrix tokens(static_cast<Eigen::Index>(rows * cols), static_cast<Eigen::Index>(c * p * p));
    for (std::size_t pr = 0; pr < rows; ++pr) {
        for (std::size_t pc = 0; pc < cols; ++pc) {
            const auto token = static_cast<Eigen::Index>(pr * cols + pc);
            Eigen::Index feature = 0;
            for (std::size_t ch = 0; ch < c; ++ch) {
                for (std::size_t y = 0; y < p; ++y) {
                    for (std::size_t x = 0; x < p; ++x) {
                        tokens(token, feature++) = latent[(ch * h + pr * p + y) * w + pc * p + x];
                    }
                }
            }
        }
    }
    return tokens;
}

Tensor TinyAttentionDenoiser::unpatchify(const Matrix& patches, const Shape& shape) const {
    const std::size_t c = shape[0], h = shape[1], w = shape[2], p = config_.patch;
    const std::size_t cols = w / p;
    Tensor out(shape);
    for (Eigen::Index token = 0; token < patches.rows(); ++token) {
        const std::size_t pr = static_cast<std::size_t>(token) / cols;
        const std::size_t pc = static_cast<std::size_t>(token) % cols;
        Eigen::Index feature = 0;
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t y = 0; y < p; ++y) {
                for (std::size_t x = 0; x < p; ++x) {
                    out[(ch * h + pr * p + y) * w + pc * p + x] = patches(token, feature++);
                }
            }
        }
    }
    return out;
}

Matrix TinyAttentionDenoiser::positional(std::size_t tokens) const {
    const RandomStream root(config_.weights_seed, 0x706f7369);  // "posi"
    Matrix pos = random_matrix(root, tokens, tokens, config_.model_dim);
    return pos * (0.1 * std::sqrt(static_cast<double>(tokens)));
}

std::vector<Tensor> TinyAttentionDenoiser::predict(const LatentVideo& frames, int t,
                                                   std::span<const Embedding> embeddings,
                                                   AttentionMode mode) const {
    check_predict_inputs(frames, embeddings);
    const Shape& shape = frames.frame_shape();
    const Vector time = timestep_embedding(t, config_.model_dim);

    std::vector<Matrix> hidden;
    std::vector<FrameFeatures> features;
    hidden.reserve(frames.frame_count());
    features.reserve(frames.frame_count());
    Matrix pos;
    for (std::size_t i = 0; i < frames.frame_count(); ++i) {
        if (embeddings[i].dim() != config_.embed_dim) {
            throw InvalidArgument("embedding dimension " + std::to_string(embeddings[i].dim()) +
                                  " != tiny denoiser embed_dim " + std::to_string(config_.embed_dim));
        }
        Matrix tokens = patchify(frames[i]);
        if (pos.rows() != tokens.rows()) {
            pos = positional(static_cast<std::size_t>(tokens.rows()));
        }
        Matrix h = tokens * weights_.token_in;
        h.rowwise() += (weights_.token_bias + time).transpose();
        h += pos;
        features.push_back(project_features(h, weights_.query, weights_.key, weights_.value));
        hidden.push_back(std::move(h));
    }

    // Two-phase: every frame is projected above before any frame attends.
    const std::vector<Matrix> attended = mode == AttentionMode::context
                                             ? step_aware_self_attention(features, t, config_.shift)
                                             : frame_self_attention(features);

    std::vector<Tensor> out;
    out.reserve(frames.frame_count());
    for (std::size_t i = 0; i < frames.frame_count(); ++i) {
        Matrix h = hidden[i] + attended[i] * weights_.attn_out;

        const Eigen::Map<const Vector> e(embeddings[i].values.data(),
                                         static_cast<Eigen::Index>(embeddings[i].dim()));
        const Matrix text_key = e.transpose() * weights_.cross_key;
        const Matrix text_value = e.transpose() * weights_.cross_value;
        h += scaled_dot_attention(h * weights_.cross_query, text_key, text_value) * weights_.cross_out;

        Matrix inner = h * weights_.mlp_in;
        inner.rowwise() += weights_.mlp_bias.transpose();
        inner = inner.unaryExpr(&gelu);
        h += inner * weights_.mlp_out;

        Tensor eps = unpatchify(h * weights_.read_out, shape);
        if (!eps.all_finite()) {
            throw NumericDomainError("tiny denoiser produced non-finite output at t=" + std::to_string(t));
        }
        out.push_back(std::move(eps));
    }
    return out;
}

std::vector<Tensor> tiny_denoiser_predict(const LatentVideo& frames, int t, std::span<const Embedding> embeddings,
                                          int tau, std::uint64_t weights_seed) {
    TinyDenoiserConfig config;
    config.weights_seed = weights_seed;
    config.shift.tau = tau;
    if (!embeddings.empty()) {
        config.embed_dim = embeddings.front().dim();
    }
    if (frames.frame_count() > 0 && frames.frame_shape().size() == 3) {
        config.channels = frames.frame_shape()[0];
    }
    return TinyAttentionDenoiser(config).predict(frames, t, embeddings, AttentionMode::context);
}

} // namespace freebloom
