#include "freebloom/denoiser/mixture.hpp"

#include "freebloom/core/error.hpp"
#include "freebloom/core/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace freebloom {

namespace {

enum StreamLabel : std::uint64_t {
    kMeanMapLabel = 0x6d65616e,   // "mean"
    kOffsetLabel = 0x6f666673,    // "offs"
    kComponentLabel = 0x636f6d70, // "comp"
    kNoiseLabel = 0x6e6f6973,     // "nois"
};

} // namespace

std::size_t MixtureSpec::latent_size() const {
    return offsets.empty() ? 0 : offsets.front().size();
}

void MixtureSpec::validate() const {
    const std::size_t k = weights.size();
    if (k == 0) {
        throw InvalidArgument("mixture needs at least one component");
    }
    if (offsets.size() != k || stddevs.size() != k) {
        throw InvalidArgument("mixture weights, offsets and stddevs must have equal length");
    }
    if (embed_dim == 0) {
        throw InvalidArgument("mixture embed_dim must be positive");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw InvalidArgument("mixture weights must be positive");
        }
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw InvalidArgument("mixture weights must sum to 1 (got " + std::to_string(total) + ")");
    }
    for (double s : stddevs) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw InvalidArgument("mixture stddevs must be positive");
        }
    }
    const std::size_t n = offsets.front().size();
    if (n == 0) {
        throw InvalidArgument("mixture offsets must be non-empty");
    }
    for (const auto& b : offsets) {
        if (b.size() != n) {
            throw InvalidArgument("mixture offsets must share one length");
        }
    }
}

nlohmann::json MixtureSpec::to_json() const {
    return {
        {"K", component_count()},
        {"weights", weights},
        {"A_seed", a_seed},
        {"embed_dim", embed_dim},
        {"b_k", offsets},
        {"s_k", stddevs},
    };
}

MixtureSpec MixtureSpec::from_json(const nlohmann::json& doc) {
    MixtureSpec spec;
    try {
        spec.weights = doc.at("weights").get<std::vector<double>>();
        spec.a_seed = doc.at("A_seed").get<std::uint64_t>();
        spec.embed_dim = doc.value("embed_dim", std::size_t{64});
        spec.offsets = doc.at("b_k").get<std::vector<std::vector<double>>>();
        spec.stddevs = doc.at("s_k").get<std::vector<double>>();
        if (doc.contains("K") && doc.at("K").get<std::size_t>() != spec.weights.size()) {
            throw InvalidArgument("mixture K does not match the number of weights");
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed mixture spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

MixtureSpec default_mixture_spec(std::size_t latent_size, std::size_t embed_dim, std::uint64_t seed) {
    MixtureSpec spec;
    spec.weights = {0.5, 0.3, 0.2};
    spec.stddevs = {0.3, 0.5, 0.4};
    spec.a_seed = seed;
    spec.embed_dim = embed_dim;
    const RandomStream offsets(seed, kOffsetLabel);
    for (std::size_t k = 0; k < spec.weights.size(); ++k) {
        std::vector<double> b(latent_size);
        offsets.substream(k).fill_gaussian(b);
        for (double& v : b) {
            v *= 0.5;
        }
        spec.offsets.push_back(std::move(b));
    }
    spec.validate();
    return spec;
}

MixtureSpec single_gaussian_spec(std::size_t latent_size, std::size_t embed_dim, std::uint64_t a_seed,
                                 std::vector<double> offset, double stddev) {
    if (offset.empty()) {
        offset.assign(latent_size, 0.0);
    }
    if (offset.size() != latent_size) {
        throw InvalidArgument("single_gaussian_spec: offset length must equal latent size");
    }
    MixtureSpec spec;
    spec.weights = {1.0};
    spec.a_seed = a_seed;
    spec.embed_dim = embed_dim;
    spec.offsets = {std::move(offset)};
    spec.stddevs = {stddev};
    spec.validate();
    return spec;
}

GaussianMixtureModel::GaussianMixtureModel(MixtureSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    const auto n = static_cast<Eigen::Index>(spec_.latent_size());
    const auto d = static_cast<Eigen::Index>(spec_.embed_dim);
    mean_map_.resize(n, d);
    const RandomStream stream(spec_.a_seed, kMeanMapLabel);
    // row-major draw order
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < d; ++c) {
            mean_map_(r, c) = stream.gaussian(static_cast<std::uint64_t>(r * d + c));
        }
    }
}

std::vector<Vector> GaussianMixtureModel::component_means(const Embedding& e) const {
    if (e.dim() != spec_.embed_dim) {
        throw InvalidArgument("embedding dimension " + std::to_string(e.dim()) + " != mixture embed_dim " +
                              std::to_string(spec_.embed_dim));
    }
    const Eigen::Map<const Vector> ev(e.values.data(), static_cast<Eigen::Index>(e.dim()));
    const Vector shared = mean_map_ * ev;
    std::vector<Vector> means;
    means.reserve(spec_.component_count());
    for (const auto& b : spec_.offsets) {
        means.push_back(shared + Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size())));
    }
    return means;
}

namespace {

struct ComponentTerms {
    std::vector<double> log_weights;  // unnormalized log responsibilities
    std::vector<double> variances;
    std::vector<Vector> residuals;    // x - sqrt(abar) mu_k
};

ComponentTerms component_terms(const GaussianMixtureModel& model, const Tensor& x, int t, const Embedding& e,
                               const NoiseSchedule& schedule) {
    const auto& spec = model.spec();
    if (x.size() != spec.latent_size()) {
        throw InvalidArgument("latent size " + std::to_string(x.size()) + " != mixture latent size " +
                              std::to_string(spec.latent_size()));
    }
    if (t < 1 || t > schedule.steps()) {
        throw InvalidArgument("mixture predictor: timestep " + std::to_string(t) + " out of range");
    }
    const double abar = schedule.alpha_bar(t);
    const double signal = std::sqrt(abar);
    const double n = static_cast<double>(x.size());
    const Eigen::Map<const Vector> xv(x.values().data(), static_cast<Eigen::Index>(x.size()));
    const auto means = model.component_means(e);

    ComponentTerms terms;
    for (std::size_t k = 0; k < spec.component_count(); ++k) {
        const double s = spec.stddevs[k];
        const double v = abar * s * s + (1.0 - abar);
        Vector residual = xv - signal * means[k];
        terms.log_weights.push_back(std::log(spec.weights[k]) - 0.5 * n * std::log(2.0 * std::numbers::pi * v) -
                                    0.5 * residual.squaredNorm() / v);
        terms.variances.push_back(v);
        terms.residuals.push_back(std::move(residual));
    }
    return terms;
}

std::vector<double> normalize_log_weights(const std::vector<double>& log_weights, int t, const Tensor& x) {
    double peak = -std::numeric_limits<double>::infinity();
    for (double lw : log_weights) {
        peak = std::max(peak, lw);
    }
    if (!std::isfinite(peak)) {
        std::ostringstream msg;
        msg << "mixture responsibilities underflowed at t=" << t << " (|x|=" << norm(x) << ")";
        throw NumericDomainError(msg.str());
    }
    std::vector<double> r(log_weights.size());
    double total = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
        r[k] = std::exp(log_weights[k] - peak);
        total += r[k];
    }
    for (double& v : r) {
        v /= total;
    }
    return r;
}

} // namespace

std::vector<double> GaussianMixtureModel::responsibilities(const Tensor& x, int t, const Embedding& e,
                                                           const NoiseSchedule& schedule) const {
    const auto terms = component_terms(*this, x, t, e, schedule);
    return normalize_log_weights(terms.log_weights, t, x);
}

Tensor GaussianMixtureModel::eps(const Tensor& x, int t, const Embedding& e, const NoiseSchedule& schedule) const {
    const auto terms = component_terms(*this, x, t, e, schedule);
    const auto r = normalize_log_weights(terms.log_weights, t, x);
    Vector acc = Vector::Zero(static_cast<Eigen::Index>(x.size()));
    for (std::size_t k = 0; k < r.size(); ++k) {
        acc += (r[k] / terms.variances[k]) * terms.residuals[k];
    }
    acc *= std::sqrt(1.0 - schedule.alpha_bar(t));
    Tensor out(x.shape(), std::vector<double>(acc.data(), acc.data() + acc.size()));
    if (!out.all_finite()) {
        throw NumericDomainError("mixture eps is non-finite at t=" + std::to_string(t));
    }
    return out;
}

Tensor GaussianMixtureModel::sample(const Embedding& e, const Shape& shape, const RandomStream& stream) const {
    if (shape_size(shape) != spec_.latent_size()) {
        throw InvalidArgument("mixture sample shape does not match latent size");
    }
    const double u = stream.substream(kComponentLabel).uniform(0);
    std::size_t k = 0;
    double cumulative = spec_.weights[0];
    while (u > cumulative && k + 1 < spec_.component_count()) {
        ++k;
        cumulative += spec_.weights[k];
    }
    const auto means = component_means(e);
    Tensor out = seeded_gaussian(stream.substream(kNoiseLabel), shape);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = means[k](static_cast<Eigen::Index>(i)) + spec_.stddevs[k] * out[i];
    }
    return out;
}

Tensor analytic_mixture_eps(const Tensor& x, int t, const Embedding& e, const MixtureSpec& spec,
                            const NoiseSchedule& schedule) {
    return GaussianMixtureModel(spec).eps(x, t, e, schedule);
}

AnalyticMixturePredictor::AnalyticMixturePredictor(MixtureSpec spec, NoiseSchedule schedule)
    : model_(std::move(spec)), schedule_(std::move(schedule)) {}

std::vector<Tensor> AnalyticMixturePredictor::predict(const LatentVideo& frames, int t,
                                                      std::span<const Embedding> embeddings,
                                                      AttentionMode /*mode*/) const {
    check_predict_inputs(frames, embeddings);
    std::vector<Tensor> out;
    out.reserve(frames.frame_count());
    for (std::size_t i = 0; i < frames.frame_count(); ++i) {
        out.push_back(model_.eps(frames[i], t, embeddings[i], schedule_));
    }
    return out;
}

} // namespace freebloom
