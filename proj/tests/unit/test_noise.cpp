#include "freebloom/core/error.hpp"
#include "freebloom/core/random.hpp"
#include "freebloom/noise/joint_noise.hpp"
#include "freebloom/noise/latent_video.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace freebloom;

namespace {

JointNoiseConfig config(double lambda, NoiseMode mode = NoiseMode::trig, std::size_t frames = 4, std::size_t n = 8) {
    return JointNoiseConfig{frames, Shape{n}, lambda, mode};
}

// Two-pass sample covariance of coordinate c between frames a and b.
double naive_cov(const std::vector<LatentVideo>& samples, std::size_t a, std::size_t b, std::size_t c) {
    double ma = 0.0;
    double mb = 0.0;
    for (const auto& s : samples) {
        ma += s[a][c];
        mb += s[b][c];
    }
    ma /= samples.size();
    mb /= samples.size();
    double acc = 0.0;
    for (const auto& s : samples) {
        acc += (s[a][c] - ma) * (s[b][c] - mb);
    }
    return acc / (samples.size() - 1);
}

} // namespace

TEST_CASE("latent video validation") {
    CHECK_THROWS_AS(LatentVideo(std::vector<Tensor>{}), InvalidArgument);
    CHECK_THROWS_AS(LatentVideo({Tensor({2}), Tensor({3})}), InvalidArgument);
    CHECK_THROWS_AS(LatentVideo({Tensor({2}, {1.0, INFINITY})}), NumericDomainError);
    const LatentVideo v({Tensor({2}), Tensor({2})});
    CHECK(v.frame_count() == 2);
    CHECK(v.frame_shape() == Shape{2});
}

TEST_CASE("mixing weights") {
    for (double lambda : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
        const auto [u, i] = mixing_weights(lambda, NoiseMode::trig);
        CHECK(u == doctest::Approx(std::cos(std::numbers::pi * lambda / 2)).epsilon(1e-15));
        CHECK(i == doctest::Approx(std::sin(std::numbers::pi * lambda / 2)).epsilon(1e-15));
        CHECK(u * u + i * i == doctest::Approx(1.0).epsilon(1e-15));
        const auto [lu, li] = mixing_weights(lambda, NoiseMode::linear_ablation);
        CHECK(lu == 1.0 - lambda);
        CHECK(li == lambda);
    }
    CHECK(mixing_weights(0.0, NoiseMode::trig) == std::pair{1.0, 0.0});
    CHECK(mixing_weights(1.0, NoiseMode::trig) == std::pair{0.0, 1.0});
    CHECK_THROWS_AS(mixing_weights(-0.1, NoiseMode::trig), InvalidArgument);
    CHECK_THROWS_AS(mixing_weights(1.1, NoiseMode::trig), InvalidArgument);
    CHECK_THROWS_AS(mixing_weights(std::nan(""), NoiseMode::trig), InvalidArgument);
}

TEST_CASE("theoretical moments") {
    CHECK(theoretical_marginal_variance(0.3, NoiseMode::trig) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(theoretical_pair_covariance(0.5, NoiseMode::trig) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(theoretical_marginal_variance(0.5, NoiseMode::linear_ablation) == doctest::Approx(0.5));
    CHECK(theoretical_pair_covariance(0.5, NoiseMode::linear_ablation) == doctest::Approx(0.25));
}

TEST_CASE("noise mode names round-trip") {
    CHECK(parse_noise_mode(to_string(NoiseMode::trig)) == NoiseMode::trig);
    CHECK(parse_noise_mode(to_string(NoiseMode::linear_ablation)) == NoiseMode::linear_ablation);
    CHECK(parse_noise_mode("linear") == NoiseMode::linear_ablation);
    CHECK_THROWS_AS(parse_noise_mode("cosine"), InvalidArgument);
}

TEST_CASE("endpoint laws: lambda = 0 shares, lambda = 1 separates") {
    const RandomStream s(3, 0);
    const auto shared = sample_initial_noise(config(0.0), s);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(shared.video[i] == shared.unified);
    }
    const auto separate = sample_initial_noise(config(1.0), s);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK_FALSE(separate.video[i] == separate.unified);
        for (std::size_t j = i + 1; j < 4; ++j) {
            CHECK_FALSE(separate.video[i] == separate.video[j]);
        }
    }
    // same streams at every lambda: the unified part and the independent parts are reused
    CHECK(shared.unified == separate.unified);
}

TEST_CASE("frames decompose into the same unified and independent parts at every lambda") {
    const RandomStream s(9, 1);
    const auto pure = sample_initial_noise(config(1.0), s);
    for (double lambda : {0.2, 0.5, 0.8}) {
        const auto mixed = sample_initial_noise(config(lambda), s);
        const auto [u, w] = mixing_weights(lambda, NoiseMode::trig);
        for (std::size_t i = 0; i < 4; ++i) {
            const Tensor recovered = scaled(axpby(1.0, mixed.video[i], -u, mixed.unified), 1.0 / w);
            CHECK(max_abs_diff(recovered, pure.video[i]) < 1e-12);
        }
    }
}

TEST_CASE("sampling is deterministic per stream") {
    const auto a = sample_initial_noise(config(0.4), RandomStream(1, 0));
    const auto b = sample_initial_noise(config(0.4), RandomStream(1, 0));
    const auto c = sample_initial_noise(config(0.4), RandomStream(2, 0));
    CHECK(a.video == b.video);
    CHECK_FALSE(a.video == c.video);
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(config(0.5, NoiseMode::trig, 0).validate(), InvalidArgument);
    CHECK_THROWS_AS(config(1.5).validate(), InvalidArgument);
    JointNoiseConfig bad = config(0.5);
    bad.frame_shape = {};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("accumulator agrees with a two-pass oracle") {
    std::vector<LatentVideo> samples;
    const RandomStream s(77, 0);
    for (std::size_t k = 0; k < 50; ++k) {
        samples.push_back(sample_initial_noise(config(0.6, NoiseMode::trig, 3, 5), s.substream(k)).video);
    }
    const auto r = empirical_noise_report(samples, 0.6, NoiseMode::trig);
    REQUIRE(r.pair_cov.size() == 3);
    std::size_t pair = 0;
    for (std::size_t a = 0; a < 3; ++a) {
        double var = 0.0;
        double mean = 0.0;
        for (std::size_t c = 0; c < 5; ++c) {
            var += naive_cov(samples, a, a, c);
            for (const auto& x : samples) {
                mean += x[a][c];
            }
        }
        CHECK(r.marginal_var[a] == doctest::Approx(var / 5).epsilon(1e-12));
        CHECK(r.marginal_mean[a] == doctest::Approx(mean / (5 * samples.size())).epsilon(1e-12));
        for (std::size_t b = a + 1; b < 3; ++b, ++pair) {
            double cov = 0.0;
            for (std::size_t c = 0; c < 5; ++c) {
                cov += naive_cov(samples, a, b, c);
            }
            CHECK(r.pair_cov[pair] == doctest::Approx(cov / 5).epsilon(1e-12));
        }
    }
}

TEST_CASE("identical samples report zero spread and are flagged degenerate") {
    const auto v = sample_initial_noise(config(0.5), RandomStream(1, 1)).video;
    const std::vector<LatentVideo> samples(10, v);
    const auto r = empirical_noise_report(samples, 0.5, NoiseMode::trig);
    CHECK(r.degenerate);
    for (double var : r.marginal_var) {
        CHECK(var == 0.0);
    }
}

TEST_CASE("report errors") {
    const auto v = sample_initial_noise(config(0.5), RandomStream(1, 1)).video;
    CHECK_THROWS_AS(empirical_noise_report(std::vector<LatentVideo>{v}, 0.5, NoiseMode::trig), InvalidArgument);
    NoiseMomentAccumulator acc(4, 8);
    CHECK_THROWS_AS(acc.add(LatentVideo({Tensor({8})})), InvalidArgument);
    CHECK_THROWS_AS(NoiseMomentAccumulator(0, 8), InvalidArgument);
}

TEST_CASE("moderate-sample moments follow the joint law") {
    for (auto mode : {NoiseMode::trig, NoiseMode::linear_ablation}) {
        for (double lambda : {0.0, 0.3, 0.5, 1.0}) {
            NoiseMomentAccumulator acc(3, 8);
            const RandomStream s(31, 0);
            constexpr std::size_t samples = 20000;
            for (std::size_t k = 0; k < samples; ++k) {
                acc.add(sample_initial_noise(config(lambda, mode, 3, 8), s.substream(k)).video);
            }
            const auto r = acc.report(lambda, mode);
            // pooled over 8 coordinates: standard error about sqrt(2 / (8 * samples)) for unit variance
            const double tol = 5.0 * std::sqrt(2.0 / (8.0 * samples));
            for (double m : r.marginal_mean) {
                CHECK(std::abs(m) < tol);
            }
            for (double v : r.marginal_var) {
                CHECK(std::abs(v - r.theory_marginal_var) < tol);
            }
            for (double c : r.pair_cov) {
                CHECK(std::abs(c - r.theory_pair_cov) < tol);
            }
        }
    }
}

TEST_CASE("extension noise joins the existing joint law") {
    const double lambda = 0.5;
    constexpr std::size_t samples = 20000;
    double cov = 0.0;
    double var = 0.0;
    const RandomStream s(5, 0);
    for (std::size_t k = 0; k < samples; ++k) {
        const auto jn = sample_initial_noise(config(lambda, NoiseMode::trig, 2, 1), s.substream(k));
        const auto extra = sample_extension_noise(jn.unified, lambda, NoiseMode::trig, s.substream(k).substream(99));
        cov += extra[0] * jn.video[0][0];
        var += extra[0] * extra[0];
    }
    CHECK(cov / samples == doctest::Approx(0.5).epsilon(0.06));
    CHECK(var / samples == doctest::Approx(1.0).epsilon(0.06));
    const Tensor u({3}, {1.0, 2.0, 3.0});
    CHECK(sample_extension_noise(u, 0.0, NoiseMode::trig, s) == u);
}

TEST_CASE("report json carries the documented keys") {
    std::vector<LatentVideo> samples;
    for (std::size_t k = 0; k < 3; ++k) {
        samples.push_back(sample_initial_noise(config(0.5), RandomStream(k, 0)).video);
    }
    const auto j = empirical_noise_report(samples, 0.5, NoiseMode::trig).to_json();
    for (const char* key : {"mode", "lambda", "f", "n", "samples", "marginal_mean", "marginal_var", "pair_cov"}) {
        CHECK(j.contains(key));
    }
    CHECK(j["mode"] == "trig");
}
