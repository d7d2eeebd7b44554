#include "freebloom/core/error.hpp"
#include "freebloom/core/math.hpp"
#include "freebloom/core/random.hpp"
#include "freebloom/core/schedule.hpp"
#include "freebloom/core/tensor.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

using namespace freebloom;

TEST_CASE("philox4x32-10 known-answer vectors") {
    using Block = std::array<std::uint32_t, 4>;
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("random stream is a pure function of seed, stream and index") {
    const RandomStream a(7, 3);
    const RandomStream b(7, 3);
    for (std::uint64_t i = 0; i < 100; ++i) {
        CHECK(a.gaussian(i) == b.gaussian(i));
        CHECK(a.uniform(i) == b.uniform(i));
    }
    CHECK(a.substream(5) == b.substream(5));
    CHECK_FALSE(a.substream(5) == a.substream(6));
    CHECK(a.gaussian(0) != RandomStream(8, 3).gaussian(0));
    CHECK(a.gaussian(0) != RandomStream(7, 4).gaussian(0));
}

TEST_CASE("bulk fills agree with indexed draws at any offset") {
    const RandomStream s(11, 0);
    for (std::uint64_t first : {0ULL, 1ULL, 2ULL, 7ULL}) {
        std::vector<double> g(9);
        std::vector<double> u(9);
        s.fill_gaussian(g, first);
        s.fill_uniform(u, first);
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(g[i] == s.gaussian(first + i));
            CHECK(u[i] == s.uniform(first + i));
        }
    }
}

TEST_CASE("uniform draws lie in the open unit interval and gaussian moments match N(0,1)") {
    const RandomStream s(2024, 1);
    constexpr std::size_t n = 200000;
    std::vector<double> g(n);
    s.fill_gaussian(g);
    double mean = std::accumulate(g.begin(), g.end(), 0.0) / n;
    double var = 0.0;
    double fourth = 0.0;
    for (double x : g) {
        var += (x - mean) * (x - mean);
        fourth += std::pow(x - mean, 4);
    }
    var /= n - 1;
    fourth /= n;
    // five standard errors
    CHECK(std::abs(mean) < 5.0 / std::sqrt(double(n)));
    CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(fourth - 3.0) < 5.0 * std::sqrt(96.0 / n));

    std::vector<double> u(n);
    s.fill_uniform(u);
    for (double x : u) {
        REQUIRE(x > 0.0);
        REQUIRE(x < 1.0);
    }
    CHECK(std::abs(std::accumulate(u.begin(), u.end(), 0.0) / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("sibling substreams are uncorrelated") {
    const RandomStream s(5, 0);
    constexpr std::size_t n = 100000;
    std::vector<double> a(n);
    std::vector<double> b(n);
    s.substream(0).fill_gaussian(a);
    s.substream(1).fill_gaussian(b);
    const double corr = std::inner_product(a.begin(), a.end(), b.begin(), 0.0) / n;
    CHECK(std::abs(corr) < 5.0 / std::sqrt(double(n)));
}

TEST_CASE("seeded_gaussian lays draws out in flat order") {
    const RandomStream s(1, 2);
    const auto t = seeded_gaussian(s, {2, 3});
    REQUIRE(t.shape() == Shape{2, 3});
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(t[i] == s.gaussian(i));
    }
    CHECK_THROWS_AS(seeded_gaussian(s, {}), InvalidArgument);
}

TEST_CASE("tensor construction validates shapes") {
    CHECK_THROWS_AS(Tensor(Shape{}), InvalidArgument);
    CHECK_THROWS_AS(Tensor(Shape{2, 0}), InvalidArgument);
    CHECK_THROWS_AS(Tensor(Shape{2}, {1.0, 2.0, 3.0}), InvalidArgument);
    const Tensor z(Shape{2, 2});
    CHECK(z.size() == 4);
    CHECK(squared_norm(z) == 0.0);
    CHECK(Tensor::filled({3}, 2.5)[2] == 2.5);
    CHECK(shape_to_string({1, 16, 16}) == "[1, 16, 16]");
}

TEST_CASE("tensor arithmetic matches hand-computed values") {
    const Tensor x({3}, {1.0, -2.0, 3.0});
    const Tensor y({3}, {0.5, 4.0, -1.0});
    CHECK(axpby(2.0, x, -1.0, y) == Tensor({3}, {1.5, -8.0, 7.0}));
    CHECK(scaled(x, -0.5) == Tensor({3}, {-0.5, 1.0, -1.5}));
    CHECK(dot(x, y) == doctest::Approx(0.5 - 8.0 - 3.0));
    CHECK(squared_norm(x) == doctest::Approx(14.0));
    CHECK(norm(x) == doctest::Approx(std::sqrt(14.0)));
    CHECK(squared_distance(x, y) == doctest::Approx(0.25 + 36.0 + 16.0));
    CHECK(max_abs_diff(x, y) == doctest::Approx(6.0));
    CHECK_THROWS_AS(dot(x, Tensor({4})), InvalidArgument);
    CHECK_THROWS_AS(axpby(1.0, x, 1.0, Tensor({3, 1})), InvalidArgument);

    Tensor bad({2}, {1.0, std::nan("")});
    CHECK_FALSE(bad.all_finite());
    CHECK(x.all_finite());
}

TEST_CASE("softmax") {
    SUBCASE("matches the direct formula on small logits") {
        const std::vector<double> logits{0.1, -1.2, 2.0, 0.0};
        const auto p = softmax(logits);
        double z = 0.0;
        for (double l : logits) {
            z += std::exp(l);
        }
        for (std::size_t i = 0; i < logits.size(); ++i) {
            CHECK(p[i] == doctest::Approx(std::exp(logits[i]) / z).epsilon(1e-14));
        }
    }
    SUBCASE("shift invariant and stable on large logits") {
        const auto p = softmax(std::vector<double>{1000.0, 1001.0});
        const auto q = softmax(std::vector<double>{0.0, 1.0});
        CHECK(p[0] == doctest::Approx(q[0]).epsilon(1e-14));
        CHECK(p[1] == doctest::Approx(q[1]).epsilon(1e-14));
    }
    SUBCASE("rejects empty and non-finite input") {
        CHECK_THROWS_AS(softmax(std::vector<double>{}), InvalidArgument);
        CHECK_THROWS_AS(softmax(std::vector<double>{1.0, std::nan("")}), InvalidArgument);
        CHECK_THROWS_AS(softmax(std::vector<double>{INFINITY}), InvalidArgument);
    }
    SUBCASE("row-wise") {
        Matrix m(2, 3);
        m << 1, 2, 3, -1, 0, 5;
        softmax_rows(m);
        CHECK(m.row(0).sum() == doctest::Approx(1.0));
        CHECK(m.row(1).sum() == doctest::Approx(1.0));
        CHECK(m(0, 2) > m(0, 1));
    }
}

TEST_CASE("linear schedule cumulative products") {
    const auto s = default_schedule();
    CHECK(s.steps() == 1000);
    CHECK(s.beta(1) == doctest::Approx(1e-4).epsilon(1e-15));
    CHECK(s.beta(1000) == doctest::Approx(0.02).epsilon(1e-15));
    CHECK(s.alpha_bar(0) == 1.0);
    // independent oracle: exp of summed logs
    double log_abar = 0.0;
    for (int t = 1; t <= 1000; ++t) {
        const double beta = 1e-4 + (0.02 - 1e-4) * (t - 1) / 999.0;
        log_abar += std::log1p(-beta);
        REQUIRE(s.alpha_bar(t) == doctest::Approx(std::exp(log_abar)).epsilon(1e-12));
        REQUIRE(s.alpha(t) == doctest::Approx(1.0 - beta).epsilon(1e-14));
    }
    CHECK_THROWS_AS(s.beta(0), InvalidArgument);
    CHECK_THROWS_AS(s.alpha_bar(1001), InvalidArgument);
    CHECK_THROWS_AS(s.alpha_bar(-1), InvalidArgument);
    CHECK_THROWS_AS(linear_schedule(1, 1e-4, 0.02), InvalidArgument);
    CHECK_THROWS_AS(linear_schedule(10, 0.5, 0.1), InvalidArgument);
    CHECK_THROWS_AS(NoiseSchedule({0.1, 1.0}), InvalidArgument);
}

TEST_CASE("inference grid and thresholds") {
    const auto s = default_schedule();
    const auto grid = inference_timesteps(s, 50);
    REQUIRE(grid.size() == 50);
    CHECK(grid.front() == 1000);
    CHECK(grid.back() == 20);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        CHECK(grid[i - 1] - grid[i] == 20);
    }
    CHECK(inference_timesteps(s, 1) == std::vector<int>{1000});
    CHECK(inference_timesteps(s, 1000).back() == 1);
    CHECK_THROWS_AS(inference_timesteps(s, 0), InvalidArgument);
    CHECK_THROWS_AS(inference_timesteps(s, 1001), InvalidArgument);

    // the first round(fraction * steps) grid entries satisfy t >= threshold
    for (double frac : {0.1, 0.5, 0.8, 1.0}) {
        const int thr = threshold_for_fraction(grid, frac);
        const auto count = std::count_if(grid.begin(), grid.end(), [thr](int t) { return t >= thr; });
        CHECK(count == std::lround(frac * 50));
    }
    CHECK(threshold_for_fraction(grid, 0.8) == 220);
    CHECK_THROWS_AS(threshold_for_fraction(grid, 0.0), InvalidArgument);
    CHECK_THROWS_AS(threshold_for_fraction(grid, 1.5), InvalidArgument);
    CHECK_THROWS_AS(threshold_for_fraction({}, 0.5), InvalidArgument);
}

TEST_CASE("error kinds") {
    CHECK(std::string(to_string(ErrorKind::parse)) == "parse");
    const ParseError e("bad", "raw reply");
    CHECK(e.kind() == ErrorKind::parse);
    CHECK(e.raw_text() == "raw reply");
    CHECK(NumericDomainError("x").kind() == ErrorKind::numeric_domain);
}
