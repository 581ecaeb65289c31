#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lipsync/signal.hpp"
#include "test_util.hpp"

using namespace lipsync;
using signal::Series;

TEST_CASE("gaussian_smooth preserves constants") {
    const Series s{5.0, 5.0, 5.0, 5.0};
    for (double sigma : {0.5, 1.0, 2.5}) {
        const auto out = signal::gaussian_smooth(s, sigma);
        REQUIRE(out.size() == s.size());
        for (double v : out) CHECK(v == doctest::Approx(5.0).epsilon(1e-12));
    }
}

TEST_CASE("gaussian_smooth of a centered impulse equals the normalized kernel") {
    // Oracle: the truncated kernel exp(-k^2/2)/Z for k in [-4, 4].
    Series impulse(9, 0.0);
    impulse[4] = 1.0;
    const auto out = signal::gaussian_smooth(impulse, 1.0);

    double norm = 0.0;
    std::vector<double> kernel(9);
    for (int k = -4; k <= 4; ++k) {
        kernel[static_cast<std::size_t>(k + 4)] = std::exp(-0.5 * k * k);
        norm += kernel[static_cast<std::size_t>(k + 4)];
    }
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(out[i] == doctest::Approx(kernel[i] / norm).epsilon(1e-12));
    }
}

TEST_CASE("gaussian_smooth preserves the sum of symmetric inputs") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t half = 3 + static_cast<std::size_t>(rng() % 20);
        auto s = testutil::random_series(rng, half);
        // Mirror to make the series symmetric.
        Series sym(s);
        sym.insert(sym.end(), s.rbegin(), s.rend());

        double in_sum = 0.0;
        for (double v : sym) in_sum += v;
        const auto out = signal::gaussian_smooth(sym, 0.5 + 0.1 * (trial % 10));
        double out_sum = 0.0;
        for (double v : out) out_sum += v;
        CHECK(out_sum == doctest::Approx(in_sum).epsilon(1e-9));
    }
}

TEST_CASE("gaussian_smooth is linear") {
    std::mt19937 rng(11);
    const auto a = testutil::random_series(rng, 40);
    const auto b = testutil::random_series(rng, 40);
    const double alpha = 1.7, beta = -0.3;

    Series combo(40);
    for (std::size_t i = 0; i < 40; ++i) combo[i] = alpha * a[i] + beta * b[i];

    const auto sa = signal::gaussian_smooth(a, 1.3);
    const auto sb = signal::gaussian_smooth(b, 1.3);
    const auto sc = signal::gaussian_smooth(combo, 1.3);
    for (std::size_t i = 0; i < 40; ++i) {
        CHECK(sc[i] == doctest::Approx(alpha * sa[i] + beta * sb[i]).epsilon(1e-9));
    }
}

TEST_CASE("gaussian_smooth rejects bad sigma") {
    CHECK_THROWS_AS(signal::gaussian_smooth({1.0, 2.0}, 0.0), ConfigError);
    CHECK_THROWS_AS(signal::gaussian_smooth({1.0, 2.0}, -1.0), ConfigError);
}

TEST_CASE("first_difference") {
    CHECK(signal::first_difference({1.0, 3.0, 6.0}) == Series{2.0, 3.0});
    CHECK(signal::first_difference({4.0, 4.0, 4.0}) == Series{0.0, 0.0});
    CHECK_THROWS_AS(signal::first_difference({1.0}), LengthError);

    std::mt19937 rng(3);
    const auto s = testutil::random_series(rng, 64);
    const auto out = signal::first_difference(s);
    REQUIRE(out.size() == 63);
    for (std::size_t t = 0; t < out.size(); ++t) {
        CHECK(out[t] == s[t + 1] - s[t]); // exact
    }
}

TEST_CASE("local_extrema basic shapes") {
    using signal::ExtremumKind;
    const auto peaks = signal::local_extrema({0.0, 1.0, 0.0});
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0].index == 1);
    CHECK(peaks[0].kind == ExtremumKind::maximum);

    CHECK(signal::local_extrema({1.0, 2.0, 3.0, 4.0}).empty());
    CHECK_THROWS_AS(signal::local_extrema({1.0, 2.0}), LengthError);
}

TEST_CASE("local_extrema plateau rule reports the leftmost index") {
    using signal::ExtremumKind;
    const auto flat_max = signal::local_extrema({0.0, 2.0, 2.0, 2.0, 1.0});
    REQUIRE(flat_max.size() == 1);
    CHECK(flat_max[0].index == 1);
    CHECK(flat_max[0].kind == ExtremumKind::maximum);

    const auto flat_min = signal::local_extrema({3.0, 1.0, 1.0, 2.0});
    REQUIRE(flat_min.size() == 1);
    CHECK(flat_min[0].index == 1);
    CHECK(flat_min[0].kind == ExtremumKind::minimum);

    // Plateau touching a boundary is not an extremum; a saddle is neither.
    CHECK(signal::local_extrema({2.0, 2.0, 1.0}).empty());
    CHECK(signal::local_extrema({0.0, 1.0, 1.0, 2.0}).empty());
}

TEST_CASE("local_extrema matches an exhaustive scan on random series") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 3 + static_cast<std::size_t>(rng() % 30);
        const auto s = testutil::random_series(rng, n);

        // Oracle: direct neighbor comparison (random reals are tie-free).
        std::vector<signal::Extremum> expected;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (s[i - 1] < s[i] && s[i] > s[i + 1]) {
                expected.push_back({i, signal::ExtremumKind::maximum});
            } else if (s[i - 1] > s[i] && s[i] < s[i + 1]) {
                expected.push_back({i, signal::ExtremumKind::minimum});
            }
        }
        CHECK(signal::local_extrema(s) == expected);
    }
}

TEST_CASE("local_extrema kinds alternate") {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = signal::gaussian_smooth(testutil::random_series(rng, 60), 1.0);
        const auto extrema = signal::local_extrema(s);
        for (std::size_t k = 1; k < extrema.size(); ++k) {
            CHECK(extrema[k].kind != extrema[k - 1].kind);
        }
    }
}

TEST_CASE("rms") {
    CHECK(signal::rms(std::vector<double>{0.0, 0.0, 0.0}) == 0.0);
    CHECK_THROWS_AS(signal::rms(std::vector<double>{}), LengthError);

    // Sine of amplitude A over whole periods has RMS A / sqrt(2).
    const double amplitude = 0.4;
    std::vector<double> sine(1000);
    for (std::size_t i = 0; i < sine.size(); ++i) {
        sine[i] = amplitude * std::sin(2.0 * std::numbers::pi * 5.0 * i / sine.size());
    }
    CHECK(signal::rms(sine) ==
          doctest::Approx(amplitude / std::numbers::sqrt2).epsilon(1e-6));

    std::mt19937 rng(12);
    const auto xs = testutil::random_series(rng, 257);
    double acc = 0.0;
    for (double x : xs) acc += x * x;
    CHECK(signal::rms(xs) == doctest::Approx(std::sqrt(acc / 257.0)).epsilon(1e-12));
}

TEST_CASE("z_normalize_by_group two-point symmetry") {
    const auto out = signal::z_normalize_by_group({{"a", 1.0}, {"b", 3.0}},
                                                  {{"a", "id0"}, {"b", "id0"}});
    CHECK(out.values.at("a") == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(out.values.at("b") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.degenerate_groups.empty());
}

TEST_CASE("z_normalize_by_group degenerate groups pin to zero with a warning") {
    const auto single = signal::z_normalize_by_group({{"a", 7.0}}, {{"a", "id0"}});
    CHECK(single.values.at("a") == 0.0);
    REQUIRE(single.degenerate_groups.size() == 1);
    CHECK(single.degenerate_groups[0] == "id0");

    const auto constant = signal::z_normalize_by_group(
        {{"a", 2.0}, {"b", 2.0}, {"c", 5.0}, {"d", 6.0}},
        {{"a", "flat"}, {"b", "flat"}, {"c", "ok"}, {"d", "ok"}});
    CHECK(constant.values.at("a") == 0.0);
    CHECK(constant.values.at("b") == 0.0);
    CHECK(constant.degenerate_groups == std::vector<std::string>{"flat"});
    CHECK(constant.values.at("c") == doctest::Approx(-1.0));
    CHECK(constant.values.at("d") == doctest::Approx(1.0));
}

TEST_CASE("z_normalize_by_group yields population mean 0 and sigma 1 per group") {
    std::mt19937 rng(31);
    std::map<std::string, double> values;
    std::map<std::string, std::string> groups;
    for (int i = 0; i < 60; ++i) {
        const std::string id = "clip" + std::to_string(i);
        values[id] = testutil::random_series(rng, 1, -5.0, 5.0)[0];
        groups[id] = "g" + std::to_string(i % 4);
    }
    const auto out = signal::z_normalize_by_group(values, groups);
    for (int g = 0; g < 4; ++g) {
        const std::string group = "g" + std::to_string(g);
        std::vector<double> zs;
        for (const auto& [id, z] : out.values) {
            if (groups.at(id) == group) zs.push_back(z);
        }
        double mean = 0.0;
        for (double z : zs) mean += z;
        mean /= static_cast<double>(zs.size());
        double var = 0.0;
        for (double z : zs) var += (z - mean) * (z - mean);
        var /= static_cast<double>(zs.size());
        CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("z_normalize_by_group requires a group for every id") {
    CHECK_THROWS_AS(signal::z_normalize_by_group({{"a", 1.0}}, {}), ConfigError);
}

TEST_CASE("cosine_similarity") {
    const std::vector<double> a{1.0, 2.0, -1.0};
    CHECK(signal::cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(signal::cosine_similarity(std::vector<double>{1.0, 0.0},
                                    std::vector<double>{0.0, 1.0}) == 0.0);

    std::vector<double> neg(a);
    for (double& x : neg) x = -x;
    CHECK(signal::cosine_similarity(a, neg) == doctest::Approx(-1.0).epsilon(1e-12));

    CHECK_THROWS_AS(signal::cosine_similarity(std::vector<double>{0.0, 0.0, 0.0}, a), DataError);
    CHECK_THROWS_AS(
        signal::cosine_similarity(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}),
        ConfigError);
}

TEST_CASE("cosine_similarity is invariant under positive scaling") {
    std::mt19937 rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = testutil::random_series(rng, 16);
        const auto b = testutil::random_series(rng, 16);
        std::vector<double> scaled(b);
        for (double& x : scaled) x *= 137.0;
        CHECK(signal::cosine_similarity(a, b) ==
              doctest::Approx(signal::cosine_similarity(a, scaled)).epsilon(1e-12));
    }
}

TEST_CASE("pearson exact correlations") {
    CHECK(signal::pearson(std::vector<double>{1.0, 2.0, 3.0},
                          std::vector<double>{2.0, 4.0, 6.0}) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(signal::pearson(std::vector<double>{1.0, 2.0, 3.0},
                          std::vector<double>{3.0, 2.0, 1.0}) ==
          doctest::Approx(-1.0).epsilon(1e-12));
    CHECK_THROWS_AS(signal::pearson(std::vector<double>{1.0, 1.0},
                                    std::vector<double>{1.0, 2.0}),
                    DegenerateError);
    CHECK_THROWS_AS(signal::pearson(std::vector<double>{1.0}, std::vector<double>{1.0}),
                    LengthError);
}

TEST_CASE("pearson matches the textbook two-pass oracle on random vectors") {
    std::mt19937 rng(53);
    const auto x = testutil::random_series(rng, 1000);
    const auto y = testutil::random_series(rng, 1000);

    // Independent oracle: direct covariance formula.
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= 1000.0;
    my /= 1000.0;
    double cov = 0.0, vx = 0.0, vy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        cov += (x[i] - mx) * (y[i] - my);
        vx += (x[i] - mx) * (x[i] - mx);
        vy += (y[i] - my) * (y[i] - my);
    }
    const double expected = cov / std::sqrt(vx * vy);
    CHECK(signal::pearson(x, y) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("pearson affine invariance and sign flip") {
    std::mt19937 rng(59);
    const auto x = testutil::random_series(rng, 200);
    const auto y = testutil::random_series(rng, 200);
    const double r = signal::pearson(x, y);

    std::vector<double> affine(y);
    for (double& v : affine) v = 3.5 * v + 11.0;
    CHECK(signal::pearson(x, affine) == doctest::Approx(r).epsilon(1e-9));

    std::vector<double> negated(y);
    for (double& v : negated) v = -v;
    CHECK(signal::pearson(x, negated) == doctest::Approx(-r).epsilon(1e-9));
}
