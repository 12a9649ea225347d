#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "fracreg/fbm.hpp"
#include "fracreg/kernels.hpp"
#include "fracreg/localtime.hpp"
#include "fracreg/statistics.hpp"
#include "test_support.hpp"

using namespace fracreg;
using Catch::Approx;

namespace {

ModelConfig make_config(double h1, double h2, double alpha, std::size_t n, double x0 = 0.0) {
    return ModelConfig{HurstParam(h1), HurstParam(h2), alpha, n, x0};
}

FbmPath path_with_values(double h, std::vector<double> values) {
    FbmPath path{HurstParam(h), values.size() - 1, std::move(values)};
    return path;
}

} // namespace

TEST_CASE("admissible region cases") {
    const AdmissibleRegion symmetric = admissible_region(HurstParam(0.5), HurstParam(0.5));
    CHECK(symmetric.lower == 0.0);
    CHECK(symmetric.upper == 0.5);
    CHECK(symmetric.nonempty());

    const AdmissibleRegion boundary = admissible_region(HurstParam(0.75), HurstParam(0.75));
    CHECK(boundary.lower == Approx(0.25).epsilon(1e-12));
    CHECK(boundary.upper == Approx(0.25).epsilon(1e-12));
    CHECK_FALSE(boundary.nonempty());

    const AdmissibleRegion wide = admissible_region(HurstParam(0.3), HurstParam(0.9));
    CHECK(wide.lower == Approx(1.3).epsilon(1e-12));
    CHECK(wide.upper == Approx(0.7).epsilon(1e-12));
    CHECK_FALSE(wide.nonempty());
}

TEST_CASE("c1 constant") {
    CHECK(c1_constant(HurstParam(0.5)) == Approx(0.22507907903927652).epsilon(1e-14));
    CHECK(c1_constant(HurstParam(0.9)) == Approx(1.1253953951963826).epsilon(1e-14));
}

TEST_CASE("c1 equals d1 times the expected local time") {
    for (int hi = 1; hi <= 9; ++hi) {
        const HurstParam h(hi / 10.0);
        CHECK(c1_constant(h) ==
              Approx(kernel_l2_norm() * expected_local_time(h)).epsilon(1e-12));
    }
}

TEST_CASE("exact diagonal values") {
    CHECK(exact_diagonal(make_config(0.5, 0.5, 0.25, 1)) ==
          Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-15));
    // frozen sums, scaled by n^{alpha+h1-1}
    const ModelConfig thousand = make_config(0.5, 0.5, 0.25, 1000);
    CHECK(thousand.bracket_scale() * exact_diagonal(thousand) ==
          Approx(0.24805659586029043).epsilon(1e-13));
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(make_config(0.5, 0.5, 0.0, 16).validate(), std::invalid_argument);
    CHECK_THROWS_AS(make_config(0.5, 0.5, -0.25, 16).validate(), std::invalid_argument);
    CHECK_THROWS_AS(make_config(0.5, 0.5, 0.25, 0).validate(), std::invalid_argument);
}

TEST_CASE("pair kernel expectation against 2-d quadrature") {
    // independent oracle: Simpson integration of K(n^a x) K(n^a y) against
    // the bivariate density of (B_i, B_j)
    const ModelConfig config = make_config(0.5, 0.5, 0.25, 4);
    const std::uint64_t i = 1, j = 2;
    const double h2 = 2.0 * config.h1.value;
    const double r = fbm_covariance(static_cast<double>(i), static_cast<double>(j), config.h1);
    const double det = std::pow(static_cast<double>(i * j), h2) - r * r;
    const double na = config.bandwidth_scale();
    const double ipow = std::pow(static_cast<double>(i), h2);
    const double jpow = std::pow(static_cast<double>(j), h2);
    const auto integrand = [&](double x, double y) {
        const double quad = (jpow * x * x - 2.0 * r * x * y + ipow * y * y) / det;
        const double density =
            std::exp(-0.5 * quad) / (2.0 * std::numbers::pi * std::sqrt(det));
        return gaussian_kernel(na * x) * gaussian_kernel(na * y) * density;
    };
    const double quadrature = testsupport::simpson2d(integrand, -8.0, 8.0, -8.0, 8.0, 400);
    CHECK(pair_kernel_expectation(i, j, config) == Approx(quadrature).epsilon(1e-8));
    CHECK(pair_kernel_expectation(i, j, config) == Approx(0.047987020887834815).epsilon(1e-14));
}

TEST_CASE("pair kernel expectation symmetry and decay") {
    const ModelConfig config = make_config(0.6, 0.5, 0.3, 64);
    for (std::uint64_t i = 1; i < 8; ++i)
        for (std::uint64_t j = 1; j < 8; ++j)
            CHECK(pair_kernel_expectation(i, j, config) == pair_kernel_expectation(j, i, config));

    // vanishes as n grows with the pair fixed
    double prev = std::numeric_limits<double>::infinity();
    for (const std::size_t n : {16, 256, 4096, 65536}) {
        const double value = pair_kernel_expectation(2, 5, make_config(0.6, 0.5, 0.3, n));
        CHECK(value < prev);
        prev = value;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("pair kernel expectation boundary cases") {
    const ModelConfig config = make_config(0.5, 0.5, 0.25, 16);
    const double na2 = config.bandwidth_scale() * config.bandwidth_scale();
    // index 0 pairs reduce to K(0) E(K(n^a B_j)) with B_j ~ N(0, j^{2H})
    const double expected =
        gaussian_kernel(0.0) * gaussian_kernel(0.0) * gaussian_square_expectation(0.5 * na2 * 3.0);
    CHECK(pair_kernel_expectation(0, 3, config) == Approx(expected).epsilon(1e-13));
    CHECK(pair_kernel_expectation(3, 0, config) == Approx(expected).epsilon(1e-13));
    // diagonal reduces to E(K^2)
    const double diag = pair_kernel_expectation(4, 4, config);
    CHECK(diag ==
          Approx(gaussian_square_expectation(na2 * 4.0) / (2.0 * std::numbers::pi)).epsilon(1e-13));
    CHECK(pair_kernel_expectation(0, 0, config) == Approx(1.0 / (2.0 * std::numbers::pi)));
}

TEST_CASE("exact off-diagonal vanishes for independent increments") {
    CHECK(exact_offdiagonal(make_config(0.5, 0.5, 0.3, 128)) == 0.0);
}

TEST_CASE("exact off-diagonal matches a brute-force pair sum") {
    // independent oracle: direct double loop over ordered pairs
    const ModelConfig config = make_config(0.55, 0.7, 0.3, 24);
    double brute = 0.0;
    for (std::uint64_t i = 0; i < config.n; ++i)
        for (std::uint64_t j = 0; j < config.n; ++j)
            if (i != j)
                brute += pair_kernel_expectation(i, j, config) *
                         increment_covariance(i, j, config.h2);
    CHECK(exact_offdiagonal(config) == Approx(brute).epsilon(1e-12));
}

TEST_CASE("scaled off-diagonal trend is nonincreasing for the martingale case") {
    double prev = std::numeric_limits<double>::infinity();
    for (const std::size_t n : {256, 1024, 4096}) {
        const ModelConfig config = make_config(0.5, 0.5, 0.25, n);
        const double scaled = config.bracket_scale() * std::abs(exact_offdiagonal(config));
        CHECK(scaled <= prev);
        prev = scaled;
    }
}

TEST_CASE("exact off-diagonal refuses oversized grids") {
    CHECK_THROWS_AS(exact_offdiagonal(make_config(0.5, 0.6, 0.25, 1 << 15)),
                    std::invalid_argument);
}

TEST_CASE("second moment decomposition against monte carlo", "[slow]") {
    // E(S_n^2) = T' + T'' exactly at every n; checked at an out-of-region
    // parameter point where the off-diagonal is material
    const ModelConfig config = make_config(0.75, 0.75, 0.3, 128);
    const double exact = exact_diagonal(config) + exact_offdiagonal(config);
    const std::size_t reps = 10000;
    const CirculantSampler sampler1(config.n, config.h1);
    const CirculantSampler sampler2(config.n, config.h2);
    std::vector<double> squares(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        GaussianStream g1 = seeded_substream(60, r, StreamRole::path1);
        GaussianStream g2 = seeded_substream(60, r, StreamRole::path2);
        const double s = statistic_value(sampler1.sample(g1), sampler2.sample(g2), config);
        squares[r] = s * s;
    }
    const double est = testsupport::mean(squares);
    INFO("MC=" << est << " exact=" << exact << " se=" << testsupport::std_error(squares));
    CHECK(std::abs(est - exact) <= 5.0 * testsupport::std_error(squares));
}

TEST_CASE("scaled second moment approaches c1 monotonically in-region", "[slow]") {
    // deterministic trend of |n^{alpha+h1-1}(T'+T'') - C1| along four grid
    // sizes, for parameters inside the admissible region
    struct Triple { double h1, h2, alpha; };
    for (const Triple p : {Triple{0.5, 0.5, 0.25}, Triple{0.4, 0.6, 0.35}}) {
        REQUIRE(admissible_region(HurstParam(p.h1), HurstParam(p.h2)).contains(p.alpha));
        const double c1 = c1_constant(HurstParam(p.h1));
        double prev = std::numeric_limits<double>::infinity();
        for (const std::size_t n : {256, 1024, 4096, 16384}) {
            const ModelConfig config = make_config(p.h1, p.h2, p.alpha, n);
            const double scaled =
                config.bracket_scale() * (exact_diagonal(config) + exact_offdiagonal(config));
            const double err = std::abs(scaled - c1);
            INFO("h1=" << p.h1 << " h2=" << p.h2 << " alpha=" << p.alpha << " n=" << n
                       << " err=" << err);
            CHECK(err < prev);
            prev = err;
        }
    }
}

TEST_CASE("monte carlo bracket mean is unbiased for the exact diagonal", "[slow]") {
    const ModelConfig config = make_config(0.5, 0.5, 0.25, 256);
    const double exact = exact_diagonal(config);
    const std::size_t reps = 10000;
    const CirculantSampler sampler(config.n, config.h1);
    std::vector<double> brackets(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        GaussianStream g = seeded_substream(71, r, StreamRole::path1);
        brackets[r] = compute_bracket(sampler.sample(g), config);
    }
    const double est = testsupport::mean(brackets);
    INFO("MC=" << est << " exact=" << exact);
    CHECK(std::abs(est - exact) <= 5.0 * testsupport::std_error(brackets));
}

TEST_CASE("statistic at n=1 is the kernel weight times the first increment") {
    const ModelConfig config = make_config(0.5, 0.7, 0.25, 1);
    const FbmPath path1 = path_with_values(0.5, {0.0, 1.3});
    const FbmPath path2 = path_with_values(0.7, {0.0, -0.4});
    const StatisticSample s = compute_statistic(path1, path2, config);
    CHECK(s.s_n == Approx(gaussian_kernel(0.0) * -0.4).epsilon(1e-15));
    CHECK(s.bracket == Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-15));
}

TEST_CASE("bracket matches the statistic's bracket field bit-exactly") {
    GaussianStream g1 = seeded_substream(8, 0, StreamRole::path1);
    GaussianStream g2 = seeded_substream(8, 0, StreamRole::path2);
    const ModelConfig config = make_config(0.6, 0.4, 0.3, 64);
    const FbmPath path1 = generate_circulant(64, HurstParam(0.6), g1);
    const FbmPath path2 = generate_circulant(64, HurstParam(0.4), g2);
    const StatisticSample s = compute_statistic(path1, path2, config);
    CHECK(s.bracket == compute_bracket(path1, config));
    CHECK(s.bracket_normalized == config.bracket_scale() * s.bracket);
    CHECK(s.s_n_normalized == config.statistic_scale() * s.s_n);
    CHECK(s.bracket >= 0.0);
    CHECK(s.bracket <= static_cast<double>(config.n) / (2.0 * std::numbers::pi));
}

TEST_CASE("conditional variance equals the bracket in the martingale case") {
    GaussianStream g = seeded_substream(21, 0, StreamRole::path1);
    const ModelConfig config = make_config(0.7, 0.5, 0.2, 128);
    const FbmPath path1 = generate_circulant(128, HurstParam(0.7), g);
    CHECK(conditional_variance(path1, config) == compute_bracket(path1, config));
}

TEST_CASE("conditional variance on a two-point path matches the quadratic form") {
    const ModelConfig config = make_config(0.5, 0.75, 0.25, 2);
    const FbmPath path1 = path_with_values(0.5, {0.0, 0.7, 1.1});
    const double na = config.bandwidth_scale();
    const double k0 = gaussian_kernel(0.0);
    const double k1 = gaussian_kernel(na * 0.7);
    const double expected = k0 * k0 + k1 * k1 +
                            2.0 * k0 * k1 * increment_covariance(0, 1, config.h2);
    CHECK(conditional_variance(path1, config) == Approx(expected).epsilon(1e-14));
}

TEST_CASE("conditional variance is nonnegative on sampled paths") {
    for (const double h2 : {0.5, 0.6, 0.9}) {
        const ModelConfig config = make_config(0.5, h2, 0.25, 64);
        for (std::size_t r = 0; r < 20; ++r) {
            GaussianStream g = seeded_substream(90, r, StreamRole::path1);
            const FbmPath path1 = generate_circulant(64, HurstParam(0.5), g);
            CHECK(conditional_variance(path1, config) >= 0.0);
        }
    }
}

TEST_CASE("kernel weights implement the shifted argument exactly") {
    GaussianStream g = seeded_substream(33, 0, StreamRole::path1);
    const FbmPath path1 = generate_circulant(32, HurstParam(0.5), g);
    const ModelConfig shifted = make_config(0.5, 0.5, 0.25, 32, 0.8);
    const std::vector<double> weights = kernel_weights(path1, shifted);
    const double na = shifted.bandwidth_scale();
    for (std::size_t i = 0; i < 32; ++i)
        CHECK(weights[i] == gaussian_kernel(na * (path1.values[i] - 0.8)));
}

TEST_CASE("conditional law of the statistic given the regressor", "[slow]") {
    // with path1 frozen, S_n ~ N(0, a_n): variance within 5 SE and the
    // standardized sample passes a KS test against the standard normal
    const ModelConfig config = make_config(0.5, 0.5, 0.25, 64);
    GaussianStream g1 = seeded_substream(7, 0, StreamRole::path1);
    const FbmPath path1 = generate_circulant(64, HurstParam(0.5), g1);
    const double a_n = conditional_variance(path1, config);

    const std::size_t reps = 10000;
    const CirculantSampler sampler2(64, HurstParam(0.5));
    std::vector<double> stats(reps), squares(reps);
    for (std::size_t r = 0; r < reps; ++r) {
        GaussianStream g2 = seeded_substream(7, r, StreamRole::path2);
        stats[r] = statistic_value(path1, sampler2.sample(g2), config);
        squares[r] = stats[r] * stats[r];
    }
    CHECK(std::abs(testsupport::mean(squares) - a_n) <= 5.0 * testsupport::std_error(squares));

    std::vector<double> standardized(reps);
    for (std::size_t r = 0; r < reps; ++r) standardized[r] = stats[r] / std::sqrt(a_n);
    // one-sample KS against N(0,1) at the 1% level: c(0.01)/sqrt(reps)
    CHECK(testsupport::ks_against_normal(standardized) < 1.6276 / std::sqrt(double(reps)));
}

TEST_CASE("conditional characteristic function basics") {
    GaussianStream g = seeded_substream(44, 0, StreamRole::path1);
    const ModelConfig config = make_config(0.5, 0.7, 0.25, 32);
    const FbmPath path1 = generate_circulant(32, HurstParam(0.5), g);
    CHECK(conditional_char(0.0, path1, config) == 1.0);
    double prev = 1.0;
    for (const double lambda : {0.5, 1.0, 2.0, 4.0}) {
        const double value = conditional_char(lambda, path1, config);
        CHECK(value < prev);
        CHECK(value > 0.0);
        CHECK(conditional_char(-lambda, path1, config) == value);
        prev = value;
    }
}

TEST_CASE("conditional characteristic function against monte carlo", "[slow]") {
    const ModelConfig config = make_config(0.5, 0.75, 0.25, 48);
    GaussianStream g1 = seeded_substream(70, 0, StreamRole::path1);
    const FbmPath path1 = generate_circulant(48, HurstParam(0.5), g1);
    const double lambda = 1.0;
    const double lambda_n = lambda * config.statistic_scale();
    const std::size_t reps = 20000;
    const CirculantSampler sampler2(48, HurstParam(0.75));
    double acc = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        GaussianStream g2 = seeded_substream(70, r, StreamRole::path2);
        acc += std::cos(lambda_n * statistic_value(path1, sampler2.sample(g2), config));
    }
    const double empirical = acc / static_cast<double>(reps);
    CHECK(std::abs(empirical - conditional_char(lambda, path1, config)) <=
          3.0 / std::sqrt(static_cast<double>(reps)));
}

TEST_CASE("dimension and configuration errors") {
    const ModelConfig config = make_config(0.5, 0.5, 0.25, 64);
    GaussianStream g = seeded_substream(3, 0, StreamRole::path1);
    const FbmPath short_path = generate_circulant(16, HurstParam(0.5), g);
    CHECK_THROWS_AS(compute_bracket(short_path, config), std::invalid_argument);

    GaussianStream g2 = seeded_substream(3, 1, StreamRole::path1);
    const FbmPath wrong_hurst = generate_circulant(64, HurstParam(0.3), g2);
    CHECK_THROWS_AS(compute_bracket(wrong_hurst, config), std::invalid_argument);

    GaussianStream g3 = seeded_substream(3, 2, StreamRole::path1);
    GaussianStream g4 = seeded_substream(3, 2, StreamRole::path2);
    const FbmPath ok1 = generate_circulant(64, HurstParam(0.5), g3);
    const FbmPath bad2 = generate_circulant(64, HurstParam(0.75), g4);
    CHECK_THROWS_AS(compute_statistic(ok1, bad2, config), std::invalid_argument);
}
