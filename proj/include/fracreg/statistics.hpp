#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracreg/fbm.hpp"
#include "fracreg/kernels.hpp"

namespace fracreg {

/// Parameters of the kernel-weighted regression statistic
///   S_n(x0) = sum_{i<n} K(n^alpha (B_i^{h1} - x0)) (B_{i+1}^{h2} - B_i^{h2})
/// with bandwidth h_n = n^{-alpha}.
struct ModelConfig {
    HurstParam h1;
    HurstParam h2;
    double alpha;
    std::size_t n;
    double x0 = 0.0;

    void validate() const {
        if (!(alpha > 0.0))
            throw std::invalid_argument("bandwidth exponent alpha must be positive, got " +
                                        std::to_string(alpha));
        if (n == 0) throw std::invalid_argument("sample size n must be positive");
    }

    double bandwidth_scale() const { return std::pow(static_cast<double>(n), alpha); }

    /// n^{(alpha+h1-1)/2}: the statistic's normalization.
    double statistic_scale() const {
        return std::pow(static_cast<double>(n), 0.5 * (alpha + h1.value - 1.0));
    }

    /// n^{alpha+h1-1}: the bracket's (and variance's) normalization.
    double bracket_scale() const {
        return std::pow(static_cast<double>(n), alpha + h1.value - 1.0);
    }
};

/// Admissible bandwidth-exponent interval from the two standing conditions
/// alpha > 4 h2 - h1 - 2 (off-diagonal negligibility) and alpha < 1 - h1
/// (convergence of the limit law), intersected with alpha > 0.
struct AdmissibleRegion {
    double lower;
    double upper;
    bool nonempty() const { return lower < upper; }
    bool contains(double alpha) const { return alpha > lower && alpha < upper; }
};

inline AdmissibleRegion admissible_region(HurstParam h1, HurstParam h2) {
    return {std::max(0.0, 4.0 * h2.value - h1.value - 2.0), 1.0 - h1.value};
}

/// Limit of the scaled second moment: C1 = 1 / (2 pi sqrt(2) (1 - h1)).
inline double c1_constant(HurstParam h1) {
    return 1.0 / (2.0 * std::numbers::pi * std::numbers::sqrt2 * (1.0 - h1.value));
}

/// One realization of the statistic together with its conditional moments.
struct StatisticSample {
    double s_n;                  // S_n(x0)
    double bracket;              // sum of squared kernel weights
    double a_n;                  // conditional variance, off-diagonal included
    double s_n_normalized;       // n^{(alpha+h1-1)/2} S_n
    double bracket_normalized;   // n^{alpha+h1-1} bracket
};

namespace detail {

inline void check_path_against_config(const FbmPath& path, HurstParam expected,
                                      const ModelConfig& config, const char* which) {
    if (path.length < config.n)
        throw std::invalid_argument(std::string(which) + " has length " +
                                    std::to_string(path.length) + " but the statistic needs n=" +
                                    std::to_string(config.n));
    if (path.hurst.value != expected.value)
        throw std::invalid_argument(std::string(which) + " carries Hurst " +
                                    std::to_string(path.hurst.value) +
                                    " but the configuration expects " +
                                    std::to_string(expected.value));
}

} // namespace detail

/// Kernel weights K(n^alpha (B_i - x0)), i = 0..n-1, on the regressor path.
inline std::vector<double> kernel_weights(const FbmPath& path1, const ModelConfig& config) {
    config.validate();
    detail::check_path_against_config(path1, config.h1, config, "regressor path");
    const double scale = config.bandwidth_scale();
    std::vector<double> weights(config.n);
    for (std::size_t i = 0; i < config.n; ++i)
        weights[i] = gaussian_kernel(scale * (path1.values[i] - config.x0));
    return weights;
}

namespace detail {

inline double bracket_from_weights(const std::vector<double>& weights) {
    double acc = 0.0;
    for (double w : weights) acc += w * w;
    return acc;
}

/// Quadratic form sum_{i,j} w_i w_j f_{h2}(i,j), accumulated lag by lag so the
/// result is independent of any outer parallelism and bit-reproducible.
inline double conditional_variance_from_weights(const std::vector<double>& weights,
                                                HurstParam h2) {
    const std::size_t n = weights.size();
    double acc = bracket_from_weights(weights);   // lag 0: f = 1
    for (std::size_t lag = 1; lag < n; ++lag) {
        const double f = increment_covariance_lag(lag, h2);
        if (f == 0.0) continue;
        double dot = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) dot += weights[i] * weights[i + lag];
        acc += 2.0 * f * dot;
    }
    return acc;
}

} // namespace detail

/// Bracket sum_{i<n} K^2(n^alpha (B_i - x0)); bounded by n/(2 pi).
inline double compute_bracket(const FbmPath& path1, const ModelConfig& config) {
    return detail::bracket_from_weights(kernel_weights(path1, config));
}

/// Conditional variance of S_n given the regressor path:
/// a_n = sum_{i,j<n} K_i K_j f_{h2}(i,j). O(n^2); equals the bracket exactly
/// when h2 = 1/2 (independent increments).
inline double conditional_variance(const FbmPath& path1, const ModelConfig& config) {
    return detail::conditional_variance_from_weights(kernel_weights(path1, config), config.h2);
}

namespace detail {

inline double weighted_increment_sum(const std::vector<double>& weights, const FbmPath& path2) {
    double s = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i)
        s += weights[i] * (path2.values[i + 1] - path2.values[i]);
    return s;
}

} // namespace detail

/// S_n alone, without the O(n^2) conditional moments.
inline double statistic_value(const FbmPath& path1, const FbmPath& path2,
                              const ModelConfig& config) {
    detail::check_path_against_config(path2, config.h2, config, "error path");
    return detail::weighted_increment_sum(kernel_weights(path1, config), path2);
}

/// Conditional characteristic function of the normalized statistic:
/// E(exp(i lambda_n S_n) | path1) = exp(-lambda_n^2 a_n / 2) with
/// lambda_n = lambda n^{(alpha+h1-1)/2}. Real-valued by symmetry.
inline double conditional_char(double lambda, const FbmPath& path1, const ModelConfig& config) {
    const double lambda_n = lambda * config.statistic_scale();
    return std::exp(-0.5 * lambda_n * lambda_n * conditional_variance(path1, config));
}

/// The statistic plus its conditional moments on a shared regressor path.
inline StatisticSample compute_statistic(const FbmPath& path1, const FbmPath& path2,
                                         const ModelConfig& config) {
    detail::check_path_against_config(path2, config.h2, config, "error path");
    const std::vector<double> weights = kernel_weights(path1, config);
    const double s = detail::weighted_increment_sum(weights, path2);
    const double bracket = detail::bracket_from_weights(weights);
    const double a_n = detail::conditional_variance_from_weights(weights, config.h2);
    return {s, bracket, a_n, config.statistic_scale() * s, config.bracket_scale() * bracket};
}

/// Exact diagonal moment T' = E(sum_i K^2(n^alpha B_i^{h1}))
///                          = sum_{i<n} 1/(2 pi sqrt(1 + 2 n^{2 alpha} i^{2 h1})).
/// Valid for the statistic evaluated at x0 = 0.
inline double exact_diagonal(const ModelConfig& config) {
    config.validate();
    const double n2a = std::pow(static_cast<double>(config.n), 2.0 * config.alpha);
    const double two_h1 = 2.0 * config.h1.value;
    double acc = 0.0;
    for (std::size_t i = 0; i < config.n; ++i) {
        const double ipow = std::pow(static_cast<double>(i), two_h1);
        acc += 1.0 / (2.0 * std::numbers::pi * std::sqrt(1.0 + 2.0 * n2a * ipow));
    }
    return acc;
}

/// Exact pair moment E(K(n^alpha B_i^{h1}) K(n^alpha B_j^{h1})) at x0 = 0.
/// Off-diagonal pairs with i,j >= 1 use the nondegenerate bivariate Gaussian
/// closed form; pairs touching index 0 reduce to K(0) times a single-kernel
/// expectation because B_0 = 0; the diagonal uses E(exp(-c Z^2)).
inline double pair_kernel_expectation(std::uint64_t i, std::uint64_t j,
                                      const ModelConfig& config) {
    config.validate();
    const double n2a = std::pow(static_cast<double>(config.n), 2.0 * config.alpha);
    const double two_h1 = 2.0 * config.h1.value;
    const double two_pi = 2.0 * std::numbers::pi;
    if (i == j) {
        if (i == 0) return 1.0 / two_pi;   // K(0)^2
        const double ipow = std::pow(static_cast<double>(i), two_h1);
        return 1.0 / (two_pi * std::sqrt(1.0 + 2.0 * n2a * ipow));
    }
    if (i == 0 || j == 0) {
        const double kpow = std::pow(static_cast<double>(std::max(i, j)), two_h1);
        return 1.0 / (two_pi * std::sqrt(1.0 + n2a * kpow));
    }
    const double ipow = std::pow(static_cast<double>(i), two_h1);
    const double jpow = std::pow(static_cast<double>(j), two_h1);
    const double det = gamma_determinant(i, j, config.h1);
    return 1.0 / (two_pi * std::sqrt(n2a * n2a * det + n2a * (ipow + jpow) + 1.0));
}

/// Exact off-diagonal moment T'' = sum_{i != j, i,j < n} E(K_i K_j) f_{h2}(i,j)
/// at x0 = 0, organized by lag. O(n^2); refuses sizes past the desk-scale
/// bound where a Monte Carlo estimate is the sensible tool.
inline double exact_offdiagonal(const ModelConfig& config) {
    config.validate();
    if (config.n > (std::size_t{1} << 14))
        throw std::invalid_argument(
            "exact_offdiagonal is an O(n^2) sum limited to n <= 16384; "
            "estimate the second moment by Monte Carlo instead");
    const std::size_t n = config.n;
    const double n2a = std::pow(static_cast<double>(n), 2.0 * config.alpha);
    const double two_h1 = 2.0 * config.h1.value;
    const double two_pi = 2.0 * std::numbers::pi;

    std::vector<double> pow2h(n);
    for (std::size_t i = 0; i < n; ++i) pow2h[i] = std::pow(static_cast<double>(i), two_h1);

    // pairs (i,0) and (0,i): kernel at index 0 is deterministic
    double acc = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double pair = 1.0 / (two_pi * std::sqrt(1.0 + n2a * pow2h[i]));
        acc += 2.0 * pair * increment_covariance_lag(i, config.h2);
    }
    // interior pairs, grouped by lag k = i - j
    for (std::size_t lag = 1; lag + 1 < n; ++lag) {
        const double f = increment_covariance_lag(lag, config.h2);
        if (f == 0.0) continue;
        double inner = 0.0;
        for (std::size_t j = 1; j + lag < n; ++j) {
            const std::size_t i = j + lag;
            const double r = 0.5 * (pow2h[i] + pow2h[j] - pow2h[lag]);
            const double det = pow2h[i] * pow2h[j] - r * r;
            inner += 1.0 / (two_pi * std::sqrt(n2a * n2a * det + n2a * (pow2h[i] + pow2h[j]) + 1.0));
        }
        acc += 2.0 * f * inner;
    }
    return acc;
}

} // namespace fracreg
