#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fracreg/fbm.hpp"
#include "fracreg/kernels.hpp"
#include "fracreg/statistics.hpp"

namespace fracreg {

enum class LocalTimeMethod { occupation_band, heat_smoothed, bracket_implied };

inline const char* to_string(LocalTimeMethod m) {
    switch (m) {
        case LocalTimeMethod::occupation_band: return "occupation_band";
        case LocalTimeMethod::heat_smoothed: return "heat_smoothed";
        case LocalTimeMethod::bracket_implied: return "bracket_implied";
    }
    return "unknown";
}

/// An estimate of the local time L(1,0) of the path rescaled to [0,1].
struct LocalTimeEstimate {
    double value;
    LocalTimeMethod method;
    double bandwidth;       // band half-width h or smoothing variance eps
    std::size_t grid_size;
};

/// Occupation-time estimator: the fraction of grid points B_{i/n}, i < n,
/// inside [-h, h], divided by the band width 2h. The rescaled grid values
/// are n^{-H} times the stored integer-grid values.
inline LocalTimeEstimate occupation_band_estimate(const FbmPath& path, double h) {
    if (!(h > 0.0))
        throw std::invalid_argument("occupation band half-width must be positive, got " +
                                    std::to_string(h));
    const std::size_t n = path.length;
    const double scale = path.unit_grid_scale();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(scale * path.values[i]) <= h) ++hits;
    const double value = static_cast<double>(hits) / (2.0 * h * static_cast<double>(n));
    return {value, LocalTimeMethod::occupation_band, h, n};
}

/// Heat-kernel-smoothed estimator: (1/n) sum_{i<n} p_eps(B_{i/n}).
inline LocalTimeEstimate heat_smoothed_estimate(const FbmPath& path, double eps) {
    if (!(eps > 0.0))
        throw std::invalid_argument("smoothing variance eps must be positive, got " +
                                    std::to_string(eps));
    const std::size_t n = path.length;
    const double scale = path.unit_grid_scale();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += heat_kernel(scale * path.values[i], eps);
    const double value = acc / static_cast<double>(n);
    return {value, LocalTimeMethod::heat_smoothed, eps, n};
}

/// Bracket-implied estimator: the normalized bracket converges to
/// d1 L(1,0), so L is read off as n^{alpha+h1-1} bracket / d1.
inline LocalTimeEstimate bracket_implied_estimate(const FbmPath& path, const ModelConfig& config) {
    const double bracket_normalized = config.bracket_scale() * compute_bracket(path, config);
    return {bracket_normalized / kernel_l2_norm(), LocalTimeMethod::bracket_implied,
            1.0 / config.bandwidth_scale(), config.n};
}

/// E L^H(1,0) = integral over [0,1] of (2 pi s^{2H})^{-1/2} ds
///            = 1 / (sqrt(2 pi) (1 - H)).
inline double expected_local_time(HurstParam hurst) {
    return 1.0 / (std::sqrt(2.0 * std::numbers::pi) * (1.0 - hurst.value));
}

/// Scaled gap between the Riemann sum and the pathwise integral of the
/// squared scaled kernel:
///   n^{alpha+h1} | (1/n) sum_{i<n} K^2(n^{alpha+h1} B_{i/n})
///                 - integral_0^1 K^2(n^{alpha+h1} B_s) ds |.
/// The integral is approximated by the trapezoid rule on the refined grid the
/// path was simulated on; the refinement factor is path.length / config.n.
inline double riemann_discrepancy(const FbmPath& fine_path, const ModelConfig& config) {
    config.validate();
    const std::size_t n = config.n;
    const std::size_t total = fine_path.length;
    if (total % n != 0 || total / n < 2)
        throw std::invalid_argument("riemann_discrepancy needs the path simulated on a grid "
                                    "refined by an integer factor >= 2 (path length " +
                                    std::to_string(total) + ", n=" + std::to_string(n) + ")");
    if (fine_path.hurst.value != config.h1.value)
        throw std::invalid_argument("riemann_discrepancy path must carry the h1 Hurst exponent");
    const std::size_t refine = total / n;
    const double scale = fine_path.unit_grid_scale();
    const double amp = std::pow(static_cast<double>(n), config.alpha + config.h1.value);

    auto g = [&](std::size_t k) {
        const double w = gaussian_kernel(amp * scale * fine_path.values[k]);
        return w * w;
    };
    double coarse = 0.0;
    for (std::size_t i = 0; i < n; ++i) coarse += g(i * refine);
    coarse /= static_cast<double>(n);
    double integral = 0.0;
    double prev = g(0);
    for (std::size_t k = 1; k <= total; ++k) {
        const double cur = g(k);
        integral += 0.5 * (prev + cur);
        prev = cur;
    }
    integral /= static_cast<double>(total);
    return amp * std::abs(coarse - integral);
}

} // namespace fracreg
