#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracreg/rng.hpp"

namespace fracreg {

/// Hurst exponent, strictly inside (0,1).
struct HurstParam {
    double value;

    explicit HurstParam(double v) : value(v) {
        if (!(v > 0.0 && v < 1.0))
            throw std::invalid_argument("Hurst parameter must lie strictly in (0,1), got " +
                                        std::to_string(v));
    }
};

/// Covariance R^H(t,s) = (t^{2H} + s^{2H} - |t-s|^{2H}) / 2 of fractional
/// Brownian motion started at zero.
inline double fbm_covariance(double t, double s, HurstParam hurst) {
    if (t < 0.0 || s < 0.0)
        throw std::invalid_argument("fbm_covariance requires nonnegative times");
    const double h2 = 2.0 * hurst.value;
    return 0.5 * (std::pow(t, h2) + std::pow(s, h2) - std::pow(std::abs(t - s), h2));
}

/// Covariance f_H(i,j) of the unit-spaced increments B_{i+1}-B_i and
/// B_{j+1}-B_j; stationary, depends on |i-j| only, equals 1 on the diagonal.
inline double increment_covariance_lag(std::uint64_t lag, HurstParam hurst) {
    const double h2 = 2.0 * hurst.value;
    const double k = static_cast<double>(lag);
    return 0.5 * (std::pow(k + 1.0, h2) + std::pow(std::abs(k - 1.0), h2) - 2.0 * std::pow(k, h2));
}

inline double increment_covariance(std::uint64_t i, std::uint64_t j, HurstParam hurst) {
    return increment_covariance_lag(i >= j ? i - j : j - i, hurst);
}

/// Determinant of the covariance matrix of (B_i, B_j): (ij)^{2H} - R(i,j)^2.
/// Positive for i != j (both >= 1), zero when i == j.
inline double gamma_determinant(std::uint64_t i, std::uint64_t j, HurstParam hurst) {
    const double ti = static_cast<double>(i);
    const double tj = static_cast<double>(j);
    const double r = fbm_covariance(ti, tj, hurst);
    return std::pow(ti * tj, 2.0 * hurst.value) - r * r;
}

/// Record of which stream produced a path (Philox key plus starting counter).
struct SeedProvenance {
    std::uint64_t key = 0;
    std::uint64_t counter = 0;
};

/// One sampled trajectory B_0..B_n on the unit-spaced integer grid. The
/// rescaled trajectory on [0,1] is obtained through self-similarity as
/// n^{-H} B_i, never re-simulated.
struct FbmPath {
    HurstParam hurst;
    std::size_t length;           // n
    std::vector<double> values;   // size n+1, values[0] == 0
    SeedProvenance seed_provenance{};

    /// Multiplier mapping integer-grid values onto the unit-time grid B_{i/n}.
    double unit_grid_scale() const {
        return std::pow(static_cast<double>(length), -hurst.value);
    }
};

namespace detail {

/// Iterative radix-2 FFT, in place. Size must be a power of two.
inline void fft_pow2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

inline FbmPath path_from_increments(HurstParam hurst, const std::vector<double>& increments,
                                    SeedProvenance prov) {
    FbmPath path{hurst, increments.size(), std::vector<double>(increments.size() + 1, 0.0), prov};
    double acc = 0.0;
    for (std::size_t i = 0; i < increments.size(); ++i) {
        acc += increments[i];
        path.values[i + 1] = acc;
    }
    return path;
}

} // namespace detail

/// Exact O(n^2)-memory sampler. Factors the Toeplitz increment covariance
/// [f_H(i,j)] once (better conditioned than the path covariance) and recovers
/// the path by cumulative summation.
class CholeskySampler {
public:
    static constexpr std::size_t kMaxLength = std::size_t{1} << 13;

    CholeskySampler(std::size_t n, HurstParam hurst) : n_(n), hurst_(hurst) {
        if (n == 0) throw std::invalid_argument("path length must be positive");
        if (n > kMaxLength)
            throw std::invalid_argument("CholeskySampler supports n <= 8192 (O(n^2) storage); "
                                        "use CirculantSampler for longer paths");
        factor_ = std::vector<double>(n * n, 0.0);
        std::vector<double> gamma(n);
        for (std::size_t k = 0; k < n; ++k) gamma[k] = increment_covariance_lag(k, hurst);
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = j; i < n; ++i) {
                double sum = gamma[i - j];
                const double* ri = &factor_[i * n];
                const double* rj = &factor_[j * n];
                for (std::size_t k = 0; k < j; ++k) sum -= ri[k] * rj[k];
                if (i == j) {
                    if (sum <= 0.0)
                        throw std::runtime_error(
                            "increment covariance factorization failed (not positive definite) "
                            "at H=" + std::to_string(hurst.value) + ", n=" + std::to_string(n));
                    factor_[j * n + j] = std::sqrt(sum);
                } else {
                    factor_[i * n + j] = sum / factor_[j * n + j];
                }
            }
        }
    }

    std::size_t length() const { return n_; }
    HurstParam hurst() const { return hurst_; }

    FbmPath sample(GaussianStream& rng) const {
        const SeedProvenance prov{rng.key(), rng.counter()};
        std::vector<double> z(n_);
        rng.fill(z);
        std::vector<double> increments(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            const double* row = &factor_[i * n_];
            double acc = 0.0;
            for (std::size_t k = 0; k <= i; ++k) acc += row[k] * z[k];
            increments[i] = acc;
        }
        return detail::path_from_increments(hurst_, increments, prov);
    }

private:
    std::size_t n_;
    HurstParam hurst_;
    std::vector<double> factor_;   // row-major lower triangle
};

/// O(n log n) sampler via circulant embedding of the increment covariance.
/// The embedding size is the smallest power of two >= 2n, with the first row
/// filled from exact covariance values, so the restriction to the first n
/// increments carries the exact Toeplitz covariance.
class CirculantSampler {
public:
    CirculantSampler(std::size_t n, HurstParam hurst) : n_(n), hurst_(hurst) {
        if (n == 0) throw std::invalid_argument("path length must be positive");
        m_ = detail::next_pow2(2 * n);
        std::vector<std::complex<double>> row(m_);
        for (std::size_t k = 0; k < m_; ++k) {
            const std::size_t lag = std::min(k, m_ - k);
            row[k] = increment_covariance_lag(lag, hurst);
        }
        detail::fft_pow2(row);
        sqrt_eigenvalues_.resize(m_);
        for (std::size_t k = 0; k < m_; ++k) {
            double lambda = row[k].real();
            if (lambda < -1e-10)
                throw std::runtime_error("embedding not nonnegative definite (eigenvalue " +
                                         std::to_string(lambda) + " at H=" +
                                         std::to_string(hurst.value) + ", n=" + std::to_string(n) + ")");
            if (lambda < 0.0) lambda = 0.0;   // roundoff-scale negatives
            sqrt_eigenvalues_[k] = std::sqrt(lambda);
        }
    }

    std::size_t length() const { return n_; }
    std::size_t embedding_size() const { return m_; }
    HurstParam hurst() const { return hurst_; }

    FbmPath sample(GaussianStream& rng) const {
        const SeedProvenance prov{rng.key(), rng.counter()};
        std::vector<std::complex<double>> work(m_);
        for (std::size_t k = 0; k < m_; ++k) {
            const double re = rng.next();
            const double im = rng.next();
            work[k] = sqrt_eigenvalues_[k] * std::complex<double>(re, im);
        }
        detail::fft_pow2(work);
        const double norm = 1.0 / std::sqrt(static_cast<double>(m_));
        std::vector<double> increments(n_);
        for (std::size_t i = 0; i < n_; ++i) increments[i] = work[i].real() * norm;
        return detail::path_from_increments(hurst_, increments, prov);
    }

private:
    std::size_t n_;
    HurstParam hurst_;
    std::size_t m_;
    std::vector<double> sqrt_eigenvalues_;
};

/// One-shot conveniences around the samplers.
inline FbmPath generate_cholesky(std::size_t n, HurstParam hurst, GaussianStream& rng) {
    return CholeskySampler(n, hurst).sample(rng);
}

inline FbmPath generate_circulant(std::size_t n, HurstParam hurst, GaussianStream& rng) {
    return CirculantSampler(n, hurst).sample(rng);
}

namespace detail {

/// Shortest-faithful decimal for a double: 17 significant digits.
inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

} // namespace detail

/// CSV export: header `t,value`, one row per grid point, 17 significant
/// digits so doubles round-trip exactly.
inline void write_path_csv(std::ostream& out, const FbmPath& path) {
    out << "t,value\n";
    for (std::size_t i = 0; i < path.values.size(); ++i)
        out << i << ',' << detail::format_g17(path.values[i]) << '\n';
}

} // namespace fracreg
