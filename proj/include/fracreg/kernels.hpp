#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracreg {

/// Standard Gaussian kernel K(x) = exp(-x^2/2) / sqrt(2 pi).
inline double gaussian_kernel(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Heat kernel p_eps(x) = exp(-x^2/(2 eps)) / sqrt(2 pi eps); p_1 == K.
inline double heat_kernel(double x, double eps) {
    if (!(eps > 0.0))
        throw std::invalid_argument("heat_kernel requires eps > 0, got " + std::to_string(eps));
    return std::exp(-0.5 * x * x / eps) / std::sqrt(2.0 * std::numbers::pi * eps);
}

/// L2 norm of the Gaussian kernel: d1 = integral of K^2 = 1/(2 sqrt(pi)).
inline double kernel_l2_norm() {
    return 0.5 * std::numbers::inv_sqrtpi;
}

/// Hermite polynomial under the 1/n! normalization (H_0 = 1, H_1 = x,
/// H_2 = (x^2-1)/2), evaluated through the three-term recurrence
/// (n+1) H_{n+1}(x) = x H_n(x) - H_{n-1}(x).
inline double hermite(int n, double x) {
    if (n < 0) throw std::invalid_argument("hermite degree must be nonnegative");
    if (n == 0) return 1.0;
    double prev = 1.0;
    double cur = x;
    for (int k = 1; k < n; ++k) {
        const double next = (x * cur - prev) / static_cast<double>(k + 1);
        prev = cur;
        cur = next;
    }
    return cur;
}

/// E(exp(-c Z^2)) = 1/sqrt(1+2c) for Z standard normal, valid for 1+2c > 0.
inline double gaussian_square_expectation(double c) {
    const double q = 1.0 + 2.0 * c;
    if (!(q > 0.0))
        throw std::invalid_argument("gaussian_square_expectation requires 1+2c > 0, got c=" +
                                    std::to_string(c));
    return 1.0 / std::sqrt(q);
}

/// Chaos coefficient C_m = (-1)^m / (sqrt(2 pi) 2^m m!).
inline double chaos_coefficient(int m) {
    if (m < 0) throw std::invalid_argument("chaos coefficient index must be nonnegative");
    const double log_abs = -0.5 * std::log(2.0 * std::numbers::pi) -
                           static_cast<double>(m) * std::numbers::ln2 -
                           std::lgamma(static_cast<double>(m) + 1.0);
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    return sign * std::exp(log_abs);
}

/// log of C_m^2 (2m)!, the squared-norm weight of the order-2m chaos term.
/// Computed through lgamma; the plain product overflows near m = 85.
inline double log_chaos_weight(int m) {
    const double md = static_cast<double>(m);
    return std::lgamma(2.0 * md + 1.0) - 2.0 * std::lgamma(md + 1.0) -
           2.0 * md * std::numbers::ln2 - std::log(2.0 * std::numbers::pi);
}

/// Truncated chaos representation of the heat kernel applied to a Gaussian
/// coordinate z = B(phi):
///   p_eps(z) = sum_m C_m (2m)! ||phi||^{2m} (||phi||^2+eps)^{-(m+1/2)}
///              H_{2m}(z / ||phi||).
/// `coefficients[m]` holds the factor multiplying H_{2m}; the log-magnitude
/// copy is what evaluation actually uses, since the plain value overflows for
/// truncation orders beyond ~150.
struct ChaosSeries {
    double epsilon;
    double phi_norm_sq;
    int max_order;
    std::vector<double> coefficients;
    std::vector<double> log_abs_coefficients;
};

inline ChaosSeries make_chaos_series(double eps, double phi_norm_sq, int max_order) {
    if (!(eps > 0.0)) throw std::invalid_argument("chaos series requires eps > 0");
    if (!(phi_norm_sq > 0.0)) throw std::invalid_argument("chaos series requires ||phi||^2 > 0");
    if (max_order < 0) throw std::invalid_argument("chaos series requires max_order >= 0");
    ChaosSeries series{eps, phi_norm_sq, max_order, {}, {}};
    series.coefficients.reserve(static_cast<std::size_t>(max_order) + 1);
    series.log_abs_coefficients.reserve(static_cast<std::size_t>(max_order) + 1);
    const double log_phi_sq = std::log(phi_norm_sq);
    const double log_total = std::log(phi_norm_sq + eps);
    for (int m = 0; m <= max_order; ++m) {
        const double md = static_cast<double>(m);
        // |C_m| (2m)! = exp(lgamma(2m+1) - lgamma(m+1) - m ln2 - ln(2 pi)/2)
        const double log_mag = std::lgamma(2.0 * md + 1.0) - std::lgamma(md + 1.0) -
                               md * std::numbers::ln2 -
                               0.5 * std::log(2.0 * std::numbers::pi) + md * log_phi_sq -
                               (md + 0.5) * log_total;
        series.log_abs_coefficients.push_back(log_mag);
        const double sign = (m % 2 == 0) ? 1.0 : -1.0;
        series.coefficients.push_back(sign * std::exp(log_mag));
    }
    return series;
}

/// Order-M partial sum of the chaos expansion at z. Converges to
/// heat_kernel(z, epsilon) as M grows. Each term is assembled in log space
/// (coefficient magnitude plus a mantissa/exponent Hermite recurrence) so
/// that huge coefficients and tiny polynomial values never meet as raw
/// doubles.
inline double chaos_eval(double z, const ChaosSeries& series) {
    const int order = series.max_order;
    const double phi = std::sqrt(series.phi_norm_sq);
    const double x = z / phi;

    // H_{2m}(x) for m = 0..order, stored as mantissa * 2^exponent.
    std::vector<double> mant(static_cast<std::size_t>(order) + 1);
    std::vector<int> exp2(static_cast<std::size_t>(order) + 1);
    mant[0] = 1.0;
    exp2[0] = 0;
    double m_prev = 1.0, m_cur = x;   // H_0, H_1
    int e_prev = 0, e_cur = 0;
    for (int degree = 1; degree < 2 * order; ++degree) {
        // H_{degree+1} = (x H_degree - H_{degree-1}) / (degree+1)
        const double aligned_prev = std::ldexp(m_prev, e_prev - e_cur);
        double next = (x * m_cur - aligned_prev) / static_cast<double>(degree + 1);
        int e_next = e_cur;
        if (next != 0.0) {
            int shift;
            next = std::frexp(next, &shift);
            e_next += shift;
        } else {
            e_next = 0;
        }
        m_prev = m_cur;
        e_prev = e_cur;
        m_cur = next;
        e_cur = e_next;
        if ((degree + 1) % 2 == 0) {
            mant[static_cast<std::size_t>((degree + 1) / 2)] = m_cur;
            exp2[static_cast<std::size_t>((degree + 1) / 2)] = e_cur;
        }
    }

    double sum = 0.0;
    for (int m = 0; m <= order; ++m) {
        const double h_mant = mant[static_cast<std::size_t>(m)];
        if (h_mant == 0.0) continue;
        const double log_term = series.log_abs_coefficients[static_cast<std::size_t>(m)] +
                                std::log(std::abs(h_mant)) +
                                static_cast<double>(exp2[static_cast<std::size_t>(m)]) *
                                    std::numbers::ln2;
        const double sign = ((m % 2 == 0) ? 1.0 : -1.0) * (h_mant < 0.0 ? -1.0 : 1.0);
        sum += sign * std::exp(log_term);
    }
    return sum;
}

} // namespace fracreg
