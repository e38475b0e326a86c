#pragma once

// Log-domain scalar arithmetic, special functions and stable Hermitian
// log-determinants. Everything here is a pure function on immutable values.

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ocp {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotHermitianError : Error {
    using Error::Error;
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// A real number stored as (log of magnitude, sign). Survives scales like
/// exp(+-N^2) that overflow double.
struct LogValue {
    double log_mag = kNegInf;
    int sign = 0;  // +1, -1, or 0 (zero iff log_mag == -inf)

    static LogValue zero() { return {kNegInf, 0}; }
    static LogValue one() { return {0.0, +1}; }

    static LogValue from_log(double log_mag, int sign) {
        if (sign == 0 || log_mag == kNegInf) return zero();
        return {log_mag, sign > 0 ? +1 : -1};
    }

    static LogValue from_double(double x) {
        if (x == 0.0) return zero();
        return {std::log(std::abs(x)), x > 0 ? +1 : -1};
    }

    bool is_zero() const { return sign == 0; }

    double to_double() const {
        if (sign == 0) return 0.0;
        return sign * std::exp(log_mag);
    }

    LogValue negated() const { return {log_mag, -sign}; }
    LogValue abs() const { return {log_mag, sign == 0 ? 0 : +1}; }

    friend LogValue operator*(const LogValue& a, const LogValue& b) {
        if (a.sign == 0 || b.sign == 0) return zero();
        return {a.log_mag + b.log_mag, a.sign * b.sign};
    }

    // log-sum-exp anchored at the larger magnitude
    friend LogValue operator+(const LogValue& a, const LogValue& b) {
        if (a.sign == 0) return b;
        if (b.sign == 0) return a;
        const LogValue& hi = (a.log_mag >= b.log_mag) ? a : b;
        const LogValue& lo = (a.log_mag >= b.log_mag) ? b : a;
        double r = hi.sign + lo.sign * std::exp(lo.log_mag - hi.log_mag);
        if (r == 0.0) return zero();
        return {hi.log_mag + std::log(std::abs(r)), r > 0 ? +1 : -1};
    }

    friend LogValue operator-(const LogValue& a, const LogValue& b) {
        return a + b.negated();
    }
};

inline double wrap_phase(double p) {
    // into (-pi, pi]
    double r = std::remainder(p, 2.0 * M_PI);
    if (r <= -M_PI) r += 2.0 * M_PI;
    return r;
}

/// A complex number stored as (log of magnitude, argument).
struct PhaseValue {
    double log_mag = kNegInf;
    double phase = 0.0;  // in (-pi, pi]

    static PhaseValue zero() { return {kNegInf, 0.0}; }
    static PhaseValue one() { return {0.0, 0.0}; }

    static PhaseValue from_log(double log_mag, double phase) {
        if (log_mag == kNegInf) return zero();
        return {log_mag, wrap_phase(phase)};
    }

    static PhaseValue from_complex(std::complex<double> z) {
        if (z == std::complex<double>(0.0, 0.0)) return zero();
        return {std::log(std::abs(z)), std::arg(z)};
    }

    bool is_zero() const { return log_mag == kNegInf; }

    std::complex<double> to_complex() const {
        if (is_zero()) return {0.0, 0.0};
        return std::polar(std::exp(log_mag), phase);
    }

    PhaseValue conj() const { return {log_mag, wrap_phase(-phase)}; }
    PhaseValue negated() const { return from_log(log_mag, phase + M_PI); }
    LogValue magnitude() const { return LogValue::from_log(log_mag, is_zero() ? 0 : +1); }

    friend PhaseValue operator*(const PhaseValue& a, const PhaseValue& b) {
        if (a.is_zero() || b.is_zero()) return zero();
        return from_log(a.log_mag + b.log_mag, a.phase + b.phase);
    }
};

/// ln Gamma(x) for x > 0.
inline double log_gamma(double x) {
    if (!(x > 0.0)) throw Error("log_gamma: argument must be positive");
    return std::lgamma(x);
}

/// Exact log((n+m)!/n!) by summing logs; no Stirling error.
inline double log_factorial_ratio(long long n, long long m) {
    if (n < 0 || m < 0) throw Error("log_factorial_ratio: negative argument");
    double s = 0.0;
    for (long long k = 1; k <= m; ++k) s += std::log(static_cast<double>(n + k));
    return s;
}

/// zeta'(-1) = 1/12 - ln A with A the Glaisher-Kinkelin constant.
inline double zeta_prime_minus_one() {
    return -0.16542114370045092921;
}

/// Jellium free-energy constant per particle at beta = 2, in the convention
/// where the partition function keeps its pi^J Gaussian-area factor. The
/// dA = dz/pi convention drops log(pi).
inline double jellium_constant_beta2() {
    return 0.5 * std::log(2.0 * M_PI) - 1.0 + std::log(M_PI);
}

struct LogdetOptions {
    double hermiticity_tol = 1e-12;
    double pivot_breakdown = 1e-300;
};

/// Determinant of a small dense complex matrix by LU with partial pivoting.
/// Used for oracle-style cross checks and minor expansions; not log-domain.
inline std::complex<double> det_lu(std::vector<std::complex<double>> a, std::size_t n) {
    std::complex<double> det = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a[i * n + k]) > std::abs(a[p * n + k])) p = i;
        if (a[p * n + k] == std::complex<double>(0.0)) return 0.0;
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[p * n + j]);
            det = -det;
        }
        det *= a[k * n + k];
        for (std::size_t i = k + 1; i < n; ++i) {
            auto f = a[i * n + k] / a[k * n + k];
            for (std::size_t j = k; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
        }
    }
    return det;
}

namespace detail {

// Pivoted LDL* with largest-|diagonal| pivoting; handles indefinite input
// and reports the determinant sign. 1x1 pivots only.
inline LogValue ldlt_logdet(std::vector<std::complex<double>>& a, std::size_t n,
                            double breakdown) {
    double log_det = 0.0;
    int sign = +1;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t q = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a[i * n + i].real()) > std::abs(a[q * n + q].real())) q = i;
        if (q != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[q * n + j]);
            for (std::size_t i = 0; i < n; ++i) std::swap(a[i * n + k], a[i * n + q]);
        }
        double p = a[k * n + k].real();
        if (std::abs(p) < breakdown) return LogValue::zero();
        log_det += std::log(std::abs(p));
        if (p < 0.0) sign = -sign;
        for (std::size_t i = k + 1; i < n; ++i) {
            auto lik = a[i * n + k] / p;
            for (std::size_t j = k + 1; j <= i; ++j)
                a[i * n + j] -= lik * std::conj(a[j * n + k]);
            a[i * n + i] = {a[i * n + i].real(), 0.0};
        }
        for (std::size_t i = k + 1; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = std::conj(a[j * n + i]);
    }
    return LogValue::from_log(log_det, sign);
}

}  // namespace detail

/// Log-determinant of a Hermitian matrix (row-major, n x n). Pivoted Cholesky
/// accumulating the log of each pivot, with symmetric diagonal equilibration
/// so entries spanning hundreds of orders of magnitude never underflow mid
/// factorization. Falls back to pivoted LDL* when the input is not PSD.
/// Returns (-inf, 0) when a pivot drops below the breakdown threshold.
inline LogValue hermitian_logdet(std::vector<std::complex<double>> a, std::size_t n,
                                 const LogdetOptions& opts = {}) {
    if (a.size() != n * n) throw Error("hermitian_logdet: size mismatch");
    if (n == 0) return LogValue::one();

    double max_abs = 0.0;
    for (const auto& v : a) max_abs = std::max(max_abs, std::abs(v));
    double herm_dev = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            herm_dev = std::max(herm_dev, std::abs(a[i * n + j] - std::conj(a[j * n + i])));
    if (herm_dev > opts.hermiticity_tol * std::max(1.0, max_abs))
        throw NotHermitianError("hermitian_logdet: matrix is not Hermitian");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            auto s = 0.5 * (a[i * n + j] + std::conj(a[j * n + i]));
            a[i * n + j] = s;
            a[j * n + i] = std::conj(s);
        }
        a[i * n + i] = {a[i * n + i].real(), 0.0};
    }

    // equilibrate to unit diagonal when possible
    double log_scale = 0.0;
    bool scaled = true;
    for (std::size_t i = 0; i < n; ++i)
        if (!(a[i * n + i].real() > 0.0)) scaled = false;
    if (scaled) {
        std::vector<double> inv_sqrt(n);
        for (std::size_t i = 0; i < n; ++i) {
            double d = a[i * n + i].real();
            log_scale += std::log(d);
            inv_sqrt[i] = 1.0 / std::sqrt(d);
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) a[i * n + j] *= inv_sqrt[i] * inv_sqrt[j];
    }

    auto fallback = a;  // pristine copy in case Cholesky hits a negative pivot
    double max_diag0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag0 = std::max(max_diag0, a[i * n + i].real());
    const double neg_slack = 64.0 * n * 1e-16 * std::max(1.0, max_diag0);

    double log_det = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t q = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (a[i * n + i].real() > a[q * n + q].real()) q = i;
        if (q != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[q * n + j]);
            for (std::size_t i = 0; i < n; ++i) std::swap(a[i * n + k], a[i * n + q]);
        }
        double p = a[k * n + k].real();
        if (p < -neg_slack) {
            auto r = detail::ldlt_logdet(fallback, n, opts.pivot_breakdown);
            if (r.is_zero()) return r;
            return LogValue::from_log(r.log_mag + log_scale, r.sign);
        }
        if (p < opts.pivot_breakdown) return LogValue::zero();
        log_det += std::log(p);
        for (std::size_t i = k + 1; i < n; ++i) {
            auto lik = a[i * n + k] / p;
            for (std::size_t j = k + 1; j <= i; ++j)
                a[i * n + j] -= lik * std::conj(a[j * n + k]);
            a[i * n + i] = {a[i * n + i].real(), 0.0};
        }
        for (std::size_t i = k + 1; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = std::conj(a[j * n + i]);
    }
    return LogValue::from_log(log_det + log_scale, +1);
}

}  // namespace ocp
