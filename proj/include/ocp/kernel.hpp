#pragma once

// Finite and infinite Ginibre correlation kernels, scaled Hermitian kernel
// matrices, and the finite-vs-infinite difference bound used for diagnostics.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "ocp/numerics.hpp"

namespace ocp {

using Complex = std::complex<double>;

struct DuplicatePointsError : Error {
    using Error::Error;
};
struct OutsideDropletError : Error {
    using Error::Error;
};
struct OverflowGuardError : Error {
    using Error::Error;
};

/// Background charge-density scale: the N multiplying |x|^2 in the potential.
struct BackgroundScale {
    double n;
    explicit BackgroundScale(double n_) : n(n_) {
        if (!(n > 0.0)) throw Error("BackgroundScale: N must be positive");
    }
};

/// Kernel order. The polynomial space of a J-particle ensemble spans degrees
/// 0..J-1, so the truncated sum's top index is J-1; fixed by requiring
/// integer trace (see oracle::kernel_trace).
struct GinibreKernel {
    BackgroundScale scale;
    std::optional<long long> j_top;  // nullopt = infinite kernel

    static GinibreKernel infinite(BackgroundScale s) { return {s, std::nullopt}; }
    static GinibreKernel truncated(BackgroundScale s, long long j_top) {
        if (j_top < 0) throw Error("GinibreKernel: j_top must be >= 0");
        return {s, j_top};
    }
    static GinibreKernel for_particles(BackgroundScale s, long long particles) {
        if (particles < 1) throw Error("GinibreKernel: need at least one particle");
        return truncated(s, particles - 1);
    }
    bool is_infinite() const { return !j_top.has_value(); }
};

/// K_inf(z,w) = (N/pi) exp(-(N/2)(|z|^2+|w|^2-2 z conj(w))).
/// log-magnitude is ln(N/pi) - (N/2)|z-w|^2; phase is N Im(z conj(w)).
inline PhaseValue eval_infinite(BackgroundScale scale, Complex z, Complex w) {
    double lm = std::log(scale.n / M_PI) - 0.5 * scale.n * std::norm(z - w);
    double ph = scale.n * std::imag(z * std::conj(w));
    return PhaseValue::from_log(lm, ph);
}

namespace detail {

// Tail of the regularized truncated exponential:
//   T(j_top, u) = e^{-u} sum_{k > j_top} u^k / k!.
// Convergent series with bounded terms; valid for |u| < j_top + 2.
inline PhaseValue trunc_exp_tail(long long j_top, Complex u) {
    if (u == Complex(0.0)) return PhaseValue::zero();
    double au = std::abs(u);
    if (!(au < j_top + 2.0)) throw Error("trunc_exp_tail: |u| too large for series");
    double lpre = -u.real() + (j_top + 1) * std::log(au) - std::lgamma(double(j_top + 2));
    double ppre = -u.imag() + (j_top + 1) * std::arg(u);
    Complex inner = 0.0, term = 1.0;
    for (int m = 0; m < 100000; ++m) {
        inner += term;
        term *= u / double(j_top + 2 + m);
        if (std::abs(term) < 1e-30) break;
    }
    if (inner == Complex(0.0)) return PhaseValue::zero();
    return PhaseValue::from_log(lpre + std::log(std::abs(inner)), ppre + std::arg(inner));
}

// S(j_top, u) = e^{-u} sum_{k <= j_top} u^k / k!, evaluated either as
// 1 - tail (no cancellation, any phase of u) or by log-anchored direct
// summation when |u| runs past the truncation index.
inline PhaseValue trunc_exp_regularized(long long j_top, Complex u) {
    double au = std::abs(u);
    if (au <= 0.9 * double(j_top + 1)) {
        PhaseValue t = trunc_exp_tail(j_top, u);
        if (t.log_mag < -1.0) {
            // |T| < e^{-1}: 1 - T directly, exact when T underflows
            Complex s = Complex(1.0) - t.to_complex();
            return PhaseValue::from_complex(s);
        }
        double anchor = std::max(0.0, t.log_mag);
        Complex s = std::exp(-anchor) - std::polar(std::exp(t.log_mag - anchor), t.phase);
        if (s == Complex(0.0)) return PhaseValue::zero();
        return PhaseValue::from_log(anchor + std::log(std::abs(s)), std::arg(s));
    }
    if (au > 1e7) throw OverflowGuardError("trunc_exp_regularized: |u| beyond guard");
    // anchor at the largest retained term
    long long j_star = std::min<long long>(j_top, (long long)au);
    double anchor = j_star * std::log(au) - std::lgamma(double(j_star + 1));
    double theta = std::arg(u);
    Complex sum = 0.0, comp = 0.0;  // Kahan
    double llog = 0.0;              // log|u^j/j!| running value
    for (long long j = 0; j <= j_top; ++j) {
        if (j > 0) llog += std::log(au) - std::log(double(j));
        double mag = std::exp(llog - anchor);
        if (mag == 0.0) continue;
        Complex term = std::polar(mag, theta * double(j));
        Complex y = term - comp;
        Complex t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    if (sum == Complex(0.0)) return PhaseValue::zero();
    return PhaseValue::from_log(-u.real() + anchor + std::log(std::abs(sum)),
                                -u.imag() + std::arg(sum));
}

}  // namespace detail

/// Truncated kernel K_J(z,w) = K_inf(z,w) * S(j_top, N z conj(w)).
inline PhaseValue eval_finite(const GinibreKernel& kernel, Complex z, Complex w) {
    if (kernel.is_infinite()) throw Error("eval_finite: kernel order is infinite");
    Complex u = kernel.scale.n * z * std::conj(w);
    return eval_infinite(kernel.scale, z, w) * detail::trunc_exp_regularized(*kernel.j_top, u);
}

inline PhaseValue eval(const GinibreKernel& kernel, Complex z, Complex w) {
    return kernel.is_infinite() ? eval_infinite(kernel.scale, z, w) : eval_finite(kernel, z, w);
}

/// K_J(z,w) - K_inf(z,w) = -K_inf(z,w) * T(j_top, N z conj(w)), kept in the
/// log domain so values far below double underflow stay meaningful.
inline PhaseValue eval_finite_minus_infinite(const GinibreKernel& kernel, Complex z, Complex w) {
    if (kernel.is_infinite()) return PhaseValue::zero();
    Complex u = kernel.scale.n * z * std::conj(w);
    PhaseValue t = detail::trunc_exp_tail(*kernel.j_top, u);
    return eval_infinite(kernel.scale, z, w) * t.negated();
}

/// M x M Hermitian matrix of (pi/N) K(w_i, w_j) values with magnitude/phase
/// separation. Diagonal entries are real and bounded by 1 after prescaling.
struct KernelMatrix {
    std::size_t dim = 0;
    std::vector<PhaseValue> entries;  // row-major
    double prescale = 1.0;            // pi/N

    const PhaseValue& at(std::size_t i, std::size_t j) const { return entries[i * dim + j]; }

    std::vector<Complex> to_complex() const {
        std::vector<Complex> out(dim * dim);
        for (std::size_t k = 0; k < entries.size(); ++k) out[k] = entries[k].to_complex();
        return out;
    }
};

inline constexpr double kEntryClampLogMag = -745.0;  // below double underflow

inline KernelMatrix kernel_matrix(const GinibreKernel& kernel, const std::vector<Complex>& points) {
    const std::size_t m = points.size();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            if (std::abs(points[i] - points[j]) < 1e-14)
                throw DuplicatePointsError("kernel_matrix: coincident points");
    KernelMatrix km;
    km.dim = m;
    km.prescale = M_PI / kernel.scale.n;
    km.entries.assign(m * m, PhaseValue::zero());
    const PhaseValue pre = PhaseValue::from_log(std::log(km.prescale), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i; j < m; ++j) {
            PhaseValue v = pre * eval(kernel, points[i], points[j]);
            if (v.log_mag < kEntryClampLogMag) v = PhaseValue::zero();
            if (i == j) v.phase = 0.0;  // diagonal is real by construction
            km.entries[i * m + j] = v;
            km.entries[j * m + i] = v.conj();
        }
    }
    return km;
}

inline LogValue hermitian_logdet(const KernelMatrix& km, const LogdetOptions& opts = {}) {
    return hermitian_logdet(km.to_complex(), km.dim, opts);
}

/// Shape of the finite-vs-infinite kernel difference bound,
/// C sqrt(N) exp(-C N (||z|-R| + ||w|-R|)) with R = sqrt(1 + M/N).
/// Diagnostic only; C is a fitted constant, not ground truth.
inline double bound_finite_vs_infinite(BackgroundScale scale, long long m, Complex z, Complex w,
                                       double c_const = 1.0) {
    double rad = std::sqrt(1.0 + double(m) / scale.n);
    if (std::abs(z) >= rad || std::abs(w) >= rad)
        throw OutsideDropletError("bound_finite_vs_infinite: point outside droplet interior");
    double ex = std::abs(std::abs(z) - rad) + std::abs(std::abs(w) - rad);
    return c_const * std::sqrt(scale.n) * std::exp(-c_const * scale.n * ex);
}

}  // namespace ocp
