#pragma once

// Independent verification machinery: seeded Monte Carlo estimates of
// partition integrals and Coulomb energies, radial quadrature for kernel
// traces, and finite-difference gradients.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ocp/configuration.hpp"
#include "ocp/kernel.hpp"
#include "ocp/numerics.hpp"

namespace ocp {

struct VarianceExplosionError : Error {
    using Error::Error;
};
struct NonIntegerTraceError : Error {
    using Error::Error;
};

inline constexpr const char* kGeneratorName = "splitmix64-boxmuller";

namespace detail {

/// SplitMix64: tiny, fast, and identical on every platform.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }
    // standard normal via Box-Muller, pairwise
    double normal() {
        if (have_spare) {
            have_spare = false;
            return spare;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 == 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare = r * std::sin(2.0 * M_PI * u2);
        have_spare = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

  private:
    double spare = 0.0;
    bool have_spare = false;
};

inline constexpr std::uint64_t kBatchSize = 4096;

// Accumulate sum and sum of squares over one sequential stream in fixed
// batch order, so results are bit-identical regardless of scheduling. A
// single stream avoids overlapping subsequences: SplitMix64 states advance
// by a fixed increment, so affinely re-seeded batches would replay shifted
// copies of the same sequence.
template <typename Body>
inline void batched_accumulate(std::uint64_t samples, std::uint64_t seed, const Body& body,
                               double& sum, double& sumsq) {
    sum = 0.0;
    sumsq = 0.0;
    SplitMix64 rng(seed);
    const std::uint64_t nbatches = (samples + kBatchSize - 1) / kBatchSize;
    for (std::uint64_t b = 0; b < nbatches; ++b) {
        const std::uint64_t take = std::min(kBatchSize, samples - b * kBatchSize);
        double bsum = 0.0, bsq = 0.0;
        for (std::uint64_t i = 0; i < take; ++i) {
            double v = body(rng);
            bsum += v;
            bsq += v * v;
        }
        sum += bsum;
        sumsq += bsq;
    }
}

}  // namespace detail

struct McEstimate {
    double mean = 0.0;  // the reported quantity (log Z for mc_partition)
    double stderr_ = 0.0;
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
    std::string generator = kGeneratorName;
    bool bias_warning = false;  // delta-method regime limit exceeded
};

/// Monte Carlo estimate of log Z for n mobile particles at scale N with
/// pinned charges, importance-sampled from the complex Gaussian
/// propto e^{-N|z|^2} (normalization (pi/N)^n per particle).
inline McEstimate mc_partition(int n_particles, const std::vector<PointCluster>& clusters,
                               BackgroundScale scale, std::uint64_t samples,
                               std::uint64_t seed) {
    if (n_particles < 1 || n_particles > 4)
        throw Error("mc_partition: n_particles must be in 1..4 (variance guard)");
    if (samples < 10000) throw Error("mc_partition: need at least 1e4 samples");
    std::vector<Complex> pinned;
    for (const auto& cl : clusters)
        for (const auto& w : cl.effective()) pinned.push_back(w);

    const double sigma = 1.0 / std::sqrt(2.0 * scale.n);
    double sum = 0.0, sumsq = 0.0;
    detail::batched_accumulate(
        samples, seed,
        [&](detail::SplitMix64& rng) {
            Complex z[4];
            for (int i = 0; i < n_particles; ++i)
                z[i] = Complex(sigma * rng.normal(), sigma * rng.normal());
            double v = 1.0;
            for (int i = 0; i < n_particles; ++i)
                for (int j = i + 1; j < n_particles; ++j) v *= std::norm(z[i] - z[j]);
            for (int i = 0; i < n_particles; ++i)
                for (const auto& w : pinned) v *= std::norm(z[i] - w);
            return v;
        },
        sum, sumsq);

    const double n = double(samples);
    const double mean = sum / n;
    const double var = std::max(0.0, (sumsq - sum * sum / n) / (n - 1.0));
    const double se_mean = std::sqrt(var / n);
    McEstimate est;
    est.samples = samples;
    est.seed = seed;
    if (!(mean > 0.0) || se_mean / mean > 0.5)
        throw VarianceExplosionError("mc_partition: relative standard error above 0.5");
    est.bias_warning = se_mean / mean > 0.1;
    est.mean = std::log(mean) + double(n_particles) * std::log(M_PI / scale.n);
    est.stderr_ = se_mean / mean;  // delta method for log of the mean
    return est;
}

struct Disk {
    Complex center{0.0, 0.0};
    double radius = 1.0;
};

/// Monte Carlo estimate of D(1_A, 1_B) = -iint_{A x B} log|x-y|, by uniform
/// sampling of both disks. The log singularity is integrable; exact
/// coincidences are resampled.
inline McEstimate mc_coulomb(const Disk& region_a, const Disk& region_b, std::uint64_t samples,
                             std::uint64_t seed) {
    if (samples < 10000) throw Error("mc_coulomb: need at least 1e4 samples");
    const double area_a = M_PI * region_a.radius * region_a.radius;
    const double area_b = M_PI * region_b.radius * region_b.radius;
    auto draw = [](detail::SplitMix64& rng, const Disk& d) {
        double r = d.radius * std::sqrt(rng.uniform());
        double th = 2.0 * M_PI * rng.uniform();
        return d.center + std::polar(r, th);
    };
    double sum = 0.0, sumsq = 0.0;
    detail::batched_accumulate(
        samples, seed,
        [&](detail::SplitMix64& rng) {
            for (;;) {
                Complex x = draw(rng, region_a), y = draw(rng, region_b);
                double d = std::abs(x - y);
                if (d > 0.0) return -std::log(d);
            }
        },
        sum, sumsq);
    const double n = double(samples);
    McEstimate est;
    est.samples = samples;
    est.seed = seed;
    est.mean = area_a * area_b * sum / n;
    double var = std::max(0.0, (sumsq - sum * sum / n) / (n - 1.0));
    est.stderr_ = area_a * area_b * std::sqrt(var / n);
    return est;
}

namespace detail {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
}

}  // namespace detail

/// 2 pi * integral of K(r, r) r dr over [0, cutoff] by Gauss-Legendre
/// quadrature. The trace of a truncated kernel must be the number of
/// retained polynomial states, i.e. an integer.
inline double kernel_trace(const GinibreKernel& kernel, double radial_cutoff,
                           int quadrature_nodes) {
    if (kernel.is_infinite()) throw Error("kernel_trace: trace of the infinite kernel diverges");
    if (!(radial_cutoff > 0.0) || quadrature_nodes < 2)
        throw Error("kernel_trace: bad quadrature parameters");
    std::vector<double> x, w;
    detail::gauss_legendre(quadrature_nodes, x, w);
    double total = 0.0;
    for (int i = 0; i < quadrature_nodes; ++i) {
        double r = 0.5 * radial_cutoff * (x[i] + 1.0);
        double k_diag = eval_finite(kernel, r, r).to_complex().real();
        total += w[i] * 0.5 * radial_cutoff * 2.0 * M_PI * k_diag * r;
    }
    double nearest = std::round(total);
    if (std::abs(total - nearest) > 1e-3)
        throw NonIntegerTraceError("kernel_trace: trace is not close to an integer");
    return total;
}

/// Central-difference gradient of a scalar function of a planar point.
inline Complex finite_difference_gradient(const std::function<double(Complex)>& f, Complex at,
                                          double step) {
    if (!(step > 0.0)) throw Error("finite_difference_gradient: step must be positive");
    double gx = (f(at + Complex(step, 0.0)) - f(at - Complex(step, 0.0))) / (2.0 * step);
    double gy = (f(at + Complex(0.0, step)) - f(at - Complex(0.0, step))) / (2.0 * step);
    return {gx, gy};
}

}  // namespace ocp
