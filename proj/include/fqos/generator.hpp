#pragma once

// Synthetic traffic with prescribed intensity, Hurst exponent, and
// multifractality.
//
// - generate_fgn: exact fractional Gaussian noise by circulant embedding of
//   the fGn autocovariance (spectral synthesis).
// - generate_cascade: conservative binomial cascade with fixed weight and
//   seeded random side choice; its scaling exponents are analytic, which is
//   what makes estimator acceptance tests possible.
// - compose_traffic: positive fGn envelope times tiled cascade mass,
//   rescaled to an exact target mean.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fft.hpp"
#include "rng.hpp"
#include "trace.hpp"

namespace fqos {

struct generator_spec {
    double target_H = 0.5;         // in (0, 1)
    double target_intensity = 1.0; // mean work-units per slot, > 0
    int cascade_depth = 0;         // 0 disables the multifractal component
    double cascade_weight = 0.5;   // in (0.5, 1) when depth > 0
    std::size_t length = 1024;     // slots; power of two when depth > 0
    std::uint64_t seed = 0;
    double envelope_cv = 0.25;     // coefficient of variation of the fGn envelope

    void validate() const {
        if (!(target_H > 0.0 && target_H < 1.0))
            throw std::invalid_argument("generator_spec: target_H must be in (0,1)");
        if (!(target_intensity > 0.0))
            throw std::invalid_argument("generator_spec: target_intensity must be > 0");
        if (length < 1) throw std::invalid_argument("generator_spec: length must be >= 1");
        if (cascade_depth < 0 || cascade_depth > 24)
            throw std::invalid_argument("generator_spec: cascade_depth must be in [0, 24]");
        if (cascade_depth > 0) {
            if (!(cascade_weight > 0.5 && cascade_weight < 1.0))
                throw std::invalid_argument("generator_spec: cascade_weight must be in (0.5, 1)");
            if (!detail::is_power_of_two(length))
                throw std::invalid_argument("generator_spec: length must be a power of two when cascade_depth > 0");
        }
        if (!(envelope_cv >= 0.0))
            throw std::invalid_argument("generator_spec: envelope_cv must be >= 0");
    }
};

// Theoretical fGn autocovariance gamma(k) = sigma^2/2 (|k+1|^2H - 2|k|^2H + |k-1|^2H).
inline double fgn_autocovariance(double H, double sigma, long k) {
    double ak = std::abs(static_cast<double>(k));
    double h2 = 2.0 * H;
    return 0.5 * sigma * sigma *
           (std::pow(ak + 1.0, h2) - 2.0 * std::pow(ak, h2) + std::pow(std::abs(ak - 1.0), h2));
}

// Exact fGn synthesis by circulant embedding.  The circulant built from the
// fGn autocovariance is positive semidefinite for H in (0,1); tiny negative
// eigenvalues from rounding are clamped, material ones are an internal error.
inline traffic_trace generate_fgn(double H, std::size_t n, double sigma, std::uint64_t seed) {
    if (!(H > 0.0 && H < 1.0)) throw std::invalid_argument("generate_fgn: H must be in (0,1)");
    if (n < 2) throw std::invalid_argument("generate_fgn: n must be >= 2");
    if (!(sigma > 0.0)) throw std::invalid_argument("generate_fgn: sigma must be > 0");

    const std::size_t m = detail::next_power_of_two(2 * n);
    // First row of the circulant: gamma(0..m/2), then mirrored tail.
    std::vector<std::complex<double>> c(m);
    for (std::size_t k = 0; k <= m / 2; ++k) c[k] = fgn_autocovariance(H, sigma, static_cast<long>(k));
    for (std::size_t k = m / 2 + 1; k < m; ++k) c[k] = c[m - k];

    detail::fft_pow2(c, false);
    std::vector<double> lambda(m);
    double lmax = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        lambda[k] = c[k].real();
        lmax = std::max(lmax, std::abs(lambda[k]));
    }
    for (std::size_t k = 0; k < m; ++k) {
        if (lambda[k] < 0.0) {
            if (lambda[k] < -1e-9 * lmax)
                throw std::runtime_error("generate_fgn: embedding not positive semidefinite");
            lambda[k] = 0.0;
        }
    }

    rng_stream rng = named_stream(seed, "fgn");
    std::vector<std::complex<double>> w(m);
    w[0] = std::sqrt(lambda[0]) * rng.gaussian();
    w[m / 2] = std::sqrt(lambda[m / 2]) * rng.gaussian();
    for (std::size_t k = 1; k < m / 2; ++k) {
        double r = std::sqrt(0.5 * lambda[k]);
        double a = rng.gaussian();
        double b = rng.gaussian();
        w[k] = std::complex<double>(r * a, r * b);
        w[m - k] = std::conj(w[k]);
    }
    detail::fft_pow2(w, false);

    traffic_trace t;
    t.slots.resize(n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    for (std::size_t i = 0; i < n; ++i) t.slots[i] = w[i].real() * scale;
    // Raw Gaussian increments: may be negative by design; callers clip.
    return t;
}

// Conservative binomial cascade of total mass exactly 1 (up to rounding):
// each interval's mass splits into fractions (w, 1-w), the heavy side chosen
// uniformly at random per split.
inline traffic_trace generate_cascade(int depth, double weight, std::uint64_t seed) {
    if (depth < 1 || depth > 24) throw std::invalid_argument("generate_cascade: depth must be in [1, 24]");
    if (!(weight > 0.5 && weight < 1.0))
        throw std::invalid_argument("generate_cascade: weight must be in (0.5, 1)");

    rng_stream rng = named_stream(seed, "cascade");
    std::vector<double> mass{1.0};
    for (int level = 0; level < depth; ++level) {
        std::vector<double> next(mass.size() * 2);
        for (std::size_t i = 0; i < mass.size(); ++i) {
            bool heavy_left = rng.bernoulli(0.5);
            double a = heavy_left ? weight : 1.0 - weight;
            next[2 * i] = mass[i] * a;
            next[2 * i + 1] = mass[i] * (1.0 - a);
        }
        mass.swap(next);
    }
    traffic_trace t;
    t.slots = std::move(mass);
    return t;
}

// Analytic scaling exponents of the deterministic-weight binomial cascade:
// tau(q) = -log2(w^q + (1-w)^q), h(q) = (tau(q) + 1) / q.
inline double cascade_tau(double q, double weight) {
    return -std::log2(std::pow(weight, q) + std::pow(1.0 - weight, q));
}

inline double cascade_h(double q, double weight) {
    if (q == 0.0) throw std::invalid_argument("cascade_h: q must be nonzero");
    return (cascade_tau(q, weight) + 1.0) / q;
}

// Envelope times cascade mass, rescaled to an exact target mean.
//
// Traces longer than one cascade block (2^depth slots) tile independent
// cascades, one fresh seed per tile, so bursts stay at the block scale while
// the fGn envelope carries the long-range dependence across the whole trace.
inline traffic_trace compose_traffic(const generator_spec& spec) {
    spec.validate();
    const std::size_t n = spec.length;

    traffic_trace envelope;
    if (n >= 2) {
        envelope = generate_fgn(spec.target_H, n, 1.0, spec.seed);
    } else {
        envelope.slots.assign(n, 0.0);
    }
    for (double& v : envelope.slots) v = std::max(1.0 + spec.envelope_cv * v, 0.0);

    traffic_trace out;
    out.slots.resize(n, 0.0);
    if (spec.cascade_depth > 0) {
        const std::size_t block = std::size_t{1} << spec.cascade_depth;
        if (n < block)
            throw std::invalid_argument("compose_traffic: length must be >= 2^cascade_depth");
        const std::size_t tiles = n / block;
        for (std::size_t tile = 0; tile < tiles; ++tile) {
            traffic_trace mass =
                generate_cascade(spec.cascade_depth, spec.cascade_weight,
                                 spec.seed + 1000 + static_cast<std::uint64_t>(tile));
            // Scale each block to mean 1 so the envelope keeps the intensity.
            for (std::size_t i = 0; i < block; ++i)
                out.slots[tile * block + i] = envelope.slots[tile * block + i] *
                                              mass.slots[i] * static_cast<double>(block);
        }
    } else {
        out.slots = envelope.slots;
    }

    double sum = 0.0;
    for (double v : out.slots) sum += v;
    if (!(sum > 0.0)) throw std::runtime_error("compose_traffic: degenerate all-zero output");
    const double scale = spec.target_intensity * static_cast<double>(n) / sum;
    for (double& v : out.slots) v *= scale;
    out.slot_duration = 1.0;
    return out;
}

// Invert the cascade weight needed for a composed trace to hit a target
// coefficient of variation:  1 + cv_total^2 = (1 + cv_env^2) * b^depth with
// b = 2 (w^2 + (1-w)^2), hence w = (1 + sqrt(b - 1)) / 2.  Returns 0.5 (no
// cascade needed) when the envelope alone already meets or exceeds the
// target.
inline double solve_cascade_weight(double sigma_var, double envelope_cv, int depth) {
    if (depth < 1) throw std::invalid_argument("solve_cascade_weight: depth must be >= 1");
    if (!(sigma_var >= 0.0)) throw std::invalid_argument("solve_cascade_weight: sigma_var must be >= 0");
    double target = (1.0 + sigma_var * sigma_var) / (1.0 + envelope_cv * envelope_cv);
    if (target <= 1.0) return 0.5;
    double b = std::pow(target, 1.0 / static_cast<double>(depth));
    if (b >= 2.0)
        throw std::invalid_argument("solve_cascade_weight: sigma_var unreachable at this depth");
    return 0.5 * (1.0 + std::sqrt(b - 1.0));
}

}  // namespace fqos
