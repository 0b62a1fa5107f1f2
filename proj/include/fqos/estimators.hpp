#pragma once

// Estimation of the traffic characteristic vector {lambda, H, h(q), delta_h,
// sigma_var} from a trace window.
//
// The generalized Hurst exponent is estimated with detrended structure
// functions (first-order detrending): build the mean-removed cumulative
// profile, segment it from both ends at each scale s, remove a least-squares
// line per segment, and average the residual variances' q/2-th powers.
// ln S_q(s) regressed on ln s has slope q*h(q).  Plain (undetrended) block
// sums are numerically unusable for q < 0 — near-cancelling blocks blow up
// the negative moments — which is why detrending is load-bearing here.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "trace.hpp"

namespace fqos {

struct generalized_hurst_fit {
    std::vector<double> q_grid;            // ordered, 0 excluded
    std::map<double, double> h_q;          // q -> h(q) (regression slope / q)
    std::map<double, double> log_c_q;      // q -> regression intercept ln c(q)
    std::map<double, double> r_squared;    // q -> goodness of fit in [0, 1]
    std::size_t min_scale = 0, max_scale = 0;
    double dropped_segment_fraction = 0.0; // zero-variance segments skipped for q < 0
};

struct fractal_signature {
    double intensity_lambda = 0.0;  // mean work-units per slot
    double hurst_H = 0.5;           // h(2)
    std::map<double, double> hq_samples;
    double delta_h = 0.0;           // h(-5) - h(5), clamped to >= 0 on report
    double sigma_var = 0.0;         // population std / mean
    std::size_t window_len = 0;
};

inline std::vector<double> default_q_grid() {
    return {-5.0, -4.0, -3.0, -2.0, -1.0, 1.0, 2.0, 3.0, 4.0, 5.0};
}

// Dyadic scales from 16 up to min(n/4, 2048): small enough scales have too
// few residual degrees of freedom for the q = -5 moment, larger ones leave
// too few segments.
inline std::vector<std::size_t> default_scales(std::size_t n) {
    std::vector<std::size_t> scales;
    std::size_t cap = std::min<std::size_t>(n / 4, 2048);
    for (std::size_t s = 16; s <= cap; s *= 2) scales.push_back(s);
    return scales;
}

namespace detail {

// Mean squared residual of a least-squares line through w[off .. off+s).
inline double segment_residual_var(const std::vector<double>& w, std::size_t off, std::size_t s) {
    const double sd = static_cast<double>(s);
    const double tbar = 0.5 * (sd - 1.0);
    double wbar = 0.0;
    for (std::size_t i = 0; i < s; ++i) wbar += w[off + i];
    wbar /= sd;
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
        double dt = static_cast<double>(i) - tbar;
        num += dt * (w[off + i] - wbar);
        den += dt * dt;
    }
    const double beta = den > 0.0 ? num / den : 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
        double r = (w[off + i] - wbar) - beta * (static_cast<double>(i) - tbar);
        ss += r * r;
    }
    return ss / sd;
}

struct line_fit {
    double slope = 0.0, intercept = 0.0, r2 = 1.0;
};

inline line_fit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double xb = 0.0, yb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xb += x[i];
        yb += y[i];
    }
    xb /= static_cast<double>(n);
    yb /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - xb) * (y[i] - yb);
        sxx += (x[i] - xb) * (x[i] - xb);
        syy += (y[i] - yb) * (y[i] - yb);
    }
    line_fit f;
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = yb - f.slope * xb;
    f.r2 = syy > 0.0 ? std::clamp((sxy * sxy) / (sxx * syy), 0.0, 1.0) : 1.0;
    return f;
}

}  // namespace detail

inline generalized_hurst_fit estimate_generalized_hurst(const traffic_trace& trace,
                                                        const std::vector<double>& q_grid,
                                                        const std::vector<std::size_t>& scales) {
    const std::size_t n = trace.size();
    if (scales.size() < 4) throw std::invalid_argument("estimate_generalized_hurst: need >= 4 scales");
    std::vector<std::size_t> sorted_scales = scales;
    std::sort(sorted_scales.begin(), sorted_scales.end());
    sorted_scales.erase(std::unique(sorted_scales.begin(), sorted_scales.end()), sorted_scales.end());
    if (sorted_scales.size() < 4)
        throw std::invalid_argument("estimate_generalized_hurst: need >= 4 distinct scales");
    if (sorted_scales.front() < 4)
        throw std::invalid_argument("estimate_generalized_hurst: scales must be >= 4");
    if (n < 4 * sorted_scales.back())
        throw std::invalid_argument("estimate_generalized_hurst: trace shorter than 4x max scale");
    if (q_grid.empty()) throw std::invalid_argument("estimate_generalized_hurst: empty q grid");
    for (double q : q_grid)
        if (q == 0.0) throw std::invalid_argument("estimate_generalized_hurst: q = 0 is ill-defined");

    // Mean-removed cumulative profile.
    double mean = 0.0;
    for (double v : trace.slots) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> profile(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += trace.slots[i] - mean;
        profile[i] = acc;
    }

    // Per-scale residual variances over both-ends segmentation.
    std::vector<std::vector<double>> fluct(sorted_scales.size());
    std::size_t zero_segments = 0, total_segments = 0;
    for (std::size_t si = 0; si < sorted_scales.size(); ++si) {
        const std::size_t s = sorted_scales[si];
        const std::size_t m = n / s;
        fluct[si].reserve(2 * m);
        for (std::size_t v = 0; v < m; ++v) fluct[si].push_back(detail::segment_residual_var(profile, v * s, s));
        for (std::size_t v = 0; v < m; ++v)
            fluct[si].push_back(detail::segment_residual_var(profile, n - (v + 1) * s, s));
        for (double f2 : fluct[si])
            if (f2 <= 0.0) ++zero_segments;
        total_segments += fluct[si].size();
    }
    if (total_segments == 0 || zero_segments == total_segments)
        throw std::invalid_argument("estimate_generalized_hurst: degenerate input (all segments constant)");
    const double dropped = static_cast<double>(zero_segments) / static_cast<double>(total_segments);
    if (dropped > 0.5)
        throw std::invalid_argument("estimate_generalized_hurst: degenerate input (over half the segments constant)");

    generalized_hurst_fit fit;
    fit.q_grid = q_grid;
    fit.min_scale = sorted_scales.front();
    fit.max_scale = sorted_scales.back();
    fit.dropped_segment_fraction = dropped;

    std::vector<double> log_s(sorted_scales.size());
    for (std::size_t si = 0; si < sorted_scales.size(); ++si)
        log_s[si] = std::log(static_cast<double>(sorted_scales[si]));

    for (double q : q_grid) {
        std::vector<double> log_sq(sorted_scales.size());
        for (std::size_t si = 0; si < sorted_scales.size(); ++si) {
            double sum = 0.0;
            std::size_t count = 0;
            for (double f2 : fluct[si]) {
                if (f2 <= 0.0) continue;  // zero-variance segments carry no q < 0 information
                sum += std::pow(f2, 0.5 * q);
                ++count;
            }
            if (count == 0)
                throw std::invalid_argument("estimate_generalized_hurst: degenerate input at scale");
            log_sq[si] = std::log(sum / static_cast<double>(count));
        }
        detail::line_fit lf = detail::fit_line(log_s, log_sq);
        fit.h_q[q] = lf.slope / q;
        fit.log_c_q[q] = lf.intercept;
        fit.r_squared[q] = lf.r2;
    }
    return fit;
}

// delta_h = h(-5) - h(5); requires both endpoints in the fit.
inline double hurst_range(const generalized_hurst_fit& fit) {
    auto lo = fit.h_q.find(-5.0);
    auto hi = fit.h_q.find(5.0);
    if (lo == fit.h_q.end() || hi == fit.h_q.end())
        throw std::invalid_argument("hurst_range: fit must include q = -5 and q = 5");
    return lo->second - hi->second;
}

// Population standard deviation over mean.
inline double coefficient_of_variation(const traffic_trace& trace) {
    if (trace.slots.empty()) throw std::invalid_argument("coefficient_of_variation: empty trace");
    double mean = 0.0;
    for (double v : trace.slots) mean += v;
    mean /= static_cast<double>(trace.size());
    if (!(mean > 0.0))
        throw std::invalid_argument("coefficient_of_variation: mean must be > 0");
    double var = 0.0;
    for (double v : trace.slots) var += (v - mean) * (v - mean);
    var /= static_cast<double>(trace.size());
    return std::sqrt(var) / mean;
}

inline fractal_signature signature(const traffic_trace& trace) {
    if (trace.size() < 512) throw std::invalid_argument("signature: window must be >= 512 slots");
    generalized_hurst_fit fit = estimate_generalized_hurst(trace, default_q_grid(), default_scales(trace.size()));
    fractal_signature sig;
    sig.window_len = trace.size();
    sig.intensity_lambda = trace.mean();
    sig.hq_samples = fit.h_q;
    sig.hurst_H = fit.h_q.at(2.0);
    double dh = hurst_range(fit);
    if (dh < -0.05)
        // More negative than estimation noise should allow; keep the raw
        // value out of reports but preserve the clamp contract.
        dh = -0.05;
    sig.delta_h = std::max(dh, 0.0);
    sig.sigma_var = coefficient_of_variation(trace);
    return sig;
}

}  // namespace fqos
