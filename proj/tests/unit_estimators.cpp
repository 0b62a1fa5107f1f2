#include "catch_amalgamated.hpp"

#include <fqos/estimators.hpp>
#include <fqos/generator.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

using namespace fqos;
using Catch::Approx;

// ============================================================================
// Helpers
// ============================================================================

static traffic_trace fgn_trace(double H, std::size_t n, std::uint64_t seed) {
    return generate_fgn(H, n, 1.0, seed);
}

static double mean_h2_over_seeds(double H, std::size_t n, int seeds, std::uint64_t base) {
    double acc = 0.0;
    for (int s = 0; s < seeds; ++s) {
        auto fit = estimate_generalized_hurst(fgn_trace(H, n, base + static_cast<std::uint64_t>(s)),
                                              default_q_grid(), default_scales(n));
        acc += fit.h_q.at(2.0);
    }
    return acc / seeds;
}

// ============================================================================
// Defaults
// ============================================================================

TEST_CASE("default q grid excludes zero and spans -5..5", "[estimators]") {
    auto q = default_q_grid();
    REQUIRE(q.front() == -5.0);
    REQUIRE(q.back() == 5.0);
    for (double v : q) REQUIRE(v != 0.0);
}

TEST_CASE("default scales are dyadic from 16 to min(n/4, 2048)", "[estimators]") {
    auto s = default_scales(32768);
    REQUIRE(s == std::vector<std::size_t>{16, 32, 64, 128, 256, 512, 1024, 2048});
    auto small = default_scales(512);
    REQUIRE(small == std::vector<std::size_t>{16, 32, 64, 128});
}

// ============================================================================
// Ground-truth recovery on monofractal input
// ============================================================================

TEST_CASE("h(2) recovers the fGn Hurst exponent", "[estimators][oracle]") {
    // Unit-scale version of the full acceptance sweep: 3 seeds per target.
    for (double H : {0.6, 0.8}) {
        double est = mean_h2_over_seeds(H, 16384, 3, 4000);
        INFO("target H = " << H);
        REQUIRE(est == Approx(H).margin(0.08));
    }
}

TEST_CASE("fGn is monofractal: small hurst_range", "[estimators][oracle]") {
    auto fit = estimate_generalized_hurst(fgn_trace(0.7, 16384, 21), default_q_grid(),
                                          default_scales(16384));
    REQUIRE(std::abs(hurst_range(fit)) < 0.15);
}

TEST_CASE("fit carries diagnostics: r^2 high on clean scaling", "[estimators]") {
    auto fit = estimate_generalized_hurst(fgn_trace(0.75, 16384, 3), default_q_grid(),
                                          default_scales(16384));
    REQUIRE(fit.min_scale == 16);
    REQUIRE(fit.max_scale == 2048);
    REQUIRE(fit.dropped_segment_fraction == 0.0);  // Gaussian segments are never constant
    for (double q : {-2.0, 2.0}) REQUIRE(fit.r_squared.at(q) > 0.95);
}

// ============================================================================
// Multifractal input
// ============================================================================

TEST_CASE("cascade h(q) tracks the analytic exponents", "[estimators][oracle]") {
    // Pure cascade, depth 12 (4096 slots), against (tau(q)+1)/q.
    const double w = 0.7;
    std::map<double, double> acc;
    const int seeds = 5;
    for (int s = 0; s < seeds; ++s) {
        traffic_trace t = generate_cascade(12, w, 600 + static_cast<std::uint64_t>(s));
        auto fit = estimate_generalized_hurst(t, default_q_grid(), default_scales(t.size()));
        for (auto& [q, h] : fit.h_q) acc[q] += h;
    }
    for (double q : {-2.0, 2.0}) {
        double est = acc.at(q) / seeds;
        double analytic = cascade_h(q, w);
        INFO("q = " << q << " analytic " << analytic << " estimated " << est);
        REQUIRE(std::abs(est - analytic) <= 0.2 * std::abs(analytic));
    }
}

TEST_CASE("heavier cascade weight widens the hurst range", "[estimators][oracle]") {
    auto mean_range = [](double w) {
        double acc = 0.0;
        const int seeds = 5;
        for (int s = 0; s < seeds; ++s) {
            generator_spec spec;
            spec.target_H = 0.7;
            spec.cascade_depth = 10;
            spec.cascade_weight = w;
            spec.length = 8192;
            spec.seed = 900 + static_cast<std::uint64_t>(s);
            auto fit = estimate_generalized_hurst(compose_traffic(spec), default_q_grid(),
                                                  default_scales(8192));
            acc += hurst_range(fit);
        }
        return acc / seeds;
    };
    REQUIRE(mean_range(0.75) > mean_range(0.55));
}

// ============================================================================
// Error handling
// ============================================================================

TEST_CASE("estimator rejects unusable inputs", "[estimators][error]") {
    traffic_trace t = fgn_trace(0.7, 8192, 1);

    REQUIRE_THROWS_AS(estimate_generalized_hurst(t, {1.0, 0.0, 2.0}, default_scales(8192)),
                      std::invalid_argument);  // q = 0
    REQUIRE_THROWS_AS(estimate_generalized_hurst(t, {}, default_scales(8192)),
                      std::invalid_argument);  // empty grid
    REQUIRE_THROWS_AS(estimate_generalized_hurst(t, default_q_grid(), {16, 32, 64}),
                      std::invalid_argument);  // < 4 scales
    REQUIRE_THROWS_AS(estimate_generalized_hurst(t, default_q_grid(), {16, 16, 32, 64}),
                      std::invalid_argument);  // < 4 distinct scales
    REQUIRE_THROWS_AS(estimate_generalized_hurst(t, default_q_grid(), {2, 16, 32, 64}),
                      std::invalid_argument);  // scale < 4
    REQUIRE_THROWS_AS(estimate_generalized_hurst(t, default_q_grid(), {16, 32, 64, 4096}),
                      std::invalid_argument);  // trace < 4x max scale
}

TEST_CASE("constant traces are rejected as degenerate", "[estimators][error]") {
    traffic_trace flat;
    flat.slots.assign(4096, 3.0);
    REQUIRE_THROWS_AS(estimate_generalized_hurst(flat, default_q_grid(), default_scales(4096)),
                      std::invalid_argument);
}

TEST_CASE("hurst_range requires both q endpoints", "[estimators][error]") {
    traffic_trace t = fgn_trace(0.7, 4096, 2);
    auto fit = estimate_generalized_hurst(t, {-2.0, -1.0, 1.0, 2.0}, default_scales(4096));
    REQUIRE_THROWS_AS(hurst_range(fit), std::invalid_argument);
}

// ============================================================================
// Coefficient of variation
// ============================================================================

TEST_CASE("coefficient_of_variation hand cases", "[estimators]") {
    traffic_trace flat;
    flat.slots = {2.0, 2.0, 2.0};
    REQUIRE(coefficient_of_variation(flat) == Approx(0.0));

    // Values {0, 2}: mean 1, population std 1 -> cv = 1.
    traffic_trace two;
    two.slots = {0.0, 2.0};
    REQUIRE(coefficient_of_variation(two) == Approx(1.0));

    traffic_trace empty;
    REQUIRE_THROWS_AS(coefficient_of_variation(empty), std::invalid_argument);
    traffic_trace zeros;
    zeros.slots = {0.0, 0.0};
    REQUIRE_THROWS_AS(coefficient_of_variation(zeros), std::invalid_argument);
}

// ============================================================================
// Window signature
// ============================================================================

TEST_CASE("signature summarizes a window", "[estimators][signature]") {
    generator_spec spec;
    spec.target_H = 0.75;
    spec.target_intensity = 6.0;
    spec.cascade_depth = 9;
    spec.cascade_weight = 0.68;
    spec.length = 2048;
    spec.seed = 31;
    traffic_trace t = compose_traffic(spec);

    fractal_signature sig = signature(t);
    REQUIRE(sig.window_len == 2048);
    REQUIRE(sig.intensity_lambda == Approx(6.0).margin(1e-9));  // exact mean by construction
    REQUIRE(sig.sigma_var == Approx(coefficient_of_variation(t)));
    REQUIRE(sig.delta_h >= 0.0);  // clamped on report
    REQUIRE(sig.hurst_H == Approx(sig.hq_samples.at(2.0)));
}

TEST_CASE("signature rejects windows below 512 slots", "[estimators][signature][error]") {
    traffic_trace t = fgn_trace(0.7, 511, 4);
    REQUIRE_THROWS_AS(signature(t), std::invalid_argument);
}
