#include "catch_amalgamated.hpp"

#include <fqos/rng.hpp>

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

using namespace fqos;
using Catch::Approx;

// ============================================================================
// Hash primitives
// ============================================================================

TEST_CASE("fnv1a64 matches the published test vectors", "[rng][hash]") {
    // Offset basis and the standard single-character vector, both public
    // constants of the FNV-1a specification.
    REQUIRE(fnv1a64("") == 0xcbf29ce484222325ULL);
    REQUIRE(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    REQUIRE(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("splitmix64 is deterministic and spreads adjacent inputs", "[rng][hash]") {
    REQUIRE(splitmix64(1) == splitmix64(1));
    std::set<std::uint64_t> outs;
    for (std::uint64_t i = 0; i < 1000; ++i) outs.insert(splitmix64(i));
    REQUIRE(outs.size() == 1000);  // no collisions among adjacent seeds
}

// ============================================================================
// Stream determinism and independence
// ============================================================================

TEST_CASE("equal seeds replay the identical sequence", "[rng][determinism]") {
    rng_stream a(12345), b(12345);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.raw() == b.raw());
}

TEST_CASE("named streams differ by name and by master seed", "[rng][determinism]") {
    rng_stream a = named_stream(7, "arrivals");
    rng_stream b = named_stream(7, "service");
    rng_stream c = named_stream(8, "arrivals");
    rng_stream a2 = named_stream(7, "arrivals");

    bool ab_differ = false, ac_differ = false;
    for (int i = 0; i < 64; ++i) {
        std::uint64_t va = a.raw();
        ab_differ = ab_differ || va != b.raw();
        ac_differ = ac_differ || va != c.raw();
        REQUIRE(va == a2.raw());
    }
    REQUIRE(ab_differ);
    REQUIRE(ac_differ);
}

// ============================================================================
// Distribution ranges
// ============================================================================

TEST_CASE("uniform lies in [0,1) and uniform_pos in (0,1]", "[rng][range]") {
    rng_stream r(99);
    for (int i = 0; i < 20000; ++i) {
        double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        double p = r.uniform_pos();
        REQUIRE(p > 0.0);
        REQUIRE(p <= 1.0);
    }
}

TEST_CASE("bernoulli honors the degenerate probabilities exactly", "[rng][range]") {
    rng_stream r(5);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE_FALSE(r.bernoulli(0.0));
        REQUIRE(r.bernoulli(1.0));
    }
}

TEST_CASE("below(n) stays in [0,n) and covers all residues", "[rng][range]") {
    rng_stream r(21);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 5000; ++i) {
        std::uint64_t v = r.below(7);
        REQUIRE(v < 7);
        seen.insert(v);
    }
    REQUIRE(seen.size() == 7);
}

// ============================================================================
// Moments
// ============================================================================

TEST_CASE("uniform sample mean and variance match 1/2 and 1/12", "[rng][moments]") {
    rng_stream r(31);
    const int n = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = r.uniform();
        s += u;
        s2 += u * u;
    }
    double mean = s / n;
    double var = s2 / n - mean * mean;
    REQUIRE(mean == Approx(0.5).margin(0.005));
    REQUIRE(var == Approx(1.0 / 12.0).margin(0.002));
}

TEST_CASE("gaussian sample moments match N(0,1)", "[rng][moments]") {
    rng_stream r(77);
    const int n = 200000;
    double s = 0.0, s2 = 0.0, s3 = 0.0;
    for (int i = 0; i < n; ++i) {
        double g = r.gaussian();
        s += g;
        s2 += g * g;
        s3 += g * g * g;
    }
    REQUIRE(s / n == Approx(0.0).margin(0.01));
    REQUIRE(s2 / n == Approx(1.0).margin(0.02));
    REQUIRE(s3 / n == Approx(0.0).margin(0.05));  // symmetry
}

TEST_CASE("poisson sample mean and variance match lambda", "[rng][moments]") {
    rng_stream r(13);
    const int n = 100000;
    const double lambda = 4.7;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double k = static_cast<double>(r.poisson(lambda));
        s += k;
        s2 += k * k;
    }
    double mean = s / n;
    double var = s2 / n - mean * mean;
    REQUIRE(mean == Approx(lambda).margin(0.05));
    REQUIRE(var == Approx(lambda).margin(0.15));
}

TEST_CASE("poisson of zero intensity is always zero", "[rng][moments]") {
    rng_stream r(3);
    for (int i = 0; i < 100; ++i) REQUIRE(r.poisson(0.0) == 0);
}
