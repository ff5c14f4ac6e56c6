#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "hyperstab/errors.hpp"
#include "hyperstab/linalg.hpp"

using namespace hyperstab;
using Catch::Approx;

namespace {

ComplexMatrix random_complex(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ComplexMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = Complex(u(rng), u(rng));
    return m;
}

}  // namespace

TEST_CASE("spectral radius of small closed-form matrices", "[linalg][eigen]") {
    CHECK(spectral_radius(RealMatrix(2, {2, 0, 0, -3})) == Approx(3.0).epsilon(1e-12));
    CHECK(spectral_radius(RealMatrix(2, {0, 1, 0, 0})) == Approx(0.0).margin(1e-14));
    CHECK(spectral_radius(RealMatrix(2, {0, -1, 1, 0})) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("companion matrix recovers prescribed roots", "[linalg][eigen]") {
    // (z-1)(z+2)(z-0.5i)(z+0.5i)(z-3) expanded by repeated multiplication
    std::vector<Complex> roots{1.0, -2.0, Complex(0, 0.5), Complex(0, -0.5), 3.0};
    std::vector<Complex> poly{1.0};
    for (const auto& r : roots) {
        std::vector<Complex> next(poly.size() + 1, 0.0);
        for (std::size_t i = 0; i < poly.size(); ++i) {
            next[i] += poly[i];
            next[i + 1] -= r * poly[i];
        }
        poly = next;
    }
    const std::size_t n = roots.size();
    ComplexMatrix c(n);
    for (std::size_t j = 0; j < n; ++j) c(0, j) = -poly[j + 1];
    for (std::size_t i = 1; i < n; ++i) c(i, i - 1) = 1.0;
    auto ev = eigenvalues(c);
    REQUIRE(ev.size() == n);
    for (const auto& r : roots) {
        double best = 1e9;
        for (const auto& e : ev) best = std::min(best, std::abs(e - r));
        CHECK(best < 1e-10);
    }
    CHECK(spectral_radius(c) == Approx(3.0).epsilon(1e-10));
}

TEST_CASE("eigenvalues match trace and determinant on random complex matrices", "[linalg][eigen]") {
    std::mt19937_64 rng(7);
    for (std::size_t n : {1u, 2u, 3u, 5u, 8u, 20u, 64u}) {
        auto m = random_complex(n, rng);
        auto ev = eigenvalues(m);
        REQUIRE(ev.size() == n);
        Complex tr = 0.0, prod = 1.0, sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) tr += m(i, i);
        for (const auto& e : ev) {
            sum += e;
            prod *= e;
        }
        const Complex det = determinant(m);
        CHECK(std::abs(sum - tr) < 1e-9 * (1.0 + std::abs(tr)) * n);
        CHECK(std::abs(prod - det) < 1e-8 * (1.0 + std::abs(det)) * n);
    }
}

TEST_CASE("eigen solver refuses oversize and non-finite input", "[linalg][eigen]") {
    CHECK_THROWS_AS(eigenvalues(ComplexMatrix(65)), Error);
    ComplexMatrix bad(2);
    bad(0, 0) = std::nan("");
    try {
        eigenvalues(bad);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::input);
    }
}

TEST_CASE("symmetric Jacobi eigenvalues", "[linalg][jacobi]") {
    RealMatrix a(3, {2, -1, 0, -1, 2, -1, 0, -1, 2});
    auto ev = symmetric_eigenvalues(a);
    CHECK(ev[0] == Approx(2 - std::sqrt(2.0)).epsilon(1e-13));
    CHECK(ev[1] == Approx(2.0).epsilon(1e-13));
    CHECK(ev[2] == Approx(2 + std::sqrt(2.0)).epsilon(1e-13));
}

TEST_CASE("determinant and solve", "[linalg][lu]") {
    RealMatrix a(3, {0, 2, 1, 1, 1, 1, 4, 0, 3});
    // cofactor expansion along the first row
    const double expected = 0 * (1 * 3 - 1 * 0) - 2 * (1 * 3 - 1 * 4) + 1 * (1 * 0 - 1 * 4);
    CHECK(determinant(a) == Approx(expected).epsilon(1e-14));
    auto x = solve(a, {3, 3, 7});
    CHECK(x[0] == Approx(1.0));
    CHECK(x[1] == Approx(1.0));
    CHECK(x[2] == Approx(1.0));
    CHECK_THROWS_AS(solve(RealMatrix(2, {1, 2, 2, 4}), {1, 1}), Error);
}
