#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "hyperstab/delay.hpp"
#include "hyperstab/errors.hpp"

using namespace hyperstab;
using Catch::Approx;

namespace {

SampledSignal constant_history(double t0, double dt, std::vector<double> level) {
    auto h = SampledSignal::over(t0, 0.0, dt, level.size(), false);
    for (std::size_t c = 0; c < level.size(); ++c)
        for (std::size_t k = 0; k < h.count(); ++k) h.sample(c, k) = level[c];
    return h;
}

DelaySystem scalar(double k, double r) { return DelaySystem{RealMatrix(1, {k}), {r}}; }

}  // namespace

TEST_CASE("sampled signal interpolation orders", "[signal]") {
    auto s = SampledSignal::over(0.0, 1.0, 0.01, 1, false);
    auto h = SampledSignal::over(0.0, 1.0, 0.01, 1, true);
    for (std::size_t k = 0; k < s.count(); ++k) {
        const double t = s.time(k);
        s.sample(0, k) = t * t * t - t;
        h.sample(0, k) = std::sin(3 * t);
        h.slope(0, k) = 3 * std::cos(3 * t);
    }
    for (double t : {0.0031, 0.5017, 0.9993}) {
        CHECK(s.value(0, t) == Approx(t * t * t - t).margin(1e-13));
        CHECK(s.derivative(0, t) == Approx(3 * t * t - 1).margin(1e-11));
        CHECK(h.value(0, t) == Approx(std::sin(3 * t)).margin(1e-9));
        CHECK(h.derivative(0, t) == Approx(3 * std::cos(3 * t)).margin(1e-6));
    }
    CHECK_THROWS_AS(s.value(0, 1.5), Error);
}

TEST_CASE("scalar recursion is exactly geometric", "[delay][linear]") {
    const double dt = 1.0 / 16;
    auto out = simulate_linear(scalar(0.5, 1.0), constant_history(-1.0, dt, {1.0}), 8.0, dt);
    double worst = 0.0;
    for (std::size_t k = 0; k < out.count(); ++k) {
        const double t = out.time(k);
        const double expected = std::pow(0.5, std::floor(t) + 1);
        worst = std::max(worst, std::abs(out.sample(0, k) - expected));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("zero gain kills the signal", "[delay][linear]") {
    auto out = simulate_linear(scalar(0.0, 1.0), constant_history(-1.0, 1.0 / 16, {3.0}), 3.0, 1.0 / 16);
    for (std::size_t k = 0; k < out.count(); ++k) CHECK(out.sample(0, k) == 0.0);
}

TEST_CASE("cross-coupled pair matches hand iteration", "[delay][linear]") {
    DelaySystem sys{RealMatrix(2, {0, 0.5, 0.5, 0}), {1.0, 1.0}};
    auto out = simulate_linear(sys, constant_history(-1.0, 1.0 / 32, {1.0, 1.0}), 4.0, 1.0 / 32);
    // hand iteration: each unit interval halves both channels
    for (std::size_t k = 0; k < out.count(); ++k) {
        const double expected = std::pow(0.5, std::floor(out.time(k)) + 1);
        CHECK(out.sample(0, k) == Approx(expected).epsilon(1e-14));
        CHECK(out.sample(1, k) == Approx(expected).epsilon(1e-14));
    }
}

TEST_CASE("linear simulation input checks", "[delay][linear][errors]") {
    auto hist = constant_history(-0.5, 1.0 / 16, {1.0});
    CHECK_THROWS_AS(simulate_linear(scalar(0.5, 1.0), hist, 2.0, 1.0 / 16), Error);
    auto full = constant_history(-1.0, 1.0 / 16, {1.0});
    CHECK_THROWS_AS(simulate_linear(scalar(0.5, 1.0), full, 2.0, 0.1), Error);
}

TEST_CASE("linearity and shift equivariance", "[delay][linear][property]") {
    DelaySystem sys{RealMatrix(2, {0.2, -0.6, 0.7, 0.1}), {1.0, 0.75}};
    const double dt = 0.75 / 32;
    auto h1 = SampledSignal::over(-43 * dt, 0.0, dt, 2, false);
    auto h2 = h1;
    for (std::size_t k = 0; k < h1.count(); ++k) {
        const double t = h1.time(k);
        h1.sample(0, k) = std::sin(2 * t);
        h1.sample(1, k) = std::cos(t);
        h2.sample(0, k) = t * t;
        h2.sample(1, k) = 1.0 - t;
    }
    auto mix = h1;
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t k = 0; k < mix.count(); ++k) mix.sample(c, k) = 2.0 * h1.sample(c, k) - 0.5 * h2.sample(c, k);
    auto o1 = simulate_linear(sys, h1, 6.0, dt), o2 = simulate_linear(sys, h2, 6.0, dt),
         om = simulate_linear(sys, mix, 6.0, dt);
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t k = 0; k < om.count(); ++k)
            CHECK(om.sample(c, k) == Approx(2.0 * o1.sample(c, k) - 0.5 * o2.sample(c, k)).margin(1e-12));

    // restart from the state at time s and compare with the original continuation
    DelaySystem aligned{sys.K, {0.75, 1.5}};
    auto h0 = SampledSignal::over(-64 * dt, 0.0, dt, 2, false);
    for (std::size_t k = 0; k < h0.count(); ++k) {
        h0.sample(0, k) = std::sin(2 * h0.time(k));
        h0.sample(1, k) = 1.0 + h0.time(k);
    }
    o1 = simulate_linear(aligned, h0, 6.0, dt);
    const std::size_t shift = 128;
    const double s = shift * dt;
    auto hist = SampledSignal::over(-64 * dt, 0.0, dt, 2, false);
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t k = 0; k < hist.count(); ++k) hist.sample(c, k) = o1.value(c, s + hist.time(k));
    auto restarted = simulate_linear(aligned, hist, 2.0, dt);
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t k = 0; k < restarted.count(); ++k)
            CHECK(restarted.sample(c, k) == Approx(o1.sample(c, k + shift)).margin(1e-12));
}

TEST_CASE("characteristic value examples", "[delay][roots]") {
    CHECK(std::abs(characteristic_value(scalar(0.5, 1.0), 0.0) - 0.5) < 1e-15);
    CHECK(std::abs(characteristic_value(scalar(0.5, 1.0), -std::log(2.0))) < 1e-15);
    DelaySystem zero{RealMatrix(2), {1.0, 2.0}};
    CHECK(std::abs(characteristic_value(zero, Complex(0.3, -4.0)) - 1.0) < 1e-15);
}

TEST_CASE("scalar roots on the scan rectangle", "[delay][roots]") {
    auto rep = rightmost_roots(scalar(0.5, 1.0), {-2.0, 1.0, 20.0});
    REQUIRE(rep.roots.size() == 7);
    CHECK(rep.winding_total == 7);
    CHECK(rep.complete);
    CHECK(rep.residual <= 1e-10);
    CHECK(std::abs(rep.roots.front().real() + std::log(2.0)) <= 1e-10);
    for (const auto& z : rep.roots) {
        CHECK(z.real() == Approx(-std::log(2.0)).epsilon(1e-10));
        const double k = z.imag() / (2 * std::numbers::pi);
        CHECK(k == Approx(std::round(k)).margin(1e-9));
    }
}

TEST_CASE("no roots for zero gain and an unstable root for gain two", "[delay][roots]") {
    DelaySystem zero{RealMatrix(1), {1.0}};
    auto none = rightmost_roots(zero, {-2.0, 1.0, 20.0});
    CHECK(none.roots.empty());
    CHECK(none.winding_total == 0);
    CHECK(none.complete);
    auto unstable = rightmost_roots(scalar(2.0, 1.0), {-1.0, 2.0, 5.0});
    REQUIRE_FALSE(unstable.roots.empty());
    CHECK(unstable.roots.front().real() == Approx(std::log(2.0)).epsilon(1e-10));
}

TEST_CASE("two-delay system roots satisfy the winding cross-check", "[delay][roots]") {
    DelaySystem sys{RealMatrix(2, {0.3, 0.4, -0.2, 0.5}), {1.0, std::sqrt(2.0)}};
    auto rep = rightmost_roots(sys, {-3.0, 1.0, 30.0}, {24, 120, 1e-10, 256});
    CHECK(rep.complete);
    CHECK(rep.winding_total == static_cast<int>(rep.roots.size()));
    for (const auto& z : rep.roots) CHECK(std::abs(characteristic_value(sys, z)) <= 1e-10);
}

TEST_CASE("root-free half plane implies decay of the simulation", "[delay][property]") {
    DelaySystem sys{RealMatrix(2, {0.3, 0.4, -0.2, 0.5}), {1.0, std::sqrt(2.0)}};
    const double delta = 0.1;
    CHECK(winding_number(sys, {-delta, 5.0, 50.0}, 512) == 0);
    const double dt = 1.0 / 32;
    auto hist = SampledSignal::over(-2.0, 0.0, dt, 2, false);
    for (std::size_t k = 0; k < hist.count(); ++k) {
        hist.sample(0, k) = std::cos(3 * hist.time(k));
        hist.sample(1, k) = 1.0;
    }
    const double horizon = 20 * std::sqrt(2.0);
    auto out = simulate_linear(sys, hist, horizon, dt);
    // log of the running window maximum, one point per max-delay window
    std::vector<double> ts, ls;
    const double win = std::sqrt(2.0);
    for (double a = 0.0; a + win <= horizon; a += win) {
        double m = 0.0;
        for (std::size_t k = 0; k < out.count(); ++k)
            if (out.time(k) >= a && out.time(k) < a + win)
                m = std::max({m, std::abs(out.sample(0, k)), std::abs(out.sample(1, k))});
        ts.push_back(a);
        ls.push_back(std::log(m));
    }
    double mt = 0, ml = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) mt += ts[i] / ts.size(), ml += ls[i] / ts.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) sxy += (ts[i] - mt) * (ls[i] - ml), sxx += (ts[i] - mt) * (ts[i] - mt);
    CHECK(sxy / sxx <= -delta / 2);
}

TEST_CASE("robustness sweep examples", "[delay][sweep]") {
    SweepOptions o;
    o.rect = {-3.0, 1.0, 10.0};
    o.samples = 8;
    auto zero = robustness_sweep(DelaySystem{RealMatrix(1), {1.0}}, 0.1, o);
    CHECK(std::isinf(zero.worst_rightmost));
    CHECK(zero.worst_rightmost < 0);
    CHECK(zero.robust_by_rho0);

    auto s = robustness_sweep(scalar(0.5, 1.0), 0.1, o);
    CHECK(s.worst_rightmost == Approx(-std::log(2.0) / 1.1).epsilon(1e-9));
    CHECK(s.worst_r[0] == Approx(1.1));
    CHECK(s.complete);

    auto d = robustness_sweep(DelaySystem{RealMatrix(2, {0.9, 0, 0, 0.9}), {1.0, 0.7}}, 0.05, o);
    // decoupled channels: rightmost real part is max_i ln(0.9)/r_i
    for (const auto& smp : d.samples) {
        const double oracle = std::max(std::log(0.9) / smp.r[0], std::log(0.9) / smp.r[1]);
        CHECK(smp.rightmost == Approx(oracle).epsilon(1e-9));
    }
    CHECK(d.worst_rightmost == Approx(std::log(0.9) / 1.05).epsilon(1e-9));
    CHECK(d.all_stable);
    CHECK_THROWS_AS(robustness_sweep(scalar(0.5, 1.0), 1.5, o), Error);
}

TEST_CASE("delay system document parsing", "[delay][io]") {
    auto sys = parse_delay_system(R"({"K": [[0, 0.5], [0.5, 0]], "r": [1, 2]})");
    CHECK(sys.dim() == 2);
    CHECK(sys.K(0, 1) == 0.5);
    CHECK(sys.r[1] == 2.0);
    CHECK_THROWS_AS(parse_delay_system(R"({"K": [[1]], "r": [-1]})"), Error);
    CHECK_THROWS_AS(parse_delay_system(R"({"K": [[1]], "r": [1, 2]})"), Error);
}
