#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hyperstab/linalg.hpp"
#include "hyperstab/signal.hpp"
#include "hyperstab/spectral.hpp"

namespace hyperstab {

struct DelaySystem {
    RealMatrix K;
    std::vector<double> r;

    std::size_t dim() const noexcept { return r.size(); }
    double max_delay() const;
    double min_delay() const;
    void validate() const;
};

// {"K": {"n":..,"entries":[..]} or [[..],..], "r": [..]}
DelaySystem parse_delay_system(const std::string& json_text);
DelaySystem read_delay_system(const std::string& path);

// phi_i(t) = sum_j K_ij phi_j(t - r_j) on [0, T]; history must cover [-max r, 0].
SampledSignal simulate_linear(const DelaySystem& sys, const SampledSignal& history, double T, double dt);

// det(I - diag(exp(-r_i z)) K)
Complex characteristic_value(const DelaySystem& sys, Complex z);

struct RootRectangle {
    double re_min = -2.0;
    double re_max = 1.0;
    double im_max = 20.0;
};

struct RootSearchOptions {
    int grid_re = 16;        // Newton starts along the real axis
    int grid_im = 64;        // Newton starts along the upper imaginary half
    double polish_tol = 1e-10;
    int boundary_segments = 256;
};

struct RootReport {
    std::vector<Complex> roots;  // rightmost first
    RootRectangle rectangle;
    int winding_total = 0;
    double residual = 0.0;  // max |H| at reported roots
    bool complete = true;
    std::string note;

    double rightmost_real() const {
        return roots.empty() ? -std::numeric_limits<double>::infinity() : roots.front().real();
    }
};

RootReport rightmost_roots(const DelaySystem& sys, const RootRectangle& rect,
                           const RootSearchOptions& opts = {});

// Argument-principle count of zeros inside the rectangle.
int winding_number(const DelaySystem& sys, const RootRectangle& rect, int segments, bool* boundary_hit = nullptr);

struct SweepSample {
    std::vector<double> r;
    double rightmost = 0.0;
    bool complete = true;
};

struct SweepReport {
    double worst_rightmost = -std::numeric_limits<double>::infinity();
    std::vector<double> worst_r;
    std::vector<SweepSample> samples;
    double rho0_lower = 0.0;
    bool robust_by_rho0 = false;   // rho_hat_0(K) < 1
    bool all_stable = true;        // every sample has rightmost real part < 0
    bool complete = true;
};

struct SweepOptions {
    RootRectangle rect;
    RootSearchOptions roots;
    int samples = 32;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

SweepReport robustness_sweep(const DelaySystem& sys, double radius, const SweepOptions& opts = {});

}  // namespace hyperstab

#include <array>
#include <functional>
#include <utility>

namespace hyperstab {

// Two-channel boundary map G = [G1 G2] (columns) with transit times r1 > r2.
struct StateDelayParams {
    std::array<double, 2> G1{};
    std::array<double, 2> G2{};
    double r1 = 1.0;
    double r2 = 0.5;

    void validate() const;
    // (G^{-1} y)
    std::array<double, 2> preimage(const std::array<double, 2>& y) const;
};

// Solves t + r2 + v2(t) = s for t in [lo, hi] by safeguarded Newton.
// v2 returns (value, slope) at t.
double invert_transit(const std::function<std::pair<double, double>(double)>& v2, double r2, double s,
                      double lo, double hi);

// Extends a trace given on [0, r1] (values and slopes) to [0, T]:
//   v(s) = w1(s) G1 + w2(s) G2,
//   w1(s) = v1(s - r1) after r1, w2(s) = v2(t*) with t* + r2 + v2(t*) = s after r2,
// and the preimage G^{-1} trace before those times. freeze_delay replaces t* by s - r2.
SampledSignal simulate_state_dependent(const StateDelayParams& p, const SampledSignal& trace, double T,
                                       double dt, bool freeze_delay = false);

}  // namespace hyperstab
