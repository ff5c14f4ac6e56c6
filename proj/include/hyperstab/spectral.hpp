#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyperstab/linalg.hpp"

namespace hyperstab {

struct PNorm {
    double p = 2.0;
    bool infinite = false;

    static PNorm finite(double p);
    static PNorm infinity() { return PNorm{0.0, true}; }
    bool is(double q) const { return !infinite && p == q; }
    std::string label() const;
};

// Accepts "1", "2", "inf", or any real >= 1.
PNorm parse_pnorm(const std::string& text);

// Vector p-norm.
double vector_norm(const std::vector<double>& x, PNorm p);

// Exact for p in {1, 2, inf}; otherwise a lower bound from 32 seeded ascents.
double induced_norm(const RealMatrix& m, PNorm p, std::uint64_t seed = 0);

struct ScalingOptions {
    double tol = 1e-13;
    std::uint64_t seed = 0;
    int lattice_per_axis = 0;  // 0 selects by dimension
    int descents = 3;          // lattice points used as simplex starts
    int polish_rounds = 6;
    int max_evaluations = 4000;  // per simplex run
    unsigned threads = 1;
};

struct ScaledIndex {
    double value = 0.0;
    std::vector<double> scaling;      // diagonal of the witness, first entry 1
    std::vector<double> log_scaling;  // log of the above
    bool boundary = false;            // clamp reached: infimum approached only in the limit
    int iterations = 0;
    int evaluations = 0;
};

inline constexpr double kLogScaleClamp = 30.0;

ScaledIndex rho_hat_p(const RealMatrix& m, PNorm p, const ScalingOptions& opts = {});

struct PhaseOptions {
    int points_per_axis = 0;  // 0 selects the default by dimension
    bool allow_large = false; // permits n > 6 with the default grid
    bool refine = true;       // local ascent after the grid
    double tol = 1e-13;
    int max_evaluations = 4000;
};

struct PhaseIndex {
    double value = 0.0;
    std::vector<double> phases;  // in [0, 2pi), first entry 0
    int iterations = 0;
    int grid_points = 0;
};

int default_phase_resolution(std::size_t n);
ComplexMatrix phase_rotated(const RealMatrix& m, const std::vector<double>& phases);
PhaseIndex rho_hat_zero(const RealMatrix& m, const PhaseOptions& opts = {});

enum class Verdict { stable, unstable, inconclusive };
const char* verdict_name(Verdict v);

struct NormMargin {
    PNorm p;
    ScaledIndex index;
    double lower_bound = 0.0;
    Verdict verdict = Verdict::inconclusive;
};

struct MarginReport {
    std::size_t n = 0;
    double spectral_radius = 0.0;
    PhaseIndex rho0;
    Verdict rho0_verdict = Verdict::inconclusive;
    std::vector<NormMargin> rho_p;
    double tol = 1e-9;
};

MarginReport margin_report(const RealMatrix& m, const std::vector<PNorm>& ps,
                           const ScalingOptions& scaling = {}, const PhaseOptions& phase = {},
                           double verdict_tol = 1e-9);

}  // namespace hyperstab
