#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hyperstab/linalg.hpp"
#include "hyperstab/signal.hpp"
#include "hyperstab/spectral.hpp"

namespace hyperstab {

// Characteristic speed of one component as a function of that component only.
struct Speed {
    enum class Kind { constant, inverse_shift, linear };
    Kind kind = Kind::constant;
    double a = 1.0;  // constant: a; inverse_shift: 1/(a + u); linear: a + b u
    double b = 0.0;

    static Speed constant(double a) { return {Kind::constant, a, 0.0}; }
    static Speed inverse_shift(double a) { return {Kind::inverse_shift, a, 0.0}; }
    static Speed linear(double a, double b) { return {Kind::linear, a, b}; }

    double operator()(double u) const;
    double at_rest() const { return (*this)(0.0); }
    // inverse_shift: u > -a/2; linear: speed >= a/2
    bool in_domain(double u) const;
};

struct HyperbolicSystem {
    std::vector<Speed> speeds;
    // u(t,0) = boundary(u(t,1)); jacobian used by the order-1 compatibility check
    std::function<std::vector<double>(const std::vector<double>&)> boundary;
    std::function<RealMatrix(const std::vector<double>&)> boundary_jacobian;

    std::size_t dim() const noexcept { return speeds.size(); }
    void validate() const;
    static HyperbolicSystem linear(std::vector<Speed> speeds, const RealMatrix& G);
};

// {"speeds": [{"kind": "constant", "a": 1}, ...], "G": [[...], ...]}
HyperbolicSystem parse_hyperbolic_system(const std::string& json_text);
HyperbolicSystem read_hyperbolic_system(const std::string& path);

struct GridState {
    double t = 0.0;
    std::size_t cells = 0;
    std::vector<std::vector<double>> u;  // n rows of cells+1 nodal values, x_j = j / cells

    static GridState zeros(std::size_t n, std::size_t cells);
    std::size_t dim() const noexcept { return u.size(); }
    double spacing() const { return 1.0 / double(cells); }
    double x(std::size_t j) const { return double(j) / double(cells); }
    void write_csv(const std::string& path) const;
    static GridState read_csv(const std::string& path);
};

struct NormRequest {
    enum class Kind { c0, c1, w1p, w2p };
    Kind kind = Kind::c0;
    PNorm p = PNorm::finite(2);
    std::string id() const;
};

// "c0", "c1", "w1p:P", "w2p:P" with P a real >= 1 or "inf"
NormRequest parse_norm_request(const std::string& text);
std::vector<NormRequest> parse_norm_list(const std::string& comma_separated);

double discrete_norm(const GridState& s, const NormRequest& req);
std::vector<double> discrete_norms(const GridState& s, const std::vector<NormRequest>& reqs);

struct CompatibilityReport {
    int order = 0;
    std::vector<std::string> names;
    std::vector<double> residuals;
    double max_residual = 0.0;
    double tol = 1e-8;
    bool pass = true;
};

CompatibilityReport check_compatibility(const HyperbolicSystem& sys, const GridState& u0, int order,
                                        double tol = 1e-8);

enum class Scheme { upwind, characteristics };
Scheme parse_scheme(const std::string& text);

struct SolveOptions {
    Scheme scheme = Scheme::characteristics;
    double dt = 0.0;            // 0: cfl * h / max speed
    double cfl = 1.0;
    double snapshot_every = 0.0;  // 0: every step
    bool keep_snapshots = false;
    std::vector<NormRequest> norms{NormRequest{NormRequest::Kind::c0, PNorm::finite(2)},
                                   NormRequest{NormRequest::Kind::c1, PNorm::finite(2)}};
    double blowup_factor = 1e3;
    bool require_compatibility = true;
    double compatibility_tol = -1.0;  // < 0: grid-scaled default
};

struct Trajectory {
    std::vector<double> times;
    std::vector<GridState> snapshots;  // kept only when requested; the last state is always kept
    std::vector<std::string> norm_ids;
    std::vector<std::vector<double>> norm_series;  // [norm][time]
    // u(t, 0) at every step, uniform in time
    std::vector<double> boundary_times;
    std::vector<std::vector<double>> boundary_values;  // [component][step]
    double dt = 0.0;

    const std::vector<double>& series(const std::string& id) const;
    SampledSignal boundary_signal() const;
    void write_norms_csv(const std::string& path) const;
};

Trajectory solve_forward(const HyperbolicSystem& sys, const GridState& u0, double T, const SolveOptions& opts = {});

struct DecayFit {
    double nu = 0.0;        // minus the slope of log norm
    double prefactor = 0.0; // C in C exp(-nu t)
    double residual = 0.0;  // RMS deviation of log norm
    std::size_t points = 0;
    bool trimmed = false;   // window cut at the first non-positive value
};

DecayFit estimate_decay(const std::vector<double>& t, const std::vector<double>& norm, double t_begin = -1e300,
                        double t_end = 1e300);

struct TimeVaryingLinearSystem {
    std::size_t n = 0;
    std::vector<double> rest_speeds;  // reference diagonal the coefficients deviate from
    std::function<std::vector<double>(double t, double x)> A;  // diagonal entries
    std::function<RealMatrix(double t)> K;
    // right-hand side Q(t,x)(v,v); empty for the linear case
    std::function<std::vector<double>(double t, double x, const std::vector<double>& v)> Q;
};

struct TimeVaryingHypotheses {
    double k_hat = 0.0;          // sup_t ||K(t)||_p
    double a_deviation = 0.0;    // C1 size of A - diag(rest speeds)
    double k_prime = 0.0;        // sup_t ||K'(t)||_p
    double q_bound = 0.0;        // sampled sup |Q(v,v)| over unit v
    double initial_w1p = 0.0;
    double smallness_budget = 0.1;
    bool met = false;
};

struct TimeVaryingResult {
    Trajectory trajectory;  // single norm series "w1p:P"
    TimeVaryingHypotheses hypotheses;
    DecayFit fit;
    std::string verdict;  // "decay", "no decay", "hypotheses unmet: ..."
};

struct TimeVaryingOptions {
    double cfl = 0.9;
    double snapshot_every = 0.05;
    double smallness_budget = 0.1;
};

TimeVaryingResult simulate_timevarying(const TimeVaryingLinearSystem& sys, const GridState& v0, double T, PNorm p,
                                       const TimeVaryingOptions& opts = {});

}  // namespace hyperstab
