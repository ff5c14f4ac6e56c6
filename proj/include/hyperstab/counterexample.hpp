#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "hyperstab/delay.hpp"
#include "hyperstab/hypersolver.hpp"
#include "hyperstab/linalg.hpp"
#include "hyperstab/signal.hpp"

namespace hyperstab {

struct CounterexampleParams {
    double T = 12.5;
    double a = 0.51;
    double xi = 1.01;
    double eta = 1.01;
    double speed1 = 1.0;                   // r1 = 1 / speed1
    double speed2 = 1.4142135623730951;    // r2 = 1 / speed2
    double eps_request = 0.0;              // <= 0: automatic
    int m = 1;                             // matched derivative order
};

struct CounterexampleConfig {
    CounterexampleParams params;
    double r1 = 1.0, r2 = 0.0;
    double eps = 0.0;
    double c = 0.0;             // contraction constant
    double contraction_bound = 0.0;  // max(xi, eta) / (a (xi + eta))
    double gain_sum = 0.0;      // a (1 + xi + eta)
    int levels = 0;             // floor(T / r2) + 1
    double lattice_gap = 0.0;   // min |T - (k r1 + l r2)|
    double min_pair_gap = 0.0;  // smallest spacing between lattice points <= T
    double rho2 = 0.0;          // scaled 2-norm index of the boundary gain

    RealMatrix gain() const;
    RealMatrix gain_inverse() const;
    StateDelayParams delay_params() const;
    HyperbolicSystem system() const;
};

// Fills every derived field without checking the constraints.
CounterexampleConfig derive_config(const CounterexampleParams& params);
// derive_config plus the constraint checks (config errors name the broken inequality).
CounterexampleConfig build_config(const CounterexampleParams& params);

struct SeedTable {
    std::vector<double> s, t;  // entry i-1 holds point i, i = 1..levels+1
    double bound = 0.0;        // eps^(2+m) / 4^levels
};

SeedTable seed_points(const CounterexampleConfig& cfg);

// s[k][i-1], t[k][i-1]; level k holds (count - k) points.
struct StTable {
    std::vector<std::vector<double>> s, t;

    std::size_t levels() const noexcept { return s.empty() ? 0 : s.size() - 1; }
    double s_at(std::size_t level, std::size_t i) const;
    double t_at(std::size_t level, std::size_t i) const;
};

StTable st_recursion(const SeedTable& seeds, double a, double xi, double eta);

// T - ones*r1 - twos*r2 - offset, with the small offset kept separately.
struct LatticeTime {
    int ones = 0;
    int twos = 0;
    double offset = 0.0;

    bool same_class(const LatticeTime& o) const noexcept { return ones == o.ones && twos == o.twos; }
};

struct TreeNode {
    std::string word;  // letters '1' and '2'; empty for the root
    int depth = 0;
    int twos = 0;
    double time = 0.0;  // parent - r1, or parent - r2 - t correction
    LatticeTime lattice;
    std::array<double, 2> V{};
    std::array<double, 2> dV{};
    int parent = -1;
    int child1 = -1;
    int child2 = -1;
};

struct TimeTree {
    double T = 0.0, r1 = 1.0, r2 = 0.0;
    std::vector<TreeNode> nodes;  // depth-first, root first

    std::size_t size() const noexcept { return nodes.size(); }
    double time_of(const LatticeTime& q) const;
    void write_csv(const std::string& path) const;
};

TimeTree build_time_tree(const CounterexampleConfig& cfg, const StTable& st);

struct DistinctReport {
    double window_gap = 0.0;       // between different classes, nodes in (0, r1)
    double global_gap = 0.0;       // between different classes, all nodes
    double cluster_separation = 0.0;  // smallest time difference inside a class
    std::size_t classes = 0;
    std::size_t window_nodes = 0;
    bool pass = false;
    std::string colliding_a, colliding_b;
};

DistinctReport verify_distinct(const TimeTree& tree, double eps);

struct DvReport {
    double max_ratio = 0.0;  // max over edges of |dV child| / |dV parent|
    bool sparsity_ok = true;
    std::size_t edges = 0;
};

// Fills dV from the root target eps (1, 0); config error when an edge fails to contract by c.
DvReport dv_recursion(TimeTree& tree, const CounterexampleConfig& cfg);

// Sum of compactly supported bumps on [0, r1]: one value bump per class of coincident lattice
// point, one derivative bump per node.
class SynthesizedTrace {
public:
    struct Jet {
        std::array<double, 2> value{};
        std::array<double, 2> slope{};
    };

    SynthesizedTrace() = default;

    Jet at(double t) const;
    Jet at(const LatticeTime& q) const;
    // derivative of order m at a node
    std::array<double, 2> matched_derivative(const LatticeTime& q) const;

    SampledSignal sample(double dt) const;
    double c1_norm() const;
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t class_count() const noexcept { return classes_.size(); }
    double value_width() const noexcept { return min_width_; }
    double r1() const noexcept { return r1_; }

    // candidate times where |value| or |slope| peaks, as lattice times
    std::vector<LatticeTime> extremal_points() const;

private:
    friend SynthesizedTrace synthesize_trace(const TimeTree&, const CounterexampleConfig&);

    struct Bump {
        LatticeTime at;
        double time = 0.0;
        double width = 0.0;
        std::array<double, 2> amp{};
    };
    struct Class {
        Bump value;
        std::vector<std::size_t> members;  // indices into nodes_
        double span_lo = 0.0, span_hi = 0.0;
    };

    Jet eval_class(const Class& c, double delta_center, const LatticeTime* q, double t) const;

    double T_ = 0.0, r1_ = 1.0, r2_ = 0.0;
    int m_ = 1;
    double min_width_ = 0.0;
    std::vector<Class> classes_;
    std::vector<Bump> nodes_;
};

SynthesizedTrace synthesize_trace(const TimeTree& tree, const CounterexampleConfig& cfg);

struct InitialData {
    GridState u0;
    double grid_c1 = 0.0;      // discrete C1 norm of the sampled u0
    double analytic_c1 = 0.0;  // C1 norm evaluated at the bump extremal points
    double trace_c1 = 0.0;
    double ratio = 0.0;        // analytic_c1 / trace_c1
    CompatibilityReport compatibility;
    double max_fixed_point_residual = 0.0;
};

// C1 norm of the initial data generated by the trace, without sampling a grid.
double initial_c1_norm(const CounterexampleConfig& cfg, const SynthesizedTrace& trace);
InitialData backward_initial_data(const CounterexampleConfig& cfg, const SynthesizedTrace& trace, std::size_t cells);

struct NodeEvaluation {
    std::array<double, 2> v{};
    std::array<double, 2> dv{};
    double transit_residual = 0.0;
};

// Exact delay recursion evaluated at the tree node times.
std::vector<NodeEvaluation> evaluate_tree(const TimeTree& tree, const SynthesizedTrace& trace,
                                          const CounterexampleConfig& cfg);

struct GrowthCertificate {
    double T = 0.0;
    double eps = 0.0;
    double c = 0.0;
    double initial_c1 = 0.0;
    double peak_c1 = 0.0;  // lower bound for sup_t ||u(t)||_C1
    double deriv_at_T = 0.0;
    double dv_target = 0.0;
    double mismatch = 0.0;
    double mismatch_constant = 0.0;  // mismatch / eps^2
    double amplification = 0.0;
    double theoretical_floor = 0.0;  // c^(-T / (2 r1))
    double max_node_residual = 0.0;
    double node_budget = 0.0;
    std::size_t nodes = 0;
    std::size_t window_nodes = 0;
    std::array<double, 2> v_prime_T{};
    bool pass = false;

    std::string to_json() const;
};

struct CounterexampleRun {
    CounterexampleConfig config;
    SeedTable seeds;
    StTable st;
    TimeTree tree;
    DistinctReport distinct;
    DvReport dv;
    SynthesizedTrace trace;
    std::vector<NodeEvaluation> evaluations;
    GrowthCertificate certificate;
};

CounterexampleRun run_certificate(const CounterexampleConfig& cfg);

struct ScalingStudy {
    std::vector<double> eps, mismatch;
    double slope = 0.0;
};

ScalingStudy mismatch_scaling(const CounterexampleParams& params, const std::vector<double>& eps_values);

// u(s, 0) generated by the backward data for s in [0, r1]: the synthesized trace up to r2, then
// G (g1(s), v2(t*)) with t* + r2 + v2(t*) = s.
SynthesizedTrace::Jet exact_boundary_trace(const CounterexampleConfig& cfg, const SynthesizedTrace& trace, double s);

// characteristics scheme with dt = r1 / cells, so family 1 moves exactly one cell per step
SolveOptions aligned_solve_options(const CounterexampleConfig& cfg, std::size_t cells);
// grid size giving per_width cells across the narrowest value bump, rounded up to a multiple of 500
std::size_t resolving_cells(const CounterexampleConfig& cfg, const SynthesizedTrace& trace, std::size_t per_width);

struct RoundTrip {
    std::size_t cells = 0;
    double sup_error = 0.0;   // PDE boundary trace vs exact_boundary_trace on [0, r1]
    double synth_gap = 0.0;   // exact_boundary_trace vs the bump sum on (r2, r1]
    double compat_residual = 0.0;
};

RoundTrip round_trip(const CounterexampleConfig& cfg, const SynthesizedTrace& trace, std::size_t cells);

struct TraceAgreement {
    std::vector<std::size_t> cells;
    std::vector<double> errors;  // sup over [0, T] of |PDE trace - delay engine|
    double order = 0.0;
    double engine_dt = 0.0;
};

TraceAgreement engine_vs_pde(const CounterexampleConfig& cfg, const SynthesizedTrace& trace,
                             const std::vector<std::size_t>& cells);

// Quintic kernel 1 - 10|y|^3 + 15|y|^4 - 6|y|^5 on |y| < 1.
double kernel(double y);
double kernel_slope(double y);

}  // namespace hyperstab
