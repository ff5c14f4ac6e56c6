#include <catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hyperstab/counterexample.hpp"
#include "hyperstab/errors.hpp"

using namespace hyperstab;
using Catch::Approx;

namespace {

CounterexampleConfig defaults(double T = 6.5) {
    CounterexampleParams p;
    p.T = T;
    return build_config(p);
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return static_cast<ErrorKind>(0);
}

// largest singular value of a 2x2 matrix, closed form
double sigma_max(double a, double b, double c, double d) {
    const double s1 = a * a + b * b + c * c + d * d;
    const double det = a * d - b * c;
    return std::sqrt(0.5 * (s1 + std::sqrt(std::max(0.0, s1 * s1 - 4 * det * det))));
}

struct OracleNode {
    std::string word;
    double time;
};

// independent recursive enumeration of the node times
void enumerate(const std::vector<std::vector<double>>& t, std::size_t top, double r1, double r2,
               const std::string& word, int twos, double time, std::vector<OracleNode>& out) {
    out.push_back({word, time});
    const std::size_t depth = word.size() + 1;
    if (depth > top) return;
    const std::size_t level = top - depth;
    const double t1 = time - r1;
    if (t1 > 0) enumerate(t, top, r1, r2, word + "1", twos, t1, out);
    const double t2 = time - r2 - t[level][static_cast<std::size_t>(twos + 1)];
    if (t2 > 0) enumerate(t, top, r1, r2, word + "2", twos + 1, t2, out);
}

std::vector<OracleNode> brute_force(const CounterexampleConfig& cfg, const StTable& st) {
    std::vector<OracleNode> out;
    enumerate(st.t, st.levels(), cfg.r1, cfg.r2, "", 0, cfg.params.T, out);
    return out;
}

}  // namespace

TEST_CASE("default counterexample configuration", "[counterexample][config]") {
    const auto cfg = defaults(12.5);
    CHECK(cfg.r1 == 1.0);
    CHECK(cfg.r2 == Approx(1 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(cfg.gain_sum == Approx(1.5402).epsilon(1e-12));
    CHECK(cfg.contraction_bound == Approx(1.01 / (0.51 * 2.02)).epsilon(1e-14));
    CHECK(cfg.contraction_bound == Approx(0.98039).margin(1e-5));
    CHECK(cfg.c == Approx(0.99020).margin(1e-5));
    CHECK(cfg.levels == 18);
    CHECK(cfg.eps > 0);
    CHECK(cfg.eps <= 0.9 * cfg.lattice_gap);
    CHECK(cfg.eps <= 0.4 * cfg.min_pair_gap);

    // scaled 2-norm index: dense scan over diagonal scalings
    double best = 1e9;
    for (int k = -4000; k <= 4000; ++k) {
        const double d = std::exp(k * 1e-3);
        const double a = 0.51, x = 1.01;
        best = std::min(best, sigma_max(a, a * x * d, -a / d, a * x));
    }
    CHECK(cfg.rho2 == Approx(best).margin(1e-6));
    CHECK(cfg.rho2 < 0.51 * 1.01 * std::sqrt(2.0));
    CHECK(cfg.rho2 < 1.0);
}

TEST_CASE("configuration constraint violations", "[counterexample][config]") {
    CounterexampleParams p;
    p.T = 6.5;
    p.a = 0.4;
    CHECK(kind_of([&] { build_config(p); }) == ErrorKind::config);
    p.a = 0.51;
    p.T = 10.0;
    CHECK(kind_of([&] { build_config(p); }) == ErrorKind::config);
    p.T = 6.5;
    p.m = 3;
    CHECK(kind_of([&] { build_config(p); }) == ErrorKind::unsupported);
    p.m = 1;
    p.speed2 = 0.9;
    CHECK(kind_of([&] { build_config(p); }) == ErrorKind::config);
    p.speed2 = std::sqrt(2.0);
    p.T = 0.8;
    CHECK(kind_of([&] { build_config(p); }) == ErrorKind::config);
    p.T = 6.5;
    p.xi = 0.9;
    CHECK(kind_of([&] { build_config(p); }) == ErrorKind::config);
}

TEST_CASE("seed points", "[counterexample][seeds]") {
    CounterexampleConfig cfg;
    cfg.levels = 2;
    cfg.eps = 0.1;
    cfg.params.m = 1;
    const auto seeds = seed_points(cfg);
    CHECK(seeds.bound == Approx(6.25e-5).epsilon(1e-14));
    REQUIRE(seeds.s.size() == 3);
    CHECK(seeds.s[0] == Approx(1.5625e-5).epsilon(1e-14));
    CHECK(seeds.t[0] == Approx(7.8125e-6).epsilon(1e-14));
    CHECK(seeds.s[1] == Approx(3.125e-5).epsilon(1e-14));
    CHECK(seeds.t[1] == Approx(2.34375e-5).epsilon(1e-14));
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(std::abs(seeds.s[i]) <= seeds.bound);
        CHECK(std::abs(seeds.t[i]) <= seeds.bound);
    }

    const auto big = seed_points(defaults(12.5));
    for (std::size_t i = 1; i < big.s.size(); ++i) {
        CHECK(big.s[i] > big.s[i - 1]);
        CHECK(big.t[i] > big.t[i - 1]);
    }

    cfg.levels = 600;
    CHECK(kind_of([&] { seed_points(cfg); }) == ErrorKind::numeric);
}

TEST_CASE("st recursion", "[counterexample][seeds]") {
    SeedTable seeds;
    seeds.s = {4e-4, 0.0};
    seeds.t = {0.0, 8e-4};
    const auto st = st_recursion(seeds, 0.5, 1.0, 1.0);
    REQUIRE(st.levels() == 1);
    CHECK(st.s_at(1, 1) == Approx(6e-4).epsilon(1e-14));
    CHECK(st.t_at(1, 1) == Approx(2e-4).epsilon(1e-14));
    CHECK(kind_of([&] { st.s_at(1, 2); }) == ErrorKind::input);
    CHECK(kind_of([&] { st.t_at(2, 1); }) == ErrorKind::input);
    CHECK(kind_of([&] { st.s_at(0, 0); }) == ErrorKind::input);

    SeedTable zero;
    zero.s.assign(6, 0.0);
    zero.t.assign(6, 0.0);
    const auto z = st_recursion(zero, 0.51, 1.01, 1.01);
    for (std::size_t k = 0; k <= z.levels(); ++k)
        for (std::size_t i = 1; i <= z.s[k].size(); ++i) {
            CHECK(z.s_at(k, i) == 0.0);
            CHECK(z.t_at(k, i) == 0.0);
        }

    const auto cfg = defaults(12.5);
    const auto s = seed_points(cfg);
    const auto full = st_recursion(s, 0.51, 1.01, 1.01);
    CHECK(full.levels() == static_cast<std::size_t>(cfg.levels));
    for (std::size_t k = 0; k <= full.levels(); ++k) {
        CHECK(full.s[k].size() == s.s.size() - k);
        for (std::size_t i = 1; i <= full.s[k].size(); ++i) {
            CHECK(std::abs(full.s_at(k, i)) <= std::pow(4.0, double(k)) * s.bound);
            CHECK(std::abs(full.t_at(k, i)) <= std::pow(4.0, double(k)) * s.bound);
        }
    }
    CHECK(std::abs(full.s_at(full.levels(), 1)) <= std::pow(cfg.eps, 3));
}

TEST_CASE("time tree against a brute-force enumerator", "[counterexample][tree]") {
    for (double T : {2.5, 6.5, 9.5}) {
        const auto cfg = defaults(T);
        const auto st = st_recursion(seed_points(cfg), cfg.params.a, cfg.params.xi, cfg.params.eta);
        const auto tree = build_time_tree(cfg, st);
        const auto oracle = brute_force(cfg, st);
        REQUIRE(tree.size() == oracle.size());
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            CHECK(tree.nodes[i].word == oracle[i].word);
            CHECK(tree.nodes[i].time == oracle[i].time);
        }
        for (std::size_t i = 1; i < tree.size(); ++i) {
            const auto& n = tree.nodes[i];
            const auto& parent = tree.nodes[static_cast<std::size_t>(n.parent)];
            CHECK(n.time > 0);
            CHECK(n.word.substr(0, n.word.size() - 1) == parent.word);
            CHECK(std::abs(tree.time_of(n.lattice) - n.time) <= 1e-12);
            // distance to the lattice point is of seed size
            CHECK(std::abs(n.lattice.offset) <= 4 * std::pow(cfg.eps, 3));
        }
    }
}

TEST_CASE("first tree times at T = 10", "[counterexample][tree]") {
    CounterexampleParams p;
    p.T = 10.0;
    auto cfg = derive_config(p);
    cfg.eps = 0.01;
    const auto st = st_recursion(seed_points(cfg), p.a, p.xi, p.eta);
    const auto tree = build_time_tree(cfg, st);
    const auto& root = tree.nodes[0];
    REQUIRE(root.child1 >= 0);
    REQUIRE(root.child2 >= 0);
    CHECK(tree.nodes[static_cast<std::size_t>(root.child1)].time == 9.0);
    const double t2 = tree.nodes[static_cast<std::size_t>(root.child2)].time;
    const double corr = st.t_at(st.levels() - 1, 2);
    CHECK(t2 == 10.0 - cfg.r2 - corr);
    CHECK(std::abs(corr) <= std::pow(cfg.eps, 3));
    CHECK(t2 == Approx(9.29289).margin(1e-5));
}

TEST_CASE("distinct node times", "[counterexample][tree]") {
    for (double T : {6.5, 9.5}) {
        const auto cfg = defaults(T);
        const auto st = st_recursion(seed_points(cfg), cfg.params.a, cfg.params.xi, cfg.params.eta);
        const auto tree = build_time_tree(cfg, st);
        const auto rep = verify_distinct(tree, cfg.eps);
        CHECK(rep.pass);
        CHECK(rep.window_gap >= cfg.eps / 2);
        CHECK(rep.cluster_separation > 0);
        // sorted adjacent differences between classes as oracle
        std::map<std::pair<int, int>, std::pair<double, double>> span;
        for (const auto& n : tree.nodes) {
            if (!(n.time > 0 && n.time < cfg.r1)) continue;
            auto [it, fresh] = span.try_emplace({n.lattice.ones, n.lattice.twos}, n.time, n.time);
            it->second.first = std::min(it->second.first, n.time);
            it->second.second = std::max(it->second.second, n.time);
        }
        std::vector<std::pair<double, double>> spans;
        for (const auto& [k, v] : span) spans.push_back(v);
        std::sort(spans.begin(), spans.end());
        double gap = 1e9;
        for (std::size_t i = 1; i < spans.size(); ++i) gap = std::min(gap, spans[i].first - spans[i - 1].second);
        CHECK(rep.window_gap == Approx(gap).epsilon(1e-12));
    }

    // constant delays: T12 = T21
    const auto cfg = defaults(6.5);
    SeedTable zero;
    zero.s.assign(static_cast<std::size_t>(cfg.levels) + 1, 0.0);
    zero.t = zero.s;
    const auto flat = build_time_tree(cfg, st_recursion(zero, cfg.params.a, cfg.params.xi, cfg.params.eta));
    const auto rep = verify_distinct(flat, cfg.eps);
    CHECK_FALSE(rep.pass);
    CHECK(rep.cluster_separation == 0.0);
    CHECK_FALSE(rep.colliding_a.empty());
    CHECK(rep.colliding_a.size() == rep.colliding_b.size());

    TimeTree lone;
    lone.T = 0.5;
    lone.nodes.push_back(TreeNode{});
    lone.nodes[0].time = 0.5;
    CHECK(verify_distinct(lone, 0.01).pass);
}

TEST_CASE("derivative targets contract", "[counterexample][dv]") {
    const auto cfg = defaults(9.5);
    const auto st = st_recursion(seed_points(cfg), cfg.params.a, cfg.params.xi, cfg.params.eta);
    auto tree = build_time_tree(cfg, st);
    const auto rep = dv_recursion(tree, cfg);
    CHECK(rep.max_ratio <= cfg.c);
    CHECK(rep.sparsity_ok);
    CHECK(rep.edges == tree.size() - 1);

    const double e = cfg.eps;
    const auto& root = tree.nodes[0];
    CHECK(root.dV[0] == e);
    CHECK(root.dV[1] == 0.0);
    // Cramer's rule on G (x, y) = eps (1, 0)
    const double a = 0.51, xi = 1.01, eta = 1.01;
    const double det = a * a * eta + a * a * xi;
    const double x = e * a * eta / det, y = e * a / det;
    const auto& c1 = tree.nodes[static_cast<std::size_t>(root.child1)];
    const auto& c2 = tree.nodes[static_cast<std::size_t>(root.child2)];
    CHECK(c1.dV[0] == Approx(x).epsilon(1e-14));
    CHECK(c1.dV[1] == 0.0);
    CHECK(c2.dV[0] == 0.0);
    CHECK(c2.dV[1] == Approx(y).epsilon(1e-14));
    CHECK(c1.dV[0] / e == Approx(0.980392).margin(1e-6));
    CHECK(c2.dV[1] / e == Approx(0.970685).margin(1e-6));

    const double deep = e * std::pow(cfg.c, cfg.params.T / (2 * cfg.r1));
    for (const auto& n : tree.nodes) {
        const double norm = std::max(std::abs(n.dV[0]), std::abs(n.dV[1]));
        CHECK(norm <= e * std::pow(cfg.c, n.depth) * (1 + 1e-12));
        if (n.depth > 0) CHECK((n.word.back() == '1' ? n.dV[1] : n.dV[0]) == 0.0);
        if (n.time < cfg.r1 && n.depth > cfg.params.T / (2 * cfg.r1)) CHECK(norm <= deep);
    }
}

TEST_CASE("node values follow the gain recursion", "[counterexample][dv]") {
    const auto cfg = defaults(9.5);
    const auto st = st_recursion(seed_points(cfg), cfg.params.a, cfg.params.xi, cfg.params.eta);
    const auto tree = build_time_tree(cfg, st);
    const auto G = cfg.gain();
    std::size_t checked = 0;
    for (const auto& n : tree.nodes) {
        if (n.child1 < 0 || n.child2 < 0) continue;
        const auto& a = tree.nodes[static_cast<std::size_t>(n.child1)].V;
        const auto& b = tree.nodes[static_cast<std::size_t>(n.child2)].V;
        const double scale = std::max(std::abs(n.V[0]), std::abs(n.V[1]));
        CHECK(std::abs(G(0, 0) * a[0] + G(0, 1) * b[1] - n.V[0]) <= 1e-14 * scale);
        CHECK(std::abs(G(1, 0) * a[0] + G(1, 1) * b[1] - n.V[1]) <= 1e-14 * scale);
        ++checked;
    }
    CHECK(checked > 100);
}

TEST_CASE("kernel shape", "[counterexample][trace]") {
    CHECK(kernel(0.0) == 1.0);
    CHECK(kernel(1.0) == 0.0);
    CHECK(kernel(-1.5) == 0.0);
    CHECK(kernel_slope(0.0) == 0.0);
    CHECK(kernel_slope(1.0) == 0.0);
    for (double y : {-0.9, -0.5, -0.1, 0.2, 0.6, 0.95}) {
        const double h = 1e-6;
        CHECK(kernel_slope(y) == Approx((kernel(y + h) - kernel(y - h)) / (2 * h)).margin(1e-8));
        CHECK(kernel(y) == Approx(kernel(-y)).epsilon(1e-15));
    }
}

TEST_CASE("synthesized trace matches the nodes", "[counterexample][trace]") {
    for (int m : {1, 2}) {
        CounterexampleParams p;
        p.T = 6.5;
        p.m = m;
        const auto cfg = build_config(p);
        const auto st = st_recursion(seed_points(cfg), p.a, p.xi, p.eta);
        auto tree = build_time_tree(cfg, st);
        dv_recursion(tree, cfg);
        const auto trace = synthesize_trace(tree, cfg);
        std::size_t window = 0;
        for (const auto& n : tree.nodes) {
            if (!(n.time > 0 && n.time < cfg.r1)) continue;
            ++window;
            const auto jet = trace.at(n.lattice);
            const auto dm = trace.matched_derivative(n.lattice);
            for (int ch = 0; ch < 2; ++ch) {
                CHECK(std::abs(jet.value[ch] - n.V[ch]) <= 1e-14);
                CHECK(std::abs(dm[ch] - n.dV[ch]) <= 1e-12);
            }
        }
        CHECK(trace.node_count() == window);
        for (double t : {0.0, 1e-4, cfg.r2 - 1e-4, cfg.r2, cfg.r2 + 1e-4, cfg.r1 - 1e-4, cfg.r1}) {
            const auto jet = trace.at(t);
            CHECK(jet.value[0] == 0.0);
            CHECK(jet.value[1] == 0.0);
            CHECK(jet.slope[0] == 0.0);
            CHECK(jet.slope[1] == 0.0);
        }
    }

    const SynthesizedTrace empty;
    CHECK(empty.at(0.3).value[0] == 0.0);
    CHECK(empty.c1_norm() == 0.0);
}

TEST_CASE("trace norm and sampled slope", "[counterexample][trace]") {
    const auto run = run_certificate(defaults(6.5));
    const auto& trace = run.trace;
    const double bound = std::max(run.config.eps * run.config.eps,
                                  run.config.eps * std::pow(run.config.c, 6.5 / 2));
    CHECK(trace.c1_norm() <= bound);
    CHECK(trace.c1_norm() > 0);
    // grid maximum never exceeds the extremal-point norm
    double grid = 0;
    for (int k = 0; k * 5e-6 <= trace.r1(); ++k) {
        const auto jet = trace.at(k * 5e-6);
        for (int ch = 0; ch < 2; ++ch) grid = std::max({grid, std::abs(jet.value[ch]), std::abs(jet.slope[ch])});
    }
    CHECK(grid <= trace.c1_norm() * (1 + 1e-9));
    CHECK(grid >= 0.9 * trace.c1_norm());
}

TEST_CASE("backward initial data", "[counterexample][initial]") {
    const auto cfg = defaults(6.5);
    const SynthesizedTrace empty;
    const auto zero = backward_initial_data(cfg, empty, 64);
    for (const auto& comp : zero.u0.u)
        for (double v : comp) CHECK(v == 0.0);

    const auto run = run_certificate(cfg);
    const auto init = backward_initial_data(cfg, run.trace, 2000);
    CHECK(init.compatibility.pass);
    CHECK(init.compatibility.max_residual <= 1e-10);
    CHECK(init.max_fixed_point_residual <= 1e-15);
    CHECK(init.analytic_c1 >= 0.99 * init.grid_c1);
    CHECK(init.ratio <= 1.5);
    // vanishes near both ends
    for (std::size_t j = 0; j <= 20; ++j) {
        CHECK(init.u0.u[0][j] == 0.0);
        CHECK(init.u0.u[1][j] == 0.0);
        CHECK(init.u0.u[0][2000 - j] == 0.0);
        CHECK(init.u0.u[1][2000 - j] == 0.0);
    }
    // travel-time bookkeeping for the second family
    const auto ginv = cfg.gain_inverse();
    for (std::size_t j = 100; j <= 1900; j += 100) {
        const double x = init.u0.x(j);
        double s = (1 - x) * cfg.r2;
        for (int it = 0; it < 40; ++it) {
            const auto v = run.trace.at(s).value;
            s = (1 - x) * (cfg.r2 + ginv(1, 0) * v[0] + ginv(1, 1) * v[1]);
        }
        CHECK(s >= (1 - x) * cfg.r2 * 0.75);
        CHECK(s <= (1 - x) * cfg.r2 * 1.25);
        const auto v = run.trace.at(s).value;
        CHECK(init.u0.u[1][j] == Approx(ginv(1, 0) * v[0] + ginv(1, 1) * v[1]).margin(1e-18));
    }
}

TEST_CASE("tree evaluation reproduces node values", "[counterexample][certificate]") {
    const auto run = run_certificate(defaults(9.5));
    CHECK(run.certificate.max_node_residual <= run.certificate.node_budget);
    for (std::size_t i = 0; i < run.tree.size(); ++i)
        for (int ch = 0; ch < 2; ++ch) CHECK(std::abs(run.evaluations[i].v[ch] - run.tree.nodes[i].V[ch]) <= 1e-20);
    // exact boundary trace coincides with the bump sum up to r2
    for (double s : {0.05, 0.2, 0.4, 0.6}) {
        const auto a = exact_boundary_trace(run.config, run.trace, s);
        const auto b = run.trace.at(s);
        CHECK(a.value[0] == b.value[0]);
        CHECK(a.value[1] == b.value[1]);
    }
}

TEST_CASE("growth certificate", "[counterexample][certificate]") {
    const auto run = run_certificate(defaults(6.5));
    const auto& c = run.certificate;
    CHECK(c.pass);
    CHECK(c.amplification > c.theoretical_floor / 4);
    CHECK(c.theoretical_floor == Approx(std::pow(run.config.c, -6.5 / 2)).epsilon(1e-14));
    CHECK(c.v_prime_T[0] == Approx(run.config.eps).epsilon(0.05));
    CHECK(std::abs(c.v_prime_T[1]) <= 0.01 * run.config.eps);
    CHECK(c.peak_c1 >= c.initial_c1);
    CHECK(c.to_json().find("\"amplification\"") != std::string::npos);

    CounterexampleParams p;
    p.T = 6.5;
    p.m = 2;
    CHECK(kind_of([&] { run_certificate(build_config(p)); }) == ErrorKind::unsupported);
}

TEST_CASE("derivative mismatch scales as eps squared", "[counterexample][certificate]") {
    CounterexampleParams p;
    p.T = 6.5;
    const auto study = mismatch_scaling(p, {1e-3, 5e-4, 2.5e-4});
    CHECK(study.slope == Approx(2.0).margin(0.15));
    for (std::size_t k = 1; k < study.eps.size(); ++k) CHECK(study.mismatch[k] < study.mismatch[k - 1]);
}

TEST_CASE("round trip through the PDE", "[counterexample][pde]") {
    const auto run = run_certificate(defaults(6.5));
    const auto rt = round_trip(run.config, run.trace, 1000);
    CHECK(rt.sup_error <= 1e-5);
    CHECK(rt.synth_gap <= 1e-6);
    CHECK(rt.compat_residual <= 1e-10);
}
