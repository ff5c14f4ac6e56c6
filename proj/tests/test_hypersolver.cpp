#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "hyperstab/delay.hpp"
#include "hyperstab/errors.hpp"
#include "hyperstab/hypersolver.hpp"

using namespace hyperstab;
using Catch::Approx;

namespace {

const double kPi = 3.14159265358979323846;

double bump(double y) { return std::abs(y) < 1 ? std::pow(1 - y * y, 4) : 0.0; }

GridState sampled(std::size_t n, std::size_t cells, const std::function<double(std::size_t, double)>& f) {
    auto s = GridState::zeros(n, cells);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= cells; ++j) s.u[i][j] = f(i, s.x(j));
    return s;
}

HyperbolicSystem scalar(Speed speed, double gain) {
    return HyperbolicSystem::linear({speed}, RealMatrix(1, {gain}));
}

NormRequest norm(const std::string& id) { return parse_norm_request(id); }

}  // namespace

TEST_CASE("norms of zero, linear and sine profiles", "[hypersolver][norms]") {
    const auto zero = GridState::zeros(2, 16);
    for (const char* id : {"c0", "c1", "w1p:2", "w2p:2", "w2p:inf"}) CHECK(discrete_norm(zero, norm(id)) == 0.0);

    const auto line = sampled(1, 32, [](std::size_t, double x) { return x; });
    CHECK(discrete_norm(line, norm("c0")) == Approx(1.0).margin(1e-14));
    CHECK(discrete_norm(line, norm("c1")) == Approx(1.0).margin(1e-12));
    CHECK(discrete_norm(line, norm("w2p:inf")) == Approx(1.0).margin(1e-10));

    // second channel alone: sqrt(int (2 pi)^4 sin^2) = (2 pi)^2 / sqrt 2
    const auto wave = sampled(1, 2000, [](std::size_t, double x) { return std::sin(2 * kPi * x); });
    const double w2 = discrete_norm(wave, norm("w2p:2")), w1 = discrete_norm(wave, norm("w1p:2"));
    const double second = std::sqrt(w2 * w2 - w1 * w1);
    CHECK(second == Approx(std::pow(2 * kPi, 2) / std::sqrt(2.0)).epsilon(1e-4));
    CHECK(second == Approx(27.91).margin(0.01));
}

TEST_CASE("norms converge under refinement at second order", "[hypersolver][norms]") {
    const double exact = std::sqrt(0.5 * (1 + std::pow(2 * kPi, 2) + std::pow(2 * kPi, 4)));
    double prev = 0.0;
    for (std::size_t m : {100, 200, 400}) {
        const auto s = sampled(1, m, [](std::size_t, double x) { return std::sin(2 * kPi * x); });
        const double err = std::abs(discrete_norm(s, norm("w2p:2")) - exact);
        const double h = 1.0 / double(m);
        CHECK(err <= 200 * h * h * exact);
        if (prev > 0) CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("norm ids parse and round-trip", "[hypersolver][norms]") {
    const auto list = parse_norm_list("c0,c1,w2p:2,w1p:inf");
    REQUIRE(list.size() == 4);
    CHECK(list[2].id() == "w2p:2");
    CHECK(list[3].id() == "w1p:inf");
    CHECK_THROWS_AS(parse_norm_request("h1"), Error);
    CHECK_THROWS_AS(parse_norm_request("w2p:0.5"), Error);
    CHECK_THROWS_AS(discrete_norm(GridState::zeros(1, 3), norm("c0")), Error);
}

TEST_CASE("compatibility residuals", "[hypersolver][compat]") {
    auto sys = HyperbolicSystem::linear({Speed::constant(1.0), Speed::inverse_shift(0.7)},
                                        RealMatrix(2, {0.3, 0.2, -0.1, 0.4}));
    const auto zero = GridState::zeros(2, 50);
    for (int order : {0, 1}) {
        const auto rep = check_compatibility(sys, zero, order);
        CHECK(rep.pass);
        CHECK(rep.max_residual == 0.0);
    }
    const auto interior = sampled(2, 200, [](std::size_t i, double x) { return 0.01 * bump((x - 0.5) / (0.2 + 0.1 * i)); });
    CHECK(check_compatibility(sys, interior, 1).pass);

    const double c = 0.3;
    const auto flat = sampled(1, 20, [c](std::size_t, double) { return c; });
    const auto rep = check_compatibility(scalar(Speed::constant(1.0), 2.0), flat, 0);
    CHECK(rep.residuals[0] == Approx(std::abs(c - 2 * c)).margin(1e-15));
    CHECK_FALSE(rep.pass);
    try {
        check_compatibility(sys, zero, 2);
        FAIL("expected unsupported");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::unsupported);
    }
}

TEST_CASE("scalar transport with boundary gain halves the sup norm each unit time", "[hypersolver][solve]") {
    const auto sys = scalar(Speed::constant(1.0), 0.5);
    const auto u0 = sampled(1, 200, [](std::size_t, double x) { return bump((x - 0.5) / 0.2); });
    SolveOptions opts;
    opts.norms = {norm("c0")};
    const auto traj = solve_forward(sys, u0, 10.0, opts);
    const auto& c0 = traj.series("c0");
    std::vector<double> t_int, n_int;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double r = std::round(traj.times[k]);
        if (std::abs(traj.times[k] - r) < 1e-9) {
            t_int.push_back(traj.times[k]);
            n_int.push_back(c0[k]);
        }
    }
    REQUIRE(t_int.size() == 11);
    for (std::size_t k = 0; k < t_int.size(); ++k) CHECK(n_int[k] == Approx(std::pow(0.5, double(k))).epsilon(1e-12));
    const auto fit = estimate_decay(t_int, n_int);
    CHECK(fit.nu == Approx(std::log(2.0)).epsilon(1e-10));
    CHECK(fit.residual < 1e-10);
}

TEST_CASE("zero data stays zero", "[hypersolver][solve]") {
    const auto sys = HyperbolicSystem::linear({Speed::constant(1.0), Speed::inverse_shift(0.7)},
                                              RealMatrix(2, {0.3, 0.2, -0.1, 0.4}));
    for (auto scheme : {Scheme::upwind, Scheme::characteristics}) {
        SolveOptions opts;
        opts.scheme = scheme;
        const auto traj = solve_forward(sys, GridState::zeros(2, 40), 2.0, opts);
        for (const auto& series : traj.norm_series)
            for (double v : series) CHECK(v == 0.0);
    }
}

TEST_CASE("characteristics reproduce the shifted profile at interpolation order", "[hypersolver][solve]") {
    const double speed = 0.7, T = 0.5;
    const auto profile = [](double x) { return bump((x - 0.3) / 0.25); };
    std::vector<double> errs;
    for (std::size_t m : {100, 200}) {
        const auto u0 = sampled(1, m, [&](std::size_t, double x) { return profile(x); });
        SolveOptions opts;
        opts.cfl = 0.6;
        const auto traj = solve_forward(scalar(Speed::constant(speed), 0.9), u0, T, opts);
        const auto& last = traj.snapshots.back();
        double err = 0.0;
        for (std::size_t j = 0; j <= m; ++j) err = std::max(err, std::abs(last.u[0][j] - profile(last.x(j) - speed * T)));
        errs.push_back(err);
    }
    CHECK(errs[0] < 1e-3);
    CHECK(errs[1] < errs[0] / 3.5);
}

TEST_CASE("upwind converges at first order to the characteristics solution", "[hypersolver][solve]") {
    const auto sys = scalar(Speed::linear(0.7, 0.5), 0.6);
    const auto profile = [](double x) { return 0.05 * bump((x - 0.4) / 0.35); };
    const double T = 1.5;
    SolveOptions ref_opts;
    ref_opts.cfl = 0.5;
    const auto ref = solve_forward(sys, sampled(1, 3200, [&](std::size_t, double x) { return profile(x); }), T, ref_opts)
                         .snapshots.back();
    std::vector<double> errs;
    for (std::size_t m : {200, 400, 800}) {
        SolveOptions opts;
        opts.scheme = Scheme::upwind;
        opts.cfl = 0.5;
        const auto got = solve_forward(sys, sampled(1, m, [&](std::size_t, double x) { return profile(x); }), T, opts)
                             .snapshots.back();
        double err = 0.0;
        for (std::size_t j = 0; j <= m; ++j) err = std::max(err, std::abs(got.u[0][j] - ref.u[0][j * (3200 / m)]));
        errs.push_back(err);
    }
    const double rate = std::log2(errs[0] / errs[2]) / 2.0;
    INFO("errors " << errs[0] << " " << errs[1] << " " << errs[2]);
    CHECK(rate >= 0.9);
}

TEST_CASE("upwind obeys the maximum principle for gains up to one", "[hypersolver][properties]") {
    for (double gain : {-1.0, -0.9, 0.4, 1.0}) {
        const auto sys = scalar(Speed::linear(1.0, 0.3), gain);
        const auto u0 = sampled(1, 120, [](std::size_t, double x) { return 0.2 * std::sin(5 * x) + 0.1 * x; });
        SolveOptions opts;
        opts.scheme = Scheme::upwind;
        opts.cfl = 0.8;
        opts.require_compatibility = false;
        opts.norms = {norm("c0")};
        const auto traj = solve_forward(sys, u0, 3.0, opts);
        const auto& c0 = traj.series("c0");
        for (std::size_t k = 1; k < c0.size(); ++k) CHECK(c0[k] <= c0[k - 1] + 1e-15);
    }
}

TEST_CASE("values are carried along characteristics", "[hypersolver][properties]") {
    const auto sys = scalar(Speed::constant(1.0), -0.5);
    const auto u0 = sampled(1, 64, [](std::size_t, double x) { return bump((x - 0.5) / 0.3); });
    SolveOptions opts;
    opts.keep_snapshots = true;
    const auto traj = solve_forward(sys, u0, 2.5, opts);
    std::set<double> allowed(u0.u[0].begin(), u0.u[0].end());
    for (double b : traj.boundary_values[0]) allowed.insert(b);
    for (const auto& snap : traj.snapshots)
        for (double v : snap.u[0]) CHECK(allowed.count(v) == 1);
}

TEST_CASE("solver errors", "[hypersolver][errors]") {
    const auto sys = scalar(Speed::inverse_shift(0.5), 0.5);
    const auto u0 = sampled(1, 50, [](std::size_t, double x) { return 0.01 * bump((x - 0.5) / 0.2); });
    SolveOptions bad_cfl;
    bad_cfl.scheme = Scheme::upwind;
    bad_cfl.dt = 0.1;
    try {
        solve_forward(sys, u0, 1.0, bad_cfl);
        FAIL("expected CFL error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
    }
    const auto deep = sampled(1, 50, [](std::size_t, double x) { return -0.3 * bump((x - 0.5) / 0.2); });
    try {
        solve_forward(sys, deep, 1.0);
        FAIL("expected domain error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::dynamics);
    }
    const auto flat = sampled(1, 50, [](std::size_t, double) { return 0.1; });
    CHECK_THROWS_AS(solve_forward(sys, flat, 1.0), Error);
    HyperbolicSystem twin = HyperbolicSystem::linear({Speed::constant(1.0), Speed::constant(1.0)}, RealMatrix(2));
    CHECK_THROWS_AS(twin.validate(), Error);
}

TEST_CASE("steepening data triggers the loss-of-regularity ceiling", "[hypersolver][errors]") {
    // speed increases with u: the back of the bump catches the front
    const auto sys = scalar(Speed::linear(1.0, 8.0), 0.0);
    const auto u0 = sampled(1, 400, [](std::size_t, double x) { return 0.1 * bump((x - 0.5) / 0.3); });
    SolveOptions opts;
    opts.blowup_factor = 20;
    try {
        solve_forward(sys, u0, 0.95, opts);
        FAIL("expected loss of regularity");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::dynamics);
        CHECK(std::string(e.what()).find("loss of regularity") != std::string::npos);
    }
}

TEST_CASE("boundary trace satisfies the state-dependent delay recursion", "[hypersolver][cross]") {
    StateDelayParams p;
    p.G1 = {0.5, -0.3};
    p.G2 = {0.4, 0.6};
    p.r1 = 1.0;
    p.r2 = std::sqrt(0.5);
    // G1, G2 are the columns of the boundary matrix
    const RealMatrix G(2, {p.G1[0], p.G2[0], p.G1[1], p.G2[1]});
    const auto sys = HyperbolicSystem::linear({Speed::constant(1.0 / p.r1), Speed::inverse_shift(p.r2)}, G);
    const auto u0 = sampled(2, 1600, [](std::size_t i, double x) {
        return i == 0 ? 0.01 * bump((x - 0.4) / 0.15) : 0.02 * bump((x - 0.55) / 0.2);
    });
    SolveOptions opts;
    opts.norms = {norm("c0")};
    const double T = 3.0;
    const auto traj = solve_forward(sys, u0, T, opts);
    const auto boundary = traj.boundary_signal();

    const std::size_t n_trace = static_cast<std::size_t>(std::floor(p.r1 / traj.dt + 1e-9)) + 1;
    SampledSignal trace(0.0, traj.dt, n_trace, 2, true);
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t k = 0; k < n_trace; ++k) {
            trace.sample(c, k) = boundary.sample(c, k);
            trace.slope(c, k) = boundary.derivative(c, boundary.time(k));
        }
    const auto v = simulate_state_dependent(p, trace, T, traj.dt);

    double worst = 0.0;
    for (std::size_t k = n_trace; k < boundary.count(); ++k) {
        const double t = boundary.time(k);
        if (t > v.t1()) break;
        for (std::size_t c = 0; c < 2; ++c) worst = std::max(worst, std::abs(boundary.sample(c, k) - v.value(c, t)));
    }
    INFO("worst " << worst);
    CHECK(worst < 2e-5);
}

TEST_CASE("decay fit examples", "[hypersolver][decay]") {
    std::vector<double> t, y, flat;
    for (int k = 0; k < 20; ++k) {
        t.push_back(0.25 * k);
        y.push_back(3.0 * std::exp(-0.5 * t.back()));
        flat.push_back(2.0);
    }
    auto fit = estimate_decay(t, y);
    CHECK(fit.nu == Approx(0.5).epsilon(1e-12));
    CHECK(fit.prefactor == Approx(3.0).epsilon(1e-12));
    CHECK(fit.residual < 1e-12);
    CHECK(estimate_decay(t, flat).nu == Approx(0.0).margin(1e-14));

    auto cut = y;
    cut[15] = 0.0;
    fit = estimate_decay(t, cut);
    CHECK(fit.trimmed);
    CHECK(fit.points == 15);
    cut[5] = 0.0;
    CHECK_THROWS_AS(estimate_decay(t, cut), Error);
}

TEST_CASE("time-varying system with constant coefficients decays at the slowest channel rate", "[hypersolver][tv]") {
    TimeVaryingLinearSystem sys;
    sys.n = 2;
    sys.rest_speeds = {1.0, 1.5};
    sys.A = [](double, double) { return std::vector<double>{1.0, 1.5}; };
    sys.K = [](double) { return RealMatrix(2, {0.8, 0.0, 0.0, 0.8}); };
    const auto v0 = sampled(2, 1600, [](std::size_t i, double x) { return 0.01 * bump((x - 0.5) / (0.4 + 0.05 * i)); });
    const auto res = simulate_timevarying(sys, v0, 20.0, PNorm::finite(2));
    CHECK(res.hypotheses.met);
    CHECK(res.hypotheses.k_hat == Approx(0.8));
    CHECK(res.fit.nu == Approx(std::log(1 / 0.8) * 1.0).epsilon(0.1));
    CHECK(res.verdict == "decay");

    const auto zero = simulate_timevarying(sys, GridState::zeros(2, 50), 2.0, PNorm::finite(2));
    for (double v : zero.trajectory.norm_series[0]) CHECK(v == 0.0);
}

TEST_CASE("time-varying modulation keeps a positive decay rate", "[hypersolver][tv]") {
    TimeVaryingLinearSystem sys;
    sys.n = 2;
    sys.rest_speeds = {1.0, 1.5};
    sys.A = [](double t, double) { return std::vector<double>{1.0 + 0.01 * std::sin(t), 1.5 * (1 + 0.01 * std::sin(2 * t))}; };
    sys.K = [](double) { return RealMatrix(2, {0.48, 0.64, -0.64, 0.48}); };
    const auto v0 = sampled(2, 200, [](std::size_t i, double x) { return 0.01 * bump((x - 0.5) / (0.2 + 0.05 * i)); });
    const auto res = simulate_timevarying(sys, v0, 20.0, PNorm::finite(2));
    CHECK(res.hypotheses.k_hat == Approx(0.8).epsilon(1e-6));
    CHECK(res.hypotheses.met);
    CHECK(res.fit.nu > 0.0);

    sys.K = [](double) { return RealMatrix(2, {1.1, 0.0, 0.0, 0.2}); };
    const auto unmet = simulate_timevarying(sys, v0, 5.0, PNorm::finite(2));
    CHECK_FALSE(unmet.hypotheses.met);
    CHECK(unmet.verdict.rfind("hypotheses unmet", 0) == 0);
}
