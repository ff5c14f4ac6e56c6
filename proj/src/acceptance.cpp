#include "hyperstab/acceptance.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "hyperstab/counterexample.hpp"
#include "hyperstab/delay.hpp"
#include "hyperstab/errors.hpp"
#include "hyperstab/hypersolver.hpp"
#include "hyperstab/io.hpp"
#include "hyperstab/spectral.hpp"

namespace hyperstab {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

double bump(double y) { return std::abs(y) < 1 ? std::pow(1 - y * y, 4) : 0.0; }

RealMatrix random_matrix(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    RealMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = u(rng);
    return m;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = double(x.size());
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += std::log(x[k]) / n;
        my += std::log(y[k]) / n;
    }
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (std::log(x[k]) - mx) * (std::log(x[k]) - mx);
        sxy += (std::log(x[k]) - mx) * (std::log(y[k]) - my);
    }
    return sxy / sxx;
}

struct Ctx {
    std::vector<CriterionResult> out;
    const AcceptanceOptions& opts;

    void add(CriterionResult r) {
        if (opts.on_result) opts.on_result(r);
        out.push_back(std::move(r));
    }
};

void paper_matrix(Ctx& ctx) {
    const auto t0 = Clock::now();
    CriterionResult r{"1", "paper matrix indices", true, "", 0};
    std::ostringstream d;
    for (double a : {0.5, 1.0}) {
        const RealMatrix m(2, {a, a, -a, a});
        const double r2 = rho_hat_p(m, PNorm::finite(2)).value;
        const double ri = rho_hat_p(m, PNorm::infinity()).value;
        const double e2 = std::abs(r2 - std::sqrt(2.0) * a), ei = std::abs(ri - 2 * a);
        r.pass = r.pass && e2 <= 1e-6 && ei <= 1e-6;
        d << "a=" << a << ": rho2 " << num(r2) << " (err " << num(e2) << "), rhoinf " << num(ri) << " (err "
          << num(ei) << "); ";
    }
    r.seconds = since(t0);
    r.pass = r.pass && r.seconds < 1.0;
    d << "time " << num(r.seconds) << " s";
    r.detail = d.str();
    ctx.add(r);
}

void ordering(Ctx& ctx) {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240601);
    double worst02 = -1e9, worst2i = -1e9;
    for (int k = 0; k < 100; ++k) {
        const auto m = random_matrix(2 + std::size_t(k % 2), rng);
        ScalingOptions so;
        so.seed = std::uint64_t(k);
        const double r0 = rho_hat_zero(m).value;
        const double r2 = rho_hat_p(m, PNorm::finite(2), so).value;
        const double ri = rho_hat_p(m, PNorm::infinity(), so).value;
        worst02 = std::max(worst02, r0 - r2);
        worst2i = std::max(worst2i, r2 - ri);
    }
    CriterionResult r{"2", "ordering on 100 random matrices", worst02 <= 1e-6 && worst2i <= 1e-6, "", since(t0)};
    r.pass = r.pass && r.seconds < 60;
    r.detail = "max(rho0-rho2) " + num(worst02) + ", max(rho2-rhoinf) " + num(worst2i) + ", time " + num(r.seconds) +
               " s";
    ctx.add(r);
}

void phase_equality(Ctx& ctx) {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(7321);
    double worst = 0;
    for (std::size_t n : {1, 2, 3})
        for (int k = 0; k < 25; ++k) {
            const auto m = random_matrix(n, rng);
            worst = std::max(worst, std::abs(rho_hat_zero(m).value - rho_hat_p(m, PNorm::finite(2)).value));
        }
    CriterionResult r{"3", "rho0 = rho2 for n <= 3", worst <= 1e-3, "", since(t0)};
    r.pass = r.pass && r.seconds < 120;
    r.detail = "max |rho0-rho2| " + num(worst) + " over 75 matrices, time " + num(r.seconds) + " s";
    ctx.add(r);
}

void delay_analytics(Ctx& ctx) {
    const auto t0 = Clock::now();
    const DelaySystem sys{RealMatrix(1, {0.5}), {1.0}};
    const double dt = 1.0 / 16;
    auto hist = SampledSignal::over(-1.0, 0.0, dt, 1, false);
    for (std::size_t k = 0; k < hist.count(); ++k) hist.sample(0, k) = 1.0;
    const auto out = simulate_linear(sys, hist, 10.0, dt);
    double geo = 0;
    for (std::size_t k = 0; k < out.count(); ++k)
        geo = std::max(geo, std::abs(out.sample(0, k) - std::pow(0.5, std::floor(out.time(k)) + 1)));
    const auto rep = rightmost_roots(sys, {-2.0, 1.0, 20.0});
    const double root_err = std::abs(rep.rightmost_real() + std::log(2.0));
    const bool wind = rep.complete && rep.winding_total == int(rep.roots.size());
    CriterionResult r{"4", "scalar delay analytics", geo <= 1e-12 && root_err <= 1e-10 && wind, "", since(t0)};
    r.detail = "geometric error " + num(geo) + ", rightmost root error " + num(root_err) + ", winding " +
               std::to_string(rep.winding_total) + " vs " + std::to_string(rep.roots.size()) + " roots";
    ctx.add(r);
}

void transport(Ctx& ctx) {
    const auto t0 = Clock::now();
    const auto sys = HyperbolicSystem::linear({Speed::constant(1.0)}, RealMatrix(1, {0.5}));
    const double W = 0.45, T = 2.25;
    auto exact = [&](double t, double x) {
        const double k = std::max(0.0, std::ceil(t - x));
        return std::pow(0.5, k) * bump((x - t + k - 0.5) / W);
    };
    std::vector<double> h, up, ch;
    for (std::size_t m : {200, 400, 800}) {
        auto u0 = GridState::zeros(1, m);
        for (std::size_t j = 0; j <= m; ++j) u0.u[0][j] = bump((u0.x(j) - 0.5) / W);
        for (auto scheme : {Scheme::upwind, Scheme::characteristics}) {
            SolveOptions o;
            o.scheme = scheme;
            o.cfl = scheme == Scheme::upwind ? 0.5 : 1.0;
            o.norms = {parse_norm_request("c0")};
            const auto traj = solve_forward(sys, u0, T, o);
            const auto& last = traj.snapshots.back();
            double e = 0;
            for (std::size_t j = 0; j <= m; ++j) e = std::max(e, std::abs(last.u[0][j] - exact(last.t, last.x(j))));
            (scheme == Scheme::upwind ? up : ch).push_back(e);
        }
        h.push_back(1.0 / double(m));
    }
    const double order = loglog_slope(h, up);

    auto u0 = GridState::zeros(1, 800);
    for (std::size_t j = 0; j <= 800; ++j) u0.u[0][j] = bump((u0.x(j) - 0.5) / W);
    SolveOptions o;
    o.norms = {parse_norm_request("c0")};
    const auto traj = solve_forward(sys, u0, 10.0, o);
    std::vector<double> ti, ni;
    for (std::size_t k = 0; k < traj.times.size(); ++k)
        if (std::abs(traj.times[k] - std::round(traj.times[k])) < 1e-9) {
            ti.push_back(traj.times[k]);
            ni.push_back(traj.series("c0")[k]);
        }
    const double nu = estimate_decay(ti, ni).nu;
    const double nu_err = std::abs(nu / std::log(2.0) - 1);
    const double ch_err = *std::max_element(ch.begin(), ch.end());
    CriterionResult r{"5", "solver convergence", order >= 0.9 && ch_err <= 1e-6 && nu_err <= 0.02, "", since(t0)};
    r.detail = "upwind order " + num(order) + ", characteristics error " + num(ch_err) + ", nu " + num(nu) +
               " (rel err " + num(nu_err) + ")";
    ctx.add(r);
}

void lemma_check(Ctx& ctx) {
    const auto t0 = Clock::now();
    bool pass = true;
    std::ostringstream d;
    for (int quadratic : {0, 1})
        for (PNorm p : {PNorm::finite(1), PNorm::finite(2), PNorm::infinity()}) {
            TimeVaryingLinearSystem sys;
            sys.n = 2;
            sys.rest_speeds = {1.0, 1.5};
            sys.A = [](double t, double x) {
                return std::vector<double>{1.0 + 0.01 * std::sin(t + x), 1.5 * (1 + 0.01 * std::cos(2 * t))};
            };
            sys.K = [](double) { return RealMatrix(2, {0.0, 0.8, 0.8, 0.0}); };
            if (quadratic)
                sys.Q = [](double, double, const std::vector<double>& v) {
                    return std::vector<double>{0.05 * v[0] * v[1], -0.05 * v[1] * v[1]};
                };
            auto v0 = GridState::zeros(2, 400);
            for (std::size_t i = 0; i < 2; ++i)
                for (std::size_t j = 0; j <= 400; ++j) v0.u[i][j] = 0.01 * bump((v0.x(j) - 0.5) / (0.3 + 0.1 * double(i)));
            const auto res = simulate_timevarying(sys, v0, 20.0, p);
            const bool ok = res.hypotheses.met && res.fit.nu > 0 && res.fit.residual <= 0.1;
            pass = pass && ok;
            d << (quadratic ? "Q" : "0") << "/p=" << p.label() << ": nu " << num(res.fit.nu) << " resid "
              << num(res.fit.residual) << "; ";
        }
    CriterionResult r{"6", "time-varying decay desk check", pass, "", since(t0)};
    r.pass = r.pass && r.seconds < 60;
    d << "time " << num(r.seconds) << " s";
    r.detail = d.str();
    ctx.add(r);
}

void certificate(Ctx& ctx) {
    const auto t0 = Clock::now();
    const std::vector<double> horizons{6.5, 9.5, 12.5};
    std::vector<CounterexampleRun> runs;
    std::string err;
    try {
        for (double T : horizons) {
            CounterexampleParams p;
            p.T = T;
            runs.push_back(run_certificate(build_config(p)));
        }
    } catch (const Error& e) {
        err = e.what();
    }
    if (!err.empty()) {
        for (const char* id : {"7a", "7b", "7c", "7d", "7e"}) ctx.add({id, "certificate", false, err, since(t0)});
        return;
    }

    {
        bool pass = true;
        std::ostringstream d;
        for (const auto& r : runs) {
            pass = pass && r.distinct.pass && r.distinct.window_gap >= r.config.eps / 2;
            d << "T=" << r.config.params.T << ": gap " << num(r.distinct.window_gap) << " >= " << num(r.config.eps / 2)
              << "; ";
        }
        ctx.add({"7a", "distinct node times", pass, d.str(), since(t0)});
    }
    {
        bool pass = true;
        std::ostringstream d;
        for (const auto& r : runs) {
            pass = pass && r.dv.max_ratio <= r.config.c;
            d << "T=" << r.config.params.T << ": max ratio " << num(r.dv.max_ratio) << " over " << r.dv.edges
              << " edges; ";
        }
        d << "c " << num(runs.front().config.c);
        ctx.add({"7b", "derivative target contraction", pass, d.str(), since(t0)});
    }
    {
        const auto t1 = Clock::now();
        bool pass = true;
        std::ostringstream d;
        for (double T : horizons) {
            CounterexampleParams p;
            p.T = T;
            const auto s = mismatch_scaling(p, {1e-3, 5e-4, 2.5e-4});
            pass = pass && std::abs(s.slope - 2.0) <= 0.15;
            d << "T=" << T << ": slope " << num(s.slope) << "; ";
        }
        ctx.add({"7c", "mismatch scales as eps^2", pass, d.str(), since(t1)});
    }
    {
        bool pass = true;
        std::ostringstream d;
        for (std::size_t k = 0; k < runs.size(); ++k) {
            const auto& c = runs[k].certificate;
            pass = pass && c.amplification >= c.theoretical_floor / 4;
            if (k > 0) pass = pass && c.amplification > runs[k - 1].certificate.amplification;
            d << "T=" << c.T << ": amplification " << num(c.amplification) << " (floor/4 "
              << num(c.theoretical_floor / 4) << "); ";
        }
        ctx.add({"7d", "C1 amplification grows with T", pass, d.str(), since(t0)});
    }
    {
        const auto t1 = Clock::now();
        const auto& r = runs.front();
        CriterionResult res{"7e", "delay engine vs PDE boundary trace", false, "", 0};
        try {
            const auto ag = engine_vs_pde(r.config, r.trace, {2000, 4000, 8000});
            bool decreasing = true;
            for (std::size_t k = 1; k < ag.errors.size(); ++k) decreasing = decreasing && ag.errors[k] < ag.errors[k - 1];
            res.pass = decreasing && ag.order >= 1.0;
            std::ostringstream d;
            d << "T=" << r.config.params.T << ", cells 2000/4000/8000: errors";
            for (double e : ag.errors) d << " " << num(e);
            d << ", order " << num(ag.order);
            res.detail = d.str();
        } catch (const Error& e) {
            res.detail = e.what();
        }
        res.seconds = since(t1);
        ctx.add(res);
    }
    const double total = since(t0);
    ctx.add({"7t", "certificate runtime", total < 600, "total " + num(total) + " s (limit 600)", total});
}

void round_trip_check(Ctx& ctx) {
    const auto t0 = Clock::now();
    bool pass = true;
    std::ostringstream d;
    try {
        for (double T : {6.5, 9.5, 12.5}) {
            CounterexampleParams p;
            p.T = T;
            const auto cfg = build_config(p);
            const auto run = run_certificate(cfg);
            const auto rt = round_trip(cfg, run.trace, 4000);
            pass = pass && rt.sup_error <= 5e-6 && rt.compat_residual <= 1e-10;
            d << "T=" << T << ": sup error " << num(rt.sup_error) << ", compatibility " << num(rt.compat_residual)
              << "; ";
        }
    } catch (const Error& e) {
        pass = false;
        d << e.what();
    }
    ctx.add({"8", "backward data round trip", pass, d.str(), since(t0)});
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts) {
    Ctx ctx{{}, opts};
    const std::vector<std::pair<std::string, void (*)(Ctx&)>> all{
        {"1", paper_matrix}, {"2", ordering},    {"3", phase_equality}, {"4", delay_analytics},
        {"5", transport},    {"6", lemma_check}, {"7", certificate},    {"8", round_trip_check},
    };
    for (const auto& [id, fn] : all) {
        // "7a" selects group 7
        const bool wanted = opts.only.empty() || std::any_of(opts.only.begin(), opts.only.end(), [&](const std::string& q) {
                                return q.rfind(id, 0) == 0 && (q.size() == id.size() || !std::isdigit(q[id.size()]));
                            });
        if (!wanted) continue;
        try {
            fn(ctx);
        } catch (const std::exception& e) {
            ctx.add({id, "criterion " + id, false, std::string("error: ") + e.what(), 0});
        }
    }
    return ctx.out;
}

std::string format_result(const CriterionResult& r) {
    return std::string(r.pass ? "PASS" : "FAIL") + " [" + r.id + "] " + r.name + ": " + r.detail;
}

}  // namespace hyperstab
