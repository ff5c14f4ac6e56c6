#include "hyperstab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hyperstab/acceptance.hpp"
#include "hyperstab/counterexample.hpp"
#include "hyperstab/delay.hpp"
#include "hyperstab/errors.hpp"
#include "hyperstab/hypersolver.hpp"
#include "hyperstab/io.hpp"
#include "hyperstab/parallel.hpp"
#include "hyperstab/spectral.hpp"

namespace hyperstab {

using json = nlohmann::ordered_json;

int exit_code_for(int error_kind) {
    switch (static_cast<ErrorKind>(error_kind)) {
        case ErrorKind::config: return 2;
        case ErrorKind::input: return 3;
        case ErrorKind::numeric: return 4;
        case ErrorKind::dynamics: return 5;
        case ErrorKind::io: return 6;
        case ErrorKind::budget: return 7;
        case ErrorKind::unsupported: return 8;
    }
    return 1;
}

namespace {

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const std::exception& e) {
        fail(ErrorKind::input, what + ": " + e.what());
    }
}

// parameter block that remembers which keys were read
class Params {
public:
    Params(json doc, std::string experiment) : doc_(std::move(doc)), experiment_(std::move(experiment)) {
        require(doc_.is_object(), ErrorKind::config, "params must be a JSON object");
    }

    bool has(const std::string& key) {
        used_.insert(key);
        return doc_.contains(key);
    }
    const json& raw(const std::string& key) {
        used_.insert(key);
        return doc_.at(key);
    }
    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        const auto& v = doc_[key];
        require(v.is_number(), ErrorKind::config, "parameter '" + key + "' must be a number");
        const double x = v.get<double>();
        require(std::isfinite(x), ErrorKind::config, "parameter '" + key + "' must be finite");
        resolved_[key] = x;
        return x;
    }
    double positive(const std::string& key, double fallback) {
        const double x = number(key, fallback);
        require(x > 0, ErrorKind::config, "parameter '" + key + "' must be positive");
        resolved_[key] = x;
        return x;
    }
    std::size_t count(const std::string& key, std::size_t fallback, std::size_t lo, std::size_t hi) {
        const double x = number(key, double(fallback));
        require(x == std::floor(x) && x >= double(lo) && x <= double(hi), ErrorKind::config,
                "parameter '" + key + "' must be an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                    "]");
        resolved_[key] = x;
        return std::size_t(x);
    }
    std::string text(const std::string& key, const std::string& fallback) {
        if (!has(key)) {
            resolved_[key] = fallback;
            return fallback;
        }
        const auto& v = doc_[key];
        std::string s = v.is_string() ? v.get<std::string>() : v.dump();
        resolved_[key] = s;
        return s;
    }
    bool flag(const std::string& key, bool fallback) {
        if (!has(key)) {
            resolved_[key] = fallback;
            return fallback;
        }
        require(doc_[key].is_boolean(), ErrorKind::config, "parameter '" + key + "' must be true or false");
        resolved_[key] = doc_[key].get<bool>();
        return doc_[key].get<bool>();
    }
    void finish() const {
        for (const auto& [k, v] : doc_.items())
            if (!used_.count(k)) fail(ErrorKind::config, "unknown parameter '" + k + "' for experiment " + experiment_);
    }
    json resolved() const {
        json out = doc_;
        for (const auto& [k, v] : resolved_.items()) out[k] = v;
        return out;
    }

private:
    json doc_;
    std::string experiment_;
    std::set<std::string> used_;
    json resolved_ = json::object();
};

RealMatrix matrix_from(const json& v) {
    if (v.is_string()) return read_matrix(v.get<std::string>());
    if (v.is_object()) return parse_matrix(v.dump());
    if (v.is_number()) return RealMatrix(1, {v.get<double>()});
    require(v.is_array() && !v.empty(), ErrorKind::config, "matrix must be nested arrays, a document or a path");
    std::vector<double> e;
    for (const auto& row : v) {
        require(row.is_array() && row.size() == v.size(), ErrorKind::config, "matrix must be square");
        for (const auto& x : row) {
            require(x.is_number(), ErrorKind::config, "matrix entries must be numbers");
            e.push_back(x.get<double>());
        }
    }
    return RealMatrix(v.size(), std::move(e));
}

struct Out {
    std::string dir;
    ExperimentResult* res;

    bool on() const { return !dir.empty(); }
    std::string path(const std::string& name) const { return (std::filesystem::path(dir) / name).string(); }
    void text(const std::string& name, const std::string& content) {
        if (!on()) return;
        write_text(path(name), content);
        res->artifacts.push_back(path(name));
    }
    template <class F>
    void file(const std::string& name, F&& writer) {
        if (!on()) return;
        writer(path(name));
        res->artifacts.push_back(path(name));
    }
};

struct Ctx {
    const RunConfig& cfg;
    Params& p;
    json tol;
    ExperimentResult& res;
    Out out;

    void scalar(const std::string& k, double v) { res.scalars.emplace_back(k, v); }
    void note(const std::string& k, const std::string& v) { res.notes.emplace_back(k, v); }
    double tolerance(const std::string& k, double fallback) const {
        if (!tol.contains(k)) return fallback;
        require(tol[k].is_number() && tol[k].get<double>() > 0, ErrorKind::config,
                "tolerance '" + k + "' must be a positive number");
        return tol[k].get<double>();
    }
};

std::vector<PNorm> norms_from(Params& p, const std::string& key, std::vector<std::string> fallback) {
    if (p.has(key)) {
        fallback.clear();
        for (const auto& v : p.raw(key)) fallback.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
    std::vector<PNorm> out;
    for (const auto& s : fallback) out.push_back(parse_pnorm(s));
    return out;
}

void rho_paper_matrix(Ctx& c) {
    const double a = c.p.positive("a", 0.5);
    c.p.finish();
    const RealMatrix m(2, {a, a, -a, a});
    ScalingOptions so;
    so.seed = c.cfg.seed;
    const double r1 = rho_hat_p(m, PNorm::finite(1), so).value;
    const double r2 = rho_hat_p(m, PNorm::finite(2), so).value;
    const double ri = rho_hat_p(m, PNorm::infinity(), so).value;
    const double r0 = rho_hat_zero(m).value;
    c.scalar("rho_hat_2", r2);
    c.scalar("expected_2", std::sqrt(2.0) * a);
    c.scalar("rho_hat_inf", ri);
    c.scalar("expected_inf", 2 * a);
    c.scalar("rho_hat_1", r1);
    c.scalar("rho_hat_0", r0);
    const double tol = c.tolerance("rho", 1e-6);
    const bool ok = std::abs(r2 - std::sqrt(2.0) * a) <= tol && std::abs(ri - 2 * a) <= tol;
    c.res.status = ok ? "pass" : "fail";
    c.out.text("indices.csv", "index,value,expected\n2," + format_number(r2) + "," +
                                  format_number(std::sqrt(2.0) * a) + "\ninf," + format_number(ri) + "," +
                                  format_number(2 * a) + "\n1," + format_number(r1) + ",\n0," + format_number(r0) +
                                  ",\n");
}

void rho(Ctx& c) {
    require(c.p.has("matrix"), ErrorKind::config, "rho needs parameter 'matrix'");
    const auto m = matrix_from(c.p.raw("matrix"));
    ScalingOptions so;
    so.seed = c.cfg.seed;
    so.tol = c.p.positive("tol", so.tol);
    if (c.p.has("p")) {
        // one index with its witness
        const std::string p = c.p.text("p", "2");
        c.p.finish();
        json witness = json::array();
        if (p == "zero" || p == "0") {
            PhaseOptions po;
            po.tol = so.tol;
            const auto r = rho_hat_zero(m, po);
            c.scalar("value", r.value);
            c.scalar("iterations", r.iterations);
            for (double x : r.phases) witness.push_back(x);
        } else {
            const auto r = rho_hat_p(m, parse_pnorm(p), so);
            c.scalar("value", r.value);
            c.scalar("iterations", r.iterations);
            c.scalar("boundary", r.boundary ? 1 : 0);
            for (double x : r.scaling) witness.push_back(x);
        }
        c.note("witness", witness.dump());
        c.out.text("index.json", json{{"value", c.res.scalars[0].second}, {"witness", witness},
                                      {"iterations", int(c.res.scalars[1].second)}}.dump() + "\n");
        c.res.status = "pass";
        return;
    }
    const auto ps = norms_from(c.p, "norms", {"1", "2", "inf"});
    c.p.finish();
    const auto rep = margin_report(m, ps, so, {}, c.tolerance("verdict", 1e-9));
    c.scalar("spectral_radius", rep.spectral_radius);
    c.scalar("rho_hat_0", rep.rho0.value);
    c.note("rho_hat_0", verdict_name(rep.rho0_verdict));
    std::string csv = "index,value,lower_bound,verdict\n0," + format_number(rep.rho0.value) + "," +
                      format_number(rep.spectral_radius) + "," + verdict_name(rep.rho0_verdict) + "\n";
    for (const auto& nm : rep.rho_p) {
        c.scalar("rho_hat_" + nm.p.label(), nm.index.value);
        c.note("rho_hat_" + nm.p.label(), verdict_name(nm.verdict));
        csv += nm.p.label() + "," + format_number(nm.index.value) + "," + format_number(nm.lower_bound) + "," +
               verdict_name(nm.verdict) + "\n";
    }
    c.out.text("indices.csv", csv);
    c.res.status = "pass";
}

DelaySystem delay_system_from(Params& p) {
    if (p.has("system")) {
        const auto& s = p.raw("system");
        return s.is_string() ? read_delay_system(s.get<std::string>()) : parse_delay_system(s.dump());
    }
    require(p.has("K") && p.has("r"), ErrorKind::config, "delay experiments need 'system' or 'K' and 'r'");
    json doc{{"K", p.raw("K")}, {"r", p.raw("r")}};
    return parse_delay_system(doc.dump());
}

void delay_sim(Ctx& c) {
    const auto sys = delay_system_from(c.p);
    const double T = c.p.positive("T", 10.0);
    const double dt = c.p.positive("dt", sys.min_delay() / 16);
    std::vector<double> level(sys.dim(), 1.0);
    if (c.p.has("history")) {
        const auto& h = c.p.raw("history");
        require(h.is_array() && h.size() == sys.dim(), ErrorKind::config, "history must list one level per channel");
        for (std::size_t i = 0; i < sys.dim(); ++i) level[i] = h[i].get<double>();
    }
    c.p.finish();
    auto hist = SampledSignal::over(-sys.max_delay(), 0.0, dt, sys.dim(), false);
    for (std::size_t ch = 0; ch < sys.dim(); ++ch)
        for (std::size_t k = 0; k < hist.count(); ++k) hist.sample(ch, k) = level[ch];
    const auto out = simulate_linear(sys, hist, T, dt);
    std::vector<double> t, sup;
    for (std::size_t k = 0; k < out.count(); ++k) {
        double s = 0;
        for (std::size_t ch = 0; ch < sys.dim(); ++ch) s = std::max(s, std::abs(out.sample(ch, k)));
        t.push_back(out.time(k));
        sup.push_back(s);
    }
    c.scalar("final_sup", sup.back());
    c.scalar("max_sup", *std::max_element(sup.begin(), sup.end()));
    if (sup.size() >= 8 && sup.front() > 0) {
        const auto fit = estimate_decay(t, sup);
        c.scalar("decay_rate", fit.nu);
        c.scalar("fit_residual", fit.residual);
    }
    c.out.file("trajectory.csv", [&](const std::string& path) { out.write_csv(path); });
    c.out.text("trajectory.svg", render_svg({"delay simulation", "t", "max |x|", true, {{"sup", t, sup}}, {}}));
    c.res.status = "pass";
}

RootRectangle rect_from(Params& p) {
    RootRectangle r;
    r.re_min = p.number("re_min", r.re_min);
    r.re_max = p.number("re_max", r.re_max);
    r.im_max = p.positive("im_max", r.im_max);
    require(r.re_min < r.re_max, ErrorKind::config, "re_min < re_max violated");
    return r;
}

void delay_roots(Ctx& c) {
    const auto sys = delay_system_from(c.p);
    const auto rect = rect_from(c.p);
    c.p.finish();
    const auto rep = rightmost_roots(sys, rect);
    c.scalar("rightmost_real", rep.rightmost_real());
    c.scalar("roots", double(rep.roots.size()));
    c.scalar("winding_total", double(rep.winding_total));
    c.scalar("residual", rep.residual);
    if (!rep.note.empty()) c.note("search", rep.note);
    std::string csv = "re,im\n";
    for (const auto& z : rep.roots) csv += format_number(z.real()) + "," + format_number(z.imag()) + "\n";
    c.out.text("roots.csv", csv);
    c.res.status = rep.complete ? "pass" : "inconclusive";
}

void delay_sweep(Ctx& c) {
    const auto sys = delay_system_from(c.p);
    SweepOptions so;
    so.rect = rect_from(c.p);
    const double radius = c.p.positive("radius", 0.1);
    so.samples = int(c.p.count("samples", 32, 1, 100000));
    so.seed = c.cfg.seed;
    so.threads = 1;
    c.p.finish();
    const auto rep = robustness_sweep(sys, radius, so);
    c.scalar("worst_rightmost", rep.worst_rightmost);
    c.scalar("rho_hat_0_lower", rep.rho0_lower);
    c.scalar("all_stable", rep.all_stable ? 1 : 0);
    c.scalar("robust_by_rho0", rep.robust_by_rho0 ? 1 : 0);
    std::string csv = "sample,rightmost";
    for (std::size_t i = 0; i < sys.dim(); ++i) csv += ",r" + std::to_string(i + 1);
    csv += "\n";
    for (std::size_t k = 0; k < rep.samples.size(); ++k) {
        csv += std::to_string(k) + "," + format_number(rep.samples[k].rightmost);
        for (double r : rep.samples[k].r) csv += "," + format_number(r);
        csv += "\n";
    }
    c.out.text("sweep.csv", csv);
    c.res.status = rep.complete ? "pass" : "inconclusive";
}

GridState initial_from(Params& p, std::size_t n) {
    const std::size_t cells = p.count("cells", 200, 4, 1000000);
    if (p.has("initial_csv")) return GridState::read_csv(p.raw("initial_csv").get<std::string>());
    const double amp = p.number("amplitude", 0.01);
    const double center = p.number("center", 0.5);
    const double width = p.positive("width", 0.3);
    auto u0 = GridState::zeros(n, cells);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= cells; ++j) {
            const double y = (u0.x(j) - center) / width;
            u0.u[i][j] = std::abs(y) < 1 ? amp * std::pow(1 - y * y, 4) : 0.0;
        }
    return u0;
}

void pde_sim(Ctx& c) {
    require(c.p.has("system"), ErrorKind::config, "pde-sim needs parameter 'system'");
    const auto& s = c.p.raw("system");
    const auto sys = s.is_string() ? read_hyperbolic_system(s.get<std::string>()) : parse_hyperbolic_system(s.dump());
    const auto u0 = initial_from(c.p, sys.dim());
    const double T = c.p.positive("T", 5.0);
    SolveOptions opts;
    opts.scheme = parse_scheme(c.p.text("scheme", "characteristics"));
    opts.cfl = c.p.positive("cfl", 1.0);
    opts.snapshot_every = c.p.number("snapshot_every", 0.0);
    if (c.p.has("norms")) {
        opts.norms.clear();
        for (const auto& v : c.p.raw("norms")) opts.norms.push_back(parse_norm_request(v.get<std::string>()));
    }
    c.p.finish();
    const auto traj = solve_forward(sys, u0, T, opts);
    for (std::size_t i = 0; i < traj.norm_ids.size(); ++i) {
        const auto& series = traj.norm_series[i];
        c.scalar(traj.norm_ids[i] + "_initial", series.front());
        c.scalar(traj.norm_ids[i] + "_final", series.back());
    }
    if (!traj.norm_series.empty() && traj.norm_series[0].front() > 0) {
        try {
            const auto fit = estimate_decay(traj.times, traj.norm_series[0]);
            c.scalar("decay_rate", fit.nu);
            c.scalar("fit_residual", fit.residual);
        } catch (const Error& e) {
            c.note("decay_fit", e.what());
        }
    }
    c.out.file("norms.csv", [&](const std::string& path) { traj.write_norms_csv(path); });
    c.out.file("final.csv", [&](const std::string& path) { traj.snapshots.back().write_csv(path); });
    c.out.file("boundary.csv", [&](const std::string& path) { traj.boundary_signal().write_csv(path); });
    PlotSpec plot{"norm history", "t", "norm", true, {}, {}};
    for (std::size_t i = 0; i < traj.norm_ids.size(); ++i)
        plot.series.push_back({traj.norm_ids[i], traj.times, traj.norm_series[i]});
    c.out.text("norms.svg", render_svg(plot));
    c.res.status = "pass";
}

void timevarying(Ctx& c) {
    const auto p = parse_pnorm(c.p.text("p", "2"));
    const double T = c.p.positive("T", 20.0);
    const double mod = c.p.number("modulation", 0.01);
    const double k = c.p.number("k", 0.8);
    const double q = c.p.number("quadratic", 0.0);
    const auto cells = c.p.count("cells", 400, 8, 100000);
    c.p.finish();
    TimeVaryingLinearSystem sys;
    sys.n = 2;
    sys.rest_speeds = {1.0, 1.5};
    sys.A = [mod](double t, double x) {
        return std::vector<double>{1.0 + mod * std::sin(t + x), 1.5 * (1 + mod * std::cos(2 * t))};
    };
    sys.K = [k](double) { return RealMatrix(2, {0.0, k, k, 0.0}); };
    if (q != 0.0)
        sys.Q = [q](double, double, const std::vector<double>& v) {
            return std::vector<double>{q * v[0] * v[1], -q * v[1] * v[1]};
        };
    auto v0 = GridState::zeros(2, cells);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j <= cells; ++j) {
            const double y = (v0.x(j) - 0.5) / (0.3 + 0.1 * double(i));
            v0.u[i][j] = std::abs(y) < 1 ? 0.01 * std::pow(1 - y * y, 4) : 0.0;
        }
    const auto res = simulate_timevarying(sys, v0, T, p);
    c.scalar("k_hat", res.hypotheses.k_hat);
    c.scalar("a_deviation", res.hypotheses.a_deviation);
    c.scalar("hypotheses_met", res.hypotheses.met ? 1 : 0);
    c.scalar("decay_rate", res.fit.nu);
    c.scalar("fit_residual", res.fit.residual);
    c.note("verdict", res.verdict);
    c.out.file("norms.csv", [&](const std::string& path) { res.trajectory.write_norms_csv(path); });
    const double resid_tol = c.tolerance("fit_residual", 0.1);
    if (res.verdict == "decay" || res.verdict == "zero solution")
        c.res.status = res.fit.residual <= resid_tol ? "pass" : "inconclusive";
    else if (res.verdict == "no decay")
        c.res.status = res.hypotheses.met ? "fail" : "inconclusive";
    else
        c.res.status = "inconclusive";
}

void counterexample(Ctx& c) {
    CounterexampleParams cp;
    cp.T = c.p.positive("T", cp.T);
    cp.a = c.p.positive("a", cp.a);
    cp.xi = c.p.positive("xi", cp.xi);
    cp.eta = c.p.positive("eta", cp.eta);
    cp.speed1 = c.p.positive("speed1", cp.speed1);
    cp.speed2 = c.p.positive("speed2", cp.speed2);
    const std::string eps = c.p.text("eps", "auto");
    if (eps != "auto") {
        char* end = nullptr;
        cp.eps_request = std::strtod(eps.c_str(), &end);
        require(end && *end == '\0' && cp.eps_request > 0, ErrorKind::config, "eps must be 'auto' or a positive number");
    }
    cp.m = int(c.p.count("m", 1, 1, 100));
    const std::string cells_text = c.p.text("cells", "auto");
    std::size_t cells = 0;
    if (cells_text != "auto") cells = c.p.count("cells", 0, 16, 100000);
    const bool pde = c.p.flag("pde", true);
    c.p.finish();

    const auto cfg = build_config(cp);
    c.scalar("eps", cfg.eps);
    c.scalar("c", cfg.c);
    c.scalar("lattice_gap", cfg.lattice_gap);
    c.scalar("rho_hat_2", cfg.rho2);

    CounterexampleRun run;
    bool certified = cp.m == 1;
    if (certified) {
        run = run_certificate(cfg);
    } else {
        run.config = cfg;
        run.seeds = seed_points(cfg);
        run.st = st_recursion(run.seeds, cp.a, cp.xi, cp.eta);
        run.tree = build_time_tree(cfg, run.st);
        run.distinct = verify_distinct(run.tree, cfg.eps);
        require(run.distinct.pass, ErrorKind::numeric, "node times collide: words " + run.distinct.colliding_a +
                                                           " and " + run.distinct.colliding_b);
        run.dv = dv_recursion(run.tree, cfg);
        run.trace = synthesize_trace(run.tree, cfg);
        c.note("certificate", "growth certificate is computed for m = 1 only");
    }
    c.scalar("nodes", double(run.tree.size()));
    c.scalar("window_gap", run.distinct.window_gap);
    c.scalar("max_dv_ratio", run.dv.max_ratio);
    if (certified) {
        const auto& k = run.certificate;
        c.scalar("initial_c1", k.initial_c1);
        c.scalar("peak_c1", k.peak_c1);
        c.scalar("deriv_at_T", k.deriv_at_T);
        c.scalar("mismatch", k.mismatch);
        c.scalar("amplification", k.amplification);
        c.scalar("theoretical_floor", k.theoretical_floor);
        c.out.text("certificate.json", k.to_json() + "\n");
    }

    c.out.file("tree.csv", [&](const std::string& path) { run.tree.write_csv(path); });
    const double dt = std::min(run.trace.value_width() / 16, cfg.r2 / 4);
    c.out.file("trace.csv", [&](const std::string& path) { run.trace.sample(dt).write_csv(path); });
    if (cells == 0) cells = std::max<std::size_t>(1000, resolving_cells(cfg, run.trace, 8));
    c.scalar("cells", double(cells));
    const auto init = backward_initial_data(cfg, run.trace, cells);
    c.scalar("u0_c1", init.grid_c1);
    c.scalar("compatibility_residual", init.compatibility.max_residual);
    c.out.file("u0.csv", [&](const std::string& path) { init.u0.write_csv(path); });

    if (c.out.on()) {
        // characteristic diagram: each edge is a segment from (0, child time) to (1, parent time)
        const double nan = std::numeric_limits<double>::quiet_NaN();
        Series fam1{"family 1", {}, {}}, fam2{"family 2", {}, {}};
        for (const auto& n : run.tree.nodes) {
            if (n.parent < 0 || n.depth > 8) continue;
            const auto& parent = run.tree.nodes[std::size_t(n.parent)];
            auto& s = n.word.back() == '1' ? fam1 : fam2;
            s.x.insert(s.x.end(), {0.0, 1.0, 1.0});
            s.y.insert(s.y.end(), {n.time, parent.time, nan});
        }
        PlotSpec diag{"characteristics through the node times", "x", "t", false, {fam1, fam2}, {}};
        c.out.text("characteristics.svg", render_svg(diag));
    }

    if (pde) {
        auto opts = aligned_solve_options(cfg, cells);
        opts.norms = {parse_norm_request("c0"), parse_norm_request("c1")};
        opts.snapshot_every = cfg.r1 / 50;
        const auto traj = solve_forward(cfg.system(), init.u0, cp.T, opts);
        const auto& c1 = traj.series("c1");
        c.scalar("pde_c1_initial", c1.front());
        c.scalar("pde_c1_max", *std::max_element(c1.begin(), c1.end()));
        c.scalar("pde_c1_final", c1.back());
        c.out.file("trajectory.csv", [&](const std::string& path) { traj.write_norms_csv(path); });
        PlotSpec growth{"C1 norm along the trajectory", "t", "norm", true,
                        {{"grid c1", traj.times, c1}, {"grid c0", traj.times, traj.series("c0")}}, {cp.T}};
        if (certified) {
            const std::vector<double> span{0.0, cp.T};
            growth.series.push_back({"initial c1 (exact)", span, {run.certificate.initial_c1, run.certificate.initial_c1}});
            growth.series.push_back({"certified bound at T", span, {run.certificate.peak_c1, run.certificate.peak_c1}});
        }
        c.note("grid_norms", "grid norms do not resolve derivative bumps narrower than a cell; the certificate "
                             "values are evaluated exactly");
        c.out.text("growth.svg", render_svg(growth));
    }
    c.res.status = certified ? (run.certificate.pass ? "pass" : "fail") : "inconclusive";
}

void accept(Ctx& c) {
    AcceptanceOptions opts;
    if (c.p.has("only"))
        for (const auto& v : c.p.raw("only")) opts.only.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    c.p.finish();
    const auto results = run_acceptance(opts);
    bool all = true;
    std::string report;
    for (const auto& r : results) {
        all = all && r.pass;
        c.scalar("criterion_" + r.id, r.pass ? 1 : 0);
        c.note("criterion_" + r.id, r.detail);
        report += format_result(r) + "\n";
    }
    c.out.text("acceptance.txt", report);
    c.res.status = all ? "pass" : "fail";
}

const std::map<std::string, void (*)(Ctx&)>& registry() {
    static const std::map<std::string, void (*)(Ctx&)> r{
        {"rho-paper-matrix", rho_paper_matrix},
        {"rho", rho},
        {"delay-sim", delay_sim},
        {"delay-roots", delay_roots},
        {"delay-sweep", delay_sweep},
        {"pde-sim", pde_sim},
        {"timevarying", timevarying},
        {"counterexample", counterexample},
        {"accept", accept},
    };
    return r;
}

json config_to_json(const RunConfig& cfg, const json& params) {
    json j;
    j["id"] = cfg.id;
    j["experiment"] = cfg.experiment;
    j["params"] = params;
    j["out_dir"] = cfg.out_dir;
    j["seed"] = cfg.seed;
    j["tolerances"] = parse_json(cfg.tolerances, "tolerances");
    return j;
}

RunConfig config_from_json(const json& j) {
    require(j.is_object(), ErrorKind::config, "run configuration must be a JSON object");
    static const std::set<std::string> keys{"id", "experiment", "params", "out_dir", "seed", "tolerances"};
    for (const auto& [k, v] : j.items())
        require(keys.count(k) > 0, ErrorKind::config, "unknown run configuration field '" + k + "'");
    RunConfig cfg;
    require(j.contains("experiment") && j["experiment"].is_string(), ErrorKind::config,
            "run configuration needs a string 'experiment'");
    cfg.experiment = j["experiment"].get<std::string>();
    const auto presets = preset_names();
    if (registry().count(cfg.experiment) == 0 &&
        std::find(presets.begin(), presets.end(), cfg.experiment) != presets.end()) {
        // presets can be named directly
        const auto base = preset(cfg.experiment);
        cfg.experiment = base.experiment;
        cfg.params = base.params;
        cfg.id = base.id;
    }
    if (j.contains("id")) cfg.id = j["id"].get<std::string>();
    if (cfg.id.empty()) cfg.id = j["experiment"].get<std::string>();
    if (j.contains("params")) {
        require(j["params"].is_object(), ErrorKind::config, "'params' must be an object");
        auto merged = parse_json(cfg.params, "params");
        for (const auto& [k, v] : j["params"].items()) merged[k] = v;
        cfg.params = merged.dump();
    }
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("seed")) {
        require(j["seed"].is_number_unsigned(), ErrorKind::config, "'seed' must be a non-negative integer");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("tolerances")) {
        require(j["tolerances"].is_object(), ErrorKind::config, "'tolerances' must be an object");
        cfg.tolerances = j["tolerances"].dump();
    }
    return cfg;
}

json result_to_json(const ExperimentResult& r) {
    json j;
    j["id"] = r.id;
    j["experiment"] = r.experiment;
    j["status"] = r.status;
    json s = json::object();
    for (const auto& [k, v] : r.scalars) s[k] = std::isfinite(v) ? json(v) : json(format_number(v));
    j["scalars"] = s;
    json n = json::object();
    for (const auto& [k, v] : r.notes) n[k] = v;
    j["notes"] = n;
    j["artifacts"] = r.artifacts;
    j["wall_seconds"] = r.wall_seconds;
    j["config"] = r.config_json.empty() ? json(nullptr) : parse_json(r.config_json, "config");
    if (r.error_code != 0) j["error"] = {{"code", r.error_code}, {"message", r.error}};
    return j;
}

ExperimentResult execute(const RunConfig& cfg) {
    ExperimentResult res;
    res.id = cfg.id.empty() ? cfg.experiment : cfg.id;
    res.experiment = cfg.experiment;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const auto it = registry().find(cfg.experiment);
        if (it == registry().end()) fail(ErrorKind::config, "unknown experiment id '" + cfg.experiment + "'");
        Params params(parse_json(cfg.params, "params"), cfg.experiment);
        const auto tol = parse_json(cfg.tolerances, "tolerances");
        require(tol.is_object(), ErrorKind::config, "'tolerances' must be an object");
        if (!cfg.out_dir.empty()) {
            try {
                ensure_directory(cfg.out_dir);
            } catch (const Error&) {
                throw;
            } catch (const std::exception& e) {
                fail(ErrorKind::io, "cannot create output directory " + cfg.out_dir + ": " + e.what());
            }
        }
        Ctx ctx{cfg, params, tol, res, Out{cfg.out_dir, &res}};
        it->second(ctx);
        res.config_json = config_to_json(cfg, params.resolved()).dump();
    } catch (const Error& e) {
        res.status = "error";
        res.error_code = exit_code_for(int(e.kind()));
        res.error = std::string(error_kind_name(e.kind())) + " error: " + e.what();
    } catch (const std::exception& e) {
        res.status = "error";
        res.error_code = 1;
        res.error = e.what();
    }
    if (res.config_json.empty()) {
        try {
            res.config_json = config_to_json(cfg, parse_json(cfg.params, "params")).dump();
        } catch (const Error&) {
        }
    }
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

}  // namespace

double ExperimentResult::scalar(const std::string& name) const {
    for (const auto& [k, v] : scalars)
        if (k == name) return v;
    return std::numeric_limits<double>::quiet_NaN();
}

std::vector<RunConfig> parse_run_configs(const std::string& json_text) {
    auto doc = parse_json(json_text, "run configuration");
    if (doc.is_object() && doc.contains("runs")) {
        require(doc.size() == 1, ErrorKind::config, "a 'runs' document holds only the 'runs' array");
        doc = doc["runs"];
    }
    std::vector<RunConfig> out;
    if (doc.is_array()) {
        for (const auto& j : doc) out.push_back(config_from_json(j));
    } else {
        out.push_back(config_from_json(doc));
    }
    return out;
}

RunConfig parse_run_config(const std::string& json_text) {
    const auto all = parse_run_configs(json_text);
    require(all.size() == 1, ErrorKind::config, "expected exactly one run configuration");
    return all.front();
}

std::string run_config_json(const RunConfig& cfg) {
    return config_to_json(cfg, parse_json(cfg.params, "params")).dump(2);
}

RunConfig preset(const std::string& name) {
    RunConfig cfg;
    cfg.id = name;
    if (name == "rho-paper-matrix") {
        cfg.experiment = name;
    } else if (name == "counterexample-default") {
        cfg.experiment = "counterexample";
    } else if (name == "lemma-desk-check") {
        cfg.experiment = "timevarying";
        cfg.params = R"({"quadratic": 0.05})";
    } else if (registry().count(name)) {
        cfg.experiment = name;
    } else {
        fail(ErrorKind::config, "unknown experiment id '" + name + "'");
    }
    return cfg;
}

std::vector<std::string> preset_names() { return {"rho-paper-matrix", "counterexample-default", "lemma-desk-check"}; }

std::vector<std::string> experiment_names() {
    std::vector<std::string> out;
    for (const auto& [k, v] : registry()) out.push_back(k);
    return out;
}

int RunSummary::exit_code() const {
    int code = 0;
    for (const auto& e : entries) {
        if (e.status == "error") return e.error_code != 0 ? e.error_code : 1;
        if (e.status == "fail") code = 1;
    }
    return code;
}

std::string RunSummary::to_json() const {
    json j;
    j["entries"] = json::array();
    for (const auto& e : entries) j["entries"].push_back(result_to_json(e));
    j["exit_code"] = exit_code();
    return j.dump(2);
}

std::string RunSummary::to_table() const {
    std::ostringstream o;
    o << "id | experiment | status | key values | seconds\n";
    for (const auto& e : entries) {
        o << e.id << " | " << e.experiment << " | " << e.status << " | ";
        if (e.status == "error") {
            o << e.error;
        } else {
            for (std::size_t k = 0; k < e.scalars.size() && k < 4; ++k)
                o << (k ? ", " : "") << e.scalars[k].first << "=" << format_number(e.scalars[k].second);
        }
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", e.wall_seconds);
        o << " | " << buf << "\n";
    }
    return o.str();
}

void RunSummary::write(const std::string& dir) const {
    ensure_directory(dir);
    write_text((std::filesystem::path(dir) / "summary.json").string(), to_json() + "\n");
    // no wall times here, so identical runs give identical files
    std::string csv = "id,experiment,status,name,value\n";
    for (const auto& e : entries)
        for (const auto& [k, v] : e.scalars)
            csv += e.id + "," + e.experiment + "," + e.status + "," + k + "," + format_number(v) + "\n";
    write_text((std::filesystem::path(dir) / "summary.csv").string(), csv);
}

RunSummary run(const RunConfig& cfg) {
    RunSummary s;
    s.entries.push_back(execute(cfg));
    return s;
}

RunSummary sweep(const std::vector<RunConfig>& cfgs, unsigned threads) {
    std::set<std::string> dirs;
    for (const auto& c : cfgs) {
        if (c.out_dir.empty()) continue;
        auto path = std::filesystem::path(c.out_dir).lexically_normal();
        if (!path.has_filename()) path = path.parent_path();
        const auto norm = path.string();
        require(dirs.insert(norm).second, ErrorKind::config, "duplicate output directory " + c.out_dir + " in sweep");
    }
    RunSummary s;
    s.entries.resize(cfgs.size());
    const unsigned cap = threads == 0 ? thread_limit() : std::min(threads, thread_limit());
    parallel_for(cfgs.size(), cap, [&](std::size_t i) { s.entries[i] = execute(cfgs[i]); });
    return s;
}

}  // namespace hyperstab
