#include "hyperstab/hypersolver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "hyperstab/errors.hpp"
#include "hyperstab/io.hpp"

namespace hyperstab {

double Speed::operator()(double u) const {
    switch (kind) {
        case Kind::constant: return a;
        case Kind::inverse_shift: return 1.0 / (a + u);
        case Kind::linear: return a + b * u;
    }
    return a;
}

bool Speed::in_domain(double u) const {
    switch (kind) {
        case Kind::constant: return std::isfinite(u);
        case Kind::inverse_shift: return u > -a / 2;
        case Kind::linear: return a + b * u >= a / 2;
    }
    return true;
}

void HyperbolicSystem::validate() const {
    require(!speeds.empty(), ErrorKind::input, "hyperbolic system: no components");
    require(static_cast<bool>(boundary), ErrorKind::input, "hyperbolic system: missing boundary map");
    for (std::size_t i = 0; i < speeds.size(); ++i) {
        const double s = speeds[i].at_rest();
        require(std::isfinite(s) && s > 0.0, ErrorKind::input, "hyperbolic system: speeds at rest must be positive");
        for (std::size_t j = 0; j < i; ++j)
            require(speeds[j].at_rest() != s, ErrorKind::input, "hyperbolic system: speeds at rest must be distinct");
    }
    const auto g0 = boundary(std::vector<double>(speeds.size(), 0.0));
    for (double v : g0) require(v == 0.0, ErrorKind::input, "hyperbolic system: boundary map must fix 0");
}

HyperbolicSystem HyperbolicSystem::linear(std::vector<Speed> speeds, const RealMatrix& G) {
    require(G.dim() == speeds.size(), ErrorKind::input, "hyperbolic system: boundary matrix size mismatch");
    hyperstab::validate(G, "boundary matrix");
    HyperbolicSystem sys;
    sys.speeds = std::move(speeds);
    sys.boundary = [G](const std::vector<double>& u) { return mat_vec(G, u); };
    sys.boundary_jacobian = [G](const std::vector<double>&) { return G; };
    return sys;
}

HyperbolicSystem parse_hyperbolic_system(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const std::exception& e) {
        fail(ErrorKind::input, std::string("hyperbolic system document: ") + e.what());
    }
    require(doc.is_object() && doc.contains("speeds") && doc.contains("G"), ErrorKind::input,
            "hyperbolic system document needs fields 'speeds' and 'G'");
    std::vector<Speed> speeds;
    for (const auto& s : doc["speeds"]) {
        const std::string kind = s.value("kind", "constant");
        const double a = s.value("a", 1.0), b = s.value("b", 0.0);
        if (kind == "constant") speeds.push_back(Speed::constant(a));
        else if (kind == "inverse_shift") speeds.push_back(Speed::inverse_shift(a));
        else if (kind == "linear") speeds.push_back(Speed::linear(a, b));
        else fail(ErrorKind::input, "unknown speed kind '" + kind + "'");
    }
    const auto& g = doc["G"];
    RealMatrix G;
    if (g.is_object()) {
        G = parse_matrix(g.dump());
    } else {
        std::vector<double> e;
        for (const auto& row : g)
            for (const auto& v : row) e.push_back(v.get<double>());
        G = RealMatrix(speeds.size(), std::move(e));
    }
    auto sys = HyperbolicSystem::linear(std::move(speeds), G);
    sys.validate();
    return sys;
}

HyperbolicSystem read_hyperbolic_system(const std::string& path) { return parse_hyperbolic_system(read_text(path)); }

GridState GridState::zeros(std::size_t n, std::size_t cells) {
    require(n >= 1 && cells >= 1, ErrorKind::input, "grid: need n >= 1 and cells >= 1");
    GridState s;
    s.cells = cells;
    s.u.assign(n, std::vector<double>(cells + 1, 0.0));
    return s;
}

void GridState::write_csv(const std::string& path) const {
    CsvTable t;
    t.header.push_back("x");
    for (std::size_t i = 0; i < dim(); ++i) t.header.push_back("u" + std::to_string(i + 1));
    for (std::size_t j = 0; j <= cells; ++j) {
        std::vector<double> row{x(j)};
        for (std::size_t i = 0; i < dim(); ++i) row.push_back(u[i][j]);
        t.rows.push_back(std::move(row));
    }
    hyperstab::write_csv(path, t);
}

GridState GridState::read_csv(const std::string& path) {
    const auto t = hyperstab::read_csv(path);
    require(t.header.size() >= 2 && t.header[0] == "x", ErrorKind::input, path + ": header must be x,u1..un");
    require(t.rows.size() >= 2, ErrorKind::input, path + ": need at least two nodes");
    const std::size_t cells = t.rows.size() - 1;
    auto s = zeros(t.header.size() - 1, cells);
    for (std::size_t j = 0; j <= cells; ++j) {
        require(std::abs(t.rows[j][0] - double(j) / double(cells)) <= 1e-9, ErrorKind::input,
                path + ": nodes must be uniform on [0,1]");
        for (std::size_t i = 0; i < s.dim(); ++i) s.u[i][j] = t.rows[j][i + 1];
    }
    return s;
}

std::string NormRequest::id() const {
    switch (kind) {
        case Kind::c0: return "c0";
        case Kind::c1: return "c1";
        case Kind::w1p: return "w1p:" + p.label();
        case Kind::w2p: return "w2p:" + p.label();
    }
    return "";
}

NormRequest parse_norm_request(const std::string& text) {
    if (text == "c0") return {NormRequest::Kind::c0, PNorm::finite(2)};
    if (text == "c1") return {NormRequest::Kind::c1, PNorm::finite(2)};
    const auto colon = text.find(':');
    require(colon != std::string::npos, ErrorKind::input, "unknown norm '" + text + "'");
    const std::string head = text.substr(0, colon);
    const PNorm p = parse_pnorm(text.substr(colon + 1));
    if (head == "w1p") return {NormRequest::Kind::w1p, p};
    if (head == "w2p") return {NormRequest::Kind::w2p, p};
    fail(ErrorKind::input, "unknown norm '" + text + "'");
}

std::vector<NormRequest> parse_norm_list(const std::string& comma_separated) {
    std::vector<NormRequest> out;
    std::stringstream ss(comma_separated);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(parse_norm_request(item));
    return out;
}

namespace {

// pointwise max over components of |u|, |D u|, |D^2 u|
struct Channels {
    std::vector<double> value, first, second;
};

Channels channels(const GridState& s, bool need_second) {
    const std::size_t m = s.cells;
    const double h = s.spacing();
    Channels c;
    c.value.assign(m + 1, 0.0);
    c.first.assign(m + 1, 0.0);
    if (need_second) c.second.assign(m + 1, 0.0);
    for (const auto& u : s.u) {
        for (std::size_t j = 0; j <= m; ++j) {
            c.value[j] = std::max(c.value[j], std::abs(u[j]));
            double d1;
            if (m < 2) d1 = (u[1] - u[0]) / h;
            else if (j == 0) d1 = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * h);
            else if (j == m) d1 = (3 * u[m] - 4 * u[m - 1] + u[m - 2]) / (2 * h);
            else d1 = (u[j + 1] - u[j - 1]) / (2 * h);
            c.first[j] = std::max(c.first[j], std::abs(d1));
            if (need_second) {
                double d2;
                if (j == 0) d2 = (2 * u[0] - 5 * u[1] + 4 * u[2] - u[3]) / (h * h);
                else if (j == m) d2 = (2 * u[m] - 5 * u[m - 1] + 4 * u[m - 2] - u[m - 3]) / (h * h);
                else d2 = (u[j + 1] - 2 * u[j] + u[j - 1]) / (h * h);
                c.second[j] = std::max(c.second[j], std::abs(d2));
            }
        }
    }
    return c;
}

double lp_integral(const std::vector<double>& f, double h, double p) {
    double s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double w = (j == 0 || j + 1 == f.size()) ? 0.5 : 1.0;
        s += w * std::pow(f[j], p);
    }
    return s * h;
}

double maxof(const std::vector<double>& f) { return f.empty() ? 0.0 : *std::max_element(f.begin(), f.end()); }

}  // namespace

double discrete_norm(const GridState& s, const NormRequest& req) {
    require(s.cells >= 4, ErrorKind::input, "discrete norms need at least 4 cells");
    const bool second = req.kind == NormRequest::Kind::w2p;
    const Channels c = channels(s, second);
    switch (req.kind) {
        case NormRequest::Kind::c0: return maxof(c.value);
        case NormRequest::Kind::c1: return std::max(maxof(c.value), maxof(c.first));
        case NormRequest::Kind::w1p:
        case NormRequest::Kind::w2p: {
            if (req.p.infinite) {
                double m = std::max(maxof(c.value), maxof(c.first));
                if (second) m = std::max(m, maxof(c.second));
                return m;
            }
            const double h = s.spacing();
            double total = lp_integral(c.value, h, req.p.p) + lp_integral(c.first, h, req.p.p);
            if (second) total += lp_integral(c.second, h, req.p.p);
            return std::pow(total, 1.0 / req.p.p);
        }
    }
    return 0.0;
}

std::vector<double> discrete_norms(const GridState& s, const std::vector<NormRequest>& reqs) {
    std::vector<double> out;
    out.reserve(reqs.size());
    for (const auto& r : reqs) out.push_back(discrete_norm(s, r));
    return out;
}

CompatibilityReport check_compatibility(const HyperbolicSystem& sys, const GridState& u0, int order, double tol) {
    require(order >= 0, ErrorKind::input, "compatibility order must be >= 0");
    if (order > 1) fail(ErrorKind::unsupported, "compatibility conditions of order > 1 are out of scope");
    const std::size_t n = sys.dim(), m = u0.cells;
    require(u0.dim() == n, ErrorKind::input, "compatibility: dimension mismatch");
    require(m >= 2, ErrorKind::input, "compatibility: need at least 2 cells");
    CompatibilityReport rep;
    rep.order = order;
    rep.tol = tol;
    std::vector<double> left(n), right(n);
    for (std::size_t i = 0; i < n; ++i) {
        left[i] = u0.u[i][0];
        right[i] = u0.u[i][m];
    }
    const auto g = sys.boundary(right);
    for (std::size_t i = 0; i < n; ++i) {
        rep.names.push_back("order0[" + std::to_string(i + 1) + "]");
        rep.residuals.push_back(std::abs(left[i] - g[i]));
    }
    if (order >= 1) {
        require(static_cast<bool>(sys.boundary_jacobian), ErrorKind::input,
                "compatibility: order 1 needs the boundary Jacobian");
        const double h = u0.spacing();
        std::vector<double> flux_left(n), flux_right(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& u = u0.u[i];
            const double d0 = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * h);
            const double d1 = (3 * u[m] - 4 * u[m - 1] + u[m - 2]) / (2 * h);
            flux_left[i] = sys.speeds[i](u[0]) * d0;
            flux_right[i] = sys.speeds[i](u[m]) * d1;
        }
        const auto rhs = mat_vec(sys.boundary_jacobian(right), flux_right);
        for (std::size_t i = 0; i < n; ++i) {
            rep.names.push_back("order1[" + std::to_string(i + 1) + "]");
            rep.residuals.push_back(std::abs(flux_left[i] - rhs[i]));
        }
    }
    for (double r : rep.residuals) rep.max_residual = std::max(rep.max_residual, r);
    rep.pass = rep.max_residual <= tol;
    return rep;
}

Scheme parse_scheme(const std::string& text) {
    if (text == "upwind") return Scheme::upwind;
    if (text == "characteristics") return Scheme::characteristics;
    fail(ErrorKind::input, "unknown scheme '" + text + "' (upwind|characteristics)");
}

const std::vector<double>& Trajectory::series(const std::string& id) const {
    for (std::size_t k = 0; k < norm_ids.size(); ++k)
        if (norm_ids[k] == id) return norm_series[k];
    fail(ErrorKind::input, "trajectory has no norm series '" + id + "'");
}

SampledSignal Trajectory::boundary_signal() const {
    require(boundary_times.size() >= 2, ErrorKind::input, "trajectory: boundary trace too short");
    SampledSignal s(boundary_times.front(), dt, boundary_times.size(), boundary_values.size(), false);
    for (std::size_t c = 0; c < boundary_values.size(); ++c)
        for (std::size_t k = 0; k < boundary_times.size(); ++k) s.sample(c, k) = boundary_values[c][k];
    return s;
}

void Trajectory::write_norms_csv(const std::string& path) const {
    CsvTable t;
    t.header.push_back("t");
    for (const auto& id : norm_ids) t.header.push_back(id);
    for (std::size_t k = 0; k < times.size(); ++k) {
        std::vector<double> row{times[k]};
        for (const auto& s : norm_series) row.push_back(s[k]);
        t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
}

namespace {

double lagrange4(const std::vector<double>& v, double u) {
    // u in sample-index units
    const std::size_t count = v.size();
    const double ur = std::round(u);
    if (std::abs(u - ur) <= 1e-9) return v[static_cast<std::size_t>(std::clamp(ur, 0.0, double(count - 1)))];
    if (count < 4) {
        const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(std::max(0.0, u)), count - 2);
        const double w = u - double(i);
        return (1 - w) * v[i] + w * v[i + 1];
    }
    const auto k = static_cast<std::ptrdiff_t>(std::floor(u));
    const std::size_t b = static_cast<std::size_t>(
        std::clamp<std::ptrdiff_t>(k - 1, 0, static_cast<std::ptrdiff_t>(count) - 4));
    const double x = u - double(b);
    return -(x - 1) * (x - 2) * (x - 3) / 6.0 * v[b] + x * (x - 2) * (x - 3) / 2.0 * v[b + 1] -
           x * (x - 1) * (x - 3) / 2.0 * v[b + 2] + x * (x - 1) * (x - 2) / 6.0 * v[b + 3];
}

// cubic in time through the last (up to) four boundary samples, which end at index `last`
double boundary_in_time(const std::vector<double>& hist, std::size_t last, double u) {
    const std::size_t first = last >= 3 ? last - 3 : 0;
    std::vector<double> window(hist.begin() + static_cast<std::ptrdiff_t>(first),
                               hist.begin() + static_cast<std::ptrdiff_t>(last) + 1);
    return lagrange4(window, u - double(first));
}

void check_domain(const HyperbolicSystem& sys, const GridState& s) {
    for (std::size_t i = 0; i < sys.dim(); ++i)
        for (std::size_t j = 0; j <= s.cells; ++j)
            if (!sys.speeds[i].in_domain(s.u[i][j]) || !std::isfinite(s.u[i][j]))
                fail(ErrorKind::dynamics, "solution left the speed domain: component " + std::to_string(i + 1) +
                                              " at x=" + format_number(s.x(j)) + ", t=" + format_number(s.t) +
                                              ", u=" + format_number(s.u[i][j]));
}

double max_speed(const HyperbolicSystem& sys, const GridState& s) {
    double m = 0.0;
    for (std::size_t i = 0; i < sys.dim(); ++i)
        for (double v : s.u[i]) m = std::max(m, sys.speeds[i](v));
    return m;
}

}  // namespace

Trajectory solve_forward(const HyperbolicSystem& sys, const GridState& u0, double T, const SolveOptions& opts) {
    sys.validate();
    const std::size_t n = sys.dim(), m = u0.cells;
    require(u0.dim() == n, ErrorKind::input, "solve_forward: initial data dimension mismatch");
    require(m >= 4, ErrorKind::input, "solve_forward: need at least 4 cells");
    require(T > 0.0 && std::isfinite(T), ErrorKind::input, "solve_forward: horizon must be positive");
    const double h = u0.spacing();
    check_domain(sys, u0);

    const NormRequest c1{NormRequest::Kind::c1, PNorm::finite(2)};
    const double initial_c1 = discrete_norm(u0, c1);
    if (opts.require_compatibility) {
        const double tol = opts.compatibility_tol >= 0 ? opts.compatibility_tol : 1e-8 + 10 * h * initial_c1;
        const auto rep = check_compatibility(sys, u0, 1, tol);
        require(rep.pass, ErrorKind::input,
                "solve_forward: initial data violates compatibility (max residual " +
                    format_number(rep.max_residual) + " > " + format_number(tol) + ")");
    }

    const double vmax = max_speed(sys, u0);
    double dt = opts.dt > 0 ? opts.dt : opts.cfl * h / vmax;
    const auto steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
    dt = T / double(steps);
    if (opts.scheme == Scheme::upwind)
        require(dt * vmax <= h * (1 + 1e-12), ErrorKind::config,
                "solve_forward: CFL violated (dt * max speed = " + format_number(dt * vmax) +
                    " > spacing " + format_number(h) + ")");
    else
        require(dt * vmax <= 1.0, ErrorKind::config, "solve_forward: dt * max speed must not exceed the domain length");

    Trajectory traj;
    traj.dt = dt;
    for (const auto& r : opts.norms) traj.norm_ids.push_back(r.id());
    traj.norm_series.resize(opts.norms.size());
    traj.boundary_values.assign(n, {});
    const std::size_t cadence =
        opts.snapshot_every > 0 ? std::max<std::size_t>(1, std::size_t(std::llround(opts.snapshot_every / dt))) : 1;

    GridState cur = u0;
    cur.t = 0.0;
    auto record = [&](const GridState& s) {
        traj.times.push_back(s.t);
        const auto vals = discrete_norms(s, opts.norms);
        for (std::size_t k = 0; k < vals.size(); ++k) traj.norm_series[k].push_back(vals[k]);
        if (opts.keep_snapshots) traj.snapshots.push_back(s);
    };
    auto record_boundary = [&](const GridState& s) {
        traj.boundary_times.push_back(s.t);
        for (std::size_t i = 0; i < n; ++i) traj.boundary_values[i].push_back(s.u[i][0]);
    };
    record(cur);
    record_boundary(cur);

    GridState next = cur;
    std::vector<double> right(n);
    for (std::size_t step = 1; step <= steps; ++step) {
        const double t_new = double(step) * dt;
        next.t = t_new;
        if (opts.scheme == Scheme::upwind) {
            const double ratio = dt / h;
            for (std::size_t i = 0; i < n; ++i) {
                const auto& u = cur.u[i];
                auto& w = next.u[i];
                for (std::size_t j = 1; j <= m; ++j) w[j] = u[j] - sys.speeds[i](u[j]) * ratio * (u[j] - u[j - 1]);
            }
            for (std::size_t i = 0; i < n; ++i) right[i] = next.u[i][m];
            const auto b = sys.boundary(right);
            for (std::size_t i = 0; i < n; ++i) next.u[i][0] = b[i];
        } else {
            // x = 1 first: its foot is interior, and it feeds the new boundary value
            auto trace_node = [&](std::size_t i, std::size_t j, bool boundary_ready) {
                const auto& u = cur.u[i];
                const double x = cur.x(j);
                double val = u[j];
                for (int it = 0; it < 8; ++it) {
                    const double lam = sys.speeds[i](val);
                    const double xf = x - lam * dt;
                    double nv;
                    if (xf >= 0.0) {
                        nv = lagrange4(u, xf / h);
                    } else {
                        if (!boundary_ready) fail(ErrorKind::numeric, "characteristic foot crossed the boundary early");
                        const double te = t_new - x / lam;
                        nv = boundary_in_time(traj.boundary_values[i], step, te / dt);
                    }
                    if (nv == val) break;
                    val = nv;
                    if (sys.speeds[i].kind == Speed::Kind::constant) break;
                }
                return val;
            };
            for (std::size_t i = 0; i < n; ++i) next.u[i][m] = trace_node(i, m, false);
            for (std::size_t i = 0; i < n; ++i) right[i] = next.u[i][m];
            const auto b = sys.boundary(right);
            for (std::size_t i = 0; i < n; ++i) {
                next.u[i][0] = b[i];
                traj.boundary_values[i].push_back(b[i]);
            }
            traj.boundary_times.push_back(t_new);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 1; j < m; ++j) next.u[i][j] = trace_node(i, j, true);
        }
        if (opts.scheme == Scheme::upwind) record_boundary(next);
        check_domain(sys, next);
        if (initial_c1 > 0.0) {
            const double now = discrete_norm(next, c1);
            if (now > opts.blowup_factor * initial_c1)
                fail(ErrorKind::dynamics, "loss of regularity: C1 norm " + format_number(now) + " exceeds " +
                                              format_number(opts.blowup_factor) + " x initial at t=" +
                                              format_number(t_new));
        }
        std::swap(cur, next);
        if (step % cadence == 0 || step == steps) record(cur);
    }
    if (!opts.keep_snapshots) traj.snapshots.push_back(cur);
    return traj;
}

DecayFit estimate_decay(const std::vector<double>& t, const std::vector<double>& norm, double t_begin, double t_end) {
    require(t.size() == norm.size(), ErrorKind::input, "estimate_decay: series length mismatch");
    DecayFit fit;
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < t_begin || t[k] > t_end) continue;
        if (!(norm[k] > 0.0) || !std::isfinite(norm[k])) {
            fit.trimmed = true;
            break;
        }
        xs.push_back(t[k]);
        ys.push_back(std::log(norm[k]));
    }
    require(xs.size() >= 8, ErrorKind::input,
            "estimate_decay: need at least 8 positive samples in the window (have " + std::to_string(xs.size()) + ")");
    const double nn = double(xs.size());
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) mx += xs[k] / nn, my += ys[k] / nn;
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxy += (xs[k] - mx) * (ys[k] - my);
    }
    const double slope = sxx > 0 ? sxy / sxx : 0.0;
    const double intercept = my - slope * mx;
    double ss = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double r = ys[k] - (intercept + slope * xs[k]);
        ss += r * r;
    }
    fit.nu = -slope;
    fit.prefactor = std::exp(intercept);
    fit.residual = std::sqrt(ss / nn);
    fit.points = xs.size();
    return fit;
}

TimeVaryingResult simulate_timevarying(const TimeVaryingLinearSystem& sys, const GridState& v0, double T, PNorm p,
                                       const TimeVaryingOptions& opts) {
    const std::size_t n = sys.n, m = v0.cells;
    require(n >= 1 && v0.dim() == n && sys.rest_speeds.size() == n, ErrorKind::input,
            "time-varying system: dimension mismatch");
    require(static_cast<bool>(sys.A) && static_cast<bool>(sys.K), ErrorKind::input,
            "time-varying system: A and K are required");
    require(m >= 4 && T > 0, ErrorKind::input, "time-varying system: need >= 4 cells and T > 0");
    const double h = v0.spacing();

    TimeVaryingResult res;
    auto& hyp = res.hypotheses;
    hyp.smallness_budget = opts.smallness_budget;
    const std::size_t nt = std::max<std::size_t>(200, std::size_t(T * 50)), nx = 50;
    const double fd = 1e-5;
    double amax = 0.0, amin = 1e300;
    for (std::size_t a = 0; a <= nt; ++a) {
        const double t = T * double(a) / double(nt);
        hyp.k_hat = std::max(hyp.k_hat, induced_norm(sys.K(t), p));
        RealMatrix dk(n);
        const auto kp = sys.K(t + fd), km = sys.K(std::max(0.0, t - fd));
        const double span = t + fd - std::max(0.0, t - fd);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) dk(i, j) = (kp(i, j) - km(i, j)) / span;
        hyp.k_prime = std::max(hyp.k_prime, induced_norm(dk, p));
        double dev0 = 0, devt = 0, devx = 0;
        for (std::size_t b = 0; b <= nx; ++b) {
            const double x = double(b) / double(nx);
            const auto av = sys.A(t, x);
            const auto at = sys.A(t + fd, x), atm = sys.A(std::max(0.0, t - fd), x);
            const auto ax = sys.A(t, std::min(1.0, x + fd)), axm = sys.A(t, std::max(0.0, x - fd));
            const double xs = std::min(1.0, x + fd) - std::max(0.0, x - fd);
            for (std::size_t i = 0; i < n; ++i) {
                amax = std::max(amax, av[i]);
                amin = std::min(amin, av[i]);
                dev0 = std::max(dev0, std::abs(av[i] - sys.rest_speeds[i]));
                devt = std::max(devt, std::abs(at[i] - atm[i]) / span);
                devx = std::max(devx, std::abs(ax[i] - axm[i]) / xs);
            }
        }
        hyp.a_deviation = std::max(hyp.a_deviation, dev0 + devt + devx);
    }
    require(amin > 0.0, ErrorKind::input, "time-varying system: A must stay positive");
    if (sys.Q) {
        std::vector<double> v(n);
        for (std::size_t a = 0; a <= 40; ++a)
            for (std::size_t b = 0; b <= 10; ++b)
                for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
                    for (std::size_t i = 0; i < n; ++i) v[i] = ((mask >> i) & 1) ? 1.0 : -1.0;
                    const auto q = sys.Q(T * a / 40.0, b / 10.0, v);
                    for (double qi : q) hyp.q_bound = std::max(hyp.q_bound, std::abs(qi));
                }
    }
    const NormRequest w1{NormRequest::Kind::w1p, p};
    hyp.initial_w1p = discrete_norm(v0, w1);
    hyp.met = hyp.k_hat < 1.0 && hyp.a_deviation + hyp.k_prime <= hyp.smallness_budget;

    auto steps = static_cast<std::size_t>(std::ceil(T / (opts.cfl * h / amax)));
    const double dt = T / double(steps);
    const std::size_t cadence = std::max<std::size_t>(1, std::size_t(std::llround(opts.snapshot_every / dt)));
    auto& traj = res.trajectory;
    traj.dt = dt;
    traj.norm_ids = {w1.id()};
    traj.norm_series.resize(1);
    traj.boundary_values.assign(n, {});

    GridState cur = v0, next = v0;
    cur.t = 0.0;
    auto record = [&](const GridState& s) {
        traj.times.push_back(s.t);
        traj.norm_series[0].push_back(discrete_norm(s, w1));
    };
    auto record_boundary = [&](const GridState& s) {
        traj.boundary_times.push_back(s.t);
        for (std::size_t i = 0; i < n; ++i) traj.boundary_values[i].push_back(s.u[i][0]);
    };
    record(cur);
    record_boundary(cur);
    std::vector<double> vj(n), right(n);
    for (std::size_t step = 1; step <= steps; ++step) {
        const double t = cur.t, t_new = double(step) * dt;
        for (std::size_t j = 1; j <= m; ++j) {
            const double x = cur.x(j);
            const auto a = sys.A(t, x);
            for (std::size_t i = 0; i < n; ++i) vj[i] = cur.u[i][j];
            std::vector<double> q;
            if (sys.Q) q = sys.Q(t, x, vj);
            for (std::size_t i = 0; i < n; ++i) {
                next.u[i][j] = cur.u[i][j] - a[i] * dt / h * (cur.u[i][j] - cur.u[i][j - 1]);
                if (sys.Q) next.u[i][j] += dt * q[i];
            }
        }
        for (std::size_t i = 0; i < n; ++i) right[i] = next.u[i][m];
        const auto b = mat_vec(sys.K(t_new), right);
        for (std::size_t i = 0; i < n; ++i) next.u[i][0] = b[i];
        next.t = t_new;
        for (std::size_t i = 0; i < n; ++i)
            for (double v : next.u[i])
                if (!std::isfinite(v)) fail(ErrorKind::dynamics, "time-varying solution became non-finite");
        std::swap(cur, next);
        record_boundary(cur);
        if (step % cadence == 0 || step == steps) record(cur);
    }
    traj.snapshots.push_back(cur);
    const auto& w = traj.norm_series[0];
    if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; })) {
        res.verdict = "zero solution";
        return res;
    }
    res.fit = estimate_decay(traj.times, w);
    if (!hyp.met) {
        std::string why;
        if (hyp.k_hat >= 1.0) why = "sup ||K(t)|| >= 1";
        else why = "coefficient deviation above smallness budget";
        res.verdict = "hypotheses unmet: " + why + (res.fit.nu > 0 ? " (decay observed)" : " (no decay)");
    } else {
        res.verdict = res.fit.nu > 0 ? "decay" : "no decay";
    }
    return res;
}

}  // namespace hyperstab
