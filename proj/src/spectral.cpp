#include "hyperstab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "hyperstab/errors.hpp"
#include "hyperstab/optimize.hpp"
#include "hyperstab/parallel.hpp"

namespace hyperstab {

PNorm PNorm::finite(double p) {
    require(std::isfinite(p) && p >= 1.0, ErrorKind::input, "p-norm exponent must be >= 1");
    return PNorm{p, false};
}

std::string PNorm::label() const {
    if (infinite) return "inf";
    std::string s = std::to_string(p);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

PNorm parse_pnorm(const std::string& text) {
    if (text == "inf" || text == "infinity" || text == "Inf") return PNorm::infinity();
    std::size_t used = 0;
    double p = 0.0;
    try {
        p = std::stod(text, &used);
    } catch (...) {
        fail(ErrorKind::input, "cannot parse p-norm '" + text + "'");
    }
    require(used == text.size(), ErrorKind::input, "cannot parse p-norm '" + text + "'");
    if (std::isinf(p)) return PNorm::infinity();
    return PNorm::finite(p);
}

double vector_norm(const std::vector<double>& x, PNorm p) {
    if (p.infinite) {
        double m = 0.0;
        for (double v : x) m = std::max(m, std::abs(v));
        return m;
    }
    if (p.p == 1.0) {
        double s = 0.0;
        for (double v : x) s += std::abs(v);
        return s;
    }
    double scale = 0.0;
    for (double v : x) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return 0.0;
    double s = 0.0;
    for (double v : x) s += std::pow(std::abs(v) / scale, p.p);
    return scale * std::pow(s, 1.0 / p.p);
}

namespace {

double norm_one(const RealMatrix& m) {
    double best = 0.0;
    for (std::size_t j = 0; j < m.dim(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m.dim(); ++i) s += std::abs(m(i, j));
        best = std::max(best, s);
    }
    return best;
}

double norm_inf(const RealMatrix& m) {
    double best = 0.0;
    for (std::size_t i = 0; i < m.dim(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.dim(); ++j) s += std::abs(m(i, j));
        best = std::max(best, s);
    }
    return best;
}

double norm_two(const RealMatrix& m) {
    if (m.dim() == 2) {
        // closed form for the largest singular value of a 2x2 matrix
        const double a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
        const double s1 = a * a + b * b + c * c + d * d;
        const double det = a * d - b * c;
        const double disc = std::sqrt(std::max(0.0, s1 * s1 - 4.0 * det * det));
        return std::sqrt(std::max(0.0, (s1 + disc) / 2.0));
    }
    const auto ev = symmetric_eigenvalues(multiply(transpose(m), m));
    return std::sqrt(std::max(0.0, ev.back()));
}

double signed_pow(double x, double e) { return std::copysign(std::pow(std::abs(x), e), x); }

double norm_general(const RealMatrix& m, double p, std::uint64_t seed) {
    const std::size_t n = m.dim();
    const double q = p / (p - 1.0);
    const PNorm pn = PNorm::finite(p);
    const RealMatrix mt = transpose(m);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double best = 0.0;
    std::vector<double> x(n), w(n);
    for (int start = 0; start < 32; ++start) {
        for (auto& v : x) v = gauss(rng);
        double nx = vector_norm(x, pn);
        if (nx == 0.0) continue;
        for (auto& v : x) v /= nx;
        double prev = vector_norm(mat_vec(m, x), pn);
        best = std::max(best, prev);
        for (int it = 0; it < 500; ++it) {
            const auto y = mat_vec(m, x);
            for (std::size_t i = 0; i < n; ++i) w[i] = signed_pow(y[i], p - 1.0);
            auto z = mat_vec(mt, w);
            for (auto& v : z) v = signed_pow(v, q - 1.0);
            const double nz = vector_norm(z, pn);
            if (nz == 0.0) break;
            for (std::size_t i = 0; i < n; ++i) x[i] = z[i] / nz;
            const double val = vector_norm(mat_vec(m, x), pn);
            best = std::max(best, val);
            if (val - prev <= 1e-15 * val) break;
            prev = val;
        }
    }
    return best;
}

}  // namespace

double induced_norm(const RealMatrix& m, PNorm p, std::uint64_t seed) {
    validate(m);
    if (p.infinite) return norm_inf(m);
    if (p.p == 1.0) return norm_one(m);
    if (p.p == 2.0) return norm_two(m);
    return norm_general(m, p.p, seed);
}

namespace {

std::vector<double> gauge_logs(const std::vector<double>& free) {
    std::vector<double> d(free.size() + 1, 0.0);
    for (std::size_t i = 0; i < free.size(); ++i)
        d[i + 1] = std::clamp(free[i], -kLogScaleClamp, kLogScaleClamp);
    return d;
}

int default_lattice(std::size_t free_dims) {
    switch (free_dims) {
        case 1: return 13;
        case 2: return 7;
        case 3: return 5;
        case 4: return 4;
        default: return 0;
    }
}

}  // namespace

ScaledIndex rho_hat_p(const RealMatrix& m, PNorm p, const ScalingOptions& opts) {
    validate(m);
    const std::size_t n = m.dim();
    ScaledIndex out;
    if (n == 1) {
        out.value = std::abs(m(0, 0));
        out.scaling = {1.0};
        out.log_scaling = {0.0};
        out.evaluations = 1;
        return out;
    }
    const std::size_t k = n - 1;
    auto objective = [&](const std::vector<double>& y) {
        return induced_norm(scale_similar(m, gauge_logs(y)), p, opts.seed);
    };

    std::vector<std::vector<double>> starts;
    int per_axis = opts.lattice_per_axis > 0 ? opts.lattice_per_axis : default_lattice(k);
    double spacing = 1.0;
    if (per_axis >= 2 && std::pow(double(per_axis), double(k)) <= 4096.0) {
        spacing = 6.0 / (per_axis - 1);
        std::vector<int> idx(k, 0);
        while (true) {
            std::vector<double> y(k);
            for (std::size_t i = 0; i < k; ++i) y[i] = -3.0 + spacing * idx[i];
            starts.push_back(std::move(y));
            std::size_t a = 0;
            while (a < k && ++idx[a] == per_axis) idx[a++] = 0;
            if (a == k) break;
        }
    } else {
        std::mt19937_64 rng(opts.seed);
        std::uniform_real_distribution<double> unif(-3.0, 3.0);
        starts.emplace_back(k, 0.0);
        for (int s = 0; s < 64; ++s) {
            std::vector<double> y(k);
            for (auto& v : y) v = unif(rng);
            starts.push_back(std::move(y));
        }
    }

    std::vector<double> start_vals(starts.size());
    parallel_for(starts.size(), opts.threads,
                 [&](std::size_t i) { start_vals[i] = objective(starts[i]); });
    out.evaluations += static_cast<int>(starts.size());

    std::vector<std::size_t> order(starts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return start_vals[a] < start_vals[b]; });
    const std::size_t runs = std::min<std::size_t>(std::max(1, opts.descents), order.size());

    SimplexOptions so;
    so.initial_step = spacing;
    so.f_tol = opts.tol;
    so.x_tol = 1e-10;
    so.max_evaluations = opts.max_evaluations;
    std::vector<SimplexResult> results(runs);
    parallel_for(runs, opts.threads,
                 [&](std::size_t r) { results[r] = nelder_mead(objective, starts[order[r]], so); });
    std::size_t best = 0;
    for (std::size_t r = 0; r < runs; ++r) {
        out.iterations += results[r].iterations;
        out.evaluations += results[r].evaluations;
        if (results[r].value < results[best].value) best = r;
    }
    SimplexResult current = results[best];

    double step = spacing;
    for (int round = 0; round < opts.polish_rounds; ++round) {
        step *= 0.1;
        so.initial_step = std::max(step, 1e-9);
        SimplexResult next = nelder_mead(objective, current.x, so);
        out.iterations += next.iterations;
        out.evaluations += next.evaluations;
        const bool improved = next.value < current.value - opts.tol * (1.0 + std::abs(current.value));
        if (next.value < current.value) current = next;
        if (!improved && round >= 1) break;
    }

    double maxabs = 0.0;
    for (double v : current.x) maxabs = std::max(maxabs, std::abs(v));
    out.boundary = maxabs >= kLogScaleClamp;
    out.log_scaling = gauge_logs(current.x);
    out.scaling.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.scaling[i] = std::exp(out.log_scaling[i]);
    out.value = induced_norm(scale_similar(m, out.log_scaling), p, opts.seed);
    return out;
}

int default_phase_resolution(std::size_t n) {
    if (n <= 3) return 64;
    if (n == 4) return 16;
    if (n == 5) return 8;
    if (n == 6) return 6;
    return 4;
}

ComplexMatrix phase_rotated(const RealMatrix& m, const std::vector<double>& phases) {
    ComplexMatrix out(m.dim());
    for (std::size_t i = 0; i < m.dim(); ++i) {
        const Complex rot = std::polar(1.0, phases[i]);
        for (std::size_t j = 0; j < m.dim(); ++j) out(i, j) = rot * m(i, j);
    }
    return out;
}

PhaseIndex rho_hat_zero(const RealMatrix& m, const PhaseOptions& opts) {
    validate(m);
    const std::size_t n = m.dim();
    PhaseIndex out;
    out.phases.assign(n, 0.0);
    if (n == 1) {
        out.value = std::abs(m(0, 0));
        out.grid_points = 1;
        return out;
    }
    if (opts.points_per_axis <= 0 && n > 6 && !opts.allow_large)
        fail(ErrorKind::budget,
             "rho_hat_zero: n = " + std::to_string(n) +
                 " exceeds the default phase-grid budget; pass a coarser explicit grid "
                 "(points per axis) or opt in to large grids");
    const int res = opts.points_per_axis > 0 ? opts.points_per_axis : default_phase_resolution(n);
    const std::size_t k = n - 1;
    const double total = std::pow(double(res), double(k));
    require(total <= 5e7, ErrorKind::budget,
            "rho_hat_zero: phase grid of " + std::to_string(total) + " points exceeds budget");

    const double two_pi = 2.0 * std::numbers::pi;
    const double h = two_pi / res;
    auto radius = [&](const std::vector<double>& free) {
        std::vector<double> th(n, 0.0);
        std::copy(free.begin(), free.end(), th.begin() + 1);
        return spectral_radius(phase_rotated(m, th));
    };

    std::vector<int> idx(k, 0);
    std::vector<double> free(k), best_free(k, 0.0);
    double best = -1.0;
    while (true) {
        for (std::size_t i = 0; i < k; ++i) free[i] = h * idx[i];
        const double v = radius(free);
        ++out.grid_points;
        if (v > best) {
            best = v;
            best_free = free;
        }
        std::size_t a = 0;
        while (a < k && ++idx[a] == res) idx[a++] = 0;
        if (a == k) break;
    }

    if (opts.refine) {
        SimplexOptions so;
        so.initial_step = h / 2.0;
        so.f_tol = opts.tol;
        so.x_tol = 1e-10;
        so.max_evaluations = opts.max_evaluations;
        const auto r = nelder_mead([&](const std::vector<double>& y) { return -radius(y); },
                                   best_free, so);
        out.iterations = r.iterations;
        if (-r.value > best) {
            best = -r.value;
            best_free = r.x;
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        double t = std::fmod(best_free[i], two_pi);
        if (t < 0) t += two_pi;
        if (t >= two_pi) t = 0.0;
        out.phases[i + 1] = t;
    }
    out.value = best;
    return out;
}

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::stable: return "stable";
        case Verdict::unstable: return "unstable";
        default: return "inconclusive";
    }
}

MarginReport margin_report(const RealMatrix& m, const std::vector<PNorm>& ps,
                           const ScalingOptions& scaling, const PhaseOptions& phase,
                           double verdict_tol) {
    validate(m);
    MarginReport rep;
    rep.n = m.dim();
    rep.tol = verdict_tol;
    rep.spectral_radius = spectral_radius(m);
    rep.rho0 = rho_hat_zero(m, phase);
    const double rho0 = rep.rho0.value;
    if (rho0 >= 1.0 + verdict_tol)
        rep.rho0_verdict = Verdict::unstable;
    else if (rho0 < 1.0 - verdict_tol)
        rep.rho0_verdict = Verdict::stable;

    const double perron = spectral_radius(abs_entries(m));
    for (const auto& p : ps) {
        NormMargin nm;
        nm.p = p;
        nm.index = rho_hat_p(m, p, scaling);
        nm.lower_bound = std::max(rep.spectral_radius, rho0);
        if (p.infinite || p.is(1.0)) nm.lower_bound = std::max(nm.lower_bound, perron);
        if (nm.index.value < 1.0 - verdict_tol)
            nm.verdict = Verdict::stable;
        else if (nm.lower_bound >= 1.0 + verdict_tol)
            nm.verdict = Verdict::unstable;
        rep.rho_p.push_back(std::move(nm));
    }
    return rep;
}

}  // namespace hyperstab
