#include "hyperstab/delay.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <json.hpp>

#include "hyperstab/errors.hpp"
#include "hyperstab/io.hpp"
#include "hyperstab/parallel.hpp"

namespace hyperstab {

double DelaySystem::max_delay() const { return *std::max_element(r.begin(), r.end()); }
double DelaySystem::min_delay() const { return *std::min_element(r.begin(), r.end()); }

void DelaySystem::validate() const {
    require(!r.empty(), ErrorKind::input, "delay system: empty delay vector");
    require(K.dim() == r.size(), ErrorKind::input, "delay system: dim(K) must equal length(r)");
    hyperstab::validate(K, "delay gain");
    for (double ri : r)
        require(std::isfinite(ri) && ri > 0.0, ErrorKind::input, "delay system: delays must be positive");
}

DelaySystem parse_delay_system(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const std::exception& e) {
        fail(ErrorKind::input, std::string("delay system document: ") + e.what());
    }
    require(doc.is_object() && doc.contains("K") && doc.contains("r"), ErrorKind::input,
            "delay system document needs fields 'K' and 'r'");
    DelaySystem sys;
    const auto& k = doc["K"];
    if (k.is_object()) {
        sys.K = parse_matrix(k.dump());
    } else if (k.is_number()) {
        sys.K = RealMatrix(1, {k.get<double>()});
    } else {
        require(k.is_array(), ErrorKind::input, "delay system field 'K' must be a matrix");
        std::vector<double> e;
        for (const auto& row : k) {
            require(row.is_array() && row.size() == k.size(), ErrorKind::input,
                    "delay system field 'K' must be square");
            for (const auto& v : row) e.push_back(v.get<double>());
        }
        sys.K = RealMatrix(k.size(), std::move(e));
    }
    const auto& r = doc["r"];
    if (r.is_number()) sys.r = {r.get<double>()};
    else
        for (const auto& v : r) sys.r.push_back(v.get<double>());
    sys.validate();
    return sys;
}

DelaySystem read_delay_system(const std::string& path) { return parse_delay_system(read_text(path)); }

SampledSignal simulate_linear(const DelaySystem& sys, const SampledSignal& history, double T, double dt) {
    sys.validate();
    const std::size_t n = sys.dim();
    require(T > 0.0, ErrorKind::input, "simulate_linear: horizon must be positive");
    require(dt > 0.0 && dt <= sys.min_delay() / 16.0 * (1 + 1e-12), ErrorKind::input,
            "simulate_linear: dt must satisfy dt <= min(r)/16");
    require(history.channels() == n, ErrorKind::input, "simulate_linear: history channel count mismatch");
    require(history.t0() <= -sys.max_delay() + 1e-12 && history.t1() >= -1e-12, ErrorKind::input,
            "simulate_linear: history too short, must cover [-max r, 0]");

    SampledSignal out = SampledSignal::over(0.0, T, dt, n, false);
    for (std::size_t k = 0; k < out.count(); ++k) {
        const double t = out.time(k);
        std::vector<double> past(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double s = t - sys.r[j];
            if (s < 0.0) {
                past[j] = history.value(j, s);
            } else {
                // only samples already computed may enter the stencil
                const double u = s / dt;
                const double ur = std::round(u);
                if (std::abs(u - ur) <= 1e-10) {
                    past[j] = out.sample(j, static_cast<std::size_t>(ur));
                } else {
                    const auto lo = static_cast<std::size_t>(std::floor(u));
                    const std::size_t avail = k;  // samples 0..k-1
                    std::size_t b = lo >= 1 ? lo - 1 : 0;
                    if (b + 4 > avail) b = avail >= 4 ? avail - 4 : 0;
                    if (avail < 4) {
                        const double w = u - double(lo);
                        past[j] = (1 - w) * out.sample(j, lo) + w * out.sample(j, lo + 1);
                    } else {
                        const double x = u - double(b);
                        const double l0 = -(x - 1) * (x - 2) * (x - 3) / 6.0;
                        const double l1 = x * (x - 2) * (x - 3) / 2.0;
                        const double l2 = -x * (x - 1) * (x - 3) / 2.0;
                        const double l3 = x * (x - 1) * (x - 2) / 6.0;
                        past[j] = l0 * out.sample(j, b) + l1 * out.sample(j, b + 1) +
                                  l2 * out.sample(j, b + 2) + l3 * out.sample(j, b + 3);
                    }
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += sys.K(i, j) * past[j];
            out.sample(i, k) = acc;
        }
    }
    return out;
}

Complex characteristic_value(const DelaySystem& sys, Complex z) {
    const std::size_t n = sys.dim();
    ComplexMatrix a(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Complex e = std::exp(-sys.r[i] * z);
        for (std::size_t j = 0; j < n; ++j) a(i, j) = (i == j ? 1.0 : 0.0) - e * sys.K(i, j);
    }
    return determinant(a);
}

namespace {

double wrap_angle(double a) {
    while (a > std::numbers::pi) a -= 2 * std::numbers::pi;
    while (a <= -std::numbers::pi) a += 2 * std::numbers::pi;
    return a;
}

double segment_phase(const DelaySystem& sys, Complex za, Complex zb, Complex ha, Complex hb, int depth,
                     bool& hit) {
    if (std::abs(hb) < 1e-14 || std::abs(ha) < 1e-14) hit = true;
    const double d = wrap_angle(std::arg(hb) - std::arg(ha));
    if (std::abs(d) <= std::numbers::pi / 4 || depth >= 40) return d;
    const Complex zm = 0.5 * (za + zb);
    const Complex hm = characteristic_value(sys, zm);
    return segment_phase(sys, za, zm, ha, hm, depth + 1, hit) +
           segment_phase(sys, zm, zb, hm, hb, depth + 1, hit);
}

}  // namespace

int winding_number(const DelaySystem& sys, const RootRectangle& rect, int segments, bool* boundary_hit) {
    const Complex corners[4] = {{rect.re_min, -rect.im_max},
                                {rect.re_max, -rect.im_max},
                                {rect.re_max, rect.im_max},
                                {rect.re_min, rect.im_max}};
    double total = 0.0;
    bool hit = false;
    for (int side = 0; side < 4; ++side) {
        const Complex a = corners[side], b = corners[(side + 1) % 4];
        Complex za = a, ha = characteristic_value(sys, a);
        for (int k = 1; k <= segments; ++k) {
            const Complex zb = a + (b - a) * (double(k) / segments);
            const Complex hb = characteristic_value(sys, zb);
            total += segment_phase(sys, za, zb, ha, hb, 0, hit);
            za = zb;
            ha = hb;
        }
    }
    if (boundary_hit) *boundary_hit = hit;
    return static_cast<int>(std::lround(total / (2 * std::numbers::pi)));
}

namespace {

bool newton(const DelaySystem& sys, Complex& z, double max_step, double tol) {
    for (int it = 0; it < 60; ++it) {
        const Complex h = characteristic_value(sys, z);
        if (std::abs(h) == 0.0) return true;
        const double eps = 1e-6 * std::max(1.0, std::abs(z));
        const Complex dh = (characteristic_value(sys, z + eps) - characteristic_value(sys, z - eps)) / (2 * eps);
        if (std::abs(dh) == 0.0) return false;
        Complex step = h / dh;
        if (std::abs(step) > max_step) step *= max_step / std::abs(step);
        z -= step;
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
        if (std::abs(step) <= 1e-15 * (1 + std::abs(z))) break;
    }
    return std::abs(characteristic_value(sys, z)) <= tol;
}

}  // namespace

RootReport rightmost_roots(const DelaySystem& sys, const RootRectangle& rect, const RootSearchOptions& opts) {
    sys.validate();
    require(rect.re_max > rect.re_min && rect.im_max > 0.0 && std::isfinite(rect.re_min) &&
                std::isfinite(rect.re_max) && std::isfinite(rect.im_max),
            ErrorKind::input, "root search: rectangle must be bounded and non-degenerate");
    require(opts.grid_re >= 1 && opts.grid_im >= 1, ErrorKind::input, "root search: grid must be positive");
    RootReport rep;
    rep.rectangle = rect;
    const double dre = (rect.re_max - rect.re_min) / opts.grid_re;
    const double dim = rect.im_max / opts.grid_im;
    const double max_step = 2.0 * std::max(dre, dim);
    const double slack = 1e-12;

    auto inside = [&](Complex z) {
        return z.real() >= rect.re_min - slack && z.real() <= rect.re_max + slack &&
               std::abs(z.imag()) <= rect.im_max + slack;
    };
    auto known = [&](Complex z) {
        for (const auto& r : rep.roots)
            if (std::abs(r - z) <= 1e-7 * (1 + std::abs(z))) return true;
        return false;
    };
    for (int j = 0; j <= opts.grid_im; ++j)
        for (int i = 0; i < opts.grid_re; ++i) {
            Complex z(rect.re_min + (i + 0.5) * dre, j * dim);
            if (!newton(sys, z, max_step, opts.polish_tol)) continue;
            if (std::abs(z.imag()) < 1e-8) {
                Complex zr(z.real(), 0.0);
                if (newton(sys, zr, max_step, opts.polish_tol) && std::abs(zr.imag()) == 0.0) z = zr;
            }
            if (z.imag() < 0) z = std::conj(z);
            if (!inside(z) || known(z)) continue;
            rep.roots.push_back(z);
            if (z.imag() != 0.0) rep.roots.push_back(std::conj(z));
        }
    std::sort(rep.roots.begin(), rep.roots.end(), [](Complex a, Complex b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    for (const auto& z : rep.roots) rep.residual = std::max(rep.residual, std::abs(characteristic_value(sys, z)));

    bool hit = false;
    rep.winding_total = winding_number(sys, rect, opts.boundary_segments, &hit);
    if (hit) {
        rep.complete = false;
        rep.note = "characteristic function nearly vanishes on the rectangle boundary";
    } else if (rep.winding_total != static_cast<int>(rep.roots.size())) {
        rep.complete = false;
        rep.note = "winding count " + std::to_string(rep.winding_total) + " differs from " +
                   std::to_string(rep.roots.size()) + " located roots; refine the start grid";
    }
    return rep;
}

SweepReport robustness_sweep(const DelaySystem& sys, double radius, const SweepOptions& opts) {
    sys.validate();
    const std::size_t n = sys.dim();
    require(radius >= 0.0 && radius < sys.min_delay(), ErrorKind::input,
            "robustness sweep: radius must satisfy 0 <= eps < min(r)");
    require(opts.samples >= 0, ErrorKind::input, "robustness sweep: sample count must be >= 0");

    std::vector<std::vector<double>> points;
    if (n <= 12) {
        for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
            std::vector<double> r = sys.r;
            for (std::size_t i = 0; i < n; ++i) r[i] += ((mask >> i) & 1) ? radius : -radius;
            points.push_back(std::move(r));
        }
    }
    points.push_back(sys.r);
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int s = 0; s < opts.samples; ++s) {
        std::vector<double> r = sys.r;
        for (auto& ri : r) ri += radius * u(rng);
        points.push_back(std::move(r));
    }

    SweepReport rep;
    rep.samples.resize(points.size());
    parallel_for(points.size(), opts.threads, [&](std::size_t i) {
        DelaySystem perturbed{sys.K, points[i]};
        const auto roots = rightmost_roots(perturbed, opts.rect, opts.roots);
        rep.samples[i] = SweepSample{points[i], roots.rightmost_real(), roots.complete};
    });
    for (const auto& s : rep.samples) {
        if (!s.complete) rep.complete = false;
        if (s.rightmost >= 0.0) rep.all_stable = false;
        if (rep.worst_r.empty() || s.rightmost > rep.worst_rightmost) {
            rep.worst_rightmost = s.rightmost;
            rep.worst_r = s.r;
        }
    }
    rep.rho0_lower = rho_hat_zero(sys.K).value;
    rep.robust_by_rho0 = rep.rho0_lower < 1.0;
    return rep;
}

}  // namespace hyperstab
