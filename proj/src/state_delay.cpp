#include <cmath>

#include "hyperstab/delay.hpp"
#include "hyperstab/errors.hpp"
#include "hyperstab/io.hpp"

namespace hyperstab {

void StateDelayParams::validate() const {
    require(std::isfinite(r1) && std::isfinite(r2) && r1 > r2 && r2 > 0.0, ErrorKind::input,
            "state-dependent delay: need r1 > r2 > 0");
    const double det = G1[0] * G2[1] - G2[0] * G1[1];
    require(std::isfinite(det) && std::abs(det) > 1e-300, ErrorKind::input,
            "state-dependent delay: boundary matrix must be invertible");
}

std::array<double, 2> StateDelayParams::preimage(const std::array<double, 2>& y) const {
    const double det = G1[0] * G2[1] - G2[0] * G1[1];
    return {(G2[1] * y[0] - G2[0] * y[1]) / det, (-G1[1] * y[0] + G1[0] * y[1]) / det};
}

double invert_transit(const std::function<std::pair<double, double>(double)>& v2, double r2, double s,
                      double lo, double hi) {
    auto f = [&](double t) { return t + r2 + v2(t).first - s; };
    double flo = f(lo), fhi = f(hi);
    require(flo <= 0.0 && fhi >= 0.0, ErrorKind::dynamics,
            "transit inversion: target " + format_number(s) + " not bracketed");
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    double t = s - r2;
    if (!(t > lo && t < hi)) t = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const auto [val, slope] = v2(t);
        const double ft = t + r2 + val - s;
        if (ft == 0.0) return t;
        if (ft < 0) lo = t;
        else hi = t;
        const double d = 1.0 + slope;
        double next = d > 0 ? t - ft / d : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - t) <= 4e-16 * std::max(1.0, std::abs(t)) || hi - lo <= 4e-16 * std::max(1.0, std::abs(t)))
            return next;
        t = next;
    }
    return t;
}

SampledSignal simulate_state_dependent(const StateDelayParams& p, const SampledSignal& trace, double T,
                                       double dt, bool freeze_delay) {
    p.validate();
    require(trace.channels() == 2, ErrorKind::input, "state-dependent delay: trace must have two channels");
    require(trace.has_derivative(), ErrorKind::input, "state-dependent delay: trace needs a slope channel");
    require(trace.t0() <= 1e-12 && trace.t1() >= p.r1 - 1e-12, ErrorKind::input,
            "state-dependent delay: trace must cover [0, r1]");
    require(T > 0.0, ErrorKind::input, "state-dependent delay: horizon must be positive");
    require(dt > 0.0 && dt <= p.r2 / 4.0, ErrorKind::input, "state-dependent delay: dt must be <= r2/4");

    SampledSignal out = SampledSignal::over(0.0, T, dt, 2, true);
    // v and v' at an already computed time t
    auto past = [&](std::size_t ch, double t) -> std::pair<double, double> {
        if (t <= p.r2) return {trace.value(ch, t), trace.derivative(ch, t)};
        return {out.value(ch, t), out.derivative(ch, t)};
    };
    for (std::size_t k = 0; k < out.count(); ++k) {
        const double s = out.time(k);
        double v[2], dv[2];
        if (s <= p.r2) {
            for (std::size_t c = 0; c < 2; ++c) {
                v[c] = trace.value(c, s);
                dv[c] = trace.derivative(c, s);
            }
        } else {
            double w1, dw1, w2, dw2;
            if (s <= p.r1) {
                const std::array<double, 2> y{trace.value(0, s), trace.value(1, s)};
                const std::array<double, 2> dy{trace.derivative(0, s), trace.derivative(1, s)};
                const auto g = p.preimage(y), dg = p.preimage(dy);
                w1 = g[0];
                dw1 = dg[0];
            } else {
                std::tie(w1, dw1) = past(0, s - p.r1);
            }
            if (freeze_delay) {
                std::tie(w2, dw2) = past(1, s - p.r2);
            } else {
                const double lo = std::max(0.0, s - 1.5 * p.r2);
                const double hi = s - 0.5 * p.r2;
                const double t = invert_transit([&](double x) { return past(1, x); }, p.r2, s, lo, hi);
                const auto [a, b] = past(1, t);
                w2 = a;
                dw2 = b - b * b / (1.0 + b);
            }
            for (std::size_t c = 0; c < 2; ++c) {
                v[c] = w1 * p.G1[c] + w2 * p.G2[c];
                dv[c] = dw1 * p.G1[c] + dw2 * p.G2[c];
            }
        }
        if (!freeze_delay && (std::abs(v[1]) >= p.r2 / 2 || std::abs(dv[1]) >= 0.5))
            fail(ErrorKind::dynamics, "state-dependent delay: smallness lost at t=" + format_number(s) +
                                          " (|v2|=" + format_number(std::abs(v[1])) +
                                          ", |v2'|=" + format_number(std::abs(dv[1])) + ")");
        for (std::size_t c = 0; c < 2; ++c) {
            out.sample(c, k) = v[c];
            out.slope(c, k) = dv[c];
        }
    }
    return out;
}

}  // namespace hyperstab
