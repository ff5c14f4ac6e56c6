#include "hyperstab/signal.hpp"

#include <algorithm>
#include <cmath>

#include "hyperstab/errors.hpp"
#include "hyperstab/io.hpp"

namespace hyperstab {

SampledSignal::SampledSignal(double t0, double dt, std::size_t count, std::size_t channels,
                             bool with_derivative)
    : t0_(t0), dt_(dt), count_(count), channels_(channels),
      values_(channels, std::vector<double>(count, 0.0)) {
    require(dt > 0.0 && std::isfinite(dt), ErrorKind::input, "signal: dt must be positive");
    require(count >= 2, ErrorKind::input, "signal: need at least two samples");
    require(channels >= 1, ErrorKind::input, "signal: need at least one channel");
    if (with_derivative) deriv_.assign(channels, std::vector<double>(count, 0.0));
}

SampledSignal SampledSignal::over(double t0, double t1, double dt, std::size_t channels,
                                  bool with_derivative) {
    require(t1 > t0, ErrorKind::input, "signal: t1 must exceed t0");
    require(dt > 0.0, ErrorKind::input, "signal: dt must be positive");
    const auto count = static_cast<std::size_t>(std::floor((t1 - t0) / dt + 1e-9)) + 1;
    return SampledSignal(t0, dt, count, channels, with_derivative);
}

double SampledSignal::position(double t) const { return (t - t0_) / dt_; }

bool SampledSignal::covers(double t) const noexcept {
    const double u = (t - t0_) / dt_;
    return u >= -1e-9 && u <= double(count_ - 1) + 1e-9;
}

namespace {

constexpr double kNodeSnap = 1e-10;

}  // namespace

double SampledSignal::value(std::size_t ch, double t) const {
    require(covers(t), ErrorKind::input,
            "signal evaluated at t=" + format_number(t) + " outside [" + format_number(t0_) + ", " +
                format_number(t1()) + "]");
    const double u = std::clamp(position(t), 0.0, double(count_ - 1));
    const double ur = std::round(u);
    if (std::abs(u - ur) <= kNodeSnap) return values_[ch][static_cast<std::size_t>(ur)];
    const auto& v = values_[ch];
    if (has_derivative()) {
        const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(u), count_ - 2);
        const double s = u - double(i);
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2,
                     h11 = s3 - s2;
        const auto& d = deriv_[ch];
        return h00 * v[i] + h10 * dt_ * d[i] + h01 * v[i + 1] + h11 * dt_ * d[i + 1];
    }
    if (count_ < 4) {
        const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(u), count_ - 2);
        const double s = u - double(i);
        return (1 - s) * v[i] + s * v[i + 1];
    }
    const auto k = static_cast<std::ptrdiff_t>(std::floor(u));
    const std::size_t b = static_cast<std::size_t>(
        std::clamp<std::ptrdiff_t>(k - 1, 0, static_cast<std::ptrdiff_t>(count_) - 4));
    const double x = u - double(b);
    // Lagrange basis on nodes 0..3
    const double l0 = -(x - 1) * (x - 2) * (x - 3) / 6.0;
    const double l1 = x * (x - 2) * (x - 3) / 2.0;
    const double l2 = -x * (x - 1) * (x - 3) / 2.0;
    const double l3 = x * (x - 1) * (x - 2) / 6.0;
    return l0 * v[b] + l1 * v[b + 1] + l2 * v[b + 2] + l3 * v[b + 3];
}

double SampledSignal::derivative(std::size_t ch, double t) const {
    require(covers(t), ErrorKind::input,
            "signal derivative at t=" + format_number(t) + " outside sampled range");
    const double u = std::clamp(position(t), 0.0, double(count_ - 1));
    const auto& v = values_[ch];
    if (has_derivative()) {
        const double ur = std::round(u);
        if (std::abs(u - ur) <= kNodeSnap) return deriv_[ch][static_cast<std::size_t>(ur)];
        const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(u), count_ - 2);
        const double s = u - double(i);
        const double s2 = s * s;
        const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1, d01 = -6 * s2 + 6 * s,
                     d11 = 3 * s2 - 2 * s;
        const auto& d = deriv_[ch];
        return (d00 * v[i] + d01 * v[i + 1]) / dt_ + d10 * d[i] + d11 * d[i + 1];
    }
    if (count_ < 4) {
        const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(u), count_ - 2);
        return (v[i + 1] - v[i]) / dt_;
    }
    const auto k = static_cast<std::ptrdiff_t>(std::floor(u));
    const std::size_t b = static_cast<std::size_t>(
        std::clamp<std::ptrdiff_t>(k - 1, 0, static_cast<std::ptrdiff_t>(count_) - 4));
    const double x = u - double(b);
    const double d0 = -(3 * x * x - 12 * x + 11) / 6.0;
    const double d1 = (3 * x * x - 10 * x + 6) / 2.0;
    const double d2 = -(3 * x * x - 8 * x + 3) / 2.0;
    const double d3 = (3 * x * x - 6 * x + 2) / 6.0;
    return (d0 * v[b] + d1 * v[b + 1] + d2 * v[b + 2] + d3 * v[b + 3]) / dt_;
}

void SampledSignal::write_csv(const std::string& path) const {
    CsvTable t;
    t.header.push_back("t");
    for (std::size_t c = 0; c < channels_; ++c) t.header.push_back("v" + std::to_string(c + 1));
    if (has_derivative())
        for (std::size_t c = 0; c < channels_; ++c) t.header.push_back("dv" + std::to_string(c + 1));
    t.rows.reserve(count_);
    for (std::size_t k = 0; k < count_; ++k) {
        std::vector<double> row{time(k)};
        for (std::size_t c = 0; c < channels_; ++c) row.push_back(values_[c][k]);
        if (has_derivative())
            for (std::size_t c = 0; c < channels_; ++c) row.push_back(deriv_[c][k]);
        t.rows.push_back(std::move(row));
    }
    hyperstab::write_csv(path, t);
}

SampledSignal SampledSignal::read_csv(const std::string& path) {
    const CsvTable t = hyperstab::read_csv(path);
    require(!t.header.empty() && t.header[0] == "t", ErrorKind::input,
            path + ": signal CSV must start with column 't'");
    std::size_t nv = 0, nd = 0;
    for (const auto& h : t.header) {
        if (h.rfind("dv", 0) == 0) ++nd;
        else if (h.rfind("v", 0) == 0) ++nv;
    }
    require(nv >= 1 && (nd == 0 || nd == nv) && t.header.size() == 1 + nv + nd, ErrorKind::input,
            path + ": header must be t,v1..vn[,dv1..dvn]");
    require(t.rows.size() >= 2, ErrorKind::input, path + ": need at least two samples");
    const double t0 = t.rows[0][0];
    const double dt = (t.rows.back()[0] - t0) / double(t.rows.size() - 1);
    require(dt > 0, ErrorKind::input, path + ": times must increase");
    for (std::size_t k = 0; k < t.rows.size(); ++k)
        require(std::abs(t.rows[k][0] - (t0 + dt * double(k))) <= 1e-9 * (1 + std::abs(t.rows[k][0])),
                ErrorKind::input, path + ": samples must be uniformly spaced");
    SampledSignal s(t0, dt, t.rows.size(), nv, nd > 0);
    for (std::size_t k = 0; k < t.rows.size(); ++k)
        for (std::size_t c = 0; c < nv; ++c) {
            s.values_[c][k] = t.rows[k][1 + c];
            if (nd) s.deriv_[c][k] = t.rows[k][1 + nv + c];
        }
    return s;
}

}  // namespace hyperstab
