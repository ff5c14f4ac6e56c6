#include "hyperstab/counterexample.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "hyperstab/errors.hpp"
#include "hyperstab/io.hpp"
#include "hyperstab/spectral.hpp"

namespace hyperstab {

double kernel(double y) {
    const double a = std::abs(y);
    if (a >= 1.0) return 0.0;
    return 1.0 - a * a * a * (10.0 - a * (15.0 - 6.0 * a));
}

double kernel_slope(double y) {
    const double a = std::abs(y);
    if (a >= 1.0) return 0.0;
    const double d = -30.0 * a * a * (1.0 - a) * (1.0 - a);
    return y < 0 ? -d : d;
}

namespace {

double kernel_curvature(double y) {
    const double a = std::abs(y);
    if (a >= 1.0) return 0.0;
    return -60.0 * a * (1.0 - a) * (1.0 - 2.0 * a);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

std::array<double, 2> mul(const RealMatrix& m, const std::array<double, 2>& v) {
    return {m(0, 0) * v[0] + m(0, 1) * v[1], m(1, 0) * v[0] + m(1, 1) * v[1]};
}

double inf_norm(const std::array<double, 2>& v) { return std::max(std::abs(v[0]), std::abs(v[1])); }

}  // namespace

RealMatrix CounterexampleConfig::gain() const {
    const auto& p = params;
    return RealMatrix(2, {p.a, p.a * p.xi, -p.a, p.a * p.eta});
}

RealMatrix CounterexampleConfig::gain_inverse() const {
    const auto& p = params;
    const double k = 1.0 / (p.a * (p.eta + p.xi));
    return RealMatrix(2, {k * p.eta, -k * p.xi, k, k});
}

StateDelayParams CounterexampleConfig::delay_params() const {
    StateDelayParams d;
    d.G1 = {params.a, -params.a};
    d.G2 = {params.a * params.xi, params.a * params.eta};
    d.r1 = r1;
    d.r2 = r2;
    return d;
}

HyperbolicSystem CounterexampleConfig::system() const {
    return HyperbolicSystem::linear({Speed::constant(1.0 / r1), Speed::inverse_shift(r2)}, gain());
}

CounterexampleConfig derive_config(const CounterexampleParams& params) {
    CounterexampleConfig cfg;
    cfg.params = params;
    const auto& p = params;
    require(p.speed1 > 0 && p.speed2 > 0 && std::isfinite(p.speed1) && std::isfinite(p.speed2), ErrorKind::config,
            "speeds must be positive");
    require(p.T > 0 && std::isfinite(p.T), ErrorKind::config, "horizon T must be positive");
    require(p.a > 0 && p.xi + p.eta > 0, ErrorKind::config, "gain parameters must be positive");
    cfg.r1 = 1.0 / p.speed1;
    cfg.r2 = 1.0 / p.speed2;
    cfg.levels = static_cast<int>(std::floor(p.T / cfg.r2)) + 1;
    cfg.contraction_bound = std::max(p.xi, p.eta) / (p.a * (p.xi + p.eta));
    cfg.c = 0.5 * (1.0 + cfg.contraction_bound);
    cfg.gain_sum = p.a * (1.0 + p.xi + p.eta);

    std::vector<double> lattice;
    const int kmax = static_cast<int>(std::floor((p.T + cfg.r1) / cfg.r1));
    const int lmax = static_cast<int>(std::floor((p.T + cfg.r1) / cfg.r2));
    cfg.lattice_gap = kInf;
    for (int k = 0; k <= kmax; ++k)
        for (int l = 0; l <= lmax; ++l) {
            const double pt = k * cfg.r1 + l * cfg.r2;
            if (pt > p.T + cfg.r1) break;
            cfg.lattice_gap = std::min(cfg.lattice_gap, std::abs(p.T - pt));
            if (pt <= p.T) lattice.push_back(pt);
        }
    std::sort(lattice.begin(), lattice.end());
    cfg.min_pair_gap = kInf;
    for (std::size_t i = 1; i < lattice.size(); ++i) {
        const double d = lattice[i] - lattice[i - 1];
        if (d > 1e-12) cfg.min_pair_gap = std::min(cfg.min_pair_gap, d);
    }
    double eps = std::min({0.9 * cfg.lattice_gap, 0.4 * cfg.min_pair_gap, 0.5});
    if (p.eps_request > 0) eps = std::min(eps, p.eps_request);
    cfg.eps = eps;
    cfg.rho2 = rho_hat_p(cfg.gain(), PNorm::finite(2)).value;
    return cfg;
}

CounterexampleConfig build_config(const CounterexampleParams& params) {
    auto cfg = derive_config(params);
    const auto& p = params;
    require(cfg.r1 > cfg.r2, ErrorKind::config, "r1 > r2 > 0 violated (need speed2 > speed1)");
    require(p.T > cfg.r1, ErrorKind::config, "T > r1 violated");
    require(p.xi > 1 && p.eta > 1, ErrorKind::config, "xi > 1 and eta > 1 violated");
    require(cfg.gain_sum <= 2.0, ErrorKind::config,
            "a(1+xi+eta) <= 2 violated (value " + format_number(cfg.gain_sum) + ")");
    require(cfg.contraction_bound < 1.0, ErrorKind::config,
            "max(xi,eta)/(a(xi+eta)) < c < 1 violated (bound " + format_number(cfg.contraction_bound) + ")");
    if (p.m >= 3) fail(ErrorKind::unsupported, "matched derivative order m >= 3 is not supported");
    require(p.m >= 1, ErrorKind::config, "matched derivative order m must be 1 or 2");
    require(cfg.lattice_gap > 1e-9, ErrorKind::config,
            "T lies on the delay lattice k r1 + l r2 (eps <= lattice gap violated)");
    require(cfg.eps > 0 && cfg.eps <= cfg.lattice_gap, ErrorKind::config, "eps <= lattice gap violated");
    require(cfg.rho2 < 1.0, ErrorKind::config,
            "scaled 2-norm index of the boundary gain must be < 1 (value " + format_number(cfg.rho2) + ")");
    return cfg;
}

SeedTable seed_points(const CounterexampleConfig& cfg) {
    const int n = cfg.levels;
    require(n >= 1, ErrorKind::input, "seed table: need at least one level");
    SeedTable seeds;
    seeds.bound = std::pow(cfg.eps, 2 + cfg.params.m) / std::pow(4.0, n);
    require(seeds.bound > 1e-290, ErrorKind::numeric,
            "seed bound eps^(2+m)/4^levels underflows double precision; use a smaller T or extended precision");
    for (int i = 1; i <= n + 1; ++i) {
        seeds.s.push_back(i * seeds.bound / (2.0 * n));
        seeds.t.push_back((2 * i - 1) * seeds.bound / (4.0 * n));
    }
    return seeds;
}

double StTable::s_at(std::size_t level, std::size_t i) const {
    require(level < s.size() && i >= 1 && i <= s[level].size(), ErrorKind::input,
            "st table: index (" + std::to_string(level) + ", " + std::to_string(i) + ") out of range");
    return s[level][i - 1];
}

double StTable::t_at(std::size_t level, std::size_t i) const {
    require(level < t.size() && i >= 1 && i <= t[level].size(), ErrorKind::input,
            "st table: index (" + std::to_string(level) + ", " + std::to_string(i) + ") out of range");
    return t[level][i - 1];
}

StTable st_recursion(const SeedTable& seeds, double a, double xi, double eta) {
    require(seeds.s.size() == seeds.t.size() && !seeds.s.empty(), ErrorKind::input, "st recursion: bad seed table");
    StTable st;
    st.s.push_back(seeds.s);
    st.t.push_back(seeds.t);
    for (std::size_t k = 0; k + 1 < seeds.s.size(); ++k) {
        const auto& s = st.s.back();
        const auto& t = st.t.back();
        std::vector<double> ns(s.size() - 1), nt(s.size() - 1);
        for (std::size_t i = 0; i + 1 < s.size(); ++i) {
            ns[i] = a * (s[i] + xi * t[i + 1]);
            nt[i] = a * (-s[i] + eta * t[i + 1]);
        }
        st.s.push_back(std::move(ns));
        st.t.push_back(std::move(nt));
    }
    return st;
}

double TimeTree::time_of(const LatticeTime& q) const { return (T - q.ones * r1 - q.twos * r2) - q.offset; }

void TimeTree::write_csv(const std::string& path) const {
    std::string out = "word,depth,twos,time,V1,V2,dV1,dV2\n";
    for (const auto& n : nodes) {
        out += (n.word.empty() ? std::string("root") : n.word) + "," + std::to_string(n.depth) + "," +
               std::to_string(n.twos) + "," + format_number(n.time) + "," + format_number(n.V[0]) + "," +
               format_number(n.V[1]) + "," + format_number(n.dV[0]) + "," + format_number(n.dV[1]) + "\n";
    }
    write_text(path, out);
}

TimeTree build_time_tree(const CounterexampleConfig& cfg, const StTable& st) {
    TimeTree tree;
    tree.T = cfg.params.T;
    tree.r1 = cfg.r1;
    tree.r2 = cfg.r2;
    const std::size_t top = st.levels();
    TreeNode root;
    root.time = tree.T;
    root.V = {st.s_at(top, 1), st.t_at(top, 1)};
    tree.nodes.push_back(root);

    // depth at most levels, so plain recursion is fine
    std::function<void(std::size_t)> expand = [&](std::size_t idx) {
        const TreeNode parent = tree.nodes[idx];
        const int d = parent.depth + 1;
        if (static_cast<std::size_t>(d) > top) return;
        const std::size_t level = top - static_cast<std::size_t>(d);
        for (int letter = 1; letter <= 2; ++letter) {
            TreeNode child;
            child.depth = d;
            child.twos = parent.twos + (letter - 1);
            child.word = parent.word + char('0' + letter);
            child.parent = static_cast<int>(idx);
            const auto i = static_cast<std::size_t>(1 + child.twos);
            child.V = {st.s_at(level, i), st.t_at(level, i)};
            child.lattice = parent.lattice;
            if (letter == 1) {
                child.time = parent.time - cfg.r1;
                child.lattice.ones += 1;
            } else {
                child.time = parent.time - cfg.r2 - child.V[1];
                child.lattice.twos += 1;
                child.lattice.offset += child.V[1];
            }
            if (child.time <= 0.0) continue;
            const std::size_t k = tree.nodes.size();
            (letter == 1 ? tree.nodes[idx].child1 : tree.nodes[idx].child2) = static_cast<int>(k);
            tree.nodes.push_back(std::move(child));
            expand(k);
        }
    };
    expand(0);
    return tree;
}

namespace {

struct ClassGroup {
    int ones = 0, twos = 0;
    std::vector<std::size_t> members;
    double lo = kInf, hi = -kInf;
};

std::vector<ClassGroup> group_classes(const TimeTree& tree, bool window_only) {
    std::map<std::pair<int, int>, ClassGroup> groups;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& n = tree.nodes[i];
        if (window_only && !(n.time > 0.0 && n.time < tree.r1)) continue;
        auto& g = groups[{n.lattice.ones, n.lattice.twos}];
        g.ones = n.lattice.ones;
        g.twos = n.lattice.twos;
        g.members.push_back(i);
        g.lo = std::min(g.lo, n.time);
        g.hi = std::max(g.hi, n.time);
    }
    std::vector<ClassGroup> out;
    for (auto& [key, g] : groups) out.push_back(std::move(g));
    std::sort(out.begin(), out.end(), [](const ClassGroup& a, const ClassGroup& b) { return a.lo < b.lo; });
    return out;
}

double adjacent_gap(const std::vector<ClassGroup>& groups) {
    double gap = kInf;
    for (std::size_t i = 1; i < groups.size(); ++i) gap = std::min(gap, groups[i].lo - groups[i - 1].hi);
    return gap;
}

}  // namespace

DistinctReport verify_distinct(const TimeTree& tree, double eps) {
    DistinctReport rep;
    const auto all = group_classes(tree, false);
    const auto window = group_classes(tree, true);
    rep.classes = all.size();
    for (const auto& g : window) rep.window_nodes += g.members.size();
    rep.global_gap = adjacent_gap(all);
    rep.window_gap = adjacent_gap(window);
    rep.cluster_separation = kInf;
    for (const auto& g : all) {
        std::vector<std::size_t> order = g.members;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return tree.nodes[a].lattice.offset < tree.nodes[b].lattice.offset;
        });
        for (std::size_t i = 1; i < order.size(); ++i) {
            const double d = tree.nodes[order[i]].lattice.offset - tree.nodes[order[i - 1]].lattice.offset;
            if (d < rep.cluster_separation) {
                rep.cluster_separation = d;
                if (d <= 0.0) {
                    rep.colliding_a = tree.nodes[order[i - 1]].word;
                    rep.colliding_b = tree.nodes[order[i]].word;
                }
            }
        }
    }
    rep.pass = rep.window_gap >= eps / 2 && rep.cluster_separation > 0.0;
    return rep;
}

DvReport dv_recursion(TimeTree& tree, const CounterexampleConfig& cfg) {
    DvReport rep;
    require(!tree.nodes.empty(), ErrorKind::input, "dv recursion: empty tree");
    const auto ginv = cfg.gain_inverse();
    tree.nodes[0].dV = {cfg.eps, 0.0};
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& n = tree.nodes[i];
        const auto xy = mul(ginv, n.dV);
        const double parent_norm = inf_norm(n.dV);
        for (int letter = 1; letter <= 2; ++letter) {
            const int k = letter == 1 ? n.child1 : n.child2;
            if (k < 0) continue;
            auto& child = tree.nodes[static_cast<std::size_t>(k)];
            child.dV = letter == 1 ? std::array<double, 2>{xy[0], 0.0} : std::array<double, 2>{0.0, xy[1]};
            ++rep.edges;
            if (parent_norm > 0) {
                const double ratio = inf_norm(child.dV) / parent_norm;
                rep.max_ratio = std::max(rep.max_ratio, ratio);
                if (ratio > cfg.c * (1 + 1e-12))
                    fail(ErrorKind::config, "derivative targets fail to contract by c at word " + child.word +
                                                " (ratio " + format_number(ratio) + ")");
            }
            if (child.dV[0] != 0.0 && child.dV[1] != 0.0) rep.sparsity_ok = false;
        }
    }
    return rep;
}

SynthesizedTrace::Jet SynthesizedTrace::eval_class(const Class& c, double delta_center, const LatticeTime* q,
                                                   double t) const {
    Jet jet;
    {
        const double w = c.value.width, y = delta_center / w;
        const double k = kernel(y), ks = kernel_slope(y) / w;
        for (int ch = 0; ch < 2; ++ch) {
            jet.value[ch] += c.value.amp[ch] * k;
            jet.slope[ch] += c.value.amp[ch] * ks;
        }
    }
    for (std::size_t idx : c.members) {
        const auto& b = nodes_[idx];
        const double delta = q ? q->offset - b.at.offset : t - b.time;
        // offset grows as time decreases
        const double d = q ? -delta : delta;
        const double y = d / b.width;
        if (std::abs(y) >= 1.0) continue;
        const double k = kernel(y), ks = kernel_slope(y);
        for (int ch = 0; ch < 2; ++ch) {
            if (m_ == 1) {
                jet.value[ch] += b.amp[ch] * d * k;
                jet.slope[ch] += b.amp[ch] * (k + y * ks);
            } else {
                jet.value[ch] += b.amp[ch] * 0.5 * d * d * k;
                jet.slope[ch] += b.amp[ch] * (d * k + 0.5 * d * d * ks / b.width);
            }
        }
    }
    return jet;
}

SynthesizedTrace::Jet SynthesizedTrace::at(double t) const {
    Jet jet;
    for (const auto& c : classes_) {
        if (t <= c.span_lo - c.value.width || t >= c.span_hi + c.value.width) continue;
        const auto part = eval_class(c, t - c.value.time, nullptr, t);
        for (int ch = 0; ch < 2; ++ch) {
            jet.value[ch] += part.value[ch];
            jet.slope[ch] += part.slope[ch];
        }
    }
    return jet;
}

SynthesizedTrace::Jet SynthesizedTrace::at(const LatticeTime& q) const {
    for (const auto& c : classes_)
        if (c.value.at.same_class(q)) return eval_class(c, -(q.offset - c.value.at.offset), &q, 0.0);
    return {};
}

std::array<double, 2> SynthesizedTrace::matched_derivative(const LatticeTime& q) const {
    if (m_ == 1) return at(q).slope;
    std::array<double, 2> out{};
    for (const auto& c : classes_) {
        if (!c.value.at.same_class(q)) continue;
        const double yc = (c.value.at.offset - q.offset) / c.value.width;
        for (int ch = 0; ch < 2; ++ch)
            out[ch] += c.value.amp[ch] * kernel_curvature(yc) / (c.value.width * c.value.width);
        for (std::size_t idx : c.members) {
            const auto& b = nodes_[idx];
            const double d = b.at.offset - q.offset, y = d / b.width;
            if (std::abs(y) >= 1.0) continue;
            const double term = kernel(y) + 2.0 * y * kernel_slope(y) + 0.5 * y * y * kernel_curvature(y);
            for (int ch = 0; ch < 2; ++ch) out[ch] += b.amp[ch] * term;
        }
    }
    return out;
}

SampledSignal SynthesizedTrace::sample(double dt) const {
    auto s = SampledSignal::over(0.0, r1_, dt, 2, true);
    for (std::size_t k = 0; k < s.count(); ++k) {
        const auto jet = at(s.time(k));
        for (std::size_t ch = 0; ch < 2; ++ch) {
            s.sample(ch, k) = jet.value[ch];
            s.slope(ch, k) = jet.slope[ch];
        }
    }
    return s;
}

std::vector<LatticeTime> SynthesizedTrace::extremal_points() const {
    std::vector<LatticeTime> pts;
    for (const auto& c : classes_) {
        const double w = c.value.width;
        for (double f : {0.0, 0.5, -0.5}) {
            LatticeTime q = c.value.at;
            q.offset += f * w;
            pts.push_back(q);
        }
        for (std::size_t idx : c.members) {
            const auto& b = nodes_[idx];
            for (double f : {0.0, 0.398, -0.398, 2.0 / 3.0, -2.0 / 3.0}) {
                LatticeTime q = b.at;
                q.offset += f * b.width;
                pts.push_back(q);
            }
        }
    }
    return pts;
}

double SynthesizedTrace::c1_norm() const {
    double out = 0.0;
    for (const auto& q : extremal_points()) {
        const auto jet = at(q);
        out = std::max({out, inf_norm(jet.value), inf_norm(jet.slope)});
    }
    return out;
}

SynthesizedTrace synthesize_trace(const TimeTree& tree, const CounterexampleConfig& cfg) {
    SynthesizedTrace tr;
    tr.T_ = tree.T;
    tr.r1_ = tree.r1;
    tr.r2_ = tree.r2;
    tr.m_ = cfg.params.m;
    tr.min_width_ = cfg.eps / 8;
    const auto groups = group_classes(tree, true);
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& g = groups[gi];
        const auto& first = tree.nodes[g.members.front()];
        double dist = std::min({g.lo, std::abs(g.lo - tree.r2), std::abs(g.hi - tree.r2), tree.r1 - g.hi});
        if (gi > 0) dist = std::min(dist, g.lo - groups[gi - 1].hi);
        if (gi + 1 < groups.size()) dist = std::min(dist, groups[gi + 1].lo - g.hi);
        const double width = std::min(cfg.eps / 8, dist / 4);
        if (dist < cfg.eps / 4)
            fail(ErrorKind::config, "node " + first.word + " lies within " + format_number(dist) +
                                        " of an exclusion point; eps selection failed");
        SynthesizedTrace::Class c;
        c.value.at = first.lattice;
        c.value.time = first.time;
        c.value.width = width;
        c.value.amp = first.V;
        c.span_lo = g.lo;
        c.span_hi = g.hi;
        tr.min_width_ = std::min(tr.min_width_, width);
        for (std::size_t k = 0; k < g.members.size(); ++k) {
            const auto& n = tree.nodes[g.members[k]];
            // a lone node can use the whole class window
            double w = g.members.size() == 1 ? width : width / 4;
            for (std::size_t j = 0; j < g.members.size(); ++j)
                if (j != k) w = std::min(w, std::abs(tree.nodes[g.members[j]].lattice.offset - n.lattice.offset) / 4);
            SynthesizedTrace::Bump b;
            b.at = n.lattice;
            b.time = n.time;
            b.width = w;
            b.amp = n.dV;
            c.members.push_back(tr.nodes_.size());
            tr.nodes_.push_back(b);
        }
        tr.classes_.push_back(std::move(c));
    }
    return tr;
}

double initial_c1_norm(const CounterexampleConfig& cfg, const SynthesizedTrace& trace) {
    const auto ginv = cfg.gain_inverse();
    const double T = cfg.params.T;
    double out = 0.0;
    for (const auto& q : trace.extremal_points()) {
        const auto jet = trace.at(q);
        const double s = (T - q.ones * cfg.r1 - q.twos * cfg.r2) - q.offset;
        const auto g = mul(ginv, jet.value), dg = mul(ginv, jet.slope);
        out = std::max({out, std::abs(g[0]), cfg.r1 * std::abs(dg[0])});
        if (s <= cfg.r2) {
            const double travel = cfg.r2 + g[1];
            const double slope = std::abs(dg[1]) * travel / std::abs(1.0 - s * dg[1] / travel);
            out = std::max({out, std::abs(g[1]), slope});
        }
    }
    return out;
}

InitialData backward_initial_data(const CounterexampleConfig& cfg, const SynthesizedTrace& trace, std::size_t cells) {
    require(cells >= 4, ErrorKind::input, "backward initial data: need at least 4 cells");
    const auto ginv = cfg.gain_inverse();
    InitialData out;
    out.u0 = GridState::zeros(2, cells);
    for (std::size_t j = 0; j <= cells; ++j) {
        const double x = out.u0.x(j), rest = 1.0 - x;
        out.u0.u[0][j] = mul(ginv, trace.at(rest * cfg.r1).value)[0];

        double s = rest * cfg.r2;
        auto residual = [&](double sv, double& g2, double& dg2) {
            const auto jet = trace.at(sv);
            g2 = mul(ginv, jet.value)[1];
            dg2 = mul(ginv, jet.slope)[1];
            return sv - rest * (cfg.r2 + g2);
        };
        double g2 = 0, dg2 = 0;
        double f = residual(s, g2, dg2);
        for (int it = 0; it < 60 && std::abs(f) > 1e-16; ++it) {
            const double fp = 1.0 - rest * dg2;
            if (fp < 0.5)
                fail(ErrorKind::dynamics, "backward transit fixed point is not contracting at x=" + format_number(x));
            double step = f / fp, lambda = 1.0;
            double ng2 = 0, ndg2 = 0, nf = 0;
            for (int half = 0; half < 30; ++half) {
                nf = residual(s - lambda * step, ng2, ndg2);
                if (std::abs(nf) < std::abs(f)) break;
                lambda *= 0.5;
            }
            if (std::abs(nf) >= std::abs(f)) break;
            s -= lambda * step;
            f = nf;
            g2 = ng2;
            dg2 = ndg2;
        }
        out.max_fixed_point_residual = std::max(out.max_fixed_point_residual, std::abs(f));
        out.u0.u[1][j] = g2;
    }
    out.grid_c1 = discrete_norm(out.u0, NormRequest{NormRequest::Kind::c1, PNorm::finite(2)});
    out.analytic_c1 = initial_c1_norm(cfg, trace);
    out.trace_c1 = trace.c1_norm();
    out.ratio = out.trace_c1 > 0 ? out.analytic_c1 / out.trace_c1 : 0.0;
    out.compatibility = check_compatibility(cfg.system(), out.u0, 1, 1e-10);
    return out;
}

std::vector<NodeEvaluation> evaluate_tree(const TimeTree& tree, const SynthesizedTrace& trace,
                                          const CounterexampleConfig& cfg) {
    const auto ginv = cfg.gain_inverse();
    const auto dp = cfg.delay_params();
    std::vector<NodeEvaluation> ev(tree.nodes.size());
    // children sit after their parent in pre-order
    for (std::size_t r = tree.nodes.size(); r-- > 0;) {
        const auto& n = tree.nodes[r];
        auto& e = ev[r];
        if (n.time <= cfg.r2) {
            const auto jet = trace.at(n.lattice);
            e.v = jet.value;
            e.dv = jet.slope;
            continue;
        }
        double w1, dw1;
        if (n.time <= cfg.r1) {
            const auto jet = trace.at(n.lattice);
            w1 = mul(ginv, jet.value)[0];
            dw1 = mul(ginv, jet.slope)[0];
        } else {
            require(n.child1 >= 0, ErrorKind::numeric, "time tree is missing the 1-child of " + n.word);
            const auto& c1 = ev[static_cast<std::size_t>(n.child1)];
            w1 = c1.v[0];
            dw1 = c1.dv[0];
        }
        require(n.child2 >= 0, ErrorKind::numeric, "time tree is missing the 2-child of " + n.word);
        const auto& child2 = tree.nodes[static_cast<std::size_t>(n.child2)];
        const auto& c2 = ev[static_cast<std::size_t>(n.child2)];
        const double v2 = c2.v[1], b = c2.dv[1];
        require(1.0 + b > 0.5, ErrorKind::dynamics, "transit map is not monotone at " + child2.word);
        const double transit = child2.V[1] - v2;
        e.transit_residual = std::abs(transit);
        const double v2_star = v2 + b * transit / (1.0 + b);
        const double dw2 = b / (1.0 + b);
        for (int ch = 0; ch < 2; ++ch) {
            e.v[ch] = w1 * dp.G1[ch] + v2_star * dp.G2[ch];
            e.dv[ch] = dw1 * dp.G1[ch] + dw2 * dp.G2[ch];
        }
    }
    return ev;
}

std::string GrowthCertificate::to_json() const {
    nlohmann::ordered_json j;
    auto num = [](double x) -> nlohmann::ordered_json {
        if (std::isfinite(x)) return x;
        return format_number(x);
    };
    j["T"] = num(T);
    j["eps"] = num(eps);
    j["c"] = num(c);
    j["initialC1"] = num(initial_c1);
    j["peakC1"] = num(peak_c1);
    j["derivAtT"] = num(deriv_at_T);
    j["vPrimeT"] = {num(v_prime_T[0]), num(v_prime_T[1])};
    j["dvTarget"] = num(dv_target);
    j["mismatch"] = num(mismatch);
    j["mismatchOverEps2"] = num(mismatch_constant);
    j["amplification"] = num(amplification);
    j["theoreticalFloor"] = num(theoretical_floor);
    j["maxNodeResidual"] = num(max_node_residual);
    j["nodeBudget"] = num(node_budget);
    j["nodes"] = nodes;
    j["windowNodes"] = window_nodes;
    j["pass"] = pass;
    return j.dump(2);
}

CounterexampleRun run_certificate(const CounterexampleConfig& cfg) {
    if (cfg.params.m != 1) fail(ErrorKind::unsupported, "growth certificate is computed for m = 1 only");
    CounterexampleRun run;
    run.config = cfg;
    run.seeds = seed_points(cfg);
    run.st = st_recursion(run.seeds, cfg.params.a, cfg.params.xi, cfg.params.eta);
    run.tree = build_time_tree(cfg, run.st);
    run.distinct = verify_distinct(run.tree, cfg.eps);
    if (!run.distinct.pass) {
        std::string why = "node times not separated: window gap " + format_number(run.distinct.window_gap) +
                          " < eps/2 = " + format_number(cfg.eps / 2);
        if (!run.distinct.colliding_a.empty())
            why = "node times collide: words " + run.distinct.colliding_a + " and " + run.distinct.colliding_b;
        fail(ErrorKind::numeric, why);
    }
    run.dv = dv_recursion(run.tree, cfg);
    run.trace = synthesize_trace(run.tree, cfg);
    run.evaluations = evaluate_tree(run.tree, run.trace, cfg);

    auto& cert = run.certificate;
    cert.T = cfg.params.T;
    cert.eps = cfg.eps;
    cert.c = cfg.c;
    cert.nodes = run.tree.size();
    cert.window_nodes = run.distinct.window_nodes;
    cert.node_budget = 1e-10 * std::pow(cfg.eps, 2 + cfg.params.m);
    for (std::size_t i = 0; i < run.tree.size(); ++i) {
        const auto& n = run.tree.nodes[i];
        const auto& e = run.evaluations[i];
        const double r = std::max(std::abs(e.v[0] - n.V[0]), std::abs(e.v[1] - n.V[1]));
        if (r > cert.max_node_residual) cert.max_node_residual = r;
        if (r > cert.node_budget)
            fail(ErrorKind::numeric, "node value residual " + format_number(r) + " above budget at word " +
                                         (n.word.empty() ? std::string("root") : n.word));
    }
    cert.initial_c1 = initial_c1_norm(cfg, run.trace);
    double peak = cert.initial_c1;
    for (const auto& e : run.evaluations) {
        const double lam1 = 1.0 / cfg.r1, lam2 = 1.0 / (cfg.r2 + e.v[1]);
        peak = std::max({peak, inf_norm(e.v), std::abs(e.dv[0]) / lam1, std::abs(e.dv[1]) / lam2});
    }
    cert.peak_c1 = peak;
    const auto& root = run.evaluations.front();
    cert.v_prime_T = root.dv;
    cert.deriv_at_T = std::hypot(root.dv[0], root.dv[1]);
    cert.dv_target = cfg.eps;
    cert.mismatch = std::hypot(root.dv[0] - cfg.eps, root.dv[1]);
    cert.mismatch_constant = cert.mismatch / (cfg.eps * cfg.eps);
    cert.amplification = cert.initial_c1 > 0 ? cert.peak_c1 / cert.initial_c1 : 0.0;
    cert.theoretical_floor = std::pow(cfg.c, -cfg.params.T / (2 * cfg.r1));
    cert.pass = cert.amplification > cert.theoretical_floor / 4;
    return run;
}

ScalingStudy mismatch_scaling(const CounterexampleParams& params, const std::vector<double>& eps_values) {
    require(eps_values.size() >= 2, ErrorKind::input, "scaling study needs at least two eps values");
    ScalingStudy study;
    for (double e : eps_values) {
        auto p = params;
        p.eps_request = e;
        const auto cfg = build_config(p);
        const auto run = run_certificate(cfg);
        study.eps.push_back(cfg.eps);
        study.mismatch.push_back(run.certificate.mismatch);
    }
    const double n = double(study.eps.size());
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < study.eps.size(); ++k) {
        require(study.mismatch[k] > 0, ErrorKind::numeric, "scaling study: zero mismatch");
        mx += std::log(study.eps[k]) / n;
        my += std::log(study.mismatch[k]) / n;
    }
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < study.eps.size(); ++k) {
        const double dx = std::log(study.eps[k]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(study.mismatch[k]) - my);
    }
    study.slope = sxy / sxx;
    return study;
}

SynthesizedTrace::Jet exact_boundary_trace(const CounterexampleConfig& cfg, const SynthesizedTrace& trace, double s) {
    if (s <= cfg.r2) return trace.at(s);
    require(cfg.r1 <= 2 * cfg.r2, ErrorKind::unsupported, "exact boundary trace needs r1 <= 2 r2");
    const auto ginv = cfg.gain_inverse();
    const auto dp = cfg.delay_params();
    const auto here = trace.at(s);
    const double g1 = mul(ginv, here.value)[0], dg1 = mul(ginv, here.slope)[0];
    double t = s - cfg.r2;
    auto jet = trace.at(t);
    for (int it = 0; it < 50; ++it) {
        const double f = t + cfg.r2 + jet.value[1] - s;
        if (std::abs(f) < 1e-17) break;
        t -= f / (1.0 + jet.slope[1]);
        t = std::max(t, 0.0);
        jet = trace.at(t);
    }
    const double v2 = jet.value[1], b = jet.slope[1];
    SynthesizedTrace::Jet out;
    for (int ch = 0; ch < 2; ++ch) {
        out.value[ch] = g1 * dp.G1[ch] + v2 * dp.G2[ch];
        out.slope[ch] = dg1 * dp.G1[ch] + b / (1.0 + b) * dp.G2[ch];
    }
    return out;
}

namespace {

}  // namespace

SolveOptions aligned_solve_options(const CounterexampleConfig& cfg, std::size_t cells) {
    SolveOptions opts;
    opts.scheme = Scheme::characteristics;
    opts.dt = cfg.r1 / double(cells);
    opts.norms = {NormRequest{NormRequest::Kind::c0, PNorm::finite(2)}};
    return opts;
}

std::size_t resolving_cells(const CounterexampleConfig& cfg, const SynthesizedTrace& trace, std::size_t per_width) {
    const double need = double(per_width) * cfg.r1 / trace.value_width();
    return std::size_t(std::ceil(need / 500.0)) * 500;
}

RoundTrip round_trip(const CounterexampleConfig& cfg, const SynthesizedTrace& trace, std::size_t cells) {
    RoundTrip rt;
    rt.cells = cells;
    const auto init = backward_initial_data(cfg, trace, cells);
    rt.compat_residual = init.compatibility.max_residual;
    const auto traj = solve_forward(cfg.system(), init.u0, cfg.r1, aligned_solve_options(cfg, cells));
    for (std::size_t k = 0; k < traj.boundary_times.size(); ++k) {
        const double t = std::min(traj.boundary_times[k], cfg.r1);
        const auto want = exact_boundary_trace(cfg, trace, t);
        for (std::size_t ch = 0; ch < 2; ++ch) {
            rt.sup_error = std::max(rt.sup_error, std::abs(traj.boundary_values[ch][k] - want.value[ch]));
            if (t > cfg.r2) rt.synth_gap = std::max(rt.synth_gap, std::abs(want.value[ch] - trace.at(t).value[ch]));
        }
    }
    return rt;
}

TraceAgreement engine_vs_pde(const CounterexampleConfig& cfg, const SynthesizedTrace& trace,
                             const std::vector<std::size_t>& cells) {
    require(cells.size() >= 2, ErrorKind::input, "engine comparison needs at least two grids");
    TraceAgreement out;
    out.cells = cells;
    const double target = std::min(trace.value_width() / 16, cfg.r2 / 4);
    const auto steps = static_cast<std::size_t>(std::ceil(cfg.r1 / target));
    out.engine_dt = cfg.r1 / double(steps);
    const auto sampled = trace.sample(out.engine_dt);
    const double T = cfg.params.T;
    const auto engine = simulate_state_dependent(cfg.delay_params(), sampled, T, out.engine_dt);
    for (std::size_t m : cells) {
        const auto init = backward_initial_data(cfg, trace, m);
        const auto traj = solve_forward(cfg.system(), init.u0, T, aligned_solve_options(cfg, m));
        double err = 0.0;
        for (std::size_t k = 0; k < traj.boundary_times.size(); ++k) {
            const double t = traj.boundary_times[k];
            if (t > engine.t1()) break;
            for (std::size_t ch = 0; ch < 2; ++ch)
                err = std::max(err, std::abs(traj.boundary_values[ch][k] - engine.value(ch, t)));
        }
        out.errors.push_back(err);
    }
    const double n = double(cells.size());
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        mx += std::log(1.0 / double(cells[k])) / n;
        my += std::log(std::max(out.errors[k], 1e-300)) / n;
    }
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const double dx = std::log(1.0 / double(cells[k])) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(std::max(out.errors[k], 1e-300)) - my);
    }
    out.order = sxy / sxx;
    return out;
}

}  // namespace hyperstab
