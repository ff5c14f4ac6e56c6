#include "hyperstab/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hyperstab {

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, const SimplexOptions& opts) {
    const std::size_t n = x0.size();
    SimplexResult res;
    if (n == 0) {
        res.x = x0;
        res.value = f(x0);
        res.evaluations = 1;
        return res;
    }
    std::vector<std::vector<double>> pts(n + 1, x0);
    std::vector<double> vals(n + 1);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += opts.initial_step;
    for (std::size_t i = 0; i <= n; ++i) vals[i] = f(pts[i]);
    int evals = static_cast<int>(n + 1);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        return f(x);
    };
    while (evals < opts.max_evaluations) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

        double fspread = vals[worst] - vals[best];
        double xspread = 0.0;
        for (std::size_t i = 0; i <= n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                xspread = std::max(xspread, std::abs(pts[i][k] - pts[best][k]));
        if (fspread <= opts.f_tol * (1.0 + std::abs(vals[best])) && xspread <= opts.x_tol) break;
        if (xspread <= opts.x_tol * 1e-3) break;
        ++res.iterations;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i)
            if (i != worst)
                for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k] / double(n);

        for (std::size_t k = 0; k < n; ++k) trial[k] = centroid[k] + (centroid[k] - pts[worst][k]);
        const double fr = eval(trial);
        if (fr < vals[best]) {
            for (std::size_t k = 0; k < n; ++k)
                trial2[k] = centroid[k] + 2.0 * (centroid[k] - pts[worst][k]);
            const double fe = eval(trial2);
            if (fe < fr) {
                pts[worst] = trial2;
                vals[worst] = fe;
            } else {
                pts[worst] = trial;
                vals[worst] = fr;
            }
            continue;
        }
        if (fr < vals[second]) {
            pts[worst] = trial;
            vals[worst] = fr;
            continue;
        }
        const bool outside = fr < vals[worst];
        for (std::size_t k = 0; k < n; ++k)
            trial2[k] = outside ? centroid[k] + 0.5 * (trial[k] - centroid[k])
                                : centroid[k] + 0.5 * (pts[worst][k] - centroid[k]);
        const double fc = eval(trial2);
        if (fc < std::min(fr, vals[worst])) {
            pts[worst] = trial2;
            vals[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            for (std::size_t k = 0; k < n; ++k)
                pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
            vals[i] = eval(pts[i]);
        }
    }
    const auto it = std::min_element(vals.begin(), vals.end());
    res.x = pts[static_cast<std::size_t>(it - vals.begin())];
    res.value = *it;
    res.evaluations = evals;
    return res;
}

}  // namespace hyperstab
