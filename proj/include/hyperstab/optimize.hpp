#pragma once

#include <functional>
#include <vector>

namespace hyperstab {

struct SimplexOptions {
    double initial_step = 0.5;
    double f_tol = 1e-13;
    double x_tol = 1e-11;
    int max_evaluations = 4000;
};

struct SimplexResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
};

// Nelder-Mead minimization.
SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, const SimplexOptions& opts);

}  // namespace hyperstab
