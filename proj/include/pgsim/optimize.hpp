#pragma once

#include <functional>
#include <vector>

namespace pgsim {

struct NelderMeadOptions {
    int max_evaluations = 20000;
    double x_tolerance = 1e-10;   // simplex diameter (max-norm) at convergence
    double f_tolerance = 1e-15;   // relative spread of function values at convergence
    double initial_step = 0.5;    // per-coordinate displacement of the initial simplex
    int restarts = 2;             // re-seed the simplex at the optimum this many times
};

struct MinimizeResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

using Objective = std::function<double(const std::vector<double>&)>;

/// Derivative-free Nelder-Mead simplex minimization (standard reflection,
/// expansion, contraction and shrink coefficients 1, 2, 1/2, 1/2). Non-finite
/// objective values are treated as +inf so infeasible regions are simply avoided.
MinimizeResult nelder_mead(const Objective& f, std::vector<double> start,
                           const NelderMeadOptions& options = {});

/// Runs nelder_mead from every start point and returns the best result.
MinimizeResult multi_start_minimize(const Objective& f,
                                    const std::vector<std::vector<double>>& starts,
                                    const NelderMeadOptions& options = {});

}  // namespace pgsim
